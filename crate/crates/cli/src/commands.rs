use std::path::Path;

use asis_core::graph::{
    barabasi_albert, degree_product, edge_betweenness, eigenvector_product, erdos_renyi, spectral_radius,
    PowerIterationConfig,
};
use asis_core::optimize::{
    centrality_csv, centrality_report, solve_gp, verify, BarrierSettings, CostModel,
};
use asis_core::oracle::{linear_bound, transient, JointState};
use asis_core::simulate::{
    events_to_csv, run, sweep, twin_metastable_estimate, InitialCondition, MetastableConfig, SimConfig,
    SweepConfig,
};
use asis_core::threshold::{effective_cutting_rate, homogeneous_bound, is_irreducible};
use asis_core::{AsisParams, EigenConfig, Error, Graph, ParamFile, ThresholdMatrix};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{json_text, write_text, Provenance};

pub type CmdResult = Result<(), Error>;

fn read_graph(path: &Path) -> Result<Graph, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read graph {}: {e}", path.display())))?;
    Graph::parse_edge_list(&text)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

/// Rates from flags or file. Flags left unset default to `fill` when given,
/// otherwise they are reported as missing.
fn resolve_rates(g: &Graph, r: &RateArgs, fill: Option<(f64, f64)>) -> Result<AsisParams, Error> {
    let params = if let Some(path) = &r.params {
        AsisParams::from_file(g, &read_json::<ParamFile>(path)?)?
    } else {
        let mut missing = Vec::new();
        let mut get = |v: Option<f64>, name: &str, default: Option<f64>| {
            v.or(default).unwrap_or_else(|| {
                missing.push(format!("--{name}"));
                f64::NAN
            })
        };
        let beta = get(r.beta, "beta", fill.map(|f| f.0));
        let delta = get(r.delta, "delta", None);
        let phi = get(r.phi, "phi", fill.map(|f| f.1));
        let psi = get(r.psi, "psi", None);
        if !missing.is_empty() {
            return Err(Error::Validation(format!("missing rate flags: {} (or use --params)", missing.join(", "))));
        }
        AsisParams::uniform(g, beta, delta, phi, psi)
    };
    params.validate_relaxed(g)?;
    Ok(params)
}

fn homogeneous_summary(g: &Graph, p: &AsisParams) -> Result<Option<(f64, f64, f64)>, Error> {
    let rho = spectral_radius(g, &PowerIterationConfig::with_tol(1e-13))?;
    Ok(p.homogeneous_rates().map(|(_, delta, phi, psi)| {
        (rho, effective_cutting_rate(phi, delta, psi), homogeneous_bound(rho, delta, phi, psi))
    }))
}

fn require_connected(g: &Graph) -> CmdResult {
    if g.is_connected() {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "graph is disconnected ({} components)",
            g.component_count()
        )))
    }
}

pub fn generate(model: &GraphModel) -> CmdResult {
    let (g, seed, common) = match model {
        GraphModel::Er { n, p, seed, common } => (erdos_renyi(*n, *p, *seed)?, *seed, common),
        GraphModel::Ba { n, m_attach, seed, common } => (barabasi_albert(*n, *m_attach, *seed)?, *seed, common),
    };
    let prov = Provenance::new(Some(seed));
    write_text(common.output.as_deref(), &g.to_edge_list(&prov.comment_lines()))?;
    Ok(())
}

pub fn threshold(a: &ThresholdArgs) -> CmdResult {
    let g = read_graph(&a.graph)?;
    require_connected(&g)?;
    let p = resolve_rates(&g, &a.rates, None)?;
    let m = ThresholdMatrix::build(&g, &p)?;
    let perron = m.perron(&EigenConfig {
        tol: a.tol,
        ..EigenConfig::default()
    })?;
    let rho = spectral_radius(&g, &PowerIterationConfig::with_tol(1e-13))?;
    let mut body = json!({
        "n": g.node_count(),
        "m": g.edge_count(),
        "lambda_max": perron.lambda,
        "lambda_bracket": [perron.lower, perron.upper],
        "rho": rho,
        "irreducible": is_irreducible(&g).irreducible,
    });
    if let Some((_, omega, beta_star)) = homogeneous_summary(&g, &p)? {
        body["omega"] = json!(omega);
        body["beta_star"] = json!(beta_star);
    }
    write_text(a.common.output.as_deref(), &json_text(&Provenance::new(None), body))?;
    Ok(())
}

fn initial(g: &Graph, nodes: &Option<Vec<usize>>) -> Result<InitialCondition, Error> {
    match nodes {
        Some(list) => InitialCondition::from_nodes(g.node_count(), list),
        None => Ok(InitialCondition::all_infected(g.node_count())),
    }
}

pub fn simulate(a: &SimulateArgs) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let p = resolve_rates(&g, &a.rates, None)?;
    let init = initial(&g, &a.infected)?;
    let mut cfg = SimConfig::new(a.horizon);
    cfg.observe_at = a.observe.clone();
    cfg.record_events = a.events_out.is_some();
    cfg.reinfect_count = a.reinfect;
    cfg.event_budget = a.event_budget;
    let out = run(&g, &p, &init, &cfg, a.seed)?;
    let prov = Provenance::new(Some(a.seed));
    if let Some(path) = &a.events_out {
        std::fs::write(path, prov.csv_header() + &events_to_csv(&out.events))?;
    }
    let body = serde_json::to_value(&out)?;
    write_text(a.common.output.as_deref(), &json_text(&prov, body))?;
    Ok(())
}

fn metastable_config(o: &MetastableOptions) -> Result<MetastableConfig, Error> {
    if !(o.tolerance > 0.0) || !(o.initial_fraction > 0.0 && o.initial_fraction <= 1.0) {
        return Err(Error::Validation(
            "--tolerance must be positive and --initial-fraction in (0, 1]".into(),
        ));
    }
    Ok(MetastableConfig {
        tolerance: o.tolerance,
        burn_in: o.burn_in,
        check_interval: o.check_interval,
        event_budget: o.event_budget,
        reinfect_count: o.reinfect,
        initial_fraction: o.initial_fraction,
    })
}

pub fn metastable(a: &MetastableArgs) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let p = resolve_rates(&g, &a.rates, None)?;
    let cfg = metastable_config(&a.options)?;
    let est = twin_metastable_estimate(&g, &p, &cfg, a.seed)?;
    let mut body = serde_json::to_value(&est)?;
    if let Some((rho, _, beta_star)) = homogeneous_summary(&g, &p)? {
        body["rho"] = json!(rho);
        body["beta_star"] = json!(beta_star);
    }
    write_text(a.common.output.as_deref(), &json_text(&Provenance::new(Some(a.seed)), body))?;
    if est.converged {
        Ok(())
    } else {
        Err(Error::Timeout {
            budget: cfg.event_budget,
            t: est.t_stop,
            metric: est.metric,
        })
    }
}

pub fn sweep_cmd(a: &SweepArgs) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let base = resolve_rates(&g, &a.rates, Some((0.0, 0.0)))?;
    if a.beta_grid.iter().chain(&a.phi_grid).any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::Validation("grid values must be finite and nonnegative".into()));
    }
    let cfg = SweepConfig {
        beta_grid: a.beta_grid.clone(),
        phi_grid: a.phi_grid.clone(),
        metastable: metastable_config(&a.options)?,
        jobs: a.jobs.max(1),
    };
    // The closed-form boundary needs uniform recovery and reconnection.
    let uniform = |v: &[f64]| v.windows(2).all(|w| w[0] == w[1]);
    let boundary = if uniform(&base.delta) && uniform(&base.psi) && !base.psi.is_empty() {
        let rho = spectral_radius(&g, &PowerIterationConfig::with_tol(1e-13))?;
        Some((rho, base.delta[0], base.psi[0]))
    } else {
        None
    };
    let rows = sweep(&g, &base, &cfg, a.seed)?;
    let mut text = Provenance::new(Some(a.seed)).csv_header();
    text.push_str("beta,phi,y_star,t_stop,events,converged");
    text.push_str(if boundary.is_some() { ",beta_star\n" } else { "\n" });
    for r in &rows {
        let e = &r.estimate;
        text.push_str(&format!("{},{},{},{},{},{}", r.beta, r.phi, e.y_star, e.t_stop, e.events, e.converged));
        if let Some((rho, delta, psi)) = boundary {
            text.push_str(&format!(",{}", homogeneous_bound(rho, delta, r.phi, psi)));
        }
        text.push('\n');
    }
    write_text(a.common.output.as_deref(), &text)?;
    Ok(())
}

pub fn recipe_model(g: &Graph, beta_factor: f64) -> Result<CostModel, Error> {
    let delta = 0.1;
    let rho = spectral_radius(g, &PowerIterationConfig::with_tol(1e-13))?;
    let beta = beta_factor * delta / rho;
    Ok(CostModel::cutting_only(beta, delta, 0.0, 4.0 * beta, beta, 2.0, 0.005))
}

pub fn optimize(a: &OptimizeArgs) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let model = match &a.model {
        Some(path) => read_json::<CostModel>(path)?,
        None => {
            if !(a.beta_factor > 0.0) {
                return Err(Error::Validation("--beta-factor must be positive".into()));
            }
            recipe_model(&g, a.beta_factor)?
        }
    };
    let settings = BarrierSettings {
        mu: a.mu,
        newton_tol: a.newton_tol,
        gap_tol: a.gap_tol,
        ..BarrierSettings::default()
    };
    if !(settings.mu > 1.0 && settings.newton_tol > 0.0 && settings.gap_tol > 0.0) {
        return Err(Error::Validation("need --mu > 1 and positive tolerances".into()));
    }
    let sol = solve_gp(&g, &model, &settings)?;
    let report = verify(&g, &model, &sol)?;
    let prov = Provenance::new(None);
    if let Some(path) = &a.centrality_out {
        let rows = centrality_report(&g, &sol.phi)?;
        std::fs::write(path, prov.csv_header() + &centrality_csv(&rows))?;
    }
    let body = json!({
        "model": model,
        "solution": sol,
        "verification": report,
    });
    write_text(a.common.output.as_deref(), &json_text(&prov, body))?;
    if report.passed {
        Ok(())
    } else {
        Err(Error::Solver(format!("solution failed verification: {report:?}")))
    }
}

pub fn centrality(a: &CentralityArgs) -> CmdResult {
    let g = read_graph(&a.graph)?;
    require_connected(&g)?;
    let prov = Provenance::new(None);
    let text = match &a.solution {
        Some(path) => {
            let doc: Value = read_json(path)?;
            let phi: Vec<f64> = doc
                .pointer("/solution/phi")
                .or_else(|| doc.get("phi"))
                .and_then(|v| serde_json::from_value(v.clone()).ok())
                .ok_or_else(|| Error::Validation(format!("{}: no phi array", path.display())))?;
            if phi.len() != g.slot_count() {
                return Err(Error::Validation(format!(
                    "solution has {} cutting rates, graph has {} directed pairs",
                    phi.len(),
                    g.slot_count()
                )));
            }
            centrality_csv(&centrality_report(&g, &phi)?)
        }
        None => {
            let deg = degree_product(&g);
            let eig = eigenvector_product(&g, &PowerIterationConfig::default())?;
            let btw = edge_betweenness(&g);
            let mut s = String::from("i,j,deg_prod,eig_prod,betweenness\n");
            for (e, &(i, j)) in g.edges().iter().enumerate() {
                s.push_str(&format!("{i},{j},{},{},{}\n", deg[e], eig[e], btw[e]));
            }
            s
        }
    };
    write_text(a.common.output.as_deref(), &(prov.csv_header() + &text))?;
    Ok(())
}

pub fn oracle(a: &OracleArgs) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let p = resolve_rates(&g, &a.rates, None)?;
    let init = initial(&g, &a.infected)?;
    let present = vec![true; g.edge_count()];
    let start = [(JointState::pack(&init.infected, &present), 1.0)];
    let mut results = Vec::new();
    for &t in &a.t {
        let moments = transient(&g, &p, &start, t)?;
        let mut row = serde_json::to_value(&moments)?;
        if a.linear_bound {
            let p0: Vec<f64> = init.infected.iter().map(|&x| f64::from(u8::from(x))).collect();
            let q0: Vec<f64> = (0..g.node_count()).flat_map(|i| vec![p0[i]; g.degree(i)]).collect();
            row["linear_bound"] = json!(linear_bound(&g, &p, &p0, &q0, t)?);
        }
        results.push(row);
    }
    let body = json!({ "results": results });
    write_text(a.common.output.as_deref(), &json_text(&Provenance::new(None), body))?;
    Ok(())
}
