//! Twin-run estimation of the metastable number of infected nodes.
//!
//! Two simulations share the graph and rates. One starts with a random 10%
//! of the nodes infected, the other with every node infected; both re-infect
//! a random node whenever the epidemic dies out. They advance in lockstep and
//! stop as soon as their long-time averages agree:
//!
//! ```text
//! |y1 - y2| / (y1 + y2) + |z1 - z2| / (z1 + z2) < tolerance
//! ```
//!
//! The estimate subtracts one from `y1` to offset the forced re-infections.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, InitialCondition, Simulation};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::params::AsisParams;

#[derive(Debug, Clone)]
pub struct MetastableConfig {
    pub tolerance: f64,
    /// No stopping check before this simulated time.
    pub burn_in: f64,
    /// Simulated time between stopping checks.
    pub check_interval: f64,
    /// Total events over both runs.
    pub event_budget: u64,
    pub reinfect_count: usize,
    pub initial_fraction: f64,
}

impl Default for MetastableConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            burn_in: 100.0,
            check_interval: 10.0,
            event_budget: 1_000_000_000,
            reinfect_count: 1,
            initial_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetastableEstimate {
    pub y_star: f64,
    pub y1: f64,
    pub y2: f64,
    pub z1: f64,
    pub z2: f64,
    pub metric: f64,
    pub t_stop: f64,
    pub events: u64,
    pub reinfections: u64,
    pub converged: bool,
}

/// Agreement metric between the two runs; `0/0` terms count as zero.
pub fn stopping_metric(y1: f64, y2: f64, z1: f64, z2: f64) -> f64 {
    let rel = |a: f64, b: f64| {
        if a + b > 0.0 {
            (a - b).abs() / (a + b)
        } else {
            0.0
        }
    };
    rel(y1, y2) + rel(z1, z2)
}

/// `y(t_stop) - 1`.
pub fn y_star_from(y: f64) -> f64 {
    y - 1.0
}

/// Like [`twin_metastable`] but returns the partial estimate, flagged
/// `converged = false`, when the event budget runs out.
pub fn twin_metastable_estimate(
    g: &Graph,
    params: &AsisParams,
    cfg: &MetastableConfig,
    seed: u64,
) -> Result<MetastableEstimate> {
    params.validate_relaxed(g)?;
    if !g.is_connected() {
        return Err(Error::Validation("metastable estimation needs a connected graph".into()));
    }
    if !(cfg.check_interval > 0.0) || cfg.burn_in < 0.0 {
        return Err(Error::Validation("check interval must be positive".into()));
    }
    let n = g.node_count();
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let k = ((cfg.initial_fraction * n as f64).round() as usize).clamp(1, n);
    let sparse = InitialCondition::random(n, k, &mut init_rng);
    let full = InitialCondition::all_infected(n);
    let mut a = Simulation::new(g, params, &sparse, derive_seed(seed, 1))?
        .with_reinfection(cfg.reinfect_count);
    let mut b = Simulation::new(g, params, &full, derive_seed(seed, 2))?
        .with_reinfection(cfg.reinfect_count);

    let mut t = cfg.burn_in.max(cfg.check_interval);
    loop {
        let spent = a.stats().event_count + b.stats().event_count;
        let ok_a = a.advance_to(t, cfg.event_budget.saturating_sub(b.stats().event_count));
        let ok_b = ok_a && b.advance_to(t, cfg.event_budget.saturating_sub(a.stats().event_count));
        let (sa, sb) = (a.stats(), b.stats());
        let metric = stopping_metric(sa.y(), sb.y(), sa.z(), sb.z());
        let converged = ok_a && ok_b && metric < cfg.tolerance;
        if converged || !(ok_a && ok_b) || spent >= cfg.event_budget {
            return Ok(MetastableEstimate {
                y_star: y_star_from(sa.y()),
                y1: sa.y(),
                y2: sb.y(),
                z1: sa.z(),
                z2: sb.z(),
                metric,
                t_stop: a.time().min(b.time()),
                events: sa.event_count + sb.event_count,
                reinfections: sa.reinfection_count + sb.reinfection_count,
                converged,
            });
        }
        t += cfg.check_interval;
    }
}

/// Metastable number of infected nodes. Fails with [`Error::Timeout`] if the
/// runs do not agree within the event budget.
pub fn twin_metastable(
    g: &Graph,
    params: &AsisParams,
    cfg: &MetastableConfig,
    seed: u64,
) -> Result<MetastableEstimate> {
    let est = twin_metastable_estimate(g, params, cfg, seed)?;
    if est.converged {
        Ok(est)
    } else {
        Err(Error::Timeout {
            budget: cfg.event_budget,
            t: est.t_stop,
            metric: est.metric,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub beta_grid: Vec<f64>,
    pub phi_grid: Vec<f64>,
    pub metastable: MetastableConfig,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub phi: f64,
    pub estimate: MetastableEstimate,
}

/// One twin-run estimate per `(beta, phi)` cell, `beta` outer. Every node
/// gets infection rate `beta` and every directed pair cutting rate `phi`;
/// recovery and reconnecting rates come from `base`. Cell `k` uses seed
/// `derive_seed(seed, k)`.
pub fn sweep(g: &Graph, base: &AsisParams, cfg: &SweepConfig, seed: u64) -> Result<Vec<SweepRow>> {
    if cfg.beta_grid.is_empty() || cfg.phi_grid.is_empty() {
        return Err(Error::Validation("sweep grids must be nonempty".into()));
    }
    let cells: Vec<(usize, f64, f64)> = cfg
        .beta_grid
        .iter()
        .flat_map(|&b| cfg.phi_grid.iter().map(move |&p| (b, p)))
        .enumerate()
        .map(|(k, (b, p))| (k, b, p))
        .collect();
    let run_cell = |&(k, beta, phi): &(usize, f64, f64)| -> Result<SweepRow> {
        let mut params = base.clone();
        params.beta.iter_mut().for_each(|x| *x = beta);
        params.phi.iter_mut().for_each(|x| *x = phi);
        let estimate = twin_metastable_estimate(g, &params, &cfg.metastable, derive_seed(seed, k as u64))?;
        Ok(SweepRow { beta, phi, estimate })
    };
    if cfg.jobs <= 1 {
        return cells.iter().map(run_cell).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    pool.install(|| cells.par_iter().map(run_cell).collect())
}
