//! The rate-allocation problem as a geometric program.
//!
//! Variables are the tuned infection rates `beta_i`, the recovery slacks
//! `d_i = q_i - delta_i`, the cutting slacks `f_ij = s_ij - phi_ij` and a
//! positive vector `v` over the rows of the threshold matrix with `v_0 = 1`
//! (the certificate is scale invariant). Adding `(decay + kappa) I` to the
//! threshold matrix turns every entry into a posynomial in these variables;
//! the constraints `(M' v)_k <= kappa (1 - epsilon) v_k` then certify
//! `lambda_max(M) <= -decay - kappa epsilon` by Collatz-Wielandt.

use serde::Serialize;

use super::cost::{CostBreakdown, CostModel, InfectionCost, Normalization, RecoveryCost};
use super::gp::{log_constraint_values, solve_barrier, BarrierSettings, GeometricProgram, Posynomial};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::params::{AsisParams, QIndex};
use crate::threshold::{EigenConfig, ThresholdMatrix};

/// Positions of each variable family in the program's variable vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VariableLayout {
    pub beta: Option<usize>,
    pub delta: Option<usize>,
    pub phi: usize,
    /// First of `dim - 1` certificate variables, for rows `1..dim`.
    pub v: usize,
    pub total: usize,
}

impl VariableLayout {
    pub fn v_var(&self, row: usize) -> Option<usize> {
        (row > 0).then(|| self.v + row - 1)
    }
}

#[derive(Debug, Clone)]
pub struct EradicationProblem {
    pub gp: GeometricProgram,
    pub layout: VariableLayout,
    pub kappa: f64,
    pub normalization: Normalization,
    graph: Graph,
    model: CostModel,
    beta_bounds: Vec<(f64, f64)>,
    delta_bounds: Vec<(f64, f64)>,
    /// Recovery offsets `q_i`, or the fixed rates when recovery is not tuned.
    q: Vec<f64>,
    s: Vec<f64>,
    psi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GpSolution {
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
    /// Cutting rates in directed-slot order.
    pub phi: Vec<f64>,
    /// Certificate vector over the threshold-matrix rows, `v[0] = 1`.
    pub v: Vec<f64>,
    pub cost: CostBreakdown,
    pub lambda_max: f64,
    pub newton_iterations: usize,
    pub gap: f64,
}

impl GpSolution {
    pub fn params(&self, g: &Graph, psi: &[f64]) -> AsisParams {
        debug_assert_eq!(psi.len(), g.edge_count());
        AsisParams {
            beta: self.beta.clone(),
            delta: self.delta.clone(),
            phi: self.phi.clone(),
            psi: psi.to_vec(),
        }
    }
}

/// Builds the program for `model` on `g`.
pub fn build_gp(g: &Graph, model: &CostModel) -> Result<EradicationProblem> {
    model.validate(g)?;
    if !g.is_connected() {
        return Err(Error::Validation("rate allocation needs a connected graph".into()));
    }
    let n = g.node_count();
    let slots = g.slot_count();
    let qindex = QIndex::new(g);
    let dim = n + qindex.len();
    let normalization = model.normalization(g)?;
    let c = normalization.c;

    let mut next = 0;
    let mut take = |count: usize| {
        let start = next;
        next += count;
        start
    };
    let beta_var = matches!(model.beta, InfectionCost::Tuned { .. }).then(|| take(n));
    let delta_var = matches!(model.delta, RecoveryCost::Tuned { .. }).then(|| take(n));
    let phi_var = take(slots);
    let v_var = take(dim - 1);
    let layout = VariableLayout {
        beta: beta_var,
        delta: delta_var,
        phi: phi_var,
        v: v_var,
        total: next,
    };

    let beta_bounds = model.beta_bounds(g)?;
    let delta_bounds = model.delta_bounds(g)?;
    let (q, r_exp) = match &model.delta {
        RecoveryCost::Fixed { value } => (value.resolve(n, "delta value")?, vec![]),
        RecoveryCost::Tuned { offset, exponent, .. } => {
            (offset.resolve(n, "delta offset")?, exponent.resolve(n, "delta exponent")?)
        }
    };
    let s = model.phi.offset.resolve(slots, "phi offset")?;
    let u_exp = model.phi.exponent.resolve(slots, "phi exponent")?;
    let psi = model.psi.resolve(g.edge_count(), "psi")?;

    let max = |v: &[f64]| v.iter().copied().fold(0.0f64, f64::max);
    let kappa = max(&q) + max(&psi) + max(&s);
    let decay = model.decay_rate;
    let scale = 1.0 / (kappa * (1.0 - model.epsilon));

    let mut gp = GeometricProgram {
        num_vars: layout.total,
        ..Default::default()
    };

    // Objective without the additive constants.
    if let (Some(b), InfectionCost::Tuned { exponent, .. }) = (beta_var, &model.beta) {
        for (i, p) in exponent.resolve(n, "beta exponent")?.into_iter().enumerate() {
            gp.objective.push(c[1], vec![(b + i, -p)]);
        }
    }
    if let Some(d) = delta_var {
        for (i, r) in r_exp.iter().enumerate() {
            gp.objective.push(c[3], vec![(d + i, -r)]);
        }
    }
    for (k, u) in u_exp.iter().enumerate() {
        gp.objective.push(c[5], vec![(phi_var + k, -u)]);
    }

    // Infection rate as a monomial factor.
    let beta_term = |i: usize| -> (f64, Vec<(usize, f64)>) {
        match beta_var {
            Some(b) => (1.0, vec![(b + i, 1.0)]),
            None => (beta_bounds[i].0, vec![]),
        }
    };
    let ratio = |col: usize, row: usize, mut exps: Vec<(usize, f64)>| {
        if col != row {
            if let Some(k) = layout.v_var(col) {
                exps.push((k, 1.0));
            }
            if let Some(k) = layout.v_var(row) {
                exps.push((k, -1.0));
            }
        }
        exps
    };

    for i in 0..n {
        // Node row.
        let mut p = Posynomial::default();
        match delta_var {
            Some(d) => {
                p.push(scale, vec![(d + i, 1.0)]);
                p.push(scale * (kappa + decay - q[i]), vec![]);
            }
            None => p.push(scale * (kappa + decay - q[i]), vec![]),
        }
        for &pos in qindex.incoming(i) {
            let (coef, exps) = beta_term(i);
            p.push(scale * coef, ratio(n + pos, i, exps));
        }
        gp.constraints.push(p);
    }
    for i in 0..n {
        for slot in qindex.group(i) {
            let row = n + slot;
            let psi_ij = psi[g.slot_edge(slot)];
            let mut p = Posynomial::default();
            if let Some(d) = delta_var {
                p.push(scale, vec![(d + i, 1.0)]);
            }
            p.push(scale, vec![(phi_var + slot, 1.0)]);
            p.push(scale * (kappa + decay - q[i] - s[slot] - psi_ij), vec![]);
            p.push(scale * psi_ij, ratio(i, row, vec![]));
            for &pos in qindex.incoming(i) {
                let (coef, exps) = beta_term(i);
                p.push(scale * coef, ratio(n + pos, row, exps));
            }
            gp.constraints.push(p);
        }
    }

    // Boxes as monomial constraints.
    let mut boxed = |var: usize, lo: f64, hi: f64| {
        let mut up = Posynomial::default();
        up.push(1.0 / hi, vec![(var, 1.0)]);
        let mut down = Posynomial::default();
        down.push(lo, vec![(var, -1.0)]);
        gp.constraints.push(up);
        gp.constraints.push(down);
    };
    if let Some(b) = beta_var {
        for (i, &(lo, hi)) in beta_bounds.iter().enumerate() {
            boxed(b + i, lo, hi);
        }
    }
    if let Some(d) = delta_var {
        for (i, &(lo, hi)) in delta_bounds.iter().enumerate() {
            boxed(d + i, q[i] - hi, q[i] - lo);
        }
    }
    for k in 0..slots {
        boxed(phi_var + k, s[k] - model.phi.upper, s[k] - model.phi.lower);
    }

    Ok(EradicationProblem {
        gp,
        layout,
        kappa,
        normalization,
        graph: g.clone(),
        model: model.clone(),
        beta_bounds,
        delta_bounds,
        q,
        s,
        psi,
    })
}

impl EradicationProblem {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Rates at log-variables `y`.
    pub fn rates(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.graph.node_count();
        let beta = match self.layout.beta {
            Some(b) => (0..n).map(|i| y[b + i].exp()).collect(),
            None => self.beta_bounds.iter().map(|b| b.0).collect(),
        };
        let delta = match self.layout.delta {
            Some(d) => (0..n).map(|i| self.q[i] - y[d + i].exp()).collect(),
            None => self.delta_bounds.iter().map(|b| b.0).collect(),
        };
        let phi = (0..self.graph.slot_count())
            .map(|k| self.s[k] - y[self.layout.phi + k].exp())
            .collect();
        (beta, delta, phi)
    }

    fn log_rates(&self, beta: &[f64], delta: &[f64], phi: &[f64], v: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.layout.total];
        if let Some(b) = self.layout.beta {
            for (i, x) in beta.iter().enumerate() {
                y[b + i] = x.ln();
            }
        }
        if let Some(d) = self.layout.delta {
            for (i, x) in delta.iter().enumerate() {
                y[d + i] = (self.q[i] - x).ln();
            }
        }
        for (k, x) in phi.iter().enumerate() {
            y[self.layout.phi + k] = (self.s[k] - x).ln();
        }
        for (row, x) in v.iter().enumerate().skip(1) {
            y[self.layout.v + row - 1] = (x / v[0]).ln();
        }
        y
    }

    fn threshold(&self, beta: &[f64], delta: &[f64], phi: &[f64]) -> Result<ThresholdMatrix> {
        let params = AsisParams {
            beta: beta.to_vec(),
            delta: delta.to_vec(),
            phi: phi.to_vec(),
            psi: self.psi.clone(),
        };
        ThresholdMatrix::build(&self.graph, &params)
    }

    /// Strictly feasible start. Every entry of the threshold matrix is
    /// monotone in the rates, so the corner with the smallest infection and
    /// largest recovery and cutting rates decides feasibility; the start then
    /// moves from that corner toward the box centre in log space as far as
    /// the certificate built from the Perron vector stays valid.
    pub fn start_point(&self) -> Result<Vec<f64>> {
        let n = self.graph.node_count();
        let slots = self.graph.slot_count();
        let beta_lo: Vec<f64> = self.beta_bounds.iter().map(|b| b.0).collect();
        let delta_hi: Vec<f64> = self.delta_bounds.iter().map(|b| b.1).collect();
        let phi_hi = vec![self.model.phi.upper; slots];
        let required = self.model.decay_rate + self.kappa * self.model.epsilon;
        let corner = self.threshold(&beta_lo, &delta_hi, &phi_hi)?;
        if !corner.decays_faster_than(required) {
            let lam = corner.lambda_max(&EigenConfig::default()).unwrap_or(f64::NAN);
            return Err(Error::Infeasible(format!(
                "most aggressive rates (minimum infection, maximum recovery and cutting) give \
                 lambda_max = {lam:.6e}, not below the required {:.6e}",
                -required
            )));
        }
        let y_corner = self.log_rates(&beta_lo, &delta_hi, &phi_hi, &[1.0]);
        let mut y_centre = y_corner.clone();
        let geo = |a: f64, b: f64| 0.5 * (a.ln() + b.ln());
        if let Some(b) = self.layout.beta {
            for (i, &(lo, hi)) in self.beta_bounds.iter().enumerate() {
                y_centre[b + i] = geo(lo, hi);
            }
        }
        if let Some(d) = self.layout.delta {
            for (i, &(lo, hi)) in self.delta_bounds.iter().enumerate() {
                y_centre[d + i] = geo(self.q[i] - hi, self.q[i] - lo);
            }
        }
        for k in 0..slots {
            y_centre[self.layout.phi + k] = geo(self.s[k] - self.model.phi.upper, self.s[k] - self.model.phi.lower);
        }
        let cfg = EigenConfig {
            tol: 1e-12 * self.kappa,
            max_iter: 10_000_000,
        };
        let mut theta = 1.0;
        for _ in 0..60 {
            let y: Vec<f64> = y_corner
                .iter()
                .zip(&y_centre)
                .map(|(a, b)| a + theta * (b - a))
                .collect();
            let (beta, delta, phi) = self.rates(&y);
            let perron = self.threshold(&beta, &delta, &phi)?.perron(&cfg)?;
            if perron.upper < -required {
                let full = self.log_rates(&beta, &delta, &phi, &perron.vector);
                if log_constraint_values(&self.gp, &full).iter().all(|&c| c < 0.0) {
                    return Ok(full);
                }
            }
            theta *= 0.5;
        }
        debug_assert!(n > 0);
        Err(Error::Infeasible(
            "feasible region is too thin to place a strictly interior start".into(),
        ))
    }

    pub fn solve(&self, settings: &BarrierSettings) -> Result<GpSolution> {
        let y0 = self.start_point()?;
        let res = solve_barrier(&self.gp, &y0, settings)?;
        let (beta, delta, phi) = self.rates(&res.y);
        let dim = self.graph.node_count() + self.graph.slot_count();
        let v: Vec<f64> = (0..dim)
            .map(|row| self.layout.v_var(row).map_or(1.0, |k| res.y[k].exp()))
            .collect();
        let cost = self.model.cost(&self.graph, &beta, &delta, &phi)?;
        let lambda_max = self
            .threshold(&beta, &delta, &phi)?
            .lambda_max(&EigenConfig {
                tol: 1e-12 * self.kappa,
                max_iter: 10_000_000,
            })?;
        Ok(GpSolution {
            beta,
            delta,
            phi,
            v,
            cost,
            lambda_max,
            newton_iterations: res.newton_iterations,
            gap: res.gap,
        })
    }
}

/// Builds and solves in one call.
pub fn solve_gp(g: &Graph, model: &CostModel, settings: &BarrierSettings) -> Result<GpSolution> {
    build_gp(g, model)?.solve(settings)
}
