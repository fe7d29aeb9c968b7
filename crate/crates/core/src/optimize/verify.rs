use serde::Serialize;

use super::cost::CostModel;
use super::problem::GpSolution;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::threshold::{EigenConfig, ThresholdMatrix};

/// Slack allowed on the decay requirement and on the bounds.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    /// Recomputed by power iteration on the solution's rates.
    pub lambda_max: f64,
    /// `max_k (M v)_k / v_k` for the returned certificate vector, an upper
    /// bound on `lambda_max` whenever `v > 0`.
    pub certificate_bound: f64,
    pub bounds_ok: bool,
    pub decay_ok: bool,
    pub certificate_ok: bool,
    pub passed: bool,
}

/// Re-checks a solution against the model independently of the solver.
pub fn verify(g: &Graph, model: &CostModel, sol: &GpSolution) -> Result<VerificationReport> {
    let params = sol.params(g, &model.psi.resolve(g.edge_count(), "psi")?);
    let m = ThresholdMatrix::build(g, &params)?;
    if sol.v.len() != m.dim() {
        return Err(Error::Validation(format!(
            "certificate has {} entries, expected {}",
            sol.v.len(),
            m.dim()
        )));
    }
    let within = |x: f64, lo: f64, hi: f64| x >= lo - VERIFY_TOL && x <= hi + VERIFY_TOL;
    let beta_ok = model
        .beta_bounds(g)?
        .iter()
        .zip(&sol.beta)
        .all(|(&(lo, hi), &b)| within(b, lo, hi));
    let delta_ok = model
        .delta_bounds(g)?
        .iter()
        .zip(&sol.delta)
        .all(|(&(lo, hi), &d)| within(d, lo, hi));
    let phi_ok = sol.phi.iter().all(|&f| within(f, model.phi.lower, model.phi.upper));
    let bounds_ok = beta_ok && delta_ok && phi_ok;

    let mut mv = vec![0.0; m.dim()];
    m.matrix().mul_vec(&sol.v, &mut mv);
    let positive = sol.v.iter().all(|&x| x > 0.0 && x.is_finite());
    let certificate_bound = if positive {
        mv.iter().zip(&sol.v).map(|(a, b)| a / b).fold(f64::NEG_INFINITY, f64::max)
    } else {
        f64::INFINITY
    };
    let lambda_max = m.lambda_max(&EigenConfig {
        tol: 1e-12 * m.shift().max(1.0),
        max_iter: 10_000_000,
    })?;
    let limit = -model.decay_rate + VERIFY_TOL;
    let decay_ok = lambda_max <= limit;
    let certificate_ok = certificate_bound <= limit;
    Ok(VerificationReport {
        lambda_max,
        certificate_bound,
        bounds_ok,
        decay_ok,
        certificate_ok,
        passed: bounds_ok && decay_ok && certificate_ok,
    })
}
