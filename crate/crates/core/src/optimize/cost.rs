//! Normalised posynomial tuning costs.
//!
//! ```text
//! f(beta)  = c1 + c2 * sum_i beta_i^(-p_i)
//! g(delta) = c3 + c4 * sum_i (q_i - delta_i)^(-r_i)
//! h(phi)   = c5 + c6 * sum_(i,j) (s_ij - phi_ij)^(-u_ij)
//! ```
//!
//! The constants are fixed by `f(upper) = 0`, `f(lower) = 1`, `g(upper) = 1`,
//! `g(lower) = 0`, `h(upper) = 1`, `h(lower) = 0` (all entries at the bound).
//! The cutting sum runs over directed pairs since each orientation carries
//! its own rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A scalar applied to every entry, or one value per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerEntry {
    Uniform(f64),
    Values(Vec<f64>),
}

impl PerEntry {
    pub fn resolve(&self, len: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            Self::Uniform(v) => Ok(vec![*v; len]),
            Self::Values(v) if v.len() == len => Ok(v.clone()),
            Self::Values(v) => Err(Error::Validation(format!(
                "{name} has {} entries, expected {len}",
                v.len()
            ))),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Self::Uniform(v) => *v,
            Self::Values(v) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl From<f64> for PerEntry {
    fn from(v: f64) -> Self {
        Self::Uniform(v)
    }
}

/// Infection rates: held fixed, or tuned within `[lower, upper]` at cost `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InfectionCost {
    Fixed { value: PerEntry },
    Tuned { lower: f64, upper: f64, exponent: PerEntry },
}

/// Recovery rates: held fixed, or tuned within `[lower, upper]` at cost `g`
/// with offsets `q_i > upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RecoveryCost {
    Fixed {
        value: PerEntry,
    },
    Tuned {
        lower: f64,
        upper: f64,
        exponent: PerEntry,
        offset: PerEntry,
    },
}

/// Cutting rates, always tuned, within `[lower, upper]` at cost `h` with
/// offsets `s_ij > upper` (directed-slot order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuttingCost {
    pub lower: f64,
    pub upper: f64,
    pub exponent: PerEntry,
    pub offset: PerEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub beta: InfectionCost,
    pub delta: RecoveryCost,
    pub phi: CuttingCost,
    /// Reconnecting rates, per undirected edge; never tuned.
    pub psi: PerEntry,
    /// Required exponential decay rate of the infection probabilities.
    pub decay_rate: f64,
    /// Margin turning the strict certificate inequality into `<= 1 - epsilon`.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    1e-9
}

/// `c1..c6`; zero for families held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalization {
    pub c: [f64; 6],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub infection: f64,
    pub recovery: f64,
    pub cutting: f64,
    pub total: f64,
}

/// `(constant, scale)` with `constant + scale * sum_at_zero = 0` and
/// `constant + scale * sum_at_one = 1`.
pub fn normalize_pair(sum_at_zero: f64, sum_at_one: f64) -> Result<(f64, f64)> {
    let span = sum_at_one - sum_at_zero;
    if !(span.abs() > 0.0) || !span.is_finite() {
        return Err(Error::Validation(
            "degenerate cost normalisation: bounds give identical costs".into(),
        ));
    }
    let scale = 1.0 / span;
    Ok((-scale * sum_at_zero, scale))
}

fn power_sum(base: impl Iterator<Item = f64>, exps: &[f64]) -> f64 {
    base.zip(exps).map(|(b, &e)| b.powf(-e)).sum()
}

impl CostModel {
    /// Cutting-rate-only model: infection and recovery fixed, unit exponents,
    /// `phi` in `[phi_lower, phi_upper]` with offsets `s = offset_factor * phi_upper`.
    pub fn cutting_only(
        beta: f64,
        delta: f64,
        phi_lower: f64,
        phi_upper: f64,
        psi: f64,
        offset_factor: f64,
        decay_rate: f64,
    ) -> Self {
        Self {
            beta: InfectionCost::Fixed { value: beta.into() },
            delta: RecoveryCost::Fixed { value: delta.into() },
            phi: CuttingCost {
                lower: phi_lower,
                upper: phi_upper,
                exponent: 1.0.into(),
                offset: (offset_factor * phi_upper).into(),
            },
            psi: psi.into(),
            decay_rate,
            epsilon: default_epsilon(),
        }
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        let mut bad = Vec::new();
        let (n, slots) = (g.node_count(), g.slot_count());
        if !(self.decay_rate > 0.0 && self.decay_rate.is_finite()) {
            bad.push(format!("decay rate {} must be positive", self.decay_rate));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            bad.push(format!("epsilon {} must lie in [0, 1)", self.epsilon));
        }
        let positive = |v: &[f64]| v.iter().all(|&x| x > 0.0 && x.is_finite());
        let mut check = |cond: bool, msg: String| {
            if !cond {
                bad.push(msg);
            }
        };
        match &self.beta {
            InfectionCost::Fixed { value } => {
                let v = value.resolve(n, "beta value")?;
                check(positive(&v), "fixed beta must be positive".into());
            }
            InfectionCost::Tuned { lower, upper, exponent } => {
                check(*lower > 0.0 && lower < upper, format!("need 0 < beta lower < upper, got [{lower}, {upper}]"));
                check(positive(&exponent.resolve(n, "beta exponent")?), "beta exponents must be positive".into());
            }
        }
        match &self.delta {
            RecoveryCost::Fixed { value } => {
                let v = value.resolve(n, "delta value")?;
                check(positive(&v), "fixed delta must be positive".into());
            }
            RecoveryCost::Tuned { lower, upper, exponent, offset } => {
                check(*lower > 0.0 && lower < upper, format!("need 0 < delta lower < upper, got [{lower}, {upper}]"));
                check(positive(&exponent.resolve(n, "delta exponent")?), "delta exponents must be positive".into());
                let q = offset.resolve(n, "delta offset")?;
                check(q.iter().all(|&qi| qi > *upper), "delta offsets q_i must exceed the upper bound".into());
            }
        }
        let phi = &self.phi;
        check(phi.lower >= 0.0 && phi.lower < phi.upper, format!("need 0 <= phi lower < upper, got [{}, {}]", phi.lower, phi.upper));
        check(positive(&phi.exponent.resolve(slots, "phi exponent")?), "phi exponents must be positive".into());
        let s = phi.offset.resolve(slots, "phi offset")?;
        check(s.iter().all(|&x| x > phi.upper), "phi offsets s_ij must exceed the upper bound".into());
        check(positive(&self.psi.resolve(g.edge_count(), "psi")?), "psi must be positive".into());
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad))
        }
    }

    pub fn normalization(&self, g: &Graph) -> Result<Normalization> {
        let (n, slots) = (g.node_count(), g.slot_count());
        let mut c = [0.0; 6];
        if let InfectionCost::Tuned { lower, upper, exponent } = &self.beta {
            let p = exponent.resolve(n, "beta exponent")?;
            // f vanishes at the upper bound and equals one at the lower bound.
            let (c1, c2) = normalize_pair(
                power_sum(std::iter::repeat(*upper), &p),
                power_sum(std::iter::repeat(*lower), &p),
            )?;
            c[0] = c1;
            c[1] = c2;
        }
        if let RecoveryCost::Tuned { lower, upper, exponent, offset } = &self.delta {
            let r = exponent.resolve(n, "delta exponent")?;
            let q = offset.resolve(n, "delta offset")?;
            let (c3, c4) = normalize_pair(
                power_sum(q.iter().map(|qi| qi - lower), &r),
                power_sum(q.iter().map(|qi| qi - upper), &r),
            )?;
            c[2] = c3;
            c[3] = c4;
        }
        let u = self.phi.exponent.resolve(slots, "phi exponent")?;
        let s = self.phi.offset.resolve(slots, "phi offset")?;
        let (c5, c6) = normalize_pair(
            power_sum(s.iter().map(|x| x - self.phi.lower), &u),
            power_sum(s.iter().map(|x| x - self.phi.upper), &u),
        )?;
        c[4] = c5;
        c[5] = c6;
        Ok(Normalization { c })
    }

    /// `f + g + h` at the given rates, constants included. Fixed families
    /// contribute nothing.
    pub fn cost(&self, g: &Graph, beta: &[f64], delta: &[f64], phi: &[f64]) -> Result<CostBreakdown> {
        let norm = self.normalization(g)?;
        let c = norm.c;
        let n = g.node_count();
        let infection = match &self.beta {
            InfectionCost::Fixed { .. } => 0.0,
            InfectionCost::Tuned { exponent, .. } => {
                c[0] + c[1] * power_sum(beta.iter().copied(), &exponent.resolve(n, "beta exponent")?)
            }
        };
        let recovery = match &self.delta {
            RecoveryCost::Fixed { .. } => 0.0,
            RecoveryCost::Tuned { exponent, offset, .. } => {
                let q = offset.resolve(n, "delta offset")?;
                let r = exponent.resolve(n, "delta exponent")?;
                c[2] + c[3] * power_sum(q.iter().zip(delta).map(|(qi, d)| qi - d), &r)
            }
        };
        let slots = g.slot_count();
        let s = self.phi.offset.resolve(slots, "phi offset")?;
        let u = self.phi.exponent.resolve(slots, "phi exponent")?;
        let cutting = c[4] + c[5] * power_sum(s.iter().zip(phi).map(|(si, p)| si - p), &u);
        Ok(CostBreakdown {
            infection,
            recovery,
            cutting,
            total: infection + recovery + cutting,
        })
    }

    /// Infection rate bounds; fixed rates give a degenerate interval.
    pub fn beta_bounds(&self, g: &Graph) -> Result<Vec<(f64, f64)>> {
        Ok(match &self.beta {
            InfectionCost::Fixed { value } => value
                .resolve(g.node_count(), "beta value")?
                .into_iter()
                .map(|v| (v, v))
                .collect(),
            InfectionCost::Tuned { lower, upper, .. } => vec![(*lower, *upper); g.node_count()],
        })
    }

    pub fn delta_bounds(&self, g: &Graph) -> Result<Vec<(f64, f64)>> {
        Ok(match &self.delta {
            RecoveryCost::Fixed { value } => value
                .resolve(g.node_count(), "delta value")?
                .into_iter()
                .map(|v| (v, v))
                .collect(),
            RecoveryCost::Tuned { lower, upper, .. } => vec![(*lower, *upper); g.node_count()],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuned_model(g: &Graph) -> CostModel {
        CostModel {
            beta: InfectionCost::Tuned { lower: 1.0, upper: 2.0, exponent: 1.0.into() },
            delta: RecoveryCost::Tuned {
                lower: 0.5,
                upper: 1.5,
                exponent: 2.0.into(),
                offset: 3.0.into(),
            },
            phi: CuttingCost {
                lower: 0.0,
                upper: 1.0,
                exponent: PerEntry::Values((0..g.slot_count()).map(|k| 1.0 + 0.1 * k as f64).collect()),
                offset: 2.0.into(),
            },
            psi: 1.0.into(),
            decay_rate: 0.1,
            epsilon: 1e-9,
        }
    }

    #[test]
    fn two_node_infection_constants() {
        // Sum at the upper bound is 1, at the lower bound 2.
        let (c1, c2) = normalize_pair(1.0, 2.0).unwrap();
        assert_eq!((c1, c2), (-1.0, 1.0));
        let g = Graph::path(2);
        let norm = tuned_model(&g).normalization(&g).unwrap();
        assert!((norm.c[0] + 1.0).abs() < 1e-15 && (norm.c[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unbounded_upper_limit() {
        let lower = 0.5;
        let (c1, c2) = normalize_pair(2.0 / 1e12, 2.0 / lower).unwrap();
        assert!(c1.abs() < 1e-11);
        assert!((c2 - lower / 2.0).abs() < 1e-11);
    }

    #[test]
    fn equal_bounds_are_rejected() {
        assert!(normalize_pair(1.0, 1.0).is_err());
        let g = Graph::path(2);
        let mut m = tuned_model(&g);
        m.beta = InfectionCost::Tuned { lower: 1.0, upper: 1.0, exponent: 1.0.into() };
        assert!(m.normalization(&g).is_err());
        assert!(m.validate(&g).is_err());
    }

    #[test]
    fn normalisation_identities() {
        let g = Graph::complete(4);
        let m = tuned_model(&g);
        m.validate(&g).unwrap();
        let (n, s) = (g.node_count(), g.slot_count());
        let at = |b: f64, d: f64, p: f64| m.cost(&g, &vec![b; n], &vec![d; n], &vec![p; s]).unwrap();
        let hi = at(2.0, 1.5, 1.0);
        let lo = at(1.0, 0.5, 0.0);
        assert!(hi.infection.abs() < 1e-12 && (lo.infection - 1.0).abs() < 1e-12);
        assert!((hi.recovery - 1.0).abs() < 1e-12 && lo.recovery.abs() < 1e-12);
        assert!((hi.cutting - 1.0).abs() < 1e-12 && lo.cutting.abs() < 1e-12);
        assert!(m.normalization(&g).unwrap().c.iter().skip(1).step_by(2).all(|&c| c > 0.0));
    }

    #[test]
    fn validation_catches_offsets() {
        let g = Graph::path(3);
        let mut m = tuned_model(&g);
        m.phi.offset = 1.0.into();
        assert!(m.validate(&g).is_err());
        let mut m = tuned_model(&g);
        m.psi = PerEntry::Values(vec![1.0]);
        assert!(m.validate(&g).is_err());
    }

    #[test]
    fn json_shape() {
        let m = CostModel::cutting_only(0.02, 0.1, 0.0, 0.08, 0.02, 2.0, 0.005);
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains(r#""mode":"fixed""#));
        let back: CostModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
