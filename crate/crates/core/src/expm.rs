//! Action of the matrix exponential by uniformization.
//!
//! For an operator `A` with nonnegative off-diagonal entries and a rate
//! `lambda >= max_i |A_ii|`, the matrix `P = I + A / lambda` is entrywise
//! nonnegative and
//!
//! ```text
//! exp(tA) x = sum_k Poisson(k; lambda t) P^k x
//! ```
//!
//! Every term is nonnegative for nonnegative `x`, so the sum is free of
//! cancellation. Long horizons are split so that `lambda * dt <= 32`.

use crate::error::{Error, Result};

const MAX_CHUNK: f64 = 32.0;
const MAX_TERMS: usize = 100_000;

/// Computes `exp(tA) x`. `apply(y, out)` must write `A y` into `out`.
pub fn expm_action<F>(mut apply: F, lambda: f64, x: &[f64], t: f64, tol: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if t < 0.0 || !t.is_finite() {
        return Err(Error::Validation(format!("time {t} must be finite and nonnegative")));
    }
    if t == 0.0 || lambda == 0.0 {
        return Ok(x.to_vec());
    }
    let chunks = (lambda * t / MAX_CHUNK).ceil().max(1.0) as usize;
    let dt = t / chunks as f64;
    let mut state = x.to_vec();
    let mut term = vec![0.0; x.len()];
    let mut acc = vec![0.0; x.len()];
    let mut scratch = vec![0.0; x.len()];
    for _ in 0..chunks {
        let mean = lambda * dt;
        let mut weight = (-mean).exp();
        let mut mass = weight;
        term.copy_from_slice(&state);
        for (a, v) in acc.iter_mut().zip(&term) {
            *a = weight * v;
        }
        let mut k = 0usize;
        loop {
            let norm = term.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if (k as f64) >= mean && (1.0 - mass) * norm <= tol {
                break;
            }
            if k >= MAX_TERMS {
                return Err(Error::Convergence {
                    what: "uniformization series",
                    iterations: k,
                });
            }
            apply(&term, &mut scratch);
            for (tv, s) in term.iter_mut().zip(&scratch) {
                *tv += s / lambda;
            }
            k += 1;
            weight *= mean / k as f64;
            mass += weight;
            for (a, v) in acc.iter_mut().zip(&term) {
                *a += weight * v;
            }
        }
        std::mem::swap(&mut state, &mut acc);
    }
    Ok(state)
}
