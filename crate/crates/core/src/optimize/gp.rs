//! Geometric programs in posynomial form, solved in log space with a
//! primal barrier method.
//!
//! With `x = exp(y)` a monomial `c * prod x_k^a_k` becomes `exp(a.y + ln c)`
//! and a posynomial the exponential of a log-sum-exp of affine maps, which
//! is convex in `y`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    /// `(variable, exponent)` pairs; variables may repeat.
    pub exps: Vec<(usize, f64)>,
}

impl Monomial {
    pub fn new(coef: f64, exps: Vec<(usize, f64)>) -> Self {
        Self { coef, exps }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exps.iter().fold(self.coef, |acc, &(k, a)| acc * x[k].powf(a))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Posynomial {
    pub terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn push(&mut self, coef: f64, exps: Vec<(usize, f64)>) {
        if coef != 0.0 {
            self.terms.push(Monomial::new(coef, exps));
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }
}

/// minimise `objective(x)` subject to `constraint_k(x) <= 1`, `x > 0`.
#[derive(Debug, Clone, Default)]
pub struct GeometricProgram {
    pub num_vars: usize,
    pub objective: Posynomial,
    pub constraints: Vec<Posynomial>,
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierSettings {
    pub mu: f64,
    pub newton_tol: f64,
    pub gap_tol: f64,
    pub max_newton: usize,
    pub t0: f64,
}

impl Default for BarrierSettings {
    fn default() -> Self {
        Self {
            mu: 10.0,
            newton_tol: 1e-9,
            gap_tol: 1e-8,
            max_newton: 500,
            t0: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierResult {
    /// Optimal log-variables.
    pub y: Vec<f64>,
    /// `ln objective` at `y`.
    pub log_objective: f64,
    pub newton_iterations: usize,
    /// Duality gap bound `constraints / t` in log-objective units.
    pub gap: f64,
}

/// Log-space form of one posynomial: rows `a_k`, offsets `ln c_k`, and the
/// variables it touches.
#[derive(Debug, Clone)]
struct LogSumExp {
    vars: Vec<usize>,
    /// Exponents over `vars`, row-major `terms x vars`.
    a: Vec<f64>,
    b: Vec<f64>,
}

impl LogSumExp {
    fn new(p: &Posynomial) -> Self {
        let mut vars: Vec<usize> = p.terms.iter().flat_map(|t| t.exps.iter().map(|e| e.0)).collect();
        vars.sort_unstable();
        vars.dedup();
        let w = vars.len();
        let mut a = vec![0.0; p.terms.len() * w];
        let mut b = Vec::with_capacity(p.terms.len());
        for (r, t) in p.terms.iter().enumerate() {
            for &(k, e) in &t.exps {
                let c = vars.binary_search(&k).unwrap();
                a[r * w + c] += e;
            }
            b.push(t.coef.ln());
        }
        Self { vars, a, b }
    }

    fn terms(&self) -> usize {
        self.b.len()
    }

    fn exponents(&self, y: &[f64]) -> Vec<f64> {
        let w = self.vars.len();
        (0..self.terms())
            .map(|r| {
                let row = &self.a[r * w..(r + 1) * w];
                self.b[r] + row.iter().zip(&self.vars).map(|(a, &k)| a * y[k]).sum::<f64>()
            })
            .collect()
    }

    fn value(&self, y: &[f64]) -> f64 {
        let z = self.exponents(y);
        let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return top;
        }
        top + z.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
    }

    /// Value, local gradient and local Hessian.
    fn derivatives(&self, y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let w = self.vars.len();
        let z = self.exponents(y);
        let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - top).exp()).collect();
        let total: f64 = e.iter().sum();
        let value = top + total.ln();
        let mut grad = vec![0.0; w];
        let mut hess = vec![0.0; w * w];
        for (r, er) in e.iter().enumerate() {
            let p = er / total;
            let row = &self.a[r * w..(r + 1) * w];
            for c in 0..w {
                grad[c] += p * row[c];
                if row[c] != 0.0 {
                    for d in 0..w {
                        hess[c * w + d] += p * row[c] * row[d];
                    }
                }
            }
        }
        for c in 0..w {
            for d in 0..w {
                hess[c * w + d] -= grad[c] * grad[d];
            }
        }
        (value, grad, hess)
    }
}

struct Compiled {
    n: usize,
    objective: LogSumExp,
    constraints: Vec<LogSumExp>,
}

impl Compiled {
    fn new(gp: &GeometricProgram) -> Self {
        Self {
            n: gp.num_vars,
            objective: LogSumExp::new(&gp.objective),
            constraints: gp.constraints.iter().map(LogSumExp::new).collect(),
        }
    }

    /// `t F0(y) - sum ln(-F_k(y))`, or `None` outside the domain.
    fn barrier(&self, y: &[f64], t: f64) -> Option<f64> {
        let mut acc = if self.objective.terms() > 0 { t * self.objective.value(y) } else { 0.0 };
        for c in &self.constraints {
            let f = c.value(y);
            if !(f < 0.0) {
                return None;
            }
            acc -= (-f).ln();
        }
        acc.is_finite().then_some(acc)
    }

    fn newton_system(&self, y: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let mut scatter = |lse: &LogSumExp, gw: f64, gg: f64, hw: f64| {
            let (_, g, h) = lse.derivatives(y);
            let w = lse.vars.len();
            for (c, &kc) in lse.vars.iter().enumerate() {
                grad[kc] += gw * g[c];
                for (d, &kd) in lse.vars.iter().enumerate() {
                    hess[(kc, kd)] += hw * h[c * w + d] + gg * g[c] * g[d];
                }
            }
        };
        if self.objective.terms() > 0 {
            scatter(&self.objective, t, 0.0, t);
        }
        for c in &self.constraints {
            let f = c.value(y);
            // d/dy [-ln(-f)] = g / (-f), Hessian H / (-f) + g g^T / f^2.
            let inv = 1.0 / -f;
            scatter(c, inv, inv * inv, inv);
        }
        (grad, hess)
    }
}

/// Log-space step length below which centering stops.
const STEP_FLOOR: f64 = 1e-9;

fn solve_newton(mut hess: DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    // Symmetric diagonal scaling; near-active boxes make the raw diagonal
    // span many orders of magnitude.
    let n = hess.nrows();
    let d: Vec<f64> = (0..n)
        .map(|k| {
            let h = hess[(k, k)];
            if h > 0.0 { 1.0 / h.sqrt() } else { 1.0 }
        })
        .collect();
    for r in 0..n {
        for c in 0..n {
            hess[(r, c)] *= d[r] * d[c];
        }
    }
    let rhs = DVector::from_iterator(n, grad.iter().zip(&d).map(|(g, s)| g * s));
    let mut shift = 0.0;
    for _ in 0..12 {
        let mut h = hess.clone();
        if shift > 0.0 {
            for k in 0..n {
                h[(k, k)] += shift;
            }
        }
        if let Some(ch) = h.cholesky() {
            let z = ch.solve(&rhs);
            return Ok(DVector::from_iterator(n, z.iter().zip(&d).map(|(z, s)| -z * s)));
        }
        shift = if shift == 0.0 { 1e-12 } else { shift * 100.0 };
    }
    Err(Error::Solver("Newton system is not positive definite".into()))
}

/// Evaluates every constraint in log space at `y`; feasible iff all negative.
pub fn log_constraint_values(gp: &GeometricProgram, y: &[f64]) -> Vec<f64> {
    gp.constraints.iter().map(|c| LogSumExp::new(c).value(y)).collect()
}

/// Minimises the program from a strictly feasible log-space start `y0`.
pub fn solve_barrier(gp: &GeometricProgram, y0: &[f64], settings: &BarrierSettings) -> Result<BarrierResult> {
    if y0.len() != gp.num_vars {
        return Err(Error::Validation(format!(
            "start point has {} entries for {} variables",
            y0.len(),
            gp.num_vars
        )));
    }
    let prog = Compiled::new(gp);
    let mut y = y0.to_vec();
    let mut t = settings.t0;
    if prog.barrier(&y, t).is_none() {
        return Err(Error::Infeasible("start point is not strictly feasible".into()));
    }
    let m = prog.constraints.len().max(1) as f64;
    let mut total = 0;
    loop {
        // Centering.
        let mut converged = false;
        for _ in 0..settings.max_newton {
            total += 1;
            let (grad, hess) = prog.newton_system(&y, t);
            let step = solve_newton(hess, &grad)?;
            let decrement = -grad.dot(&step);
            let current = prog.barrier(&y, t).expect("iterate stays feasible");
            // Below the resolution of the barrier value no step can be
            // verified; steps under STEP_FLOOR change no rate measurably.
            let floor = 64.0 * f64::EPSILON * current.abs();
            if decrement / 2.0 <= settings.newton_tol.max(floor) || step.amax() <= STEP_FLOOR {
                converged = true;
                break;
            }
            let mut s = 1.0;
            let mut accepted = false;
            while s > 1e-12 {
                let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, d)| a + s * d).collect();
                if let Some(v) = prog.barrier(&trial, t) {
                    if v < current && v <= current - 0.01 * s * decrement {
                        y = trial;
                        accepted = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !accepted {
                // Rounding dominates the remaining decrease.
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                what: "barrier centering",
                iterations: total,
            });
        }
        if prog.objective.terms() == 0 || m / t < settings.gap_tol {
            break;
        }
        t *= settings.mu;
    }
    let log_objective = if prog.objective.terms() > 0 { prog.objective.value(&y) } else { f64::NEG_INFINITY };
    Ok(BarrierResult {
        y,
        log_objective,
        newton_iterations: total,
        gap: m / t,
    })
}
