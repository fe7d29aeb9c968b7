//! The threshold matrix of the moment closure and its spectral abscissa.
//!
//! State vector layout: node probabilities `p_0..p_{n-1}` first, then the
//! directed-edge states `q_ij` in [`QIndex`] order. Row `i` of the node block
//! is `-delta_i p_i + beta_i * sum_{k in N_i} q_ki`; the row of `q_ij` is
//! `psi_ij p_i - (delta_i + phi_ij + psi_ij) q_ij + beta_i * sum_{k in N_i} q_ki`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::params::{AsisParams, QIndex};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy)]
pub struct EigenConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThresholdMatrix {
    nodes: usize,
    qindex: QIndex,
    matrix: CsrMatrix,
}

impl ThresholdMatrix {
    /// Assembles the matrix. Zero infection or cutting rates are accepted;
    /// recovery and reconnecting rates must be positive.
    pub fn build(g: &Graph, params: &AsisParams) -> Result<Self> {
        params.validate_relaxed(g)?;
        let n = g.node_count();
        let qindex = QIndex::new(g);
        let dim = n + qindex.len();
        let mut t = Vec::new();
        for i in 0..n {
            let beta = params.beta[i];
            let delta = params.delta[i];
            t.push((i, i, -delta));
            for &pos in qindex.incoming(i) {
                t.push((i, n + pos, beta));
            }
            for s in qindex.group(i) {
                let row = n + s;
                let psi = params.psi[g.slot_edge(s)];
                t.push((row, i, psi));
                t.push((row, row, -(delta + params.phi[s] + psi)));
                for &pos in qindex.incoming(i) {
                    t.push((row, n + pos, beta));
                }
            }
        }
        let matrix = CsrMatrix::from_triplets(dim, dim, t);
        Ok(Self {
            nodes: n,
            qindex,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn qindex(&self) -> &QIndex {
        &self.qindex
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Row/column of `q_ij`.
    pub fn q_row(&self, i: usize, j: usize) -> Option<usize> {
        self.qindex.position(i, j).map(|p| self.nodes + p)
    }

    pub fn is_metzler(&self) -> bool {
        self.matrix.triplets().all(|(r, c, v)| r == c || v >= 0.0)
    }

    /// Smallest shift making every diagonal entry nonnegative.
    pub fn shift(&self) -> f64 {
        self.matrix
            .diagonal()
            .iter()
            .fold(0.0f64, |m, &d| m.max(d.abs()))
    }

    /// Largest real part of the spectrum.
    pub fn lambda_max(&self, cfg: &EigenConfig) -> Result<f64> {
        self.perron(cfg).map(|p| p.lambda)
    }

    /// Perron root and vector of `M` via power iteration on `M + sigma I`,
    /// `sigma = max_i |M_ii|`. Terminates when the Collatz-Wielandt bracket
    /// `[min_k (Nx)_k / x_k, max_k (Nx)_k / x_k]`, which always contains the
    /// Perron root of `N`, is narrower than `tol`.
    pub fn perron(&self, cfg: &EigenConfig) -> Result<Perron> {
        let dim = self.dim();
        if dim == 1 {
            return Ok(Perron {
                lambda: self.matrix.get(0, 0),
                lower: self.matrix.get(0, 0),
                upper: self.matrix.get(0, 0),
                vector: vec![1.0],
                iterations: 0,
            });
        }
        let sigma = self.shift();
        let mut x = vec![1.0; dim];
        let mut y = vec![0.0; dim];
        for iter in 0..cfg.max_iter {
            self.matrix.mul_vec(&x, &mut y);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut norm = 0.0f64;
            for k in 0..dim {
                y[k] += sigma * x[k];
                let r = y[k] / x[k];
                lo = lo.min(r);
                hi = hi.max(r);
                norm = norm.max(y[k]);
            }
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::Convergence {
                    what: "threshold power iteration",
                    iterations: iter,
                });
            }
            if hi - lo < cfg.tol {
                let top = x.iter().fold(0.0f64, |m, &a| m.max(a));
                let vector = x.iter().map(|v| v / top).collect();
                return Ok(Perron {
                    lambda: 0.5 * (lo + hi) - sigma,
                    lower: lo - sigma,
                    upper: hi - sigma,
                    vector,
                    iterations: iter,
                });
            }
            for k in 0..dim {
                x[k] = y[k] / norm;
            }
        }
        Err(Error::Convergence {
            what: "threshold power iteration",
            iterations: cfg.max_iter,
        })
    }

    /// Decides `lambda_max(M) < -rate` without an eigen-solve: for the
    /// Z-matrix `A = -(M + rate I)` this holds iff Gaussian elimination
    /// without pivoting runs with strictly positive pivots (nonsingular
    /// M-matrix test).
    pub fn decays_faster_than(&self, rate: f64) -> bool {
        let dim = self.dim();
        let mut a = vec![0.0; dim * dim];
        for (r, c, v) in self.matrix.triplets() {
            a[r * dim + c] = -v;
        }
        for k in 0..dim {
            a[k * dim + k] -= rate;
        }
        for k in 0..dim {
            let pivot = a[k * dim + k];
            if pivot <= 0.0 {
                return false;
            }
            for r in k + 1..dim {
                let f = a[r * dim + k];
                if f == 0.0 {
                    continue;
                }
                let f = f / pivot;
                for c in k + 1..dim {
                    a[r * dim + c] -= f * a[k * dim + c];
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
pub struct Perron {
    pub lambda: f64,
    /// Certified bracket around `lambda`.
    pub lower: f64,
    pub upper: f64,
    /// Positive eigenvector, max-normalised.
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Strong connectivity of the auxiliary digraph on `p_i` and `q_ij`
/// vertices with arcs `p_i -> q_ji`, `q_ij -> p_i` and `q_ij -> q_ki` for
/// `j, k` in the initial neighbourhood of `i`. Its adjacency matrix shares
/// the off-diagonal pattern of the threshold matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Irreducibility {
    pub irreducible: bool,
    /// Auxiliary vertices not reachable from vertex 0.
    pub unreachable_from_root: Vec<usize>,
    /// Auxiliary vertices that cannot reach vertex 0.
    pub cannot_reach_root: Vec<usize>,
}

pub fn is_irreducible(g: &Graph) -> Irreducibility {
    let n = g.node_count();
    let q = QIndex::new(g);
    let dim = n + q.len();
    let mut forward: Vec<Vec<usize>> = vec![Vec::new(); dim];
    for i in 0..n {
        for &pos in q.incoming(i) {
            forward[i].push(n + pos);
        }
        for s in q.group(i) {
            forward[n + s].push(i);
            for &pos in q.incoming(i) {
                forward[n + s].push(n + pos);
            }
        }
    }
    let mut backward: Vec<Vec<usize>> = vec![Vec::new(); dim];
    for (u, outs) in forward.iter().enumerate() {
        for &v in outs {
            backward[v].push(u);
        }
    }
    let unreachable = |adj: &[Vec<usize>]| -> Vec<usize> {
        if dim == 0 {
            return Vec::new();
        }
        let mut seen = vec![false; dim];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        (0..dim).filter(|&v| !seen[v]).collect()
    };
    let unreachable_from_root = unreachable(&forward);
    let cannot_reach_root = unreachable(&backward);
    Irreducibility {
        irreducible: dim > 0 && unreachable_from_root.is_empty() && cannot_reach_root.is_empty(),
        unreachable_from_root,
        cannot_reach_root,
    }
}

/// `phi / (delta + psi)`.
pub fn effective_cutting_rate(phi: f64, delta: f64, psi: f64) -> f64 {
    phi / (delta + psi)
}

/// Largest infection rate guaranteeing extinction for homogeneous rates:
/// `delta * (1 + omega) / rho`.
pub fn homogeneous_bound(rho: f64, delta: f64, phi: f64, psi: f64) -> f64 {
    delta * (1.0 + effective_cutting_rate(phi, delta, psi)) / rho
}

/// Roots `(lambda_1, lambda_2)`, `lambda_1 <= lambda_2`, of
/// `l^2 + (2 delta + phi + psi - beta rho) l + delta (delta + phi + psi) - beta rho (delta + psi)`.
/// For homogeneous rates, `lambda_2` is the spectral abscissa of the threshold
/// matrix.
pub fn homogeneous_lambda_quadratic(beta: f64, delta: f64, phi: f64, psi: f64, rho: f64) -> (f64, f64) {
    let b = 2.0 * delta + phi + psi - beta * rho;
    let c = delta * (delta + phi + psi) - beta * rho * (delta + psi);
    // b^2 - 4c = (phi + psi - beta rho)^2 + 4 beta rho psi.
    let disc = (phi + psi - beta * rho).powi(2) + 4.0 * beta * rho * psi;
    debug_assert!(disc >= 0.0);
    let root = disc.sqrt();
    // Stable pairing: the root with the larger magnitude via b, the other via c.
    let big = -0.5 * (b + b.signum() * root);
    if big == 0.0 {
        return (-0.5 * root, 0.5 * root);
    }
    let small = c / big;
    (big.min(small), big.max(small))
}

/// Eigenvector of the homogeneous threshold matrix built from the adjacency
/// Perron vector `v`: `(c v, w)` with `w_ij = v_i` and `c = beta rho / (delta + lambda_2)`.
pub fn homogeneous_eigenvector(g: &Graph, v: &[f64], beta: f64, delta: f64, rho: f64, lambda2: f64) -> Vec<f64> {
    let c = beta * rho / (delta + lambda2);
    let mut out: Vec<f64> = v.iter().map(|x| c * x).collect();
    for i in 0..g.node_count() {
        for _ in g.slots(i) {
            out.push(v[i]);
        }
    }
    out
}
