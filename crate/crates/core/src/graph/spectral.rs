use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct PowerIterationConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIterationConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1_000_000,
        }
    }
}

impl PowerIterationConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Adjacency spectral radius.
pub fn spectral_radius(g: &Graph, cfg: &PowerIterationConfig) -> Result<f64> {
    perron_pair(g, cfg).map(|(rho, _)| rho)
}

/// Unit-norm Perron vector of the adjacency matrix. Requires a connected
/// graph so that the vector is strictly positive.
pub fn eigenvector_centrality(g: &Graph, cfg: &PowerIterationConfig) -> Result<Vec<f64>> {
    if !g.is_connected() {
        return Err(Error::Validation(
            "eigenvector centrality needs a connected graph".into(),
        ));
    }
    perron_pair(g, cfg).map(|(_, v)| v)
}

/// Power iteration on `A + I`. The unit shift keeps the dominant eigenvalue
/// strictly dominant on bipartite graphs, where `-rho` is also an eigenvalue
/// of `A`. Stops once the Rayleigh quotient has settled and the residual
/// `|Ax - rho x|_inf` is below `tol`.
fn perron_pair(g: &Graph, cfg: &PowerIterationConfig) -> Result<(f64, Vec<f64>)> {
    if cfg.tol <= 0.0 {
        return Err(Error::Validation("tolerance must be positive".into()));
    }
    let n = g.node_count();
    if n == 0 {
        return Err(Error::Validation("graph has no nodes".into()));
    }
    let adj_mul = |x: &[f64], out: &mut [f64]| {
        for i in 0..n {
            out[i] = g.neighbors(i).iter().map(|&j| x[j]).sum();
        }
    };
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut ax = vec![0.0; n];
    let mut prev = f64::NAN;
    for _ in 0..cfg.max_iter {
        adj_mul(&x, &mut ax);
        let rho: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let residual = x
            .iter()
            .zip(&ax)
            .map(|(xi, yi)| (yi - rho * xi).abs())
            .fold(0.0, f64::max);
        if (rho - prev).abs() < cfg.tol && residual < cfg.tol {
            return Ok((rho, x));
        }
        prev = rho;
        let mut norm = 0.0;
        for i in 0..n {
            x[i] += ax[i];
            norm += x[i] * x[i];
        }
        let norm = norm.sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    Err(Error::Convergence {
        what: "adjacency power iteration",
        iterations: cfg.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PowerIterationConfig {
        PowerIterationConfig::with_tol(1e-12)
    }

    #[test]
    fn complete_graphs() {
        for n in 2..=10 {
            let rho = spectral_radius(&Graph::complete(n), &cfg()).unwrap();
            assert!((rho - (n as f64 - 1.0)).abs() < 1e-10, "n={n} rho={rho}");
            let v = eigenvector_centrality(&Graph::complete(n), &cfg()).unwrap();
            for x in v {
                assert!((x - 1.0 / (n as f64).sqrt()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn path_three() {
        let g = Graph::path(3);
        assert!((spectral_radius(&g, &cfg()).unwrap() - 2f64.sqrt()).abs() < 1e-10);
        let v = eigenvector_centrality(&g, &cfg()).unwrap();
        let expected = [0.5, 2f64.sqrt() / 2.0, 0.5];
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn star_four() {
        let g = Graph::star(4);
        assert!((spectral_radius(&g, &cfg()).unwrap() - 2.0).abs() < 1e-10);
        let v = eigenvector_centrality(&g, &cfg()).unwrap();
        assert!(v[1..].iter().all(|&leaf| v[0] > leaf));
    }

    #[test]
    fn residual_bound() {
        let tol = 1e-10;
        let g = crate::graph::barabasi_albert(30, 2, 3).unwrap();
        let c = PowerIterationConfig::with_tol(tol);
        let rho = spectral_radius(&g, &c).unwrap();
        let v = eigenvector_centrality(&g, &c).unwrap();
        for i in 0..g.node_count() {
            let av: f64 = g.neighbors(i).iter().map(|&j| v[j]).sum();
            assert!((av - rho * v[i]).abs() <= 10.0 * tol);
        }
    }

    #[test]
    fn disconnected_centrality_errors() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert!(eigenvector_centrality(&g, &cfg()).is_err());
        assert!((spectral_radius(&g, &cfg()).unwrap() - 1.0).abs() < 1e-10);
    }
}
