use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Error, Result};

/// G(n, p): every unordered pair is included independently with probability
/// `p`, visited in lexicographic order.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::Validation("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Validation(format!("p = {p} is not a probability")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Ok(Graph::from_sorted_unique(n, edges))
}

/// Preferential attachment starting from the complete graph on
/// `m_attach + 1` nodes. Each arriving node links to `m_attach` distinct
/// existing nodes chosen with probability proportional to degree.
pub fn barabasi_albert(n: usize, m_attach: usize, seed: u64) -> Result<Graph> {
    if m_attach == 0 || m_attach >= n {
        return Err(Error::Validation(format!(
            "need 1 <= m_attach < n, got m_attach = {m_attach}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core = m_attach + 1;
    let mut edges: Vec<(usize, usize)> = (0..core)
        .flat_map(|i| (i + 1..core).map(move |j| (i, j)))
        .collect();
    // Each node appears here once per incident edge end.
    let mut endpoints: Vec<usize> = edges.iter().flat_map(|&(i, j)| [i, j]).collect();
    let mut targets = Vec::with_capacity(m_attach);
    for v in core..n {
        targets.clear();
        while targets.len() < m_attach {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, v));
            endpoints.push(t);
            endpoints.push(v);
        }
    }
    edges.sort_unstable();
    Ok(Graph::from_sorted_unique(n, edges))
}
