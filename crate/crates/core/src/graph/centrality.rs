use std::collections::VecDeque;

use super::{eigenvector_centrality, Graph, PowerIterationConfig};
use crate::error::Result;

/// Edge betweenness over unordered node pairs, with fractional credit when a
/// pair has several shortest paths. Indexed by canonical edge id.
pub fn edge_betweenness(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut score = vec![0.0; g.edge_count()];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for s in 0..n {
        sigma.iter_mut().for_each(|x| *x = 0.0);
        dist.iter_mut().for_each(|x| *x = usize::MAX);
        delta.iter_mut().for_each(|x| *x = 0.0);
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                }
            }
        }
        for &w in order.iter().rev() {
            for slot in g.slots(w) {
                let v = g.slot_target(slot);
                if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                    let c = sigma[v] / sigma[w] * (1.0 + delta[w]);
                    score[g.slot_edge(slot)] += c;
                    delta[v] += c;
                }
            }
        }
    }
    // Every unordered pair was counted from both ends.
    score.iter_mut().for_each(|x| *x /= 2.0);
    score
}

/// `d_i * d_j` for every edge.
pub fn degree_product(g: &Graph) -> Vec<f64> {
    g.edges()
        .iter()
        .map(|&(i, j)| (g.degree(i) * g.degree(j)) as f64)
        .collect()
}

/// Product of the endpoint eigenvector centralities for every edge.
pub fn eigenvector_product(g: &Graph, cfg: &PowerIterationConfig) -> Result<Vec<f64>> {
    let v = eigenvector_centrality(g, cfg)?;
    Ok(g.edges().iter().map(|&(i, j)| v[i] * v[j]).collect())
}
