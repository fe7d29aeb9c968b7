use serde::Serialize;

use crate::error::Result;
use crate::graph::{degree_product, edge_betweenness, eigenvector_product, Graph, PowerIterationConfig};

/// One directed pair of the optimal allocation next to edge centralities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityRow {
    pub i: usize,
    pub j: usize,
    pub phi_ij: f64,
    pub deg_prod: f64,
    pub eig_prod: f64,
    pub betweenness: f64,
}

pub const CENTRALITY_CSV_HEADER: &str = "i,j,phi_ij,deg_prod,eig_prod,betweenness";

/// One row per directed pair, in slot order.
pub fn centrality_report(g: &Graph, phi: &[f64]) -> Result<Vec<CentralityRow>> {
    let deg = degree_product(g);
    let eig = eigenvector_product(g, &PowerIterationConfig::default())?;
    let btw = edge_betweenness(g);
    let mut rows = Vec::with_capacity(g.slot_count());
    for i in 0..g.node_count() {
        for slot in g.slots(i) {
            let e = g.slot_edge(slot);
            rows.push(CentralityRow {
                i,
                j: g.slot_target(slot),
                phi_ij: phi[slot],
                deg_prod: deg[e],
                eig_prod: eig[e],
                betweenness: btw[e],
            });
        }
    }
    Ok(rows)
}

pub fn centrality_csv(rows: &[CentralityRow]) -> String {
    let mut out = String::from(CENTRALITY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.i, r.j, r.phi_ij, r.deg_prod, r.eig_prod, r.betweenness
        ));
    }
    out
}

/// Ranks starting at 1; ties share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let rank = 0.5 * (start + end + 1) as f64;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation; `None` when either input is constant or the
/// lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}
