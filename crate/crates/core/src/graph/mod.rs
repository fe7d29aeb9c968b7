//! Undirected contact graphs with a canonical edge ordering.
//!
//! Edges are stored as `(i, j)` with `i < j`, sorted lexicographically. The
//! adjacency is kept in compressed form: the neighbours of node `i` occupy the
//! slots `offsets[i]..offsets[i + 1]`, sorted ascending. Each slot is one
//! directed pair `(i, j)`, so the slot order is exactly the stacking order of
//! the directed-edge states used by the threshold matrix.

mod centrality;
mod generate;
mod spectral;

pub use centrality::{degree_product, edge_betweenness, eigenvector_product};
pub use generate::{barabasi_albert, erdos_renyi};
pub use spectral::{eigenvector_centrality, spectral_radius, PowerIterationConfig};

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    slot_edge: Vec<usize>,
    slot_reverse: Vec<usize>,
}

impl Graph {
    /// Builds a graph from arbitrary undirected pairs. Orientation and
    /// duplicates are normalised away; self-loops and out-of-range ids are
    /// rejected.
    pub fn from_edges<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (u, v) in pairs {
            if u == v {
                return Err(Error::Validation(format!("self-loop at node {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::Validation(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self::from_sorted_unique(n, set.into_iter().collect()))
    }

    fn from_sorted_unique(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut degree = vec![0usize; n];
        for &(i, j) in &edges {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; 2 * edges.len()];
        let mut slot_edge = vec![0usize; 2 * edges.len()];
        let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (e, &(i, j)) in edges.iter().enumerate() {
            incident[i].push((j, e));
            incident[j].push((i, e));
        }
        for (i, list) in incident.iter_mut().enumerate() {
            list.sort_unstable();
            for &(j, e) in list.iter() {
                neighbors[fill[i]] = j;
                slot_edge[fill[i]] = e;
                fill[i] += 1;
            }
        }
        let mut slot_reverse = vec![0usize; neighbors.len()];
        for i in 0..n {
            for s in offsets[i]..offsets[i + 1] {
                let j = neighbors[s];
                let pos = neighbors[offsets[j]..offsets[j + 1]]
                    .binary_search(&i)
                    .expect("adjacency is symmetric");
                slot_reverse[s] = offsets[j] + pos;
            }
        }
        Self {
            n,
            edges,
            offsets,
            neighbors,
            slot_edge,
            slot_reverse,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    /// Sorted neighbours of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Directed slots `(i, j)` owned by node `i`.
    pub fn slots(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn slot_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Target `j` of the directed slot `(i, j)`.
    pub fn slot_target(&self, slot: usize) -> usize {
        self.neighbors[slot]
    }

    /// Undirected edge id carried by a directed slot.
    pub fn slot_edge(&self, slot: usize) -> usize {
        self.slot_edge[slot]
    }

    /// Slot of `(j, i)` given the slot of `(i, j)`.
    pub fn slot_reverse(&self, slot: usize) -> usize {
        self.slot_reverse[slot]
    }

    /// Slot of the directed pair `(i, j)` if `{i, j}` is an edge.
    pub fn slot_of(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n {
            return None;
        }
        self.neighbors(i)
            .binary_search(&j)
            .ok()
            .map(|pos| self.offsets[i] + pos)
    }

    /// Canonical id of the undirected edge `{i, j}`.
    pub fn edge_id(&self, i: usize, j: usize) -> Option<usize> {
        self.slot_of(i, j).map(|s| self.slot_edge[s])
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.slot_of(i, j).is_some()
    }

    /// True iff the graph has a single connected component. A graph with one
    /// node is connected; the empty graph (n = 0) is not.
    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.component_count() == 1
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut stack = Vec::new();
        let mut components = 0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &w in self.neighbors(u) {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        components
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Validation("permutation length mismatch".into()));
        }
        Self::from_edges(self.n, self.edges.iter().map(|&(i, j)| (perm[i], perm[j])))
    }

    /// Parses the line-oriented edge-list format.
    ///
    /// Each non-comment line holds two whitespace-separated node ids. Text
    /// after `#` is ignored, except for an optional `# n=<count>` header that
    /// fixes the node count (needed for isolated trailing nodes).
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut declared_n: Option<usize> = None;
        let mut max_id: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let (body, comment) = match raw.find('#') {
                Some(pos) => (&raw[..pos], Some(&raw[pos + 1..])),
                None => (raw, None),
            };
            if let Some(c) = comment {
                if let Some(n) = parse_count_header(c) {
                    declared_n = Some(n.map_err(|message| Error::Parse {
                        line: line_no,
                        message,
                    })?);
                }
            }
            let mut fields = body.split_whitespace();
            let Some(first) = fields.next() else { continue };
            let second = fields.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected two node ids".into(),
            })?;
            if fields.next().is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected exactly two node ids".into(),
                });
            }
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("`{s}` is not a non-negative integer"),
                })
            };
            let (u, v) = (parse(first)?, parse(second)?);
            if u == v {
                return Err(Error::Validation(format!(
                    "line {line_no}: self-loop at node {u}"
                )));
            }
            max_id = Some(max_id.unwrap_or(0).max(u).max(v));
            pairs.push((u, v));
        }
        let implied = max_id.map_or(0, |m| m + 1);
        let n = match declared_n {
            Some(n) if n < implied => {
                return Err(Error::Validation(format!(
                    "header declares n={n} but node id {} appears",
                    implied - 1
                )))
            }
            Some(n) => n,
            None => implied,
        };
        Self::from_edges(n, pairs)
    }

    /// Serialises to the edge-list format with an `n=` header. `comments` are
    /// emitted first, one `#` line each.
    pub fn to_edge_list(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "# n={}", self.n);
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::from_sorted_unique(n, edges)
    }

    pub fn path(n: usize) -> Self {
        Self::from_sorted_unique(n, (1..n).map(|j| (j - 1, j)).collect())
    }

    /// Star with node 0 as hub and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        Self::from_sorted_unique(leaves + 1, (1..=leaves).map(|j| (0, j)).collect())
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least three nodes");
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid cycle")
    }
}

fn parse_count_header(comment: &str) -> Option<std::result::Result<usize, String>> {
    let rest = comment.trim().strip_prefix('n')?.trim_start();
    let value = rest.strip_prefix('=')?.trim();
    Some(
        value
            .parse::<usize>()
            .map_err(|_| format!("bad node count `{value}` in header")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_simple_list() {
        let g = Graph::parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = Graph::parse_edge_list("0 1\n1 0").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn self_loop_is_rejected() {
        assert!(matches!(
            Graph::parse_edge_list("0 0"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match Graph::parse_edge_list("0 1\n# fine\n2 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match Graph::parse_edge_list("0 1 2") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_sets_node_count() {
        let g = Graph::parse_edge_list("# n=5\n0 1  # trailing comment\n").unwrap();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edge_count(), 1);
        let text = g.to_edge_list(&["generated".into()]);
        assert_eq!(Graph::parse_edge_list(&text).unwrap(), g);
        assert!(Graph::parse_edge_list("# n=1\n0 3").is_err());
    }

    #[test]
    fn canonical_slots() {
        let g = Graph::path(3);
        let pairs: Vec<_> = (0..g.node_count())
            .flat_map(|i| g.slots(i).map(move |s| (i, s)))
            .map(|(i, s)| (i, g.slot_target(s)))
            .collect();
        assert_eq!(pairs, vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
        for s in 0..g.slot_count() {
            assert_eq!(g.slot_reverse(g.slot_reverse(s)), s);
        }
        assert_eq!(g.edge_id(2, 1), Some(1));
    }

    #[test]
    fn connectivity() {
        assert!(Graph::path(3).is_connected());
        assert!(!Graph::from_edges(2, []).unwrap().is_connected());
        assert!(Graph::from_edges(1, []).unwrap().is_connected());
        assert_eq!(
            Graph::from_edges(5, [(0, 1), (2, 3)]).unwrap().component_count(),
            3
        );
    }
}
