//! Rate containers for the heterogeneous adaptive SIS model and the stacking
//! order of the directed-edge states.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Per-node and per-edge rates, indexed by the graph's canonical orderings:
/// `beta`/`delta` by node, `phi` by directed slot (see [`QIndex`]), and `psi`
/// by undirected edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct AsisParams {
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl AsisParams {
    /// Constant rates; every rate must be strictly positive.
    pub fn homogeneous(g: &Graph, beta: f64, delta: f64, phi: f64, psi: f64) -> Result<Self> {
        let mut bad = Vec::new();
        for (name, v) in [("beta", beta), ("delta", delta), ("phi", phi), ("psi", psi)] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("nonpositive rate: {name} = {v}"));
            }
        }
        if !bad.is_empty() {
            return Err(Error::InvalidParams(bad));
        }
        Ok(Self::uniform(g, beta, delta, phi, psi))
    }

    /// Constant rates without positivity checks. Used for limiting cases such
    /// as `beta = 0` or the non-adaptive `phi = 0`.
    pub fn uniform(g: &Graph, beta: f64, delta: f64, phi: f64, psi: f64) -> Self {
        Self {
            beta: vec![beta; g.node_count()],
            delta: vec![delta; g.node_count()],
            phi: vec![phi; g.slot_count()],
            psi: vec![psi; g.edge_count()],
        }
    }

    /// Checks the model constraints: every rate strictly positive and finite,
    /// container sizes matching `g`.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        self.check(g, false)
    }

    /// Like [`validate`](Self::validate) but admits `beta_i = 0` and
    /// `phi_ij = 0` (no spreading, no adaptation).
    pub fn validate_relaxed(&self, g: &Graph) -> Result<()> {
        self.check(g, true)
    }

    fn check(&self, g: &Graph, allow_zero: bool) -> Result<()> {
        let mut bad = Vec::new();
        let sizes = [
            ("beta", self.beta.len(), g.node_count()),
            ("delta", self.delta.len(), g.node_count()),
            ("phi", self.phi.len(), g.slot_count()),
            ("psi", self.psi.len(), g.edge_count()),
        ];
        for (name, got, want) in sizes {
            if got != want {
                bad.push(format!("size mismatch: {name} has {got} entries, expected {want}"));
            }
        }
        let families: [(&str, &[f64], bool); 4] = [
            ("beta", &self.beta, allow_zero),
            ("delta", &self.delta, false),
            ("phi", &self.phi, allow_zero),
            ("psi", &self.psi, false),
        ];
        for (name, values, zero_ok) in families {
            for (k, &v) in values.iter().enumerate() {
                let ok = v.is_finite() && (v > 0.0 || (zero_ok && v == 0.0));
                if !ok {
                    bad.push(format!("nonpositive rate: {name}[{k}] = {v}"));
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad))
        }
    }

    /// `Some((beta, delta, phi, psi))` if every family is constant.
    pub fn homogeneous_rates(&self) -> Option<(f64, f64, f64, f64)> {
        fn constant(v: &[f64]) -> Option<Option<f64>> {
            match v.first() {
                None => Some(None),
                Some(&x) => v.iter().all(|&y| y == x).then_some(Some(x)),
            }
        }
        let beta = constant(&self.beta)??;
        let delta = constant(&self.delta)??;
        // Edgeless graphs carry no cutting or reconnecting rates.
        let phi = constant(&self.phi)?.unwrap_or(0.0);
        let psi = constant(&self.psi)?.unwrap_or(0.0);
        Some((beta, delta, phi, psi))
    }

    /// Multiplies every rate by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| x * c).collect();
        Self {
            beta: s(&self.beta),
            delta: s(&self.delta),
            phi: s(&self.phi),
            psi: s(&self.psi),
        }
    }

    /// Carries the rates over to `g.permuted(perm)`.
    pub fn permuted(&self, g: &Graph, perm: &[usize], target: &Graph) -> Self {
        let n = g.node_count();
        let mut beta = vec![0.0; n];
        let mut delta = vec![0.0; n];
        for i in 0..n {
            beta[perm[i]] = self.beta[i];
            delta[perm[i]] = self.delta[i];
        }
        let mut phi = vec![0.0; g.slot_count()];
        let mut psi = vec![0.0; g.edge_count()];
        for i in 0..n {
            for s in g.slots(i) {
                let j = g.slot_target(s);
                let t = target.slot_of(perm[i], perm[j]).expect("permuted edge");
                phi[t] = self.phi[s];
                psi[target.slot_edge(t)] = self.psi[g.slot_edge(s)];
            }
        }
        Self { beta, delta, phi, psi }
    }

    pub fn from_file(g: &Graph, file: &ParamFile) -> Result<Self> {
        match file {
            ParamFile::Homogeneous { beta, delta, phi, psi } => {
                Ok(Self::uniform(g, *beta, *delta, *phi, *psi))
            }
            ParamFile::Heterogeneous { n, beta, delta, phi, psi } => {
                let mut bad = Vec::new();
                if *n != g.node_count() {
                    bad.push(format!("size mismatch: file has n={n}, graph has {}", g.node_count()));
                }
                let mut phi_v = vec![f64::NAN; g.slot_count()];
                for (key, &value) in phi {
                    match parse_pair(key, ',').and_then(|(i, j)| g.slot_of(i, j)) {
                        Some(s) => phi_v[s] = value,
                        None => bad.push(format!("phi key `{key}` is not a directed edge of the graph")),
                    }
                }
                let mut psi_v = vec![f64::NAN; g.edge_count()];
                for (key, &value) in psi {
                    match parse_pair(key, '-').and_then(|(i, j)| g.edge_id(i, j)) {
                        Some(e) => {
                            if !psi_v[e].is_nan() && psi_v[e] != value {
                                bad.push(format!("psi for edge `{key}` given twice with different values"));
                            }
                            psi_v[e] = value;
                        }
                        None => bad.push(format!("psi key `{key}` is not an edge of the graph")),
                    }
                }
                let missing_phi = phi_v.iter().filter(|v| v.is_nan()).count();
                if missing_phi > 0 {
                    bad.push(format!("size mismatch: phi missing for {missing_phi} directed edges"));
                }
                let missing_psi = psi_v.iter().filter(|v| v.is_nan()).count();
                if missing_psi > 0 {
                    bad.push(format!("size mismatch: psi missing for {missing_psi} edges"));
                }
                if !bad.is_empty() {
                    return Err(Error::InvalidParams(bad));
                }
                Ok(Self {
                    beta: beta.clone(),
                    delta: delta.clone(),
                    phi: phi_v,
                    psi: psi_v,
                })
            }
        }
    }

    pub fn to_file(&self, g: &Graph) -> ParamFile {
        if let Some((beta, delta, phi, psi)) = self.homogeneous_rates() {
            return ParamFile::Homogeneous { beta, delta, phi, psi };
        }
        let mut phi = BTreeMap::new();
        for i in 0..g.node_count() {
            for s in g.slots(i) {
                phi.insert(format!("{},{}", i, g.slot_target(s)), self.phi[s]);
            }
        }
        let psi = g
            .edges()
            .iter()
            .zip(&self.psi)
            .map(|(&(i, j), &v)| (format!("{i}-{j}"), v))
            .collect();
        ParamFile::Heterogeneous {
            n: g.node_count(),
            beta: self.beta.clone(),
            delta: self.delta.clone(),
            phi,
            psi,
        }
    }
}

fn parse_pair(key: &str, sep: char) -> Option<(usize, usize)> {
    let (a, b) = key.split_once(sep)?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// JSON parameter document. `phi` keys are directed pairs `"i,j"`, `psi` keys
/// undirected pairs `"i-j"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamFile {
    Homogeneous {
        beta: f64,
        delta: f64,
        phi: f64,
        psi: f64,
    },
    Heterogeneous {
        n: usize,
        beta: Vec<f64>,
        delta: Vec<f64>,
        phi: BTreeMap<String, f64>,
        psi: BTreeMap<String, f64>,
    },
}

/// Stacking order of the directed-edge states `q_ij`: grouped by `i`
/// ascending, `j` ascending within each group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QIndex {
    pairs: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    incoming: Vec<usize>,
}

impl QIndex {
    pub fn new(g: &Graph) -> Self {
        let n = g.node_count();
        let mut pairs = Vec::with_capacity(g.slot_count());
        let mut incoming = Vec::with_capacity(g.slot_count());
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            for s in g.slots(i) {
                pairs.push((i, g.slot_target(s)));
                incoming.push(g.slot_reverse(s));
            }
            offsets.push(pairs.len());
        }
        Self {
            pairs,
            offsets,
            incoming,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, pos: usize) -> (usize, usize) {
        self.pairs[pos]
    }

    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let group = self.pairs.get(*self.offsets.get(i)?..*self.offsets.get(i + 1)?)?;
        group
            .binary_search_by_key(&j, |&(_, t)| t)
            .ok()
            .map(|p| self.offsets[i] + p)
    }

    /// Positions of `(i, j)` for `j` in the initial neighbourhood of `i`.
    pub fn group(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Positions of `(k, i)` for `k` in the initial neighbourhood of `i`:
    /// the support of the row selector summing the incoming states of `i`.
    pub fn incoming(&self, i: usize) -> &[usize] {
        &self.incoming[self.offsets[i]..self.offsets[i + 1]]
    }
}
