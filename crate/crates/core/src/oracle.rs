//! Exact transient analysis of the joint node/edge Markov chain on tiny
//! graphs, by enumerating all `2^(n+m)` states.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expm::expm_action;
use crate::graph::Graph;
use crate::params::AsisParams;
use crate::sparse::CsrMatrix;
use crate::threshold::ThresholdMatrix;

pub const MAX_JOINT_BITS: usize = 22;

const SERIES_TOL: f64 = 1e-12;

/// Node bits `x_0..x_{n-1}` in the low bits, then one presence bit per edge
/// in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointState(pub u64);

impl JointState {
    pub fn pack(infected: &[bool], present: &[bool]) -> Self {
        let n = infected.len();
        let mut s = 0u64;
        for (i, &x) in infected.iter().enumerate() {
            s |= (x as u64) << i;
        }
        for (e, &a) in present.iter().enumerate() {
            s |= (a as u64) << (n + e);
        }
        Self(s)
    }

    pub fn unpack(self, n: usize, m: usize) -> (Vec<bool>, Vec<bool>) {
        let x = (0..n).map(|i| self.0 >> i & 1 == 1).collect();
        let a = (0..m).map(|e| self.0 >> (n + e) & 1 == 1).collect();
        (x, a)
    }

    /// All nodes infected, every edge present.
    pub fn all_infected(n: usize, m: usize) -> Self {
        Self((1u64 << (n + m)) - 1)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

fn check_size(g: &Graph) -> Result<usize> {
    let bits = g.node_count() + g.edge_count();
    if bits > MAX_JOINT_BITS {
        return Err(Error::StateSpaceTooLarge {
            size: bits,
            limit: MAX_JOINT_BITS,
        });
    }
    Ok(bits)
}

/// Calls `emit(target, rate)` for every positive-rate transition out of `s`.
fn for_each_transition(g: &Graph, p: &AsisParams, s: u64, mut emit: impl FnMut(u64, f64)) {
    let n = g.node_count();
    let infected = |i: usize| s >> i & 1 == 1;
    let present = |e: usize| s >> (n + e) & 1 == 1;
    for i in 0..n {
        if infected(i) {
            emit(s & !(1 << i), p.delta[i]);
        } else {
            let pressure = g
                .slots(i)
                .filter(|&slot| infected(g.slot_target(slot)) && present(g.slot_edge(slot)))
                .count();
            let rate = p.beta[i] * pressure as f64;
            if rate > 0.0 {
                emit(s | 1 << i, rate);
            }
        }
    }
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        let bit = 1u64 << (n + e);
        if present(e) {
            let sij = g.slot_of(i, j).expect("edge slot");
            let sji = g.slot_reverse(sij);
            let rate = p.phi[sij] * infected(i) as u8 as f64 + p.phi[sji] * infected(j) as u8 as f64;
            if rate > 0.0 {
                emit(s & !bit, rate);
            }
        } else {
            emit(s | bit, p.psi[e]);
        }
    }
}

/// Full rate matrix: `Q[s, s']` is the rate of the event taking `s` to `s'`,
/// with diagonal entries making every row sum to zero.
pub fn generator_matrix(g: &Graph, params: &AsisParams) -> Result<CsrMatrix> {
    let bits = check_size(g)?;
    params.validate_relaxed(g)?;
    let states = 1u64 << bits;
    let mut triplets = Vec::new();
    for s in 0..states {
        let mut exit = 0.0;
        for_each_transition(g, params, s, |t, r| {
            triplets.push((s as usize, t as usize, r));
            exit += r;
        });
        triplets.push((s as usize, s as usize, -exit));
    }
    Ok(CsrMatrix::from_triplets(
        states as usize,
        states as usize,
        triplets,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct TransientMoments {
    pub t: f64,
    /// `E[sum_i x_i(t)]`
    pub mean_infected: f64,
    /// `E[x_i(t)]`
    pub node_marginals: Vec<f64>,
    /// `E[a_ij(t) x_i(t)]` in directed-slot order.
    pub edge_marginals: Vec<f64>,
    pub total_mass: f64,
}

/// Distribution at time `t` from `init` (pairs of state and probability).
pub fn transient_distribution(
    g: &Graph,
    params: &AsisParams,
    init: &[(JointState, f64)],
    t: f64,
) -> Result<Vec<f64>> {
    let bits = check_size(g)?;
    params.validate_relaxed(g)?;
    let states = 1usize << bits;
    let mut pi0 = vec![0.0; states];
    for &(s, prob) in init {
        if s.index() >= states {
            return Err(Error::Validation(format!("state {} out of range", s.0)));
        }
        pi0[s.index()] += prob;
    }
    let mut lambda = 0.0f64;
    for s in 0..states as u64 {
        let mut exit = 0.0;
        for_each_transition(g, params, s, |_, r| exit += r);
        lambda = lambda.max(exit);
    }
    let apply = |pi: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (s, &mass) in pi.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for_each_transition(g, params, s as u64, |t, r| {
                out[t as usize] += mass * r;
                out[s] -= mass * r;
            });
        }
    };
    expm_action(apply, lambda, &pi0, t, SERIES_TOL)
}

pub fn transient(
    g: &Graph,
    params: &AsisParams,
    init: &[(JointState, f64)],
    t: f64,
) -> Result<TransientMoments> {
    let pi = transient_distribution(g, params, init, t)?;
    let n = g.node_count();
    let mut node_marginals = vec![0.0; n];
    let mut edge_marginals = vec![0.0; g.slot_count()];
    for (s, &mass) in pi.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        for i in 0..n {
            if s >> i & 1 == 1 {
                node_marginals[i] += mass;
                for slot in g.slots(i) {
                    if s >> (n + g.slot_edge(slot)) & 1 == 1 {
                        edge_marginals[slot] += mass;
                    }
                }
            }
        }
    }
    Ok(TransientMoments {
        t,
        mean_infected: node_marginals.iter().sum(),
        node_marginals,
        edge_marginals,
        total_mass: pi.iter().sum(),
    })
}

pub fn transient_mean_infected(
    g: &Graph,
    params: &AsisParams,
    init: &[(JointState, f64)],
    t: f64,
) -> Result<f64> {
    transient(g, params, init, t).map(|m| m.mean_infected)
}

/// `exp(M t) [p0; q0]` for the threshold matrix `M`.
pub fn linear_bound(g: &Graph, params: &AsisParams, p0: &[f64], q0: &[f64], t: f64) -> Result<Vec<f64>> {
    let m = ThresholdMatrix::build(g, params)?;
    if p0.len() != g.node_count() || q0.len() != g.slot_count() {
        return Err(Error::Validation("initial vector length mismatch".into()));
    }
    let x: Vec<f64> = p0.iter().chain(q0).copied().collect();
    let csr = m.matrix();
    expm_action(|y, out| csr.mul_vec(y, out), m.shift(), &x, t, SERIES_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_round_trip() {
        let x = [true, false, true];
        let a = [false, true];
        let s = JointState::pack(&x, &a);
        assert_eq!(s.unpack(3, 2), (x.to_vec(), a.to_vec()));
        assert_eq!(JointState::all_infected(3, 2).0, 31);
    }

    #[test]
    fn single_node_generator() {
        let g = Graph::from_edges(1, []).unwrap();
        let p = AsisParams::uniform(&g, 1.0, 2.5, 1.0, 1.0);
        let q = generator_matrix(&g, &p).unwrap();
        assert_eq!(q.to_dense(), vec![vec![0.0, 0.0], vec![2.5, -2.5]]);
    }

    #[test]
    fn single_edge_outgoing_rates() {
        let g = Graph::path(2);
        let mut p = AsisParams::uniform(&g, 0.0, 0.0, 0.0, 1.0);
        p.delta = vec![1.5, 9.0];
        p.beta = vec![7.0, 2.0];
        p.phi = vec![0.25, 11.0];
        let s = JointState::pack(&[true, false], &[true]);
        let q = generator_matrix(&g, &p).unwrap();
        let out: Vec<_> = q.row(s.index()).filter(|&(c, _)| c != s.index()).collect();
        let recover = JointState::pack(&[false, false], &[true]).index();
        let infect = JointState::pack(&[true, true], &[true]).index();
        let cut = JointState::pack(&[true, false], &[false]).index();
        let mut expected = vec![(recover, 1.5), (infect, 2.0), (cut, 0.25)];
        expected.sort_by_key(|e| e.0);
        assert_eq!(out, expected);
    }

    #[test]
    fn generator_rows_sum_to_zero() {
        let g = Graph::complete(3);
        let mut p = AsisParams::uniform(&g, 0.7, 1.2, 0.3, 0.9);
        p.phi[1] = 2.0;
        let q = generator_matrix(&g, &p).unwrap();
        for r in 0..q.rows() {
            let sum: f64 = q.row(r).map(|(_, v)| v).sum();
            assert!(sum.abs() < 1e-12);
            assert!(q.row(r).all(|(c, v)| c == r || v >= 0.0));
        }
    }

    #[test]
    fn size_guard() {
        let g = Graph::complete(7);
        let p = AsisParams::uniform(&g, 1.0, 1.0, 1.0, 1.0);
        assert!(matches!(
            transient_mean_infected(&g, &p, &[(JointState(0), 1.0)], 1.0),
            Err(Error::StateSpaceTooLarge { size: 28, .. })
        ));
    }

    #[test]
    fn scalar_cases() {
        let g = Graph::from_edges(1, []).unwrap();
        let p = AsisParams::uniform(&g, 1.0, 1.0, 1.0, 1.0);
        let init = [(JointState(1), 1.0)];
        let v = transient_mean_infected(&g, &p, &init, 1.0).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-10);
        assert!((v - 0.36788).abs() < 1e-5);

        let k3 = Graph::complete(3);
        let pk = AsisParams::uniform(&k3, 1.0, 1.0, 1.0, 1.0);
        let all = [(JointState::all_infected(3, 3), 1.0)];
        assert_eq!(transient_mean_infected(&k3, &pk, &all, 0.0).unwrap(), 3.0);
        let m = transient(&k3, &pk, &all, 1.0).unwrap();
        assert!((m.total_mass - 1.0).abs() < 1e-10);

        let bound = linear_bound(&g, &p, &[0.5], &[], 2.0).unwrap();
        assert!((bound[0] - 0.5 * (-2f64).exp()).abs() < 1e-12);
        let same = linear_bound(&k3, &pk, &[1.0; 3], &[0.5; 6], 0.0).unwrap();
        assert_eq!(same, [vec![1.0; 3], vec![0.5; 6]].concat());
    }

    #[test]
    fn single_edge_domination() {
        let g = Graph::path(2);
        let p = AsisParams::uniform(&g, 1.3, 0.8, 0.5, 0.7);
        let init = [(JointState::pack(&[true, false], &[true]), 1.0)];
        for t in [0.5, 1.0, 2.0] {
            let exact = transient(&g, &p, &init, t).unwrap();
            let bound = linear_bound(&g, &p, &[1.0, 0.0], &[1.0, 0.0], t).unwrap();
            for i in 0..2 {
                assert!(exact.node_marginals[i] <= bound[i] + 1e-8);
            }
            for s in 0..2 {
                assert!(exact.edge_marginals[s] <= bound[2 + s] + 1e-8);
            }
        }
    }
}
