use asis_core::graph::{barabasi_albert, spectral_radius};
use asis_core::optimize::{
    build_gp, centrality_report, solve_barrier, solve_gp, verify, BarrierSettings, CostModel, CuttingCost,
    InfectionCost, PerEntry, RecoveryCost,
};
use asis_core::{AsisParams, EigenConfig, Error, Graph, ThresholdMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn recipe(g: &Graph) -> CostModel {
    let rho = spectral_radius(g, &Default::default()).unwrap();
    let delta = 0.1;
    let beta = delta / (1.1 * rho);
    CostModel::cutting_only(beta, delta, 0.0, 4.0 * beta, beta, 2.0, 0.005)
}

fn tuned(beta_hi: f64) -> CostModel {
    CostModel {
        beta: InfectionCost::Tuned { lower: 0.05, upper: beta_hi, exponent: 1.0.into() },
        delta: RecoveryCost::Tuned {
            lower: 0.2,
            upper: 1.0,
            exponent: 1.0.into(),
            offset: 2.0.into(),
        },
        phi: CuttingCost {
            lower: 0.0,
            upper: 1.0,
            exponent: 1.0.into(),
            offset: 2.0.into(),
        },
        psi: 0.5.into(),
        decay_rate: 0.01,
        epsilon: 1e-9,
    }
}

#[test]
fn reported_cost_matches_objective() {
    let g = barabasi_albert(9, 2, 5).unwrap();
    let model = tuned(0.6);
    let problem = build_gp(&g, &model).unwrap();
    let res = solve_barrier(&problem.gp, &problem.start_point().unwrap(), &BarrierSettings::default()).unwrap();
    let sol = problem.solve(&BarrierSettings::default()).unwrap();
    let c = problem.normalization.c;
    let from_solver = c[0] + c[2] + c[4] + res.log_objective.exp();
    assert!((sol.cost.total - from_solver).abs() < 1e-10, "{} vs {}", sol.cost.total, from_solver);
    let again = model.cost(&g, &sol.beta, &sol.delta, &sol.phi).unwrap();
    assert!((again.total - sol.cost.total).abs() < 1e-12);
    assert!(verify(&g, &model, &sol).unwrap().passed);
}

#[test]
fn complete_graph_allocation_is_symmetric() {
    let g = Graph::complete(4);
    let model = CostModel::cutting_only(0.4, 0.5, 0.0, 2.0, 0.5, 2.0, 0.05);
    let sol = solve_gp(&g, &model, &BarrierSettings::default()).unwrap();
    let (lo, hi) = sol.phi.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi > 1e-3, "allocation should be active: {hi}");
    assert!(hi - lo < 1e-6, "spread {}", hi - lo);
    let rows = centrality_report(&g, &sol.phi).unwrap();
    assert!(rows.iter().all(|r| r.deg_prod == 9.0 && (r.betweenness - 1.0).abs() < 1e-12));
}

#[test]
fn huge_decay_rate_is_infeasible() {
    let g = Graph::complete(3);
    let mut model = tuned(0.6);
    model.decay_rate = 1e3;
    assert!(matches!(solve_gp(&g, &model, &BarrierSettings::default()), Err(Error::Infeasible(_))));
}

#[test]
fn star_report_has_one_row_per_directed_pair() {
    let g = Graph::star(5);
    let sol = solve_gp(&g, &recipe(&g), &BarrierSettings::default()).unwrap();
    let rows = centrality_report(&g, &sol.phi).unwrap();
    assert_eq!(rows.len(), 2 * g.edge_count());
    assert!(rows.iter().all(|r| r.i == 0 || r.j == 0));
}

#[test]
fn fixed_families_keep_their_rates() {
    let g = barabasi_albert(12, 2, 8).unwrap();
    let model = recipe(&g);
    let sol = solve_gp(&g, &model, &BarrierSettings::default()).unwrap();
    let InfectionCost::Fixed { value: PerEntry::Uniform(beta) } = model.beta else { unreachable!() };
    assert!(sol.beta.iter().all(|&b| b == beta));
    assert!(sol.delta.iter().all(|&d| d == 0.1));
    assert!(sol.lambda_max <= -0.005 + 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    // Certificate from the Perron vector exists exactly when the decay holds,
    // and no positive vector certifies a rate the spectrum does not reach.
    #[test]
    fn certificate_matches_spectrum(seed in any::<u64>(), n in 3usize..9, decay in 0.0f64..0.5) {
        let g = barabasi_albert(n, 1 + (seed % 2) as usize, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |len: usize, lo: f64, hi: f64| (0..len).map(|_| rng.random_range(lo..hi)).collect::<Vec<_>>();
        let p = AsisParams {
            beta: draw(n, 0.05, 0.6),
            delta: draw(n, 0.2, 1.0),
            phi: draw(g.slot_count(), 0.0, 1.0),
            psi: draw(g.edge_count(), 0.2, 1.0),
        };
        let m = ThresholdMatrix::build(&g, &p).unwrap();
        let perron = m.perron(&EigenConfig { tol: 1e-13, max_iter: 10_000_000 }).unwrap();
        prop_assume!((perron.lambda + decay).abs() > 1e-9);
        let ratio = |v: &[f64]| {
            let mut mv = vec![0.0; v.len()];
            m.matrix().mul_vec(v, &mut mv);
            mv.iter().zip(v).map(|(a, b)| a / b).fold(f64::NEG_INFINITY, f64::max)
        };
        let certified = ratio(&perron.vector) < -decay;
        prop_assert_eq!(certified, perron.lambda < -decay);
        prop_assert_eq!(m.decays_faster_than(decay), perron.lambda < -decay);
        if !certified {
            for _ in 0..20 {
                let v = draw(m.dim(), 0.01, 1.0);
                prop_assert!(ratio(&v) >= -decay);
            }
        }
    }
}
