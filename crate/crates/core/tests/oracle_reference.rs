use asis_core::oracle::{transient, JointState};
use asis_core::{AsisParams, Graph};

// Expected means from a dense matrix exponential of the generator, built
// independently in Python (scipy.linalg.expm).
const REFERENCE: [(&str, [f64; 3]); 2] = [
    ("K3", [2.044451381970924, 1.488610965987596, 0.8396263343197279]),
    ("P3", [1.9737466350277004, 1.3644965416164192, 0.6861999744932007]),
];

#[test]
fn unit_rate_triangle_and_path() {
    for (name, expected) in REFERENCE {
        let g = if name == "K3" { Graph::complete(3) } else { Graph::path(3) };
        let p = AsisParams::uniform(&g, 1.0, 1.0, 1.0, 1.0);
        let start = [(JointState::all_infected(3, g.edge_count()), 1.0)];
        for (t, want) in [0.5, 1.0, 2.0].into_iter().zip(expected) {
            let got = transient(&g, &p, &start, t).unwrap();
            assert!((got.mean_infected - want).abs() < 1e-10, "{name} t={t}: {} vs {want}", got.mean_infected);
            assert!((got.total_mass - 1.0).abs() < 1e-10);
        }
    }
}
