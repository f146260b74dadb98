use feederflow_core::density::coarse_grain;
use feederflow_core::network::{discretize, EndKind};
use feederflow_core::nonlinear::{residual, shooting_oracle, solve_tpbv};
use feederflow_core::{
    Category, CoarseGrainSpec, FeederNetwork, Field, Node, NodeKind, PerturbationSeries, PointInjection, Segment,
    ShootingOptions, SolveOptions,
};
use proptest::prelude::*;

const G: f64 = 3.881;
const B: f64 = 6.856;

fn single() -> FeederNetwork {
    FeederNetwork::single("F", 5.0, G, B)
}

fn tee(ratio: f64) -> FeederNetwork {
    FeederNetwork::new(
        vec![
            Segment::new("A", 1.5, 2.329, 4.113, "bank", "T"),
            Segment::new("B", 1.2, 2.329, 4.113, "T", "b"),
            Segment::new("C1", 0.9, 2.329, 4.113, "T", "r"),
            Segment::new("C2", 1.0, 2.329, 4.113, "r", "c"),
        ],
        vec![
            Node::new("bank", NodeKind::Root),
            Node::new("T", NodeKind::Junction),
            Node::new("b", NodeKind::Leaf),
            Node::new("r", NodeKind::Svr { turn_ratio: ratio }),
            Node::new("c", NodeKind::Leaf),
        ],
    )
}

/// Consuming injections, kept 0.4 km from segment ends.
fn consumption(segments: &'static [(&'static str, f64)]) -> impl Strategy<Value = Vec<PointInjection>> {
    prop::collection::vec((0..segments.len(), 0.0f64..1.0, 0.02f64..0.15, 0.0f64..0.03), 1..5).prop_map(move |v| {
        v.into_iter()
            .map(|(s, t, p, q)| {
                let (id, len) = segments[s];
                PointInjection::new(id, 0.4 + t * (len - 0.8), -p, -q, Category::Load)
            })
            .collect()
    })
}

const SINGLE: &[(&str, f64)] = &[("F", 5.0)];
const TEE: &[(&str, f64)] = &[("A", 1.5), ("B", 1.2), ("C1", 0.9), ("C2", 1.0)];

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.zip_map(b, |x, y| x - y).max_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn consumption_keeps_gradient_non_positive(inj in consumption(SINGLE)) {
        let net = single();
        let grid = discretize(&net, 0.01).unwrap();
        let d = coarse_grain(&inj, CoarseGrainSpec::default(), &net, &grid, 1.0).unwrap();
        let opts = SolveOptions::default();
        let p = solve_tpbv(&net, &d, &grid, &opts).unwrap();
        prop_assert!(p.w.iter().all(|w| w <= opts.newton_tol));
        prop_assert!(p.min_v() > 0.0);
        prop_assert!(residual(&net, &d, &grid, &p).unwrap().max() <= opts.newton_tol);
    }

    #[test]
    fn newton_matches_shooting(inj in consumption(SINGLE)) {
        let net = single();
        let grid = discretize(&net, 0.005).unwrap();
        let d = coarse_grain(&inj, CoarseGrainSpec::default(), &net, &grid, 1.0).unwrap();
        let fd = solve_tpbv(&net, &d, &grid, &SolveOptions::default()).unwrap();
        let shot = shooting_oracle(&net.segments[0], &d, &grid, &ShootingOptions::default()).unwrap();
        prop_assert!(max_diff(&fd.v, &shot.v) <= 1e-5);
    }

    #[test]
    fn assembled_series_is_epsilon_invariant(inj in consumption(TEE), k in 2i32..8) {
        let net = tee(1.0);
        let grid = discretize(&net, 0.01).unwrap();
        let spec = CoarseGrainSpec::default();
        let at = |eps: f64| {
            let d = coarse_grain(&inj, spec, &net, &grid, eps).unwrap();
            PerturbationSeries::compute(&net, &d, 4).unwrap().assemble(eps, 4).unwrap()
        };
        let (a, b) = (at(0.1), at(10f64.powi(-k)));
        for (x, y) in [(&a.theta, &b.theta), (&a.v, &b.v), (&a.s, &b.s), (&a.w, &b.w)] {
            prop_assert!(max_diff(x, y) <= 1e-6 * x.max_abs().max(1e-300));
        }
    }

    #[test]
    fn tree_matching_holds(inj in consumption(TEE), ratio in 0.95f64..1.05) {
        let net = tee(ratio);
        let grid = discretize(&net, 0.01).unwrap();
        let d = coarse_grain(&inj, CoarseGrainSpec::default(), &net, &grid, 1.0).unwrap();
        let topo = net.topology().unwrap();
        let p = solve_tpbv(&net, &d, &grid, &SolveOptions::default()).unwrap();
        let series = PerturbationSeries::compute(&net, &d, 5).unwrap();
        let end = |f: &Field, i: usize| *f[i].last().unwrap();
        let mut cases: Vec<(&Field, &Field, f64)> = vec![(&p.v, &p.w, 1e-9)];
        cases.extend(series.orders().iter().map(|o| (&o.v, &o.w, 1e-12)));
        for (v, w, tol) in cases {
            for i in 0..grid.len() {
                match topo.end(i) {
                    EndKind::Junction => {
                        let kids = topo.children(i);
                        let sum: f64 = kids.iter().map(|&c| w[c][0]).sum();
                        prop_assert!((end(w, i) - sum).abs() <= tol);
                        for &c in kids {
                            prop_assert!((end(v, i) - v[c][0]).abs() <= tol);
                        }
                    }
                    EndKind::Svr(n) => {
                        let c = topo.children(i)[0];
                        prop_assert!((n * end(v, i) - v[c][0]).abs() <= tol);
                        prop_assert!((end(w, i) - n * w[c][0]).abs() <= tol);
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn per_order_boundary_values_are_exact(inj in consumption(TEE)) {
        let net = tee(1.0);
        let grid = discretize(&net, 0.01).unwrap();
        let d = coarse_grain(&inj, CoarseGrainSpec::default(), &net, &grid, 0.3).unwrap();
        let topo = net.topology().unwrap();
        let series = PerturbationSeries::compute(&net, &d, 6).unwrap();
        for o in series.orders() {
            for i in 0..grid.len() {
                if topo.start(i) == EndKind::Root {
                    prop_assert_eq!(o.v[i][0], 0.0);
                    if let Some(t) = &o.theta {
                        prop_assert_eq!(t[i][0], 0.0);
                    }
                }
                if topo.end(i) == EndKind::Leaf {
                    prop_assert_eq!(*o.w[i].last().unwrap(), 0.0);
                    if let Some(s) = &o.s {
                        prop_assert_eq!(*s[i].last().unwrap(), 0.0);
                    }
                }
            }
        }
        for n in 2..=4 {
            prop_assert_eq!(series.s(n).unwrap().max_abs(), 0.0);
        }
    }
}

#[test]
fn higher_orders_shrink_on_the_simple_feeder() {
    let net = single();
    let grid = discretize(&net, 0.01).unwrap();
    let inj: Vec<_> = [(1.5, -0.133, Category::Load), (2.0, -0.2, Category::Ev), (2.5, -0.133, Category::Load)]
        .into_iter()
        .map(|(x, p, c)| PointInjection::new("F", x, p, 0.0, c))
        .collect();
    let d = coarse_grain(&inj, CoarseGrainSpec::default(), &net, &grid, 1.0).unwrap();
    let series = PerturbationSeries::compute(&net, &d, 8).unwrap();
    let norms: Vec<f64> = series.orders().iter().map(|o| o.v.max_abs()).collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
}

#[test]
fn solves_are_bitwise_deterministic() {
    let net = tee(1.02);
    let grid = discretize(&net, 0.01).unwrap();
    let inj = [PointInjection::new("B", 0.6, -0.2, -0.02, Category::Ev)];
    let d = coarse_grain(&inj, CoarseGrainSpec::default(), &net, &grid, 1.0).unwrap();
    let a = solve_tpbv(&net, &d, &grid, &SolveOptions::default()).unwrap();
    let b = solve_tpbv(&net, &d, &grid, &SolveOptions::default()).unwrap();
    assert_eq!(a, b);
}
