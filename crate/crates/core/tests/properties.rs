//! Randomized invariants across modules.

use besovcap::caplab::{annulus_experiment, hausdorff_content, ExperimentParams};
use besovcap::energy::{PairForm, SolverConfig};
use besovcap::filling::{FillingConfig, FillingGraph};
use besovcap::qs::{promote_gauge, weak_qs_constant, Eta, GaugeParams, SampledMap, ScanMode, TripleScan};
use besovcap::space::{regularity_constant, BallQuery, PointCloud, Space};
use besovcap::uniformize::{uniformize, UniformParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space_strategy() -> impl Strategy<Value = (Space, u32)> {
    prop_oneof![
        (2u32..8).prop_map(|k| (Space::Interval, k)),
        (2u32..8).prop_map(|k| (Space::Cantor, k)),
        (1u32..3).prop_map(|k| (Space::Carpet, k)),
        (1u32..5).prop_map(|k| (Space::Gasket, k)),
        (2u32..7, 0.3f64..1.0).prop_map(|(k, g)| (Space::Snowflake { gamma: g }, k)),
    ]
}

/// Regularity constants measured on the bundled generators; stable in the level.
fn recorded_constant(space: Space) -> f64 {
    match space {
        Space::Interval => 3.5,
        Space::Cantor => 1.5,
        Space::Carpet => 10.0,
        Space::Gasket => 3.5,
        Space::Snowflake { .. } => 4.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_metrics_are_metrics((space, k) in space_strategy(), seed in any::<u64>()) {
        let c = space.build(k).unwrap();
        prop_assert!(c.diam() < 1.0);
        let n = c.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let (a, b, d) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            prop_assert_eq!(c.dist(a, b), c.dist(b, a));
            prop_assert_eq!(c.dist(a, b) == 0.0, a == b);
            prop_assert!(c.dist(a, d) <= c.dist(a, b) + c.dist(b, d) + 1e-15);
            prop_assert!(c.dist(a, b) <= c.diam());
        }
    }

    #[test]
    fn ball_measure_grows_with_radius((space, k) in space_strategy(), x in any::<prop::sample::Index>(), r in 0.0f64..1.0, dr in 0.0f64..0.5) {
        let c = space.build(k).unwrap();
        let x = x.index(c.len());
        prop_assert!(c.ball_measure(&BallQuery::closed(x, r)) <= c.ball_measure(&BallQuery::closed(x, r + dr)));
        prop_assert!(c.ball_measure(&BallQuery::open(x, r)) <= c.ball_measure(&BallQuery::closed(x, r)));
    }

    #[test]
    fn filling_invariants((space, k) in space_strategy(), tau in 1.1f64..3.0, alpha in 1.5f64..3.0) {
        let c = space.build(k).unwrap();
        let cfg = FillingConfig { alpha, tau, ..Default::default() };
        let (nets, g) = FillingGraph::from_cloud(&c, &cfg).unwrap();
        for (n, members) in nets.levels.iter().enumerate() {
            let sep = nets.separation(n);
            for (a, &p) in members.iter().enumerate() {
                for &q in &members[a + 1..] {
                    prop_assert!(c.dist(p, q) >= sep);
                }
            }
            for i in 0..c.len() {
                prop_assert!(members.iter().any(|&m| m == i || c.dist(i, m) < sep));
            }
        }
        for v in 0..g.num_vertices() {
            prop_assert_eq!(g.graph_distance_to_root(v), g.vertex_level(v));
        }
        for &(v, w) in g.edges() {
            let (a, b) = (g.vertex(v), g.vertex(w));
            prop_assert!(a.level.abs_diff(b.level) <= 1);
            if a.level == b.level {
                prop_assert!(c.dist(a.point, b.point) < 2.0 * alpha.powi(-(a.level as i32)));
            }
        }
        let (_, again) = FillingGraph::from_cloud(&c, &cfg).unwrap();
        prop_assert_eq!(again.edges(), g.edges());
    }

    #[test]
    fn uniformized_metric_and_masses((space, k) in space_strategy(), theta in 0.2f64..0.9, seed in any::<u64>()) {
        let c = space.build(k).unwrap();
        let (_, g) = FillingGraph::from_cloud(&c, &FillingConfig::default()).unwrap();
        let ug = uniformize(g, UniformParams::from_theta(2.0, 2.0, theta).unwrap(), &c).unwrap();
        // per-level totals decay like e^(-beta n) up to the ball overlap
        let masses = ug.level_masses();
        for (n, m) in masses.iter().enumerate() {
            let scaled = m * (ug.params.beta * n as f64).exp();
            prop_assert!(scaled.is_finite() && (1.0 - 1e-9..=8.0).contains(&scaled), "level {} scaled mass {}", n, scaled);
        }
        let nv = ug.num_vertices();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (rng.gen_range(0..nv), rng.gen_range(0..nv));
        let (da, db) = (ug.distances_from(a), ug.distances_from(b));
        prop_assert_eq!(da[a], 0.0);
        prop_assert!((da[b] - db[a]).abs() <= 1e-12 * da[b].max(1.0));
        for w in 0..nv {
            prop_assert!(da[w] <= da[b] + db[w] + 1e-12);
        }
    }

    #[test]
    fn energies_homogeneous_and_null_on_constants(k in 2u32..6, theta in 0.1f64..0.9, p in 1.2f64..4.0, lam in -3.0f64..3.0, seed in any::<u64>()) {
        let c = Space::Interval.build(k).unwrap();
        let form = PairForm::besov(&c, theta, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..c.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e = form.energy(&u);
        let scaled: Vec<f64> = u.iter().map(|x| lam * x + 0.0).collect();
        prop_assert!((form.energy(&scaled) - lam.abs().powf(p) * e).abs() <= 1e-9 * e.max(1e-300) + 1e-300);
        prop_assert_eq!(form.energy(&vec![lam; c.len()]), 0.0);
    }

    #[test]
    fn nested_condensers_are_monotone(k in 3u32..6, seed in any::<u64>(), theta in 0.2f64..0.8) {
        let c = Space::Interval.build(k).unwrap();
        let n = c.len();
        let form = PairForm::besov(&c, theta, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.gen_range(1..n / 3);
        let b = rng.gen_range(2 * n / 3..n - 1);
        let cfg = SolverConfig::with_tol(1e-12);
        let small = form.capacity(&(0..a).collect::<Vec<_>>(), &(b..n).collect::<Vec<_>>(), &cfg).unwrap();
        let big = form.capacity(&(0..=a).collect::<Vec<_>>(), &(b - 1..n).collect::<Vec<_>>(), &cfg).unwrap();
        prop_assert!(small.value <= big.value * (1.0 + 1e-9));
        prop_assert!(small.u.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
    }

    #[test]
    fn content_bounded_by_cover(k in 4u32..8, s in 0.2f64..1.5, tau in 0.01f64..0.5, seed in any::<u64>()) {
        let c = Space::Interval.build(k).unwrap();
        let n = c.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
        let b: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
        let ca = hausdorff_content(&c, &a, s, tau).unwrap();
        let cb = hausdorff_content(&c, &b, s, tau).unwrap();
        prop_assert!(ca.value <= ca.cover.len() as f64 * (2.0 * tau).powf(s) + 1e-12);
        // concatenated covers cover the union at the summed value
        let cover = ca.union_cover(&cb);
        for &i in a.iter().chain(&b) {
            prop_assert!(cover.iter().any(|ball| c.dist(ball.center, i) <= ball.radius * (1.0 + 1e-12)));
        }
        let total: f64 = cover.iter().map(|ball| if ball.diam > 0.0 { ball.diam.powf(s) } else { 0.0 }).sum();
        prop_assert!((total - ca.value - cb.value).abs() <= 1e-12 * total.max(1.0));
    }

    #[test]
    fn weak_qs_sampled_equals_exhaustive_with_full_budget(k in 2u32..5, seed in any::<u64>()) {
        let c = Space::Interval.build(k).unwrap();
        let n = c.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let m = SampledMap::new(c.clone(), c, perm).unwrap();
        let ex = weak_qs_constant(&m, &TripleScan { mode: ScanMode::Exhaustive, ..Default::default() }).unwrap();
        let total = (n * (n - 1) * (n - 2)) as u64;
        let sa = weak_qs_constant(&m, &TripleScan { mode: ScanMode::Sampled, budget: total, seed, ..Default::default() }).unwrap();
        prop_assert_eq!(ex.h_hat, sa.h_hat);
    }

    #[test]
    fn promoted_gauge_dominates_branches(c in 0.5f64..3.0, a in 0.2f64..2.0, kappa in 0.1f64..1.0, r0 in 0.05f64..0.5, t in 0.0f64..20.0) {
        let g = promote_gauge(GaugeParams { eta: Eta::PowerLaw { c, a }, kappa, r0, diam_z: 0.9, diam_w: 0.9, c_l: 2.0 }).unwrap();
        let v = g.eval(t);
        for b in g.branches(t) {
            prop_assert!(v >= b);
        }
    }
}

#[test]
fn regularity_constants_hold_for_generators() {
    for (space, levels) in [
        (Space::Interval, vec![2, 5, 8]),
        (Space::Cantor, vec![2, 5, 8]),
        (Space::Carpet, vec![1, 2, 3]),
        (Space::Gasket, vec![2, 4, 6]),
        (Space::Snowflake { gamma: 0.5 }, vec![2, 5, 8]),
    ] {
        for k in levels {
            let c: PointCloud = space.build(k).unwrap();
            let cst = regularity_constant(&c, space.analytic_dimension());
            assert!(cst <= recorded_constant(space), "{} level {k}: {cst}", space.name());
        }
    }
}

#[test]
fn annulus_capacities_follow_the_remarks() {
    let c = Space::Interval.build(9).unwrap();
    let x0 = c.len() / 2;
    let h = c.resolution();
    // critical case: nonincreasing in R/r at fixed r
    let params = ExperimentParams { p: 2.0, theta: 0.5, q: 1.0, solver: SolverConfig::default() };
    let grid: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0].iter().map(|k| (4.0 * h, 4.0 * h * k)).collect();
    let rep = annulus_experiment(&c, x0, &grid, &params).unwrap();
    assert!(rep.rows.windows(2).all(|w| w[1].capacity <= w[0].capacity), "{:?}", rep.rows);
    // small case: shrinks as r -> 0 at fixed R
    let params = ExperimentParams { theta: 0.25, ..params };
    let grid: Vec<(f64, f64)> = [32.0, 16.0, 8.0, 4.0, 2.0].iter().map(|k| (k * h, 0.2)).collect();
    let rep = annulus_experiment(&c, x0, &grid, &params).unwrap();
    assert!(rep.rows.windows(2).all(|w| w[1].capacity < w[0].capacity), "{:?}", rep.rows);
}
