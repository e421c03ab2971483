use ifmfix::contraction::{
    contractive_sequence_check, if_contractive_check, t_uniform_continuity_probe, SelfMap,
};
use ifmfix::solver::iterate_trace;
use ifmfix::space::{
    ball_contains, default_probe_ts, BallMode, BallSpec, IfmSpace, Point, TimeParameter,
};
use ifmfix::tnorm::{find_result23_witnesses, OperatorPair, UnitScalar};
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -50.0..50.0f64
}

fn time() -> impl Strategy<Value = f64> {
    (-3.0..3.0f64).prop_map(|e| 10f64.powf(e))
}

fn pt2() -> impl Strategy<Value = Point> {
    (coord(), coord()).prop_map(|(a, b)| Point::from([a, b]))
}

fn t(v: f64) -> TimeParameter {
    TimeParameter::new(v).unwrap()
}

/// The matrix of `entries` rescaled to spectral norm `norm`.
fn matrix_with_norm(entries: [f64; 4], norm: f64) -> Vec<Vec<f64>> {
    let m = nalgebra::Matrix2::from_row_slice(&entries);
    let current = m.singular_values().max();
    let m = if current > 1e-6 {
        m * (norm / current)
    } else {
        nalgebra::Matrix2::identity() * norm
    };
    vec![vec![m[(0, 0)], m[(0, 1)]], vec![m[(1, 0)], m[(1, 1)]]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn induced_membership_axioms(x in pt2(), y in pt2(), tv in time()) {
        let s = IfmSpace::euclidean(2);
        let m = s.evaluate(&x, &y, t(tv)).unwrap();
        prop_assert_eq!(m.mu + m.nu, 1.0);
        prop_assert!(m.mu > 0.0 && m.mu <= 1.0);
        prop_assert!(m.nu >= 0.0 && m.nu < 1.0);
        let back = s.evaluate(&y, &x, t(tv)).unwrap();
        prop_assert_eq!((m.mu, m.nu), (back.mu, back.nu));
        let diag = s.evaluate(&x, &x, t(tv)).unwrap();
        prop_assert_eq!((diag.mu, diag.nu), (1.0, 0.0));
    }

    #[test]
    fn induced_triangle_and_monotone_in_t(
        x in pt2(), y in pt2(), z in pt2(), tv in time(), sv in time(),
    ) {
        let s = IfmSpace::euclidean(2);
        let ops = s.operators();
        let xz = s.evaluate(&x, &z, t(tv + sv)).unwrap();
        let xy = s.evaluate(&x, &y, t(tv)).unwrap();
        let yz = s.evaluate(&y, &z, t(sv)).unwrap();
        prop_assert!(ops.tnorm(xy.mu, yz.mu) <= xz.mu + 1e-12);
        prop_assert!(xz.nu <= ops.tconorm(xy.nu, yz.nu) + 1e-12);
        let later = s.evaluate(&x, &y, t(tv + sv)).unwrap();
        prop_assert!(later.mu >= xy.mu && later.nu <= xy.nu);
    }

    #[test]
    fn open_ball_is_inside_closed_ball(
        c in coord(), y in coord(), r in 0.01..0.99f64, tv in time(),
    ) {
        let s = IfmSpace::real_line();
        let ball = BallSpec::new(c.into(), r, t(tv)).unwrap();
        let y = Point::scalar(y);
        if ball_contains(&s, &ball, &y, BallMode::Open).unwrap() {
            prop_assert!(ball_contains(&s, &ball, &y, BallMode::Closed).unwrap());
        }
    }

    #[test]
    fn shipped_operator_laws(a in 0.0..=1.0f64, b in 0.0..=1.0f64, c in 0.0..=1.0f64) {
        for p in OperatorPair::shipped() {
            for (op, unit) in [
                (&(|x, y| p.tnorm(x, y)) as &dyn Fn(f64, f64) -> f64, 1.0),
                (&|x, y| p.tconorm(x, y), 0.0),
            ] {
                prop_assert_eq!(op(a, b), op(b, a));
                prop_assert!((op(op(a, b), c) - op(a, op(b, c))).abs() <= 1e-12);
                prop_assert!((op(a, unit) - a).abs() <= 1e-15);
                let (lo, hi) = if b <= c { (b, c) } else { (c, b) };
                prop_assert!(op(a, lo) <= op(a, hi) + 1e-15);
                let v = op(a, b);
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn result23_witnesses_reverify(r1 in 0.01..0.99f64, f in 0.01..0.99f64, r5 in 0.01..0.99f64) {
        let r2 = r1 * f;
        let u = |v| UnitScalar::new(v).unwrap();
        for p in [OperatorPair::min_max(), OperatorPair::product_probsum()] {
            let w = find_result23_witnesses(&p, u(r1), u(r2), u(r5)).unwrap();
            prop_assert!(p.tnorm(r1, w.r3) > r2);
            prop_assert!(r1 > p.tconorm(w.r4, r2));
            prop_assert!(p.tnorm(w.r6, w.r6) >= r5);
            prop_assert!(p.tconorm(w.r7, w.r7) <= r5);
        }
    }

    #[test]
    fn power_equals_repeated_application(
        entries in proptest::array::uniform4(-2.0..2.0f64), x in pt2(), m in 1usize..5,
    ) {
        let s = IfmSpace::euclidean(2);
        let rows = vec![vec![entries[0], entries[1]], vec![entries[2], entries[3]]];
        let map = SelfMap::affine(rows, vec![0.5, -0.5]).unwrap();
        let trace = iterate_trace(&s, &map, &x, m).unwrap();
        prop_assert_eq!(&map.clone().power(m).unwrap().apply(&s, &x).unwrap(), trace.last().unwrap());
        for w in trace.windows(2) {
            prop_assert_eq!(&map.apply(&s, &w[0]).unwrap(), &w[1]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn composition_squares_the_constant(
        entries in proptest::array::uniform4(-1.0..1.0f64), norm in 0.1..0.95f64, seed in 0u64..1000,
    ) {
        let s = IfmSpace::euclidean(2);
        let map = SelfMap::affine(matrix_with_norm(entries, norm), vec![1.0, 2.0]).unwrap();
        let ts = default_probe_ts();
        let k1 = if_contractive_check(&s, &map, 400, &ts, seed).unwrap().estimated_k.unwrap();
        let k2 = if_contractive_check(&s, &map.clone().power(2).unwrap(), 400, &ts, seed)
            .unwrap()
            .estimated_k
            .unwrap();
        prop_assert!(k2 <= k1 * k1 + 1e-6, "k(T∘T) = {k2}, k(T)² = {}", k1 * k1);
    }

    #[test]
    fn contractive_maps_are_uniformly_continuous_with_contractive_iterates(
        entries in proptest::array::uniform4(-1.0..1.0f64), norm in 0.1..0.95f64,
        x0 in pt2(), seed in 0u64..1000,
    ) {
        let s = IfmSpace::euclidean(2);
        let map = SelfMap::affine(matrix_with_norm(entries, norm), vec![-1.0, 0.5]).unwrap();
        let ts = default_probe_ts();
        let check = if_contractive_check(&s, &map, 400, &ts, seed).unwrap();
        prop_assert!(check.passed());
        let k = check.estimated_k.unwrap();
        let probe = t_uniform_continuity_probe(&s, &map, &[0.1, 0.01], 200, &ts, seed).unwrap();
        prop_assert!(probe.passed());
        let iterates = iterate_trace(&s, &map, &x0, 12).unwrap();
        prop_assert!(contractive_sequence_check(&s, &iterates, k, &ts).unwrap().passed());
    }
}
