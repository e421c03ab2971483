use ifmfix::contraction::SelfMap;
use ifmfix::solver::{
    closed_ball_solve, iterate_trace, picard_solve, power_map_solve, residuals_at,
    residuals_hold, ts_if_solve, uniqueness_probe, uniqueness_probe_with, SolveConfig,
    SolveResult, SolveStatus,
};
use ifmfix::space::{
    ball_contains, BallMode, BallSpec, IfmSpace, Point, TabulatedData, TimeParameter,
};
use ifmfix::tnorm::OperatorPair;

fn line() -> IfmSpace {
    IfmSpace::real_line()
}

fn plane_map() -> SelfMap {
    SelfMap::affine(vec![vec![0.0, 2.0], vec![0.125, 0.0]], vec![0.0, 0.0]).unwrap()
}

fn x(p: &Point) -> f64 {
    p.coords().unwrap()[0]
}

fn ball(center: f64, r: f64, t: f64) -> BallSpec {
    BallSpec::new(center.into(), r, TimeParameter::new(t).unwrap()).unwrap()
}

/// Checks the result invariants shared by every regime.
fn assert_consistent(space: &IfmSpace, map: &SelfMap, r: &SolveResult) {
    let trace = &r.trace;
    assert_eq!(r.fixed_point.is_some(), r.status == SolveStatus::Converged);
    assert_eq!(trace.steps.len(), trace.points.len());
    for (n, pair) in trace.points.windows(2).enumerate() {
        assert_eq!(map.apply(space, &pair[0]).unwrap(), pair[1], "step {n}");
    }
    for (n, step) in trace.steps.iter().enumerate() {
        let next = match trace.points.get(n + 1) {
            Some(p) => p.clone(),
            None => r.residual_image.clone().unwrap(),
        };
        for (i, &t) in trace.probe_ts.iter().enumerate() {
            let m = space
                .evaluate(&trace.points[n], &next, TimeParameter::new(t).unwrap())
                .unwrap();
            assert_eq!((m.mu, m.nu), (step.mu[i], step.nu[i]));
            if i > 0 {
                assert!(step.mu[i] >= step.mu[i - 1]);
            }
        }
    }
    if let Some(fp) = &r.fixed_point {
        let image = map.apply(space, fp).unwrap();
        assert_eq!(Some(&image), r.residual_image.as_ref());
        assert!(residuals_hold(
            &residuals_at(space, fp, &image, &trace.probe_ts),
            r.epsilon
        ));
    }
}

#[test]
fn banach_solve_from_zero() {
    let map = SelfMap::scalar_affine(0.5, 1.0).unwrap();
    let r = picard_solve(&line(), &map, &0.0.into(), &SolveConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    assert!(r.iterations <= 60, "{}", r.iterations);
    assert!((x(r.fixed_point.as_ref().unwrap()) - 2.0).abs() <= 1e-8);
    assert_consistent(&line(), &map, &r);
    let first: Vec<f64> = r.trace.points[..4].iter().map(x).collect();
    assert_eq!(first, [0.0, 1.0, 1.5, 1.75]);
}

#[test]
fn picard_matches_classical_iteration() {
    let eps = 1e-8;
    for (a, c, x0) in [(0.5, 1.0, 0.0), (-0.3, 2.0, 7.0), (0.9, -1.0, -4.0), (0.1, 0.0, 3.0)] {
        let map = SelfMap::scalar_affine(a, c).unwrap();
        let r = picard_solve(&line(), &map, &x0.into(), &SolveConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged, "a = {a}");
        // Plain metric iteration with absolute-error stopping.
        let mut v: f64 = x0;
        loop {
            let next = a * v + c;
            if (next - v).abs() <= eps * (1.0 - a.abs()) {
                v = next;
                break;
            }
            v = next;
        }
        assert!((x(r.fixed_point.as_ref().unwrap()) - v).abs() <= 10.0 * eps, "a = {a}");
    }
}

#[test]
fn per_step_odds_decay_by_k() {
    let map = SelfMap::scalar_affine(0.5, 1.0).unwrap();
    let r = picard_solve(&line(), &map, &0.0.into(), &SolveConfig::default()).unwrap();
    for pair in r.trace.steps.windows(2) {
        for i in 0..r.trace.probe_ts.len() {
            let before = 1.0 / pair[0].mu[i] - 1.0;
            let after = 1.0 / pair[1].mu[i] - 1.0;
            assert!(after <= 0.5 * before * (1.0 + 1e-9) + 1e-300);
        }
    }
}

#[test]
fn shift_fails_hypotheses_and_exhausts_budget_without_them() {
    let shift = SelfMap::scalar_affine(1.0, 1.0).unwrap();
    let r = picard_solve(&line(), &shift, &0.0.into(), &SolveConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::HypothesisFailed);
    assert!(!r.hypothesis_report.unwrap().passed());
    let config = SolveConfig {
        hypothesis_checks: false,
        max_iterations: 100,
        ..SolveConfig::default()
    };
    let r = picard_solve(&line(), &shift, &0.0.into(), &config).unwrap();
    assert_eq!(r.status, SolveStatus::BudgetExhausted);
    assert_eq!(r.trace.points.len(), 101);
    assert_consistent(&line(), &shift, &r);
}

#[test]
fn tabulated_space_without_spade_fails_picard_hypotheses() {
    let s = IfmSpace::finite_tabulated(
        &TabulatedData::constant(&["a", "b", "c"], 0.4, 0.5),
        OperatorPair::min_max(),
    )
    .unwrap();
    let map = SelfMap::constant("a".into());
    let r = picard_solve(&s, &map, &"b".into(), &SolveConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::HypothesisFailed);
    assert!(!r.spade.unwrap().passed);
}

#[test]
fn closed_ball_end_to_end() {
    let s = line();
    let map = SelfMap::scalar_affine(0.5, 0.4).unwrap();
    let b = ball(0.0, 0.5, 1.0);
    let r = closed_ball_solve(&s, &map, &b, 0.5, &SolveConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    let fp = r.fixed_point.clone().unwrap();
    assert!((x(&fp) - 0.8).abs() <= 1e-8);
    assert!(ball_contains(&s, &b, &fp, BallMode::Closed).unwrap());
    let flags = r.trace.ball_flags.clone().unwrap();
    assert_eq!(flags.len(), r.trace.points.len());
    assert!(flags.iter().all(|&f| f));
    for p in &r.trace.points {
        let m = s.evaluate(&0.0.into(), p, TimeParameter::new(1.0).unwrap()).unwrap();
        assert!(m.mu > 0.5 && m.nu < 0.5);
    }
    assert_consistent(&s, &map, &r);

    let bad = SelfMap::scalar_affine(0.5, 0.6).unwrap();
    let r = closed_ball_solve(&s, &bad, &b, 0.5, &SolveConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::HypothesisFailed);
}

#[test]
fn closed_ball_center_already_fixed() {
    let map = SelfMap::scalar_affine(0.5, 1.0).unwrap();
    let r = closed_ball_solve(&line(), &map, &ball(2.0, 0.5, 1.0), 0.5, &SolveConfig::default())
        .unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    assert_eq!(r.iterations, 0);
}

#[test]
fn closed_ball_reports_escape() {
    let config = SolveConfig {
        hypothesis_checks: false,
        ..SolveConfig::default()
    };
    let map = SelfMap::scalar_affine(0.5, 5.0).unwrap();
    let r = closed_ball_solve(&line(), &map, &ball(0.0, 0.5, 1.0), 0.5, &config).unwrap();
    assert_eq!(r.status, SolveStatus::DivergedFromBall);
    assert!(r.fixed_point.is_none());
    assert_eq!(r.trace.ball_flags.unwrap(), vec![true, false]);
}

#[test]
fn power_map_plane_example() {
    let s = IfmSpace::euclidean(2);
    let r = power_map_solve(&s, &plane_map(), 2, &Point::from([3.0, -4.0]), &SolveConfig::default())
        .unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    let c = r.fixed_point.clone().unwrap();
    assert!(c.coords().unwrap().iter().all(|v| v.abs() <= 1e-8));
    assert!(residuals_hold(&r.map_residuals, r.epsilon));
    assert_eq!(r.supporting_reports.len(), 2);
    assert!((r.hypothesis_report.clone().unwrap().estimated_k.unwrap() - 0.25).abs() <= 1e-6);
    assert_consistent(&s, &plane_map().power(2).unwrap(), &r);

    let r = picard_solve(&s, &plane_map(), &Point::from([3.0, -4.0]), &SolveConfig::default())
        .unwrap();
    assert_eq!(r.status, SolveStatus::HypothesisFailed);
}

#[test]
fn power_map_rotation_paths_agree() {
    let s = IfmSpace::euclidean(2);
    let rot = SelfMap::affine(vec![vec![0.0, -0.5], vec![0.5, 0.0]], vec![0.0, 0.0]).unwrap();
    let x0 = Point::from([1.0, 2.0]);
    let a = power_map_solve(&s, &rot, 1, &x0, &SolveConfig::default()).unwrap();
    let b = power_map_solve(&s, &rot, 4, &x0, &SolveConfig::default()).unwrap();
    assert_eq!(a.status, SolveStatus::Converged);
    assert_eq!(b.status, SolveStatus::Converged);
    let d = s
        .coordinate_distance(a.fixed_point.as_ref().unwrap(), b.fixed_point.as_ref().unwrap())
        .unwrap();
    assert!(d <= 1e-8);
}

#[test]
fn power_one_trace_equals_picard_trace() {
    let s = IfmSpace::euclidean(2);
    let map = SelfMap::affine(vec![vec![0.3, 0.1], vec![-0.2, 0.4]], vec![1.0, -1.0]).unwrap();
    let x0 = Point::from([5.0, 5.0]);
    let a = picard_solve(&s, &map, &x0, &SolveConfig::default()).unwrap();
    let b = power_map_solve(&s, &map, 1, &x0, &SolveConfig::default()).unwrap();
    assert_eq!(a.trace, b.trace);
}

#[test]
fn ts_if_regimes() {
    let s = IfmSpace::finite_tabulated(
        &TabulatedData::constant(&["a", "b", "c"], 0.4, 0.5),
        OperatorPair::min_max(),
    )
    .unwrap();
    let map = SelfMap::constant("b".into());
    let r = ts_if_solve(&s, &map, &"a".into(), &SolveConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    assert_eq!(r.iterations, 1);
    assert_eq!(r.fixed_point, Some("b".into()));
    assert!(r.notes.iter().any(|n| n.contains("♠")));
    assert_consistent(&s, &map, &r);

    let half = SelfMap::scalar_affine(0.5, 0.0).unwrap();
    let r = ts_if_solve(&line(), &half, &1.0.into(), &SolveConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::HypothesisFailed);
    let w = r.hypothesis_report.unwrap().worst_witness.unwrap();
    assert!(w.times[0] > 51.2);
}

#[test]
fn uniqueness_banach_and_power() {
    let config = SolveConfig::default();
    let starts: Vec<Point> = [-100.0, 0.0, 100.0].into_iter().map(Point::scalar).collect();
    let map = SelfMap::scalar_affine(0.5, 1.0).unwrap();
    let r = uniqueness_probe(&line(), &map, &starts, &config).unwrap();
    assert!(r.passed);
    assert!(r.excluded.is_empty());
    for l in &r.limits {
        assert!((x(l.as_ref().unwrap()) - 2.0).abs() <= 1e-8);
    }

    let s = IfmSpace::euclidean(2);
    let starts: Vec<Point> = [[1.0, 2.0], [-7.0, 3.0], [9.5, -9.5], [0.1, 0.0], [-4.0, -6.0]]
        .into_iter()
        .map(Point::from)
        .collect();
    let r = uniqueness_probe_with(&s, &starts, &config, |x0, c| {
        power_map_solve(&s, &plane_map(), 2, x0, c)
    })
    .unwrap();
    assert!(r.passed);
    for l in &r.limits {
        assert!(l.as_ref().unwrap().coords().unwrap().iter().all(|v| v.abs() <= 1e-8));
    }
}

#[test]
fn iterate_trace_escape_index() {
    let blowup = SelfMap::custom("blowup", |p: &Point| Point::scalar(x(p) * 1e200));
    let err = iterate_trace(&line(), &blowup, &1.0.into(), 4).unwrap_err();
    assert!(matches!(err, ifmfix::Error::IterationEscape { index: 1, .. }), "{err}");
}

#[test]
fn solves_are_deterministic() {
    let s = IfmSpace::euclidean(2);
    let a = power_map_solve(&s, &plane_map(), 2, &Point::from([1.0, 1.0]), &SolveConfig::default())
        .unwrap();
    let b = power_map_solve(&s, &plane_map(), 2, &Point::from([1.0, 1.0]), &SolveConfig::default())
        .unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn result_round_trips_through_json() {
    let b = ball(0.0, 0.5, 1.0);
    let map = SelfMap::scalar_affine(0.5, 0.4).unwrap();
    let r = closed_ball_solve(&line(), &map, &b, 0.5, &SolveConfig::default()).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    let back: SolveResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}
