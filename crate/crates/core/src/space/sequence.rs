//! Finite-prefix diagnostics for sequences: IF-Cauchy and convergence tests,
//! joint continuity of μ/ν along convergent sequences, and sequential
//! closedness of point sets.

use serde::{Deserialize, Serialize};

use super::{default_probe_ts, IfmSpace, MembershipPair, Point, TimeParameter};
use crate::error::{Error, Result};
use crate::report::{Record, ToRecords, Witness};

/// Thresholds for deciding Cauchy-ness or convergence on a finite prefix.
///
/// A pair is close when `μ > 1 - epsilon` and `ν < epsilon` at every probe
/// time. A prefix passes from `n0` when every later pair is close and at least
/// `window + 1` points remain from `n0` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTest {
    pub probe_ts: Vec<TimeParameter>,
    pub epsilon: f64,
    pub window: usize,
}

impl ConvergenceTest {
    pub fn new(probe_ts: Vec<TimeParameter>, epsilon: f64, window: usize) -> Result<Self> {
        let test = Self {
            probe_ts,
            epsilon,
            window,
        };
        test.validate()?;
        Ok(test)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.window == 0 {
            return Err(Error::InvalidArgument("window must be at least 1".into()));
        }
        if self.probe_ts.is_empty() {
            return Err(Error::InvalidArgument("at least one probe time is required".into()));
        }
        Ok(())
    }

    /// The first probe time at which `x` and `y` are not close, with the
    /// offending pair.
    fn first_gap(&self, space: &IfmSpace, x: &Point, y: &Point) -> Option<(f64, MembershipPair)> {
        self.probe_ts.iter().find_map(|t| {
            let m = space.eval_raw(x, y, t.value());
            (!m.within_strict(self.epsilon)).then_some((t.value(), m))
        })
    }
}

impl Default for ConvergenceTest {
    fn default() -> Self {
        Self {
            probe_ts: default_probe_ts(),
            epsilon: 1e-8,
            window: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub length: usize,
    pub cauchy: bool,
    /// Earliest index from which every later pair of the prefix is close.
    pub cauchy_from: usize,
    /// The last pair that is not close, when there is one.
    pub cauchy_witness: Option<Witness>,
    pub convergent: Option<bool>,
    pub converges_from: Option<usize>,
    pub convergence_witness: Option<Witness>,
}

impl ToRecords for SequenceReport {
    fn records(&self) -> Vec<Record> {
        let word = |p: bool| if p { "pass" } else { "fail" };
        let mut records = vec![Record::new(
            "sequence:cauchy",
            word(self.cauchy),
            self.cauchy_from as f64,
            self.cauchy_witness
                .as_ref()
                .map(|w| w.to_string())
                .unwrap_or_default(),
        )];
        if let (Some(c), Some(n0)) = (self.convergent, self.converges_from) {
            records.push(Record::new(
                "sequence:convergent",
                word(c),
                n0 as f64,
                self.convergence_witness
                    .as_ref()
                    .map(|w| w.to_string())
                    .unwrap_or_default(),
            ));
        }
        records
    }
}

fn check_all(space: &IfmSpace, points: &[Point]) -> Result<()> {
    points.iter().try_for_each(|p| space.check_point(p))
}

/// Cauchy and (optionally) convergence verdicts for a finite prefix.
pub fn sequence_diagnostics(
    space: &IfmSpace,
    prefix: &[Point],
    test: &ConvergenceTest,
    candidate_limit: Option<&Point>,
) -> Result<SequenceReport> {
    test.validate()?;
    if prefix.is_empty() {
        return Err(Error::InvalidArgument("sequence prefix is empty".into()));
    }
    if prefix.len() <= test.window {
        return Err(Error::InvalidArgument(format!(
            "prefix of length {} is not longer than the window {}",
            prefix.len(),
            test.window
        )));
    }
    check_all(space, prefix)?;
    if let Some(c) = candidate_limit {
        space.check_point(c)?;
    }
    let n = prefix.len();
    let settled = |n0: usize| n - n0 > test.window;

    let mut cauchy_from = 0;
    let mut cauchy_witness = None;
    'outer: for i in (0..n).rev() {
        for j in i + 1..n {
            if let Some((t, m)) = test.first_gap(space, &prefix[i], &prefix[j]) {
                cauchy_from = i + 1;
                cauchy_witness = Some(Witness::at(
                    vec![prefix[i].clone(), prefix[j].clone()],
                    vec![t],
                    m.mu,
                    m.nu,
                ));
                break 'outer;
            }
        }
    }

    let (convergent, converges_from, convergence_witness) = match candidate_limit {
        None => (None, None, None),
        Some(limit) => {
            let mut from = 0;
            let mut witness = None;
            for i in (0..n).rev() {
                if let Some((t, m)) = test.first_gap(space, &prefix[i], limit) {
                    from = i + 1;
                    witness = Some(Witness::at(
                        vec![prefix[i].clone(), limit.clone()],
                        vec![t],
                        m.mu,
                        m.nu,
                    ));
                    break;
                }
            }
            (Some(settled(from)), Some(from), witness)
        }
    };

    Ok(SequenceReport {
        length: n,
        cauchy: settled(cauchy_from),
        cauchy_from,
        cauchy_witness,
        convergent,
        converges_from,
        convergence_witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointContinuityReport {
    pub t: f64,
    pub target: MembershipPair,
    /// `(|μ(x_n, y_n, t) - μ(x, y, t)|, |ν(x_n, y_n, t) - ν(x, y, t)|)` per index.
    pub deviations: Vec<(f64, f64)>,
    pub tail_mu_deviation: f64,
    pub tail_nu_deviation: f64,
    /// First index from which every deviation is within tolerance.
    pub settled_from: Option<usize>,
    pub tolerance: f64,
    pub passed: bool,
}

impl ToRecords for JointContinuityReport {
    fn records(&self) -> Vec<Record> {
        let word = if self.passed { "pass" } else { "fail" };
        vec![
            Record::new(
                "joint-continuity:mu",
                word,
                self.tail_mu_deviation,
                format!("target={}", self.target.mu),
            ),
            Record::new(
                "joint-continuity:nu",
                word,
                self.tail_nu_deviation,
                format!("target={}", self.target.nu),
            ),
        ]
    }
}

/// Compares `μ/ν(x_n, y_n, t)` with `μ/ν(x, y, t)` along the prefixes. The
/// verdict is decided at the last index; callers establish convergence of
/// both sequences with [`sequence_diagnostics`].
pub fn joint_continuity_probe(
    space: &IfmSpace,
    xs: &[Point],
    x: &Point,
    ys: &[Point],
    y: &Point,
    t: TimeParameter,
    tolerance: f64,
) -> Result<JointContinuityReport> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::InvalidArgument(
            "sequences must be nonempty and of equal length".into(),
        ));
    }
    check_all(space, xs)?;
    check_all(space, ys)?;
    let target = space.evaluate(x, y, t)?;
    let deviations: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .map(|(a, b)| {
            let m = space.eval_raw(a, b, t.value());
            ((m.mu - target.mu).abs(), (m.nu - target.nu).abs())
        })
        .collect();
    let within = |d: &(f64, f64)| d.0 <= tolerance && d.1 <= tolerance;
    let settled_from = match deviations.iter().rposition(|d| !within(d)) {
        None => Some(0),
        Some(i) if i + 1 < deviations.len() => Some(i + 1),
        Some(_) => None,
    };
    let &(tail_mu, tail_nu) = deviations.last().expect("nonempty");
    Ok(JointContinuityReport {
        t: t.value(),
        target,
        passed: tail_mu <= tolerance && tail_nu <= tolerance,
        tail_mu_deviation: tail_mu,
        tail_nu_deviation: tail_nu,
        deviations,
        settled_from,
        tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosednessReport {
    pub passed: bool,
    /// Indices of the test sequences whose limit lies outside the set.
    pub escapes: Vec<usize>,
    pub checked: usize,
}

impl ToRecords for ClosednessReport {
    fn records(&self) -> Vec<Record> {
        let escapes: Vec<String> = self.escapes.iter().map(|i| i.to_string()).collect();
        vec![Record::new(
            "closedness",
            if self.passed { "pass" } else { "fail" },
            self.escapes.len() as f64,
            if escapes.is_empty() {
                String::new()
            } else {
                format!("escaping sequences: {}", escapes.join(", "))
            },
        )]
    }
}

/// Checks that limits of convergent sequences inside `member` stay inside it.
/// Each test sequence must lie in the set and converge to its stated limit
/// under `test`.
pub fn closedness_probe(
    space: &IfmSpace,
    member: impl Fn(&Point) -> bool,
    test_sequences: &[(Vec<Point>, Point)],
    test: &ConvergenceTest,
) -> Result<ClosednessReport> {
    let mut escapes = Vec::new();
    for (index, (prefix, limit)) in test_sequences.iter().enumerate() {
        if let Some(p) = prefix.iter().find(|p| !member(p)) {
            return Err(Error::InvalidArgument(format!(
                "sequence {index} has element {p} outside the set"
            )));
        }
        let report = sequence_diagnostics(space, prefix, test, Some(limit))?;
        if report.convergent != Some(true) {
            return Err(Error::NotConvergent { index });
        }
        if !member(limit) {
            escapes.push(index);
        }
    }
    Ok(ClosednessReport {
        passed: escapes.is_empty(),
        escapes,
        checked: test_sequences.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{ball_contains, probe_ts, BallMode, BallSpec};

    fn test_at(ts: &[f64], epsilon: f64) -> ConvergenceTest {
        ConvergenceTest::new(probe_ts(ts).unwrap(), epsilon, 8).unwrap()
    }

    fn seq(f: impl Fn(i32) -> f64, n: i32) -> Vec<Point> {
        (0..n).map(|i| Point::scalar(f(i))).collect()
    }

    #[test]
    fn halving_sequence_is_cauchy_and_converges() {
        let s = IfmSpace::real_line();
        let xs = seq(|n| 0.5f64.powi(n), 40);
        let r = sequence_diagnostics(&s, &xs, &test_at(&[0.1, 1.0, 10.0], 0.01), Some(&0.0.into()))
            .unwrap();
        assert!(r.cauchy);
        assert_eq!(r.convergent, Some(true));
        // μ(x_n, 0, 0.1) > 0.99 needs 2^-n < 0.1/99, so n >= 10.
        assert_eq!(r.converges_from, Some(10));
        assert!(r.cauchy_from <= 10);
    }

    #[test]
    fn constant_sequence_settles_immediately() {
        let s = IfmSpace::real_line();
        let xs = seq(|_| 3.0, 12);
        let r = sequence_diagnostics(&s, &xs, &test_at(&[1.0], 0.01), Some(&3.0.into())).unwrap();
        assert!(r.cauchy);
        assert_eq!(r.cauchy_from, 0);
        assert_eq!(r.converges_from, Some(0));
        assert!(r.cauchy_witness.is_none());
    }

    #[test]
    fn integers_are_not_cauchy() {
        let s = IfmSpace::real_line();
        let xs = seq(f64::from, 50);
        let r = sequence_diagnostics(&s, &xs, &test_at(&[1.0], 0.01), None).unwrap();
        assert!(!r.cauchy);
        let w = r.cauchy_witness.unwrap();
        assert_eq!(w.lhs, 0.5);
    }

    #[test]
    fn prefix_must_exceed_window() {
        let s = IfmSpace::real_line();
        assert!(sequence_diagnostics(&s, &[], &test_at(&[1.0], 0.01), None).is_err());
        let xs = seq(|_| 0.0, 8);
        assert!(sequence_diagnostics(&s, &xs, &test_at(&[1.0], 0.01), None).is_err());
    }

    #[test]
    fn joint_continuity_on_converging_pairs() {
        let s = IfmSpace::real_line();
        let xs = seq(|n| 2.0 + 0.5f64.powi(n), 31);
        let ys = seq(|n| 5.0 - (1.0 / 3.0f64).powi(n), 31);
        let t = TimeParameter::new(1.0).unwrap();
        let r = joint_continuity_probe(&s, &xs, &2.0.into(), &ys, &5.0.into(), t, 1e-6).unwrap();
        assert!(r.passed);
        assert_eq!(r.target, MembershipPair { mu: 0.25, nu: 0.75 });
        assert!(r.settled_from.unwrap() <= 30);
    }

    #[test]
    fn joint_continuity_on_coincident_arguments() {
        let s = IfmSpace::real_line();
        let xs = seq(|n| 1.0 + 0.5f64.powi(n), 20);
        let t = TimeParameter::new(0.3).unwrap();
        let r = joint_continuity_probe(&s, &xs, &1.0.into(), &xs, &1.0.into(), t, 0.0).unwrap();
        assert!(r.passed);
        assert_eq!(r.settled_from, Some(0));
    }

    #[test]
    fn closed_ball_is_sequentially_closed_open_ball_is_not() {
        let s = IfmSpace::real_line();
        let ball = BallSpec::new(0.0.into(), 0.5, TimeParameter::new(1.0).unwrap()).unwrap();
        let test = test_at(&[1.0], 1e-3);

        let inside = seq(|n| 0.8 * (1.0 - 0.5f64.powi(n)), 40);
        let closed = |p: &Point| ball_contains(&s, &ball, p, BallMode::Closed).unwrap();
        let r = closedness_probe(&s, closed, &[(inside, 0.8.into())], &test).unwrap();
        assert!(r.passed);

        let edge = seq(|n| 1.0 - 0.5f64.powi(n), 40);
        let open = |p: &Point| ball_contains(&s, &ball, p, BallMode::Open).unwrap();
        let r = closedness_probe(&s, open, &[(edge, 1.0.into())], &test).unwrap();
        assert!(!r.passed);
        assert_eq!(r.escapes, vec![0]);
    }

    #[test]
    fn closedness_rejects_non_convergent_input() {
        let s = IfmSpace::real_line();
        let xs = seq(f64::from, 20);
        let err = closedness_probe(&s, |_| true, &[(xs, 0.0.into())], &test_at(&[1.0], 0.01))
            .unwrap_err();
        assert!(matches!(err, Error::NotConvergent { index: 0 }));
    }

    #[test]
    fn singleton_set() {
        let s = IfmSpace::real_line();
        let xs = seq(|_| 7.0, 10);
        let r = closedness_probe(
            &s,
            |p| *p == Point::scalar(7.0),
            &[(xs, 7.0.into())],
            &test_at(&[1.0], 0.01),
        )
        .unwrap();
        assert!(r.passed);
    }
}
