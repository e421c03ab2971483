//! Intuitionistic fuzzy metric spaces.
//!
//! A space pairs a point domain with evaluators for μ (degree of nearness) and
//! ν (degree of non-nearness) over `(x, y, t)` with `t > 0`, bound to an
//! idempotent t-norm/t-conorm pair.

mod audit;
mod point;
mod sequence;
mod tabulated;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{format_sig17, Record, ToRecords};
use crate::tnorm::{check_idempotent, OperatorPair};

pub use audit::axiom_audit;
pub use point::Point;
pub use sequence::{
    closedness_probe, joint_continuity_probe, sequence_diagnostics, ClosednessReport,
    ConvergenceTest, JointContinuityReport, SequenceReport,
};
pub use tabulated::{Curve, PairCurves, TabulatedData};

use tabulated::Table;

/// The time parameter `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TimeParameter(f64);

impl TimeParameter {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::NonPositiveTime { value })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TimeParameter {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<TimeParameter> for f64 {
    fn from(t: TimeParameter) -> f64 {
        t.0
    }
}

/// Default probe grid for "for all t > 0" quantifiers: `0.1 * 2^i`, `i = 0..9`.
pub fn default_probe_ts() -> Vec<TimeParameter> {
    (0..10)
        .map(|i| TimeParameter(0.1 * f64::from(1u32 << i)))
        .collect()
}

pub fn probe_ts(values: &[f64]) -> Result<Vec<TimeParameter>> {
    values.iter().map(|&v| TimeParameter::new(v)).collect()
}

/// `(μ, ν)` at one `(x, y, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipPair {
    pub mu: f64,
    pub nu: f64,
}

impl MembershipPair {
    pub const COINCIDENT: MembershipPair = MembershipPair { mu: 1.0, nu: 0.0 };

    /// `μ + ν <= 1`, `μ` in `(0, 1]` and `ν` in `[0, 1)`.
    pub fn is_admissible(&self) -> bool {
        self.mu + self.nu <= 1.0
            && self.mu > 0.0
            && self.mu <= 1.0
            && self.nu >= 0.0
            && self.nu < 1.0
    }

    /// Both thresholds of an `r`-neighbourhood: `μ > 1 - r` and `ν < r`.
    pub fn within_strict(&self, r: f64) -> bool {
        self.mu > 1.0 - r && self.nu < r
    }

    /// Non-strict form: `μ >= 1 - r` and `ν <= r`.
    pub fn within(&self, r: f64) -> bool {
        self.mu >= 1.0 - r && self.nu <= r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseMetric {
    Euclidean,
    Chebyshev,
    /// Sum of coordinate-wise absolute differences; `|x - y|` on the line.
    AbsoluteDifference,
}

impl BaseMetric {
    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        let diffs = x.iter().zip(y).map(|(a, b)| (a - b).abs());
        match self {
            BaseMetric::Euclidean => {
                if x.len() == 1 {
                    (x[0] - y[0]).abs()
                } else {
                    diffs.map(|d| d * d).sum::<f64>().sqrt()
                }
            }
            BaseMetric::Chebyshev => diffs.fold(0.0, f64::max),
            BaseMetric::AbsoluteDifference => diffs.sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointDomain {
    Coordinate { dimension: usize, metric: BaseMetric },
    Finite { labels: Vec<String> },
}

impl PointDomain {
    pub fn line() -> Self {
        PointDomain::Coordinate {
            dimension: 1,
            metric: BaseMetric::AbsoluteDifference,
        }
    }

    pub fn euclidean(dimension: usize) -> Self {
        PointDomain::Coordinate {
            dimension,
            metric: BaseMetric::Euclidean,
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        match self {
            PointDomain::Coordinate { dimension, .. } => Some(*dimension),
            PointDomain::Finite { .. } => None,
        }
    }

    /// Checks that `p` belongs to the domain, explaining why not otherwise.
    pub fn check(&self, p: &Point) -> std::result::Result<(), String> {
        match (self, p) {
            (PointDomain::Coordinate { dimension, .. }, Point::Coords(c)) => {
                if c.len() != *dimension {
                    Err(format!("expected {dimension} coordinates, got {}", c.len()))
                } else if c.iter().any(|x| !x.is_finite()) {
                    Err("non-finite coordinate".to_string())
                } else {
                    Ok(())
                }
            }
            (PointDomain::Finite { labels }, Point::Label(l)) => {
                if labels.iter().any(|x| x == l) {
                    Ok(())
                } else {
                    Err(format!("unknown label `{l}`"))
                }
            }
            (PointDomain::Coordinate { .. }, Point::Label(_)) => {
                Err("label given for a coordinate space".to_string())
            }
            (PointDomain::Finite { .. }, Point::Coords(_)) => {
                Err("coordinates given for a finite space".to_string())
            }
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.check(p).is_ok()
    }
}

pub type CustomEvaluator = Arc<dyn Fn(&Point, &Point, f64) -> MembershipPair + Send + Sync>;

#[derive(Clone)]
enum Evaluator {
    Induced(BaseMetric),
    Tabulated(Arc<Table>),
    Custom(CustomEvaluator),
}

/// An intuitionistic fuzzy metric space. Immutable once built.
#[derive(Clone)]
pub struct IfmSpace {
    name: String,
    domain: PointDomain,
    operators: OperatorPair,
    evaluator: Evaluator,
}

impl fmt::Debug for IfmSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IfmSpace")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("operators", &self.operators)
            .finish()
    }
}

fn require_idempotent(operators: &mut OperatorPair) -> Result<()> {
    let check = check_idempotent(operators, 101, 0.0)?;
    if check.tnorm && check.tconorm {
        Ok(())
    } else {
        Err(Error::NonIdempotentOperators(operators.name().to_string()))
    }
}

impl IfmSpace {
    /// The space induced by a classical metric `d`:
    /// `μ = t / (t + d)` and `ν = d / (t + d)`.
    pub fn induced_from_metric(domain: PointDomain, mut operators: OperatorPair) -> Result<Self> {
        let metric = match &domain {
            PointDomain::Coordinate { dimension, metric } => {
                if *dimension == 0 {
                    return Err(Error::InvalidArgument(
                        "coordinate space dimension must be at least 1".into(),
                    ));
                }
                *metric
            }
            PointDomain::Finite { .. } => {
                return Err(Error::InvalidArgument(
                    "an induced space needs a coordinate domain".into(),
                ))
            }
        };
        require_idempotent(&mut operators)?;
        Ok(Self {
            name: format!("induced:{}", metric_name(metric)),
            domain,
            operators,
            evaluator: Evaluator::Induced(metric),
        })
    }

    /// Induced space on the real line with `|x - y|` and min/max.
    pub fn real_line() -> Self {
        Self::induced_from_metric(PointDomain::line(), OperatorPair::min_max())
            .expect("min/max is idempotent")
    }

    /// Induced Euclidean space of the given dimension with min/max.
    pub fn euclidean(dimension: usize) -> Self {
        Self::induced_from_metric(PointDomain::euclidean(dimension), OperatorPair::min_max())
            .expect("min/max is idempotent")
    }

    /// A finite space evaluated by table lookup; diagonal pairs are `(1, 0)`.
    pub fn finite_tabulated(data: &TabulatedData, mut operators: OperatorPair) -> Result<Self> {
        require_idempotent(&mut operators)?;
        let table = Table::build(data)?;
        Ok(Self {
            name: format!("tabulated:{}", data.labels.len()),
            domain: PointDomain::Finite {
                labels: table.labels.clone(),
            },
            operators,
            evaluator: Evaluator::Tabulated(Arc::new(table)),
        })
    }

    /// A space with an arbitrary evaluator. Nothing is validated; this exists
    /// so that audits can be pointed at deliberately broken spaces.
    pub fn from_evaluator(
        name: impl Into<String>,
        domain: PointDomain,
        operators: OperatorPair,
        evaluator: impl Fn(&Point, &Point, f64) -> MembershipPair + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            domain,
            operators,
            evaluator: Evaluator::Custom(Arc::new(evaluator)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &PointDomain {
        &self.domain
    }

    pub fn operators(&self) -> &OperatorPair {
        &self.operators
    }

    /// The classical metric behind an induced space.
    pub fn base_metric(&self) -> Option<BaseMetric> {
        match &self.evaluator {
            Evaluator::Induced(m) => Some(*m),
            _ => None,
        }
    }

    pub fn is_induced(&self) -> bool {
        self.base_metric().is_some()
    }

    /// Coordinate distance between two points, for auxiliary reporting.
    pub fn coordinate_distance(&self, x: &Point, y: &Point) -> Option<f64> {
        match (&self.domain, x, y) {
            (PointDomain::Coordinate { metric, .. }, Point::Coords(a), Point::Coords(b)) => {
                Some(metric.distance(a, b))
            }
            _ => None,
        }
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        self.domain
            .check(p)
            .map_err(|_| Error::UnknownPoint(p.clone()))
    }

    /// `(μ(x, y, t), ν(x, y, t))`.
    pub fn evaluate(&self, x: &Point, y: &Point, t: TimeParameter) -> Result<MembershipPair> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.eval_raw(x, y, t.value()))
    }

    pub(crate) fn eval_raw(&self, x: &Point, y: &Point, t: f64) -> MembershipPair {
        match &self.evaluator {
            Evaluator::Induced(metric) => {
                let (Point::Coords(a), Point::Coords(b)) = (x, y) else {
                    unreachable!("domain checked")
                };
                let d = metric.distance(a, b);
                if d == 0.0 {
                    return MembershipPair::COINCIDENT;
                }
                // The smaller value is computed directly and the larger as its
                // complement, which keeps μ + ν == 1 in floating point.
                if d <= t {
                    let nu = d / (t + d);
                    MembershipPair { mu: 1.0 - nu, nu }
                } else {
                    let mu = t / (t + d);
                    MembershipPair { mu, nu: 1.0 - mu }
                }
            }
            Evaluator::Tabulated(table) => {
                let (Point::Label(a), Point::Label(b)) = (x, y) else {
                    unreachable!("domain checked")
                };
                let i = table.position(a).expect("domain checked");
                let j = table.position(b).expect("domain checked");
                if i == j {
                    return MembershipPair::COINCIDENT;
                }
                let (mu, nu) = table.eval(i, j, t);
                MembershipPair { mu, nu }
            }
            Evaluator::Custom(f) => f(x, y, t),
        }
    }

    /// `(1/μ - 1, 1/ν - 1)`, the quantities contraction conditions are stated
    /// in. Induced spaces return the closed forms `(d/t, t/d)`, free of the
    /// cancellation in `1/μ - 1` when `μ` is close to 1. `ν = 0` gives `+inf`.
    pub fn odds(&self, x: &Point, y: &Point, t: TimeParameter) -> Result<(f64, f64)> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.odds_raw(x, y, t.value()))
    }

    pub(crate) fn odds_raw(&self, x: &Point, y: &Point, t: f64) -> (f64, f64) {
        match &self.evaluator {
            Evaluator::Induced(metric) => {
                let (Point::Coords(a), Point::Coords(b)) = (x, y) else {
                    unreachable!("domain checked")
                };
                let d = metric.distance(a, b);
                if d == 0.0 {
                    (0.0, f64::INFINITY)
                } else {
                    (d / t, t / d)
                }
            }
            _ => {
                let m = self.eval_raw(x, y, t);
                let nu_odds = if m.nu == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / m.nu - 1.0
                };
                (1.0 / m.mu - 1.0, nu_odds)
            }
        }
    }
}

fn metric_name(m: BaseMetric) -> &'static str {
    match m {
        BaseMetric::Euclidean => "euclidean",
        BaseMetric::Chebyshev => "chebyshev",
        BaseMetric::AbsoluteDifference => "absolute-difference",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallMode {
    /// `μ > 1 - r` and `ν < r`.
    Open,
    /// `μ >= 1 - r` and `ν <= r`; sequentially closed.
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Point,
    pub radius: f64,
    pub time: TimeParameter,
}

impl BallSpec {
    pub fn new(center: Point, radius: f64, time: TimeParameter) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must lie in (0, 1), got {radius}"
            )));
        }
        Ok(Self {
            center,
            radius,
            time,
        })
    }
}

pub fn ball_contains(space: &IfmSpace, ball: &BallSpec, y: &Point, mode: BallMode) -> Result<bool> {
    let m = space.evaluate(&ball.center, y, ball.time)?;
    Ok(match mode {
        BallMode::Open => m.within_strict(ball.radius),
        BallMode::Closed => m.within(ball.radius),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpadePair {
    pub x: Point,
    pub y: Point,
    pub mu: f64,
    pub nu: f64,
    pub passed: bool,
}

/// Finite-horizon evidence for `μ -> 1` and `ν -> 0` as `t -> inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpadeReport {
    pub horizon: f64,
    pub epsilon: f64,
    pub pairs: Vec<SpadePair>,
    pub passed: bool,
}

impl ToRecords for SpadeReport {
    fn records(&self) -> Vec<Record> {
        let word = |p: bool| if p { "pass" } else { "fail" };
        let mut records = vec![Record::new(
            "spade",
            word(self.passed),
            self.horizon,
            format!("epsilon={:e}", self.epsilon),
        )];
        records.extend(self.pairs.iter().map(|p| {
            Record::new(
                format!("spade:{}~{}", p.x, p.y),
                word(p.passed),
                p.mu,
                format!("nu={}", format_sig17(p.nu)),
            )
        }));
        records
    }
}

/// Checks `μ(x, y, T) >= 1 - ε` and `ν(x, y, T) <= ε` at the horizon `T`.
pub fn spade_probe(
    space: &IfmSpace,
    pairs: &[(Point, Point)],
    t_horizon: TimeParameter,
    epsilon: f64,
) -> Result<SpadeReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let pairs = pairs
        .iter()
        .map(|(x, y)| {
            let m = space.evaluate(x, y, t_horizon)?;
            Ok(SpadePair {
                x: x.clone(),
                y: y.clone(),
                mu: m.mu,
                nu: m.nu,
                passed: m.within(epsilon),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpadeReport {
        horizon: t_horizon.value(),
        epsilon,
        passed: pairs.iter().all(|p| p.passed),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: f64) -> TimeParameter {
        TimeParameter::new(v).unwrap()
    }

    #[test]
    fn time_parameter_must_be_positive() {
        assert!(TimeParameter::new(0.0).is_err());
        assert!(TimeParameter::new(-1.0).is_err());
        assert!(TimeParameter::new(f64::INFINITY).is_err());
    }

    #[test]
    fn default_grid() {
        let g: Vec<f64> = default_probe_ts().into_iter().map(f64::from).collect();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.1);
        assert!((g[9] - 51.2).abs() < 1e-12);
    }

    #[test]
    fn induced_line_values() {
        let s = IfmSpace::real_line();
        let m = s.evaluate(&0.0.into(), &1.0.into(), t(1.0)).unwrap();
        assert_eq!((m.mu, m.nu), (0.5, 0.5));
        let m = s.evaluate(&2.0.into(), &5.0.into(), t(1.0)).unwrap();
        assert_eq!((m.mu, m.nu), (0.25, 0.75));
        let m = s.evaluate(&3.3.into(), &3.3.into(), t(0.7)).unwrap();
        assert_eq!(m, MembershipPair::COINCIDENT);
    }

    #[test]
    fn induced_rejects_non_idempotent() {
        let err = IfmSpace::induced_from_metric(PointDomain::line(), OperatorPair::product_probsum())
            .unwrap_err();
        assert!(matches!(err, Error::NonIdempotentOperators(_)));
    }

    #[test]
    fn induced_odds_are_closed_form() {
        let s = IfmSpace::real_line();
        let (a, b) = s.odds(&0.0.into(), &0.4.into(), t(1.0)).unwrap();
        assert_eq!(a, 0.4);
        assert_eq!(b, 2.5);
        let (a, b) = s.odds(&1.0.into(), &1.0.into(), t(1.0)).unwrap();
        assert_eq!(a, 0.0);
        assert!(b.is_infinite());
    }

    #[test]
    fn evaluate_rejects_foreign_points() {
        let s = IfmSpace::real_line();
        assert!(s.evaluate(&[1.0, 2.0].into(), &0.0.into(), t(1.0)).is_err());
        let tab = IfmSpace::finite_tabulated(
            &TabulatedData::constant(&["a", "b"], 0.4, 0.5),
            OperatorPair::min_max(),
        )
        .unwrap();
        assert!(matches!(
            tab.evaluate(&"a".into(), &"q".into(), t(1.0)),
            Err(Error::UnknownPoint(_))
        ));
    }

    #[test]
    fn tabulated_three_points() {
        let s = IfmSpace::finite_tabulated(
            &TabulatedData::constant(&["a", "b", "c"], 0.4, 0.5),
            OperatorPair::min_max(),
        )
        .unwrap();
        let m = s.evaluate(&"a".into(), &"c".into(), t(3.0)).unwrap();
        assert_eq!((m.mu, m.nu), (0.4, 0.5));
        let m = s.evaluate(&"c".into(), &"a".into(), t(3.0)).unwrap();
        assert_eq!((m.mu, m.nu), (0.4, 0.5));
        assert_eq!(
            s.evaluate(&"b".into(), &"b".into(), t(3.0)).unwrap(),
            MembershipPair::COINCIDENT
        );
    }

    #[test]
    fn single_point_space() {
        let s = IfmSpace::finite_tabulated(
            &TabulatedData::constant(&["only"], 0.4, 0.5),
            OperatorPair::min_max(),
        )
        .unwrap();
        assert_eq!(
            s.evaluate(&"only".into(), &"only".into(), t(2.0)).unwrap(),
            MembershipPair::COINCIDENT
        );
    }

    #[test]
    fn tabulated_rejects_decreasing_mu() {
        let mut data = TabulatedData::constant(&["a", "b"], 0.4, 0.5);
        data.pairs[0].mu = Curve::Breakpoints(vec![(1.0, 0.5), (2.0, 0.3)]);
        assert!(matches!(
            IfmSpace::finite_tabulated(&data, OperatorPair::min_max()),
            Err(Error::InvalidTable(_))
        ));
    }

    #[test]
    fn ball_membership() {
        let s = IfmSpace::real_line();
        let ball = BallSpec::new(0.0.into(), 0.5, t(1.0)).unwrap();
        assert!(ball_contains(&s, &ball, &0.8.into(), BallMode::Open).unwrap());
        assert!(ball_contains(&s, &ball, &0.0.into(), BallMode::Open).unwrap());
        assert!(ball_contains(&s, &ball, &0.0.into(), BallMode::Closed).unwrap());
        assert!(!ball_contains(&s, &ball, &1.0.into(), BallMode::Open).unwrap());
        assert!(ball_contains(&s, &ball, &1.0.into(), BallMode::Closed).unwrap());
        assert!(BallSpec::new(0.0.into(), 1.0, t(1.0)).is_err());
    }

    #[test]
    fn spade_cases() {
        let s = IfmSpace::real_line();
        let r = spade_probe(&s, &[(0.0.into(), 1.0.into())], t(1000.0), 1e-2).unwrap();
        assert!(r.passed);
        assert!((r.pairs[0].mu - 1000.0 / 1001.0).abs() < 1e-15);
        let r = spade_probe(&s, &[(4.0.into(), 4.0.into())], t(1e-3), 1e-9).unwrap();
        assert!(r.passed);

        let tab = IfmSpace::finite_tabulated(
            &TabulatedData::constant(&["a", "b", "c"], 0.4, 0.5),
            OperatorPair::min_max(),
        )
        .unwrap();
        let r = spade_probe(&tab, &[("a".into(), "b".into())], t(1e9), 1e-2).unwrap();
        assert!(!r.passed);
    }
}
