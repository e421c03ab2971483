//! Continuous t-norms and t-conorms on the unit interval.
//!
//! Operators are audited on uniform grids over `[0, 1]` (endpoints included).
//! Continuity is not directly falsifiable from samples; the audit reports a
//! finite-difference modulus instead, and [`find_result23_witnesses`] doubles
//! as a continuity proxy since its monotone bisection only fails on
//! discontinuous or non-monotone operators.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{AuditEntry, AuditReport, Witness, Worst};

/// Default audit tolerance for closed-form operators.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Bisection steps used by the witness search.
pub const WITNESS_BISECTION_STEPS: usize = 200;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct UnitScalar(f64);

impl UnitScalar {
    pub const ZERO: UnitScalar = UnitScalar(0.0);
    pub const ONE: UnitScalar = UnitScalar(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::OutOfUnitInterval { value })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for UnitScalar {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<UnitScalar> for f64 {
    fn from(u: UnitScalar) -> f64 {
        u.0
    }
}

pub type BinaryOp = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A t-norm `*` together with a t-conorm `<>`.
#[derive(Clone)]
pub struct OperatorPair {
    name: String,
    tnorm: BinaryOp,
    tconorm: BinaryOp,
    pub idempotent_tnorm: bool,
    pub idempotent_tconorm: bool,
}

impl fmt::Debug for OperatorPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorPair")
            .field("name", &self.name)
            .field("idempotent_tnorm", &self.idempotent_tnorm)
            .field("idempotent_tconorm", &self.idempotent_tconorm)
            .finish()
    }
}

impl OperatorPair {
    /// A user-supplied pair. Idempotency flags start out false until
    /// [`check_idempotent`] writes them.
    pub fn custom(
        name: impl Into<String>,
        tnorm: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        tconorm: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            tnorm: Arc::new(tnorm),
            tconorm: Arc::new(tconorm),
            idempotent_tnorm: false,
            idempotent_tconorm: false,
        }
    }

    /// Minimum t-norm with maximum t-conorm, the only idempotent pair shipped.
    pub fn min_max() -> Self {
        let mut pair = Self::custom("min-max", f64::min, f64::max);
        pair.idempotent_tnorm = true;
        pair.idempotent_tconorm = true;
        pair
    }

    pub fn product_probsum() -> Self {
        Self::custom("product-probsum", |a, b| a * b, |a, b| a + b - a * b)
    }

    pub fn lukasiewicz() -> Self {
        Self::custom(
            "lukasiewicz",
            |a, b| (a + b - 1.0).max(0.0),
            |a, b| (a + b).min(1.0),
        )
    }

    /// Looks up a shipped pair by its configuration name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "min-max" => Ok(Self::min_max()),
            "product-probsum" => Ok(Self::product_probsum()),
            "lukasiewicz" => Ok(Self::lukasiewicz()),
            other => Err(Error::UnknownOperators(other.to_string())),
        }
    }

    pub fn shipped() -> Vec<Self> {
        vec![Self::min_max(), Self::product_probsum(), Self::lukasiewicz()]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn tnorm(&self, a: f64, b: f64) -> f64 {
        (self.tnorm)(a, b)
    }

    #[inline]
    pub fn tconorm(&self, a: f64, b: f64) -> f64 {
        (self.tconorm)(a, b)
    }

    pub fn is_idempotent(&self) -> bool {
        self.idempotent_tnorm && self.idempotent_tconorm
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kind {
    TNorm,
    TConorm,
}

impl Kind {
    fn label(self) -> &'static str {
        match self {
            Kind::TNorm => "tnorm",
            Kind::TConorm => "tconorm",
        }
    }

    /// The identity element: 1 for t-norms, 0 for t-conorms.
    fn identity(self) -> f64 {
        match self {
            Kind::TNorm => 1.0,
            Kind::TConorm => 0.0,
        }
    }

    fn apply(self, pair: &OperatorPair, a: f64, b: f64) -> f64 {
        match self {
            Kind::TNorm => pair.tnorm(a, b),
            Kind::TConorm => pair.tconorm(a, b),
        }
    }
}

fn grid(n: usize) -> Vec<f64> {
    let step = 1.0 / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { 1.0 } else { i as f64 * step })
        .collect()
}

fn range_excess(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else if v < 0.0 {
        -v
    } else if v > 1.0 {
        v - 1.0
    } else {
        0.0
    }
}

/// Audits commutativity, associativity, the identity element and monotonicity
/// of both operators of `pair` on a uniform `grid_size` grid.
///
/// Besides the four axioms, each operator gets a `range` entry (outputs must lie
/// in `[0, 1]`) and a `continuity-modulus` entry: the largest jump between
/// adjacent grid points must not exceed `sqrt(h)` where `h` is the grid step.
pub fn audit_operator_pair(
    pair: &OperatorPair,
    grid_size: usize,
    tolerance: f64,
) -> Result<AuditReport> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid_size must be at least 2, got {grid_size}"
        )));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be nonnegative, got {tolerance}"
        )));
    }
    let mut report = AuditReport::new(format!("operators:{}", pair.name()));
    for kind in [Kind::TNorm, Kind::TConorm] {
        report
            .entries
            .extend(audit_operator(pair, kind, grid_size, tolerance));
    }
    Ok(report)
}

fn audit_operator(pair: &OperatorPair, kind: Kind, n: usize, tol: f64) -> Vec<AuditEntry> {
    let xs = grid(n);
    let table: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| kind.apply(pair, xs[k / n], xs[k % n]))
        .collect();
    let at = |i: usize, j: usize| table[i * n + j];
    let clause = |name: &str| format!("{}:{}", kind.label(), name);
    let within = |v: f64| v <= tol;

    let mut range = Worst::empty();
    for i in 0..n {
        for j in 0..n {
            let v = at(i, j);
            range.observe(range_excess(v), i * n + j, || {
                Witness::scalars(vec![xs[i], xs[j]], v, if v < 0.0 { 0.0 } else { 1.0 })
            });
        }
    }
    let range = range.into_entry(&clause("range"), |v| v == 0.0);

    let mut comm = Worst::empty();
    for i in 0..n {
        for j in i..n {
            let (ab, ba) = (at(i, j), at(j, i));
            comm.observe((ab - ba).abs(), i * n + j, || {
                Witness::scalars(vec![xs[i], xs[j]], ab, ba)
            });
        }
    }

    let assoc = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut w = Worst::empty();
            for j in 0..n {
                let ab = at(i, j);
                for k in 0..n {
                    let left = kind.apply(pair, ab, xs[k]);
                    let right = kind.apply(pair, xs[i], at(j, k));
                    w.observe((left - right).abs(), (i * n + j) * n + k, || {
                        Witness::scalars(vec![xs[i], xs[j], xs[k]], left, right)
                    });
                }
            }
            w
        })
        .reduce(Worst::empty, Worst::merge);

    let e = kind.identity();
    let mut ident = Worst::empty();
    for (i, &a) in xs.iter().enumerate() {
        let v = kind.apply(pair, a, e);
        ident.observe((v - a).abs(), i, || Witness::scalars(vec![a, e], v, a));
    }

    // Monotonicity over all a <= c, b <= d reduces to comparing each cell with
    // the running maximum of its lower-left quadrant.
    let mut mono = Worst::empty();
    let mut prefix: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut best = (at(i, j), i, j);
            if i > 0 {
                let up = prefix[(i - 1) * n + j];
                if up.0 > best.0 {
                    best = up;
                }
            }
            if j > 0 {
                let left = prefix[i * n + j - 1];
                if left.0 > best.0 {
                    best = left;
                }
            }
            prefix.push(best);
            let v = at(i, j);
            let (hi, bi, bj) = best;
            mono.observe(hi - v, i * n + j, || {
                Witness::scalars(vec![xs[bi], xs[bj], xs[i], xs[j]], hi, v)
            });
        }
    }

    let h = 1.0 / (n - 1) as f64;
    let modulus = h.sqrt();
    let mut cont = Worst::empty();
    for i in 0..n {
        for j in 0..n {
            if i + 1 < n {
                let jump = (at(i + 1, j) - at(i, j)).abs();
                cont.observe(jump - modulus, i * n + j, || {
                    Witness::scalars(vec![xs[i], xs[i + 1], xs[j]], jump, modulus)
                });
            }
            if j + 1 < n {
                let jump = (at(i, j + 1) - at(i, j)).abs();
                cont.observe(jump - modulus, i * n + j, || {
                    Witness::scalars(vec![xs[i], xs[j], xs[j + 1]], jump, modulus)
                });
            }
        }
    }

    vec![
        range,
        comm.into_entry(&clause("commutativity"), within),
        assoc.into_entry(&clause("associativity"), within),
        ident.into_entry(&clause("identity"), within),
        mono.into_entry(&clause("monotonicity"), within),
        cont.into_entry(&clause("continuity-modulus"), within),
    ]
}

/// Result of an idempotency check; witnesses are the first grid points with
/// `|op(a, a) - a|` above tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdempotencyCheck {
    pub tnorm: bool,
    pub tconorm: bool,
    pub tnorm_witness: Option<(f64, f64)>,
    pub tconorm_witness: Option<(f64, f64)>,
}

impl IdempotencyCheck {
    pub fn flags(&self) -> (bool, bool) {
        (self.tnorm, self.tconorm)
    }
}

/// Checks `a*a = a` and `a<>a = a` on the grid and writes the flags back
/// into `pair`.
pub fn check_idempotent(
    pair: &mut OperatorPair,
    grid_size: usize,
    tolerance: f64,
) -> Result<IdempotencyCheck> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid_size must be at least 2, got {grid_size}"
        )));
    }
    let xs = grid(grid_size);
    let scan = |kind: Kind| -> Result<Option<(f64, f64)>> {
        let mut witness = None;
        for &a in &xs {
            let v = kind.apply(pair, a, a);
            if range_excess(v) > 0.0 {
                return Err(Error::RangeViolation {
                    operator: format!("{}:{}", pair.name(), kind.label()),
                    a,
                    b: a,
                    value: v,
                });
            }
            if witness.is_none() && (v - a).abs() > tolerance {
                witness = Some((a, v));
            }
        }
        Ok(witness)
    };
    let tnorm_witness = scan(Kind::TNorm)?;
    let tconorm_witness = scan(Kind::TConorm)?;
    let check = IdempotencyCheck {
        tnorm: tnorm_witness.is_none(),
        tconorm: tconorm_witness.is_none(),
        tnorm_witness,
        tconorm_witness,
    };
    pair.idempotent_tnorm = check.tnorm;
    pair.idempotent_tconorm = check.tconorm;
    Ok(check)
}

/// Witnesses for the existence statements about `*` and `<>`:
/// `r1 * r3 > r2`, `r1 > r4 <> r2`, `r6 * r6 >= r5` and `r7 <> r7 <= r5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Result23Witnesses {
    pub r3: f64,
    pub r4: f64,
    pub r6: f64,
    pub r7: f64,
}

/// Smallest point of `(0, 1]` where a predicate that is monotone
/// (false then true) holds, found by bisection between `lo` (false) and `hi`
/// (true).
fn bisect_rising(pred: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..WITNESS_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn bisect_falling(pred: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..WITNESS_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn interior(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

/// Locates the four witnesses by monotone bisection on `(0, 1)`.
///
/// Strict witnesses (`r3`, `r4`) are taken halfway between the bisection
/// boundary and the end of the interval where the inequality holds, so they
/// re-verify with margin. Non-strict witnesses (`r6`, `r7`) are the boundary
/// itself.
pub fn find_result23_witnesses(
    pair: &OperatorPair,
    r1: UnitScalar,
    r2: UnitScalar,
    r5: UnitScalar,
) -> Result<Result23Witnesses> {
    let (r1, r2, r5) = (r1.value(), r2.value(), r5.value());
    if !(interior(r1) && interior(r2) && r1 > r2) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < r2 < r1 < 1, got r1 = {r1}, r2 = {r2}"
        )));
    }
    if !interior(r5) {
        return Err(Error::InvalidArgument(format!("need 0 < r5 < 1, got {r5}")));
    }
    let no_witness = |inequality| Error::NoWitness {
        inequality,
        iterations: WITNESS_BISECTION_STEPS,
    };

    let p3 = |r3: f64| pair.tnorm(r1, r3) > r2;
    let b3 = bisect_rising(p3, 0.0, 1.0);
    let r3 = b3 + 0.5 * (1.0 - b3);
    if !(interior(r3) && p3(r3)) {
        return Err(no_witness("r1 * r3 > r2"));
    }

    let p4 = |r4: f64| r1 > pair.tconorm(r4, r2);
    let b4 = bisect_falling(p4, 0.0, 1.0);
    let r4 = 0.5 * b4;
    if !(interior(r4) && p4(r4)) {
        return Err(no_witness("r1 > r4 <> r2"));
    }

    let p6 = |r6: f64| pair.tnorm(r6, r6) >= r5;
    let r6 = bisect_rising(p6, 0.0, 1.0);
    if !(interior(r6) && p6(r6)) {
        return Err(no_witness("r6 * r6 >= r5"));
    }

    let p7 = |r7: f64| pair.tconorm(r7, r7) <= r5;
    let r7 = bisect_falling(p7, 0.0, 1.0);
    if !(interior(r7) && p7(r7)) {
        return Err(no_witness("r7 <> r7 <= r5"));
    }

    Ok(Result23Witnesses { r3, r4, r6, r7 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(v: f64) -> UnitScalar {
        UnitScalar::new(v).unwrap()
    }

    #[test]
    fn unit_scalar_rejects_out_of_range() {
        assert!(UnitScalar::new(-0.1).is_err());
        assert!(UnitScalar::new(1.5).is_err());
        assert!(UnitScalar::new(f64::NAN).is_err());
        assert_eq!(u(0.3).value(), 0.3);
    }

    #[test]
    fn min_identity() {
        assert_eq!(OperatorPair::min_max().tnorm(0.7, 1.0), 0.7);
    }

    #[test]
    fn min_max_passes_exactly() {
        let report = audit_operator_pair(&OperatorPair::min_max(), 100, 0.0).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.entries.len(), 12);
    }

    #[test]
    fn broken_identity_has_zero_witness() {
        let broken = OperatorPair::custom("broken", |a, b| (a * b + 0.5).min(1.0), f64::max);
        let report = audit_operator_pair(&broken, 11, DEFAULT_TOLERANCE).unwrap();
        let ident = report.entry("tnorm:identity").unwrap();
        assert!(!ident.passed);
        let w = ident.witness.as_ref().unwrap();
        assert_eq!(w.args[0], 0.0);
        assert_eq!(w.lhs, 0.5);
        assert_eq!(w.rhs, 0.0);
        assert!(report.entry("tconorm:identity").unwrap().passed);
    }

    #[test]
    fn out_of_range_operator_is_a_range_failure() {
        let bad = OperatorPair::custom("bad", |a, b| a + b, f64::max);
        let report = audit_operator_pair(&bad, 5, 0.0).unwrap();
        let range = report.entry("tnorm:range").unwrap();
        assert!(!range.passed);
        assert_eq!(range.worst_violation, 1.0);
    }

    #[test]
    fn non_monotone_operator_is_caught() {
        // Symmetric, identity-respecting but decreasing in the interior.
        let odd = OperatorPair::custom(
            "odd",
            |a: f64, b: f64| {
                if a == 1.0 {
                    b
                } else if b == 1.0 {
                    a
                } else {
                    (1.0 - a) * (1.0 - b) * a.min(b)
                }
            },
            f64::max,
        );
        let report = audit_operator_pair(&odd, 21, 0.0).unwrap();
        assert!(!report.entry("tnorm:monotonicity").unwrap().passed);
    }

    #[test]
    fn drastic_tnorm_fails_continuity_modulus() {
        let drastic = OperatorPair::custom(
            "drastic",
            |a: f64, b: f64| {
                if a == 1.0 {
                    b
                } else if b == 1.0 {
                    a
                } else {
                    0.0
                }
            },
            f64::max,
        );
        let report = audit_operator_pair(&drastic, 50, 0.0).unwrap();
        assert!(report.entry("tnorm:monotonicity").unwrap().passed);
        assert!(!report.entry("tnorm:continuity-modulus").unwrap().passed);
    }

    #[test]
    fn idempotency_flags() {
        let mut mm = OperatorPair::min_max();
        assert_eq!(check_idempotent(&mut mm, 101, 0.0).unwrap().flags(), (true, true));

        let mut pp = OperatorPair::product_probsum();
        let check = check_idempotent(&mut pp, 3, 0.0).unwrap();
        assert_eq!(check.flags(), (false, false));
        assert_eq!(check.tnorm_witness, Some((0.5, 0.25)));
        assert!(!pp.idempotent_tnorm);

        let mut mixed = OperatorPair::custom("min-probsum", f64::min, |a, b| a + b - a * b);
        assert_eq!(check_idempotent(&mut mixed, 101, 0.0).unwrap().flags(), (true, false));
        assert!(mixed.idempotent_tnorm && !mixed.idempotent_tconorm);
    }

    #[test]
    fn idempotency_rejects_range_violation() {
        let mut bad = OperatorPair::custom("bad", |a, b| a + b, f64::max);
        assert!(matches!(
            check_idempotent(&mut bad, 5, 0.0),
            Err(Error::RangeViolation { .. })
        ));
    }

    #[test]
    fn witnesses_min_max() {
        let w = find_result23_witnesses(&OperatorPair::min_max(), u(0.8), u(0.6), u(0.5)).unwrap();
        assert!(w.r3 > 0.6 && w.r3 < 1.0);
        assert!(0.8f64.min(w.r3) > 0.6);
        assert!(0.8 > w.r4.max(0.6));
        assert_eq!(w.r6, 0.5);
        assert_eq!(w.r7, 0.5);
    }

    #[test]
    fn witnesses_product() {
        let w = find_result23_witnesses(&OperatorPair::product_probsum(), u(0.9), u(0.5), u(0.3))
            .unwrap();
        assert!(w.r3 > 5.0 / 9.0);
        assert!(0.9 * w.r3 > 0.5);
        assert!(w.r6 * w.r6 >= 0.3);
    }

    #[test]
    fn witnesses_reject_bad_arguments() {
        let mm = OperatorPair::min_max();
        assert!(find_result23_witnesses(&mm, u(0.5), u(0.6), u(0.5)).is_err());
        assert!(find_result23_witnesses(&mm, u(0.8), u(0.6), u(1.0)).is_err());
    }

    #[test]
    fn witness_search_fails_for_jumping_operator() {
        // a * b jumps from 0 straight to min(a, b) only at b = 1.
        let step = OperatorPair::custom(
            "step",
            |a: f64, b: f64| if a == 1.0 || b == 1.0 { a.min(b) } else { 0.0 },
            f64::max,
        );
        let err = find_result23_witnesses(&step, u(0.8), u(0.6), u(0.5)).unwrap_err();
        assert!(matches!(err, Error::NoWitness { .. }));
    }

    #[test]
    fn by_name_round_trip() {
        for name in ["min-max", "product-probsum", "lukasiewicz"] {
            assert_eq!(OperatorPair::by_name(name).unwrap().name(), name);
        }
        assert!(OperatorPair::by_name("hamacher").is_err());
    }
}
