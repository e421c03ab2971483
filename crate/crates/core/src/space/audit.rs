//! Sampled audit of the IFM axioms.

use rayon::prelude::*;

use super::{IfmSpace, MembershipPair, Point, TimeParameter};
use crate::error::{Error, Result};
use crate::report::{AuditReport, Witness, Worst};
use crate::sampling::{PointSampler, Region};
use crate::tnorm::check_idempotent;

/// Continuity in `t` is probed on this many leading samples.
const CONTINUITY_SAMPLES: usize = 256;

/// Each probe interval `[a, b]` is split into `2^CONTINUITY_LEVELS` pieces.
const CONTINUITY_LEVELS: u32 = 8;

/// Largest sub-interval jump allowed, as a fraction of the whole-interval jump.
/// A Lipschitz curve shrinks it roughly by `2^-CONTINUITY_LEVELS`; a jump
/// discontinuity does not shrink it at all.
const CONTINUITY_SHRINK: f64 = 1.0 / 16.0;

const STRIDE: usize = 1 << 24;

#[derive(Clone, Copy)]
enum Rule {
    /// Passes when the worst violation is at most the tolerance.
    Tolerance,
    /// Passes when the worst violation is strictly negative.
    Strict,
}

const CLAUSES: &[(&str, Rule)] = &[
    ("mu-plus-nu-at-most-one", Rule::Tolerance),
    ("mu-positive", Rule::Strict),
    ("mu-at-most-one", Rule::Tolerance),
    ("mu-one-on-diagonal", Rule::Tolerance),
    ("mu-below-one-off-diagonal", Rule::Strict),
    ("mu-symmetric", Rule::Tolerance),
    ("mu-triangle", Rule::Tolerance),
    ("mu-continuous-in-t", Rule::Tolerance),
    ("nu-nonnegative", Rule::Tolerance),
    ("nu-zero-on-diagonal", Rule::Tolerance),
    ("nu-positive-off-diagonal", Rule::Strict),
    ("nu-below-one", Rule::Strict),
    ("nu-symmetric", Rule::Tolerance),
    ("nu-triangle", Rule::Tolerance),
    ("nu-continuous-in-t", Rule::Tolerance),
    ("mu-nondecreasing-in-t", Rule::Tolerance),
    ("nu-nonincreasing-in-t", Rule::Tolerance),
];

mod c {
    pub const SUM: usize = 0;
    pub const MU_POS: usize = 1;
    pub const MU_LE1: usize = 2;
    pub const MU_DIAG: usize = 3;
    pub const MU_OFF: usize = 4;
    pub const MU_SYM: usize = 5;
    pub const MU_TRI: usize = 6;
    pub const MU_CONT: usize = 7;
    pub const NU_NONNEG: usize = 8;
    pub const NU_DIAG: usize = 9;
    pub const NU_OFF: usize = 10;
    pub const NU_LT1: usize = 11;
    pub const NU_SYM: usize = 12;
    pub const NU_TRI: usize = 13;
    pub const NU_CONT: usize = 14;
    pub const MU_MONO: usize = 15;
    pub const NU_MONO: usize = 16;
}

struct Acc {
    worst: Vec<Worst>,
    base: usize,
    local: usize,
}

impl Acc {
    fn new(sample: usize) -> Self {
        Self {
            worst: (0..CLAUSES.len()).map(|_| Worst::empty()).collect(),
            base: sample * STRIDE,
            local: 0,
        }
    }

    fn observe(&mut self, clause: usize, violation: f64, witness: impl FnOnce() -> Witness) {
        self.local += 1;
        let index = self.base + self.local;
        self.worst[clause].observe(violation, index, witness);
    }

    fn merge(mut self, other: Acc) -> Acc {
        self.worst = self
            .worst
            .into_iter()
            .zip(other.worst)
            .map(|(a, b)| a.merge(b))
            .collect();
        self
    }
}

/// Audits every IFM axiom on `sample_count` seeded triples and the probe
/// times `t_samples`, plus monotonicity of μ and ν in `t`.
///
/// The ν triangle inequality is checked as `ν(x,y,s) <> ν(y,z,t) >= ν(x,z,s+t)`.
/// Continuity in `t` is probed by subdividing each pair of adjacent probe
/// times and requiring the largest sub-interval jump to shrink.
pub fn axiom_audit(
    space: &IfmSpace,
    sample_count: usize,
    t_samples: &[TimeParameter],
    tolerance: f64,
    seed: u64,
) -> Result<AuditReport> {
    if sample_count == 0 {
        return Err(Error::InvalidArgument("sample_count must be at least 1".into()));
    }
    if t_samples.is_empty() {
        return Err(Error::InvalidArgument("at least one probe time is required".into()));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be nonnegative, got {tolerance}"
        )));
    }
    let mut ts: Vec<f64> = t_samples.iter().map(|t| t.value()).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    let triples = PointSampler::new(space, &Region::Whole, seed)?.triples(sample_count)?;

    let acc = triples
        .par_iter()
        .enumerate()
        .map(|(i, (x, y, z))| audit_sample(space, i, x, y, z, &ts))
        .reduce(|| Acc::new(usize::MAX / STRIDE), Acc::merge);

    let mut report = AuditReport::new(space.name());
    for (worst, (name, rule)) in acc.worst.into_iter().zip(CLAUSES) {
        let entry = match rule {
            Rule::Tolerance => worst.into_entry(name, |v| v <= tolerance),
            Rule::Strict => worst.into_entry(name, |v| v < 0.0),
        };
        report.entries.push(entry);
    }

    let mut ops = space.operators().clone();
    let check = check_idempotent(&mut ops, 101, tolerance)?;
    let witness = check
        .tnorm_witness
        .or(check.tconorm_witness)
        .map(|(a, v)| Witness::scalars(vec![a], v, a));
    report.entries.push(crate::report::AuditEntry {
        clause: "operators-idempotent".into(),
        passed: check.tnorm && check.tconorm,
        worst_violation: witness.as_ref().map_or(0.0, |w| (w.lhs - w.rhs).abs()),
        witness,
        checked: 2 * 101,
    });
    Ok(report)
}

fn audit_sample(
    space: &IfmSpace,
    sample: usize,
    x: &Point,
    y: &Point,
    z: &Point,
    ts: &[f64],
) -> Acc {
    let mut acc = Acc::new(sample);
    let at = |p: &Point, q: &Point, t: f64| space.eval_raw(p, q, t);
    let wit = |p: &Point, q: &Point, times: Vec<f64>, lhs: f64, rhs: f64| {
        Witness::at(vec![p.clone(), q.clone()], times, lhs, rhs)
    };
    let distinct = x != y;
    let ops = space.operators();

    let mut along_t: Vec<MembershipPair> = Vec::with_capacity(ts.len());
    for &t in ts {
        let m = at(x, y, t);
        along_t.push(m);
        acc.observe(c::SUM, m.mu + m.nu - 1.0, || wit(x, y, vec![t], m.mu + m.nu, 1.0));
        acc.observe(c::MU_POS, -m.mu, || wit(x, y, vec![t], m.mu, 0.0));
        acc.observe(c::MU_LE1, m.mu - 1.0, || wit(x, y, vec![t], m.mu, 1.0));
        acc.observe(c::NU_NONNEG, -m.nu, || wit(x, y, vec![t], m.nu, 0.0));
        acc.observe(c::NU_LT1, m.nu - 1.0, || wit(x, y, vec![t], m.nu, 1.0));

        let d = at(x, x, t);
        acc.observe(c::MU_DIAG, (d.mu - 1.0).abs(), || wit(x, x, vec![t], d.mu, 1.0));
        acc.observe(c::NU_DIAG, d.nu.abs(), || wit(x, x, vec![t], d.nu, 0.0));
        if distinct {
            acc.observe(c::MU_OFF, m.mu - 1.0, || wit(x, y, vec![t], m.mu, 1.0));
            acc.observe(c::NU_OFF, -m.nu, || wit(x, y, vec![t], m.nu, 0.0));
        }

        let r = at(y, x, t);
        acc.observe(c::MU_SYM, (m.mu - r.mu).abs(), || wit(x, y, vec![t], m.mu, r.mu));
        acc.observe(c::NU_SYM, (m.nu - r.nu).abs(), || wit(x, y, vec![t], m.nu, r.nu));
    }

    for w in 0..ts.len().saturating_sub(1) {
        let (a, b) = (along_t[w], along_t[w + 1]);
        let times = vec![ts[w], ts[w + 1]];
        acc.observe(c::MU_MONO, a.mu - b.mu, || wit(x, y, times.clone(), a.mu, b.mu));
        acc.observe(c::NU_MONO, b.nu - a.nu, || wit(x, y, times, b.nu, a.nu));
    }

    let yz: Vec<MembershipPair> = ts.iter().map(|&t| at(y, z, t)).collect();
    for (si, &s) in ts.iter().enumerate() {
        let xy = along_t[si];
        for (ti, &t) in ts.iter().enumerate() {
            let xz = at(x, z, s + t);
            let lhs = ops.tnorm(xy.mu, yz[ti].mu);
            let tri = |lhs: f64, rhs: f64| {
                Witness::at(vec![x.clone(), y.clone(), z.clone()], vec![s, t], lhs, rhs)
            };
            acc.observe(c::MU_TRI, lhs - xz.mu, || tri(lhs, xz.mu));
            let rhs = ops.tconorm(xy.nu, yz[ti].nu);
            acc.observe(c::NU_TRI, xz.nu - rhs, || tri(rhs, xz.nu));
        }
    }

    if sample < CONTINUITY_SAMPLES {
        for w in 0..ts.len().saturating_sub(1) {
            let (a, b) = (ts[w], ts[w + 1]);
            let (mu_v, nu_v) = continuity_violation(space, x, y, a, b);
            acc.observe(c::MU_CONT, mu_v.0, || wit(x, y, vec![a, b], mu_v.1, mu_v.2));
            acc.observe(c::NU_CONT, nu_v.0, || wit(x, y, vec![a, b], nu_v.1, nu_v.2));
        }
    }
    acc
}

/// `(violation, finest jump, allowed jump)` for μ and ν on `[a, b]`.
fn continuity_violation(
    space: &IfmSpace,
    x: &Point,
    y: &Point,
    a: f64,
    b: f64,
) -> ((f64, f64, f64), (f64, f64, f64)) {
    let pieces = 1usize << CONTINUITY_LEVELS;
    let values: Vec<MembershipPair> = (0..=pieces)
        .map(|k| {
            let t = if k == pieces {
                b
            } else {
                a + (b - a) * k as f64 / pieces as f64
            };
            space.eval_raw(x, y, t)
        })
        .collect();
    let coarse_mu = (values[pieces].mu - values[0].mu).abs();
    let coarse_nu = (values[pieces].nu - values[0].nu).abs();
    let mut fine_mu: f64 = 0.0;
    let mut fine_nu: f64 = 0.0;
    for w in values.windows(2) {
        fine_mu = fine_mu.max((w[1].mu - w[0].mu).abs());
        fine_nu = fine_nu.max((w[1].nu - w[0].nu).abs());
    }
    let allowed_mu = coarse_mu * CONTINUITY_SHRINK;
    let allowed_nu = coarse_nu * CONTINUITY_SHRINK;
    (
        (fine_mu - allowed_mu, fine_mu, allowed_mu),
        (fine_nu - allowed_nu, fine_nu, allowed_nu),
    )
}
