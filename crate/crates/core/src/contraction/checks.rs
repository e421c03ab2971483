use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SelfMap;
use crate::error::{Error, Result};
use crate::report::{float, Record, ToRecords, Witness, Worst};
use crate::sampling::{PointSampler, Region};
use crate::space::{IfmSpace, MembershipPair, Point, PointDomain, TimeParameter};

/// Added to the observed supremum ratio to form the reported constant.
pub const K_MARGIN: f64 = 1e-9;

/// The ts-if check extends the probe grid by `t_max * 2^j` for `j` up to this.
pub const TS_IF_TAIL_DOUBLINGS: i32 = 64;

/// `r` candidates for the uniform continuity probe are `ε * 2^-j` for `j` up to this.
pub const CONTINUITY_R_HALVINGS: i32 = 60;

const SEGMENT_BISECTION_STEPS: usize = 60;
const REFINE_STEPS: i32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Notion {
    IfContractive,
    TsIf,
    ContractiveSequence,
    ClosedBallHypotheses,
    TUniformContinuity,
}

impl fmt::Display for Notion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Notion::IfContractive => "if-contractive",
            Notion::TsIf => "ts-if",
            Notion::ContractiveSequence => "contractive-sequence",
            Notion::ClosedBallHypotheses => "closed-ball-hypotheses",
            Notion::TUniformContinuity => "t-uniform-continuity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    /// The start point is already fixed, so the inequalities are moot.
    PassDegenerate,
    Fail,
    /// No constant can satisfy the definition on this input.
    VacuousFail,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::PassDegenerate)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::PassDegenerate => "pass-degenerate",
            Verdict::Fail => "fail",
            Verdict::VacuousFail => "vacuous-fail",
        })
    }
}

/// One inequality of a hypothesis check with both sides evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideCheck {
    pub name: String,
    #[serde(with = "float")]
    pub lhs: f64,
    #[serde(with = "float")]
    pub rhs: f64,
    pub holds: bool,
}

/// The `r` found for one `ε` by the uniform continuity probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonWitness {
    pub epsilon: f64,
    pub r: Option<f64>,
    /// Sample pairs that satisfied the `r` thresholds at the last `r` tried.
    pub qualifying: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractivityReport {
    pub notion: Notion,
    pub verdict: Verdict,
    #[serde(default, with = "float::option")]
    pub estimated_k: Option<f64>,
    /// Largest ratio seen over all samples, before any margin.
    #[serde(default, with = "float::option")]
    pub observed_sup: Option<f64>,
    pub worst_witness: Option<Witness>,
    pub samples_used: usize,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sides: Vec<SideCheck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon_table: Vec<EpsilonWitness>,
}

impl ContractivityReport {
    fn new(notion: Notion, verdict: Verdict) -> Self {
        Self {
            notion,
            verdict,
            estimated_k: None,
            observed_sup: None,
            worst_witness: None,
            samples_used: 0,
            notes: Vec::new(),
            sides: Vec::new(),
            epsilon_table: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }
}

impl ToRecords for ContractivityReport {
    fn records(&self) -> Vec<Record> {
        let value = self.estimated_k.or(self.observed_sup).unwrap_or(f64::NAN);
        let mut records = vec![Record::new(
            format!("check:{}", self.notion),
            self.verdict.to_string(),
            value,
            self.worst_witness
                .as_ref()
                .map(|w| w.to_string())
                .unwrap_or_default(),
        )];
        records.extend(self.sides.iter().map(|s| {
            Record::new(
                format!("side:{}", s.name),
                if s.holds { "pass" } else { "fail" },
                s.lhs,
                format!("rhs={}", s.rhs),
            )
        }));
        records.extend(self.epsilon_table.iter().map(|e| {
            Record::new(
                format!("epsilon:{}", e.epsilon),
                if e.r.is_some() { "pass" } else { "fail" },
                e.r.unwrap_or(f64::NAN),
                format!("qualifying={}", e.qualifying),
            )
        }));
        records.extend(
            self.notes
                .iter()
                .map(|n| Record::new("note", "info", f64::NAN, n.clone())),
        );
        records
    }
}

fn probe_values(probe_ts: &[TimeParameter]) -> Result<Vec<f64>> {
    if probe_ts.is_empty() {
        return Err(Error::InvalidArgument("at least one probe time is required".into()));
    }
    Ok(probe_ts.iter().map(|t| t.value()).collect())
}

fn unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn sample_pairs(
    space: &IfmSpace,
    region: &Region,
    count: usize,
    seed: u64,
) -> Result<Vec<(Point, Point)>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample_pairs must be at least 1".into()));
    }
    PointSampler::new(space, region, seed)?.distinct_pairs(count)
}

/// Maps every pair, reporting the first failure in sample order.
fn images(
    space: &IfmSpace,
    map: &SelfMap,
    pairs: &[(Point, Point)],
) -> Result<Vec<(Point, Point)>> {
    pairs
        .par_iter()
        .map(|(x, y)| Ok((map.apply(space, x)?, map.apply(space, y)?)))
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect()
}

/// Both coincide in the μ/ν sense at `t`.
fn coincident(m: MembershipPair) -> bool {
    m.mu == 1.0 && m.nu == 0.0
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Side {
    Mu,
    Nu,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Mu => "mu",
            Side::Nu => "nu",
        }
    }
}

/// The two ratio families of the IF-contractive condition at one sample:
/// `(1/μ(fx,fy,t) - 1) / (1/μ(x,y,t) - 1)` and
/// `(1/ν(x,y,t) - 1) / (1/ν(fx,fy,t) - 1)`. The ν ratio is `None` when the
/// images coincide, where the inequality holds in the limit.
fn if_ratios(
    space: &IfmSpace,
    x: &Point,
    y: &Point,
    fx: &Point,
    fy: &Point,
    t: f64,
) -> ((f64, f64, f64), Option<(f64, f64, f64)>) {
    let (ox_mu, ox_nu) = space.odds_raw(x, y, t);
    let (of_mu, of_nu) = space.odds_raw(fx, fy, t);
    let mu = if of_mu == 0.0 { 0.0 } else { of_mu / ox_mu };
    let nu = (!of_nu.is_infinite()).then(|| (ox_nu / of_nu, ox_nu, of_nu));
    ((mu, of_mu, ox_mu), nu)
}

struct RatioScan {
    mu: Worst,
    nu: Worst,
    nu_skipped: usize,
}

impl RatioScan {
    fn empty() -> Self {
        Self {
            mu: Worst::empty(),
            nu: Worst::empty(),
            nu_skipped: 0,
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            mu: self.mu.merge(other.mu),
            nu: self.nu.merge(other.nu),
            nu_skipped: self.nu_skipped + other.nu_skipped,
        }
    }

    /// Larger of the two families; ties go to μ.
    fn worst(&self) -> Option<(Side, &Worst)> {
        match (self.mu.witness.is_some(), self.nu.witness.is_some()) {
            (false, false) => None,
            (true, false) => Some((Side::Mu, &self.mu)),
            (false, true) => Some((Side::Nu, &self.nu)),
            (true, true) => {
                let (m, n) = (self.mu.violation, self.nu.violation);
                // NaN counts as worst.
                if !m.is_nan() && (n > m || n.is_nan()) {
                    Some((Side::Nu, &self.nu))
                } else {
                    Some((Side::Mu, &self.mu))
                }
            }
        }
    }
}

fn ratio_witness(x: &Point, y: &Point, t: f64, lhs: f64, rhs: f64) -> Witness {
    Witness::at(vec![x.clone(), y.clone()], vec![t], lhs, rhs)
}

/// Checks the IF-contractive condition with a constant `k < 1` on sampled
/// distinct pairs and probe times, over the whole space.
pub fn if_contractive_check(
    space: &IfmSpace,
    map: &SelfMap,
    sample_pairs: usize,
    probe_ts: &[TimeParameter],
    seed: u64,
) -> Result<ContractivityReport> {
    if_contractive_check_in(space, map, &Region::Whole, sample_pairs, probe_ts, seed)
}

/// [`if_contractive_check`] with pairs drawn from `region`.
///
/// On coordinate spaces the worst sampled pair is refined by a pattern search
/// over the direction `y - x` at fixed distance, so that the reported
/// supremum approaches the true one for maps whose ratio depends on
/// direction only.
pub fn if_contractive_check_in(
    space: &IfmSpace,
    map: &SelfMap,
    region: &Region,
    sample_pairs_count: usize,
    probe_ts: &[TimeParameter],
    seed: u64,
) -> Result<ContractivityReport> {
    map.validate(space.domain())?;
    let ts = probe_values(probe_ts)?;
    let pairs = sample_pairs(space, region, sample_pairs_count, seed)?;
    let imgs = images(space, map, &pairs)?;
    let nts = ts.len();

    let mut scan = pairs
        .par_iter()
        .zip(&imgs)
        .enumerate()
        .map(|(i, ((x, y), (fx, fy)))| {
            let mut s = RatioScan::empty();
            for (j, &t) in ts.iter().enumerate() {
                let index = i * nts + j;
                let (mu, nu) = if_ratios(space, x, y, fx, fy, t);
                s.mu.observe(mu.0, index, || ratio_witness(x, y, t, mu.1, mu.2));
                match nu {
                    Some(nu) => s.nu.observe(nu.0, index, || ratio_witness(x, y, t, nu.1, nu.2)),
                    None => s.nu_skipped += 1,
                }
            }
            s
        })
        .reduce(RatioScan::empty, RatioScan::merge);

    let mut samples_used = pairs.len() * nts;
    let mut report = ContractivityReport::new(Notion::IfContractive, Verdict::Fail);
    if let Some((side, worst)) = scan.worst() {
        if let (Some(w), PointDomain::Coordinate { .. }) = (&worst.witness, space.domain()) {
            let (x, y, t) = (w.points[0].clone(), w.points[1].clone(), w.times[0]);
            let (used, better) = refine(space, map, region, &x, &y, t, side, worst.violation)?;
            samples_used += used;
            if let Some((ratio, y2, lhs, rhs)) = better {
                let target = match side {
                    Side::Mu => &mut scan.mu,
                    Side::Nu => &mut scan.nu,
                };
                target.violation = ratio;
                target.witness = Some(ratio_witness(&x, &y2, t, lhs, rhs));
            }
        }
    }
    report.samples_used = samples_used;
    if scan.nu_skipped > 0 {
        report.notes.push(format!(
            "nu ratio skipped on {} samples with coincident images",
            scan.nu_skipped
        ));
    }
    match scan.worst() {
        None => {
            report.verdict = Verdict::Pass;
            report.notes.push("no distinct pairs to sample".into());
        }
        Some((side, worst)) => {
            let sup = worst.violation;
            report.observed_sup = Some(sup);
            report.notes.push(format!("supremum attained on the {} side", side.name()));
            if sup + K_MARGIN < 1.0 {
                report.verdict = Verdict::Pass;
                report.estimated_k = Some(sup + K_MARGIN);
            } else {
                report.worst_witness = worst.witness.clone();
            }
        }
    }
    Ok(report)
}

/// Pattern search on the direction of `y - x` at fixed distance, maximizing
/// the ratio of `side`. Returns the evaluations spent and the improved
/// `(ratio, y, lhs, rhs)` if any.
#[allow(clippy::too_many_arguments)]
fn refine(
    space: &IfmSpace,
    map: &SelfMap,
    region: &Region,
    x: &Point,
    y: &Point,
    t: f64,
    side: Side,
    start: f64,
) -> Result<(usize, Option<(f64, Point, f64, f64)>)> {
    let (Some(xc), Some(yc)) = (x.coords(), y.coords()) else {
        return Ok((0, None));
    };
    if xc.len() < 2 || !start.is_finite() {
        return Ok((0, None));
    }
    let fx = map.apply(space, x)?;
    let diff: Vec<f64> = yc.iter().zip(xc).map(|(a, b)| a - b).collect();
    let rho = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    let normalize = |v: Vec<f64>| {
        let n = v.iter().map(|d| d * d).sum::<f64>().sqrt();
        v.into_iter().map(|d| d / n).collect::<Vec<f64>>()
    };
    let mut dir = normalize(diff);
    let mut best = start;
    let mut best_point: Option<(Point, f64, f64)> = None;
    let mut used = 0;
    let mut eval = |dir: &[f64]| -> Result<Option<(f64, Point, f64, f64)>> {
        let p = Point::Coords(xc.iter().zip(dir).map(|(a, d)| a + rho * d).collect());
        if !region.contains(space, &p) || p == *x {
            return Ok(None);
        }
        used += 1;
        let fp = map.apply(space, &p)?;
        let (mu, nu) = if_ratios(space, x, &p, &fx, &fp, t);
        Ok(match side {
            Side::Mu => Some((mu.0, p, mu.1, mu.2)),
            Side::Nu => nu.map(|nu| (nu.0, p, nu.1, nu.2)),
        })
    };
    for level in 0..REFINE_STEPS {
        let delta = 0.5f64.powi(level);
        loop {
            let mut improved = false;
            for i in 0..dir.len() {
                for sign in [1.0, -1.0] {
                    let mut cand = dir.clone();
                    cand[i] += sign * delta;
                    let cand = normalize(cand);
                    if let Some((ratio, p, lhs, rhs)) = eval(&cand)? {
                        if ratio > best {
                            best = ratio;
                            best_point = Some((p, lhs, rhs));
                            dir = cand;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
    Ok((used, best_point.map(|(p, lhs, rhs)| (best, p, lhs, rhs))))
}

/// Checks `k μ(Tx,Ty,t) >= μ(x,y,t)` and `ν(Tx,Ty,t) / k <= ν(x,y,t)`.
///
/// With `include_coincident` the verdict is vacuous: at `x = y` the first
/// inequality reads `k >= 1`. Otherwise the supremum of
/// `μ(x,y,t)/μ(Tx,Ty,t)` and `ν(Tx,Ty,t)/ν(x,y,t)` is taken over distinct
/// sampled pairs, on the probe grid extended by `t_max * 2^j` so that ratios
/// tending to 1 as `t` grows are seen.
pub fn ts_if_contractive_check(
    space: &IfmSpace,
    map: &SelfMap,
    sample_pairs: usize,
    probe_ts: &[TimeParameter],
    include_coincident: bool,
    seed: u64,
) -> Result<ContractivityReport> {
    ts_if_contractive_check_in(
        space,
        map,
        &Region::Whole,
        sample_pairs,
        probe_ts,
        include_coincident,
        seed,
    )
}

pub fn ts_if_contractive_check_in(
    space: &IfmSpace,
    map: &SelfMap,
    region: &Region,
    sample_pairs_count: usize,
    probe_ts: &[TimeParameter],
    include_coincident: bool,
    seed: u64,
) -> Result<ContractivityReport> {
    map.validate(space.domain())?;
    let mut ts = probe_values(probe_ts)?;
    if include_coincident {
        let x = PointSampler::new(space, region, seed)?.point()?;
        let t = ts[0];
        let fx = map.apply(space, &x)?;
        let mut report = ContractivityReport::new(Notion::TsIf, Verdict::VacuousFail);
        report.notes.push(
            "k·μ(Tx,Tx,t) = k < 1 = μ(x,x,t) for every k in (0,1)".to_string(),
        );
        let lhs = space.eval_raw(&fx, &fx, t).mu;
        let rhs = space.eval_raw(&x, &x, t).mu;
        report.worst_witness = Some(Witness::at(vec![x.clone(), x], vec![t], lhs, rhs));
        report.samples_used = 1;
        return Ok(report);
    }

    let t_max = ts.iter().copied().fold(f64::MIN, f64::max);
    ts.extend((1..=TS_IF_TAIL_DOUBLINGS).map(|j| t_max * 2f64.powi(j)));
    let pairs = sample_pairs(space, region, sample_pairs_count, seed)?;
    let imgs = images(space, map, &pairs)?;
    let nts = ts.len();
    let quotient = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };

    let scan = pairs
        .par_iter()
        .zip(&imgs)
        .enumerate()
        .map(|(i, ((x, y), (fx, fy)))| {
            let mut s = RatioScan::empty();
            for (j, &t) in ts.iter().enumerate() {
                let index = i * nts + j;
                let m = space.eval_raw(x, y, t);
                let mf = space.eval_raw(fx, fy, t);
                s.mu.observe(quotient(m.mu, mf.mu), index, || {
                    ratio_witness(x, y, t, m.mu, mf.mu)
                });
                s.nu.observe(quotient(mf.nu, m.nu), index, || {
                    ratio_witness(x, y, t, mf.nu, m.nu)
                });
            }
            s
        })
        .reduce(RatioScan::empty, RatioScan::merge);

    let mut report = ContractivityReport::new(Notion::TsIf, Verdict::Fail);
    report.samples_used = pairs.len() * nts;
    report.notes.push(format!(
        "probe times extended to t = {:e}",
        ts[nts - 1]
    ));
    match scan.worst() {
        None => {
            report.verdict = Verdict::Pass;
            report.notes.push("no distinct pairs to sample".into());
        }
        Some((side, worst)) => {
            let sup = worst.violation;
            report.observed_sup = Some(sup);
            report.notes.push(format!("supremum attained on the {} side", side.name()));
            if sup < 1.0 {
                report.verdict = Verdict::Pass;
                report.estimated_k = Some(sup);
            } else {
                report.worst_witness = worst.witness.clone();
            }
        }
    }
    Ok(report)
}

/// For each `ε`, searches `r = ε, ε/2, ε/4, ...` for one such that every
/// sampled pair with `μ >= 1 - r` and `ν <= r` maps to a pair with
/// `μ >= 1 - ε` and `ν <= ε`, at every probe time.
///
/// On coordinate spaces each sampled pair `(x, y)` is pulled along the
/// segment towards `x` to the edge of the `r`-neighbourhood, so every `r` is
/// tested on pairs that just qualify.
pub fn t_uniform_continuity_probe(
    space: &IfmSpace,
    map: &SelfMap,
    epsilons: &[f64],
    sample_pairs: usize,
    probe_ts: &[TimeParameter],
    seed: u64,
) -> Result<ContractivityReport> {
    t_uniform_continuity_probe_in(space, map, &Region::Whole, epsilons, sample_pairs, probe_ts, seed)
}

pub fn t_uniform_continuity_probe_in(
    space: &IfmSpace,
    map: &SelfMap,
    region: &Region,
    epsilons: &[f64],
    sample_pairs_count: usize,
    probe_ts: &[TimeParameter],
    seed: u64,
) -> Result<ContractivityReport> {
    map.validate(space.domain())?;
    let ts = probe_values(probe_ts)?;
    if epsilons.is_empty() {
        return Err(Error::InvalidArgument("at least one epsilon is required".into()));
    }
    for &e in epsilons {
        unit_open("epsilon", e)?;
    }
    let pairs = sample_pairs(space, region, sample_pairs_count, seed)?;
    let coordinate = matches!(space.domain(), PointDomain::Coordinate { .. });

    let mut report = ContractivityReport::new(Notion::TUniformContinuity, Verdict::Pass);
    let mut worst_fail: Option<Witness> = None;
    for &epsilon in epsilons {
        let mut found = None;
        let mut qualifying = 0;
        let mut last = Worst::empty();
        for j in 0..=CONTINUITY_R_HALVINGS {
            let r = epsilon * 0.5f64.powi(j);
            let outcome = pairs
                .par_iter()
                .enumerate()
                .map(|(i, (x, y))| continuity_sample(space, map, region, x, y, &ts, r, epsilon, i, coordinate))
                .collect::<Vec<Result<Worst>>>()
                .into_iter()
                .try_fold(Worst::empty(), |acc, w| w.map(|w| acc.merge(w)))?;
            qualifying = outcome.checked;
            report.samples_used += outcome.checked;
            let ok = outcome.witness.is_none() || outcome.violation <= 0.0;
            last = outcome;
            if ok {
                found = Some(r);
                break;
            }
        }
        if found.is_none() {
            report.verdict = Verdict::Fail;
            if worst_fail.is_none() {
                worst_fail = last.witness;
            }
        }
        report.epsilon_table.push(EpsilonWitness {
            epsilon,
            r: found,
            qualifying,
        });
    }
    report.worst_witness = worst_fail;
    Ok(report)
}

/// Worst image violation `max(1 - ε - μ', ν' - ε)` over the qualifying
/// variants of one sampled pair.
#[allow(clippy::too_many_arguments)]
fn continuity_sample(
    space: &IfmSpace,
    map: &SelfMap,
    region: &Region,
    x: &Point,
    y: &Point,
    ts: &[f64],
    r: f64,
    epsilon: f64,
    sample: usize,
    coordinate: bool,
) -> Result<Worst> {
    let mut worst = Worst::empty();
    let fx = map.apply(space, x)?;
    let nts = ts.len();
    for (j, &t) in ts.iter().enumerate() {
        let mut candidates = Vec::new();
        if coordinate {
            if let Some(lambda) = edge_of_neighbourhood(space, x, y, t, r) {
                candidates.push(along(x, y, lambda));
                candidates.push(along(x, y, lambda / 2.0));
            }
        } else if space.eval_raw(x, y, t).within(r) {
            candidates.push(y.clone());
        }
        for (c, p) in candidates.into_iter().enumerate() {
            if p == *x || !region.contains(space, &p) {
                continue;
            }
            let fp = map.apply(space, &p)?;
            let m = space.eval_raw(&fx, &fp, t);
            let violation = ((1.0 - epsilon) - m.mu).max(m.nu - epsilon);
            let index = (sample * nts + j) * 2 + c;
            worst.observe(violation, index, || Witness {
                args: vec![r],
                ..Witness::at(vec![x.clone(), p.clone()], vec![t], m.mu, m.nu)
            });
        }
    }
    Ok(worst)
}

fn along(x: &Point, y: &Point, lambda: f64) -> Point {
    let (a, b) = (x.coords().unwrap_or_default(), y.coords().unwrap_or_default());
    Point::Coords(a.iter().zip(b).map(|(p, q)| p + lambda * (q - p)).collect())
}

/// Largest `λ` in `(0, 1]` with `x + λ (y - x)` in the closed
/// `r`-neighbourhood of `x` at `t`, by bisection.
fn edge_of_neighbourhood(space: &IfmSpace, x: &Point, y: &Point, t: f64, r: f64) -> Option<f64> {
    let inside = |lambda: f64| space.eval_raw(x, &along(x, y, lambda), t).within(r);
    if inside(1.0) {
        return Some(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..SEGMENT_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo > 0.0).then_some(lo)
}

/// Checks the contractive-sequence inequalities on consecutive triples:
/// `1/μ(x_{n+1},x_{n+2},t) - 1 <= k (1/μ(x_n,x_{n+1},t) - 1)` and
/// `1/ν(x_{n+1},x_{n+2},t) - 1 >= (1/k)(1/ν(x_n,x_{n+1},t) - 1)`.
pub fn contractive_sequence_check(
    space: &IfmSpace,
    prefix: &[Point],
    k: f64,
    probe_ts: &[TimeParameter],
) -> Result<ContractivityReport> {
    unit_open("k", k)?;
    let ts = probe_values(probe_ts)?;
    if prefix.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a contractive-sequence check needs at least 3 points, got {}",
            prefix.len()
        )));
    }
    for p in prefix {
        space.check_point(p)?;
    }
    let slack = |v: f64| 1e-12 * v.abs() + 1e-15;
    let mut report = ContractivityReport::new(Notion::ContractiveSequence, Verdict::Pass);
    let mut sup: f64 = 0.0;
    'outer: for n in 0..prefix.len() - 2 {
        let (a, b, c) = (&prefix[n], &prefix[n + 1], &prefix[n + 2]);
        if ts.iter().all(|&t| coincident(space.eval_raw(a, b, t))) {
            report
                .notes
                .push(format!("x_{n} and x_{} coincide; the tail is fixed from there", n + 1));
            break;
        }
        for &t in &ts {
            report.samples_used += 1;
            let (prev_mu, prev_nu) = space.odds_raw(a, b, t);
            let (next_mu, next_nu) = space.odds_raw(b, c, t);
            let mu_ratio = if next_mu == 0.0 { 0.0 } else { next_mu / prev_mu };
            let nu_ratio = if next_nu.is_infinite() { 0.0 } else { prev_nu / next_nu };
            sup = sup.max(mu_ratio).max(nu_ratio);
            let triple = || vec![a.clone(), b.clone(), c.clone()];
            if next_mu > k * prev_mu + slack(k * prev_mu) {
                report.verdict = Verdict::Fail;
                report.worst_witness = Some(Witness::at(triple(), vec![t], next_mu, k * prev_mu));
                report.notes.push(format!("mu inequality fails at n = {n}"));
                break 'outer;
            }
            if next_nu < prev_nu / k - slack(prev_nu / k) {
                report.verdict = Verdict::Fail;
                report.worst_witness = Some(Witness::at(triple(), vec![t], next_nu, prev_nu / k));
                report.notes.push(format!("nu inequality fails at n = {n}"));
                break 'outer;
            }
        }
    }
    report.observed_sup = Some(sup);
    if report.passed() {
        report.estimated_k = Some(k);
    }
    Ok(report)
}

/// Evaluates the closed-ball hypotheses at `(x0, T(x0), t)`:
/// `1/μ - 1 < (1 - k)(1/(1 - r) - 1)` and `1/ν - 1 > (1/(1 - k))(1/r - 1)`.
pub fn closed_ball_hypotheses(
    space: &IfmSpace,
    map: &SelfMap,
    x0: &Point,
    r: f64,
    t: TimeParameter,
    k: f64,
) -> Result<ContractivityReport> {
    unit_open("r", r)?;
    unit_open("k", k)?;
    map.validate(space.domain())?;
    let fx = map.apply(space, x0)?;
    let mu_rhs = (1.0 - k) * (1.0 / (1.0 - r) - 1.0);
    let nu_rhs = (1.0 / (1.0 - k)) * (1.0 / r - 1.0);
    let m = space.evaluate(x0, &fx, t)?;
    let mut report = ContractivityReport::new(Notion::ClosedBallHypotheses, Verdict::Pass);
    report.samples_used = 1;
    let (mu_lhs, nu_lhs) = if coincident(m) {
        report.verdict = Verdict::PassDegenerate;
        report.notes.push("x0 is already fixed by the map".into());
        (0.0, f64::INFINITY)
    } else {
        space.odds_raw(x0, &fx, t.value())
    };
    let mu_holds = mu_lhs < mu_rhs;
    let nu_holds = nu_lhs > nu_rhs;
    report.sides = vec![
        SideCheck {
            name: "mu".into(),
            lhs: mu_lhs,
            rhs: mu_rhs,
            holds: mu_holds,
        },
        SideCheck {
            name: "nu".into(),
            lhs: nu_lhs,
            rhs: nu_rhs,
            holds: nu_holds,
        },
    ];
    if !(mu_holds && nu_holds) {
        report.verdict = Verdict::Fail;
        let (lhs, rhs) = if mu_holds { (nu_lhs, nu_rhs) } else { (mu_lhs, mu_rhs) };
        report.worst_witness = Some(Witness::at(
            vec![x0.clone(), fx],
            vec![t.value()],
            lhs,
            rhs,
        ));
    }
    Ok(report)
}
