//! Picard iteration with IF-Cauchy stopping, under the hypotheses of each
//! fixed-point regime.
//!
//! At iterate `n` the solver looks ahead `window` steps and stops when every
//! `x_{n+p}`, `p = 1..=window`, is close to `x_n` at all probe times
//! (`μ > 1 - ε`, `ν < ε`) and the residual `μ(x_n, T x_n, t) >= 1 - ε`,
//! `ν <= ε` holds. The trace keeps `x_0..=x_n`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contraction::{
    closed_ball_hypotheses, if_contractive_check_in, K_MARGIN, t_uniform_continuity_probe_in,
    ts_if_contractive_check_in, ContractivityReport, SelfMap,
};
use crate::error::{Error, Result};
use crate::report::{format_sig17, Record, ToRecords};
use crate::sampling::{PointSampler, Region};
use crate::space::{
    default_probe_ts, spade_probe, BallSpec, IfmSpace, MembershipPair, Point, SpadeReport,
    TimeParameter,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub probe_ts: Vec<TimeParameter>,
    pub window: usize,
    pub hypothesis_checks: bool,
    /// Pairs sampled by each hypothesis check.
    pub hypothesis_samples: usize,
    pub seed: u64,
    /// Horizon and threshold of the finite-horizon ♠ probe.
    pub spade_horizon: f64,
    pub spade_epsilon: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            max_iterations: 10_000,
            probe_ts: default_probe_ts(),
            window: 8,
            hypothesis_checks: true,
            hypothesis_samples: 1000,
            seed: 0,
            spade_horizon: 1e9,
            spade_epsilon: 1e-3,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(Error::InvalidArgument("window must be at least 1".into()));
        }
        if self.probe_ts.is_empty() {
            return Err(Error::InvalidArgument("probe_ts must not be empty".into()));
        }
        if self.hypothesis_samples == 0 {
            return Err(Error::InvalidArgument("hypothesis_samples must be at least 1".into()));
        }
        TimeParameter::new(self.spade_horizon)?;
        if !(self.spade_epsilon > 0.0 && self.spade_epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "spade_epsilon must lie in (0, 1), got {}",
                self.spade_epsilon
            )));
        }
        Ok(())
    }

    fn ts(&self) -> Vec<f64> {
        self.probe_ts.iter().map(|t| t.value()).collect()
    }
}

/// `μ(x_n, T x_n, t)` and `ν(x_n, T x_n, t)` for each probe time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct IterationTrace {
    pub probe_ts: Vec<f64>,
    /// `x_0, x_1 = T(x_0), ...`
    pub points: Vec<Point>,
    /// One record per point.
    pub steps: Vec<StepRecord>,
    /// Open-mode ball membership per point, for ball-constrained solves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_flags: Option<Vec<bool>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    BudgetExhausted,
    HypothesisFailed,
    DivergedFromBall,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::BudgetExhausted => "budget_exhausted",
            SolveStatus::HypothesisFailed => "hypothesis_failed",
            SolveStatus::DivergedFromBall => "diverged_from_ball",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub t: f64,
    pub mu: f64,
    pub nu: f64,
}

/// `μ/ν(x, y, t)` at every probe time.
pub fn residuals_at(space: &IfmSpace, x: &Point, y: &Point, ts: &[f64]) -> Vec<Residual> {
    ts.iter()
        .map(|&t| {
            let m = space.eval_raw(x, y, t);
            Residual { t, mu: m.mu, nu: m.nu }
        })
        .collect()
}

/// `μ >= 1 - ε` and `ν <= ε` for every residual.
pub fn residuals_hold(residuals: &[Residual], epsilon: f64) -> bool {
    residuals
        .iter()
        .all(|r| MembershipPair { mu: r.mu, nu: r.nu }.within(epsilon))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub fixed_point: Option<Point>,
    pub iterations: usize,
    pub epsilon: f64,
    pub trace: IterationTrace,
    /// The check that decided the hypotheses, when checks ran.
    pub hypothesis_report: Option<ContractivityReport>,
    /// Every hypothesis check that ran, in order.
    #[serde(default)]
    pub supporting_reports: Vec<ContractivityReport>,
    #[serde(default)]
    pub spade: Option<SpadeReport>,
    /// `T` applied to the last iterate.
    pub residual_image: Option<Point>,
    /// `μ/ν(x_N, T x_N, t)` for the last iterate `x_N`.
    #[serde(default)]
    pub residuals: Vec<Residual>,
    /// For power-map solves, `μ/ν(T x*, x*, t)` with the original map.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub map_residuals: Vec<Residual>,
    /// Coordinate distance between the last iterate and its image.
    #[serde(default)]
    pub coordinate_residual: Option<f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl SolveResult {
    fn hypothesis_failed(
        epsilon: f64,
        decisive: ContractivityReport,
        supporting: Vec<ContractivityReport>,
        spade: Option<SpadeReport>,
        note: String,
    ) -> Self {
        Self {
            status: SolveStatus::HypothesisFailed,
            fixed_point: None,
            iterations: 0,
            epsilon,
            trace: IterationTrace::default(),
            hypothesis_report: Some(decisive),
            supporting_reports: supporting,
            spade,
            residual_image: None,
            residuals: Vec::new(),
            map_residuals: Vec::new(),
            coordinate_residual: None,
            notes: vec![note],
        }
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

impl ToRecords for SolveResult {
    fn records(&self) -> Vec<Record> {
        let verdict = self.status.to_string();
        let mut records = vec![Record::new(
            "solve:status",
            verdict.clone(),
            self.iterations as f64,
            self.fixed_point
                .as_ref()
                .map(|p| format!("fixed_point={p}"))
                .unwrap_or_default(),
        )];
        for r in &self.residuals {
            records.push(Record::new(
                format!("residual:t={}", r.t),
                verdict.clone(),
                r.mu,
                format!("nu={}", format_sig17(r.nu)),
            ));
        }
        for r in &self.map_residuals {
            records.push(Record::new(
                format!("map-residual:t={}", r.t),
                verdict.clone(),
                r.mu,
                format!("nu={}", format_sig17(r.nu)),
            ));
        }
        if let Some(d) = self.coordinate_residual {
            records.push(Record::new("coordinate-residual", verdict.clone(), d, ""));
        }
        for report in &self.supporting_reports {
            records.extend(report.records());
        }
        if let Some(spade) = &self.spade {
            records.extend(spade.records().into_iter().take(1));
        }
        records.extend(
            self.notes
                .iter()
                .map(|n| Record::new("note", "info", f64::NAN, n.clone())),
        );
        records
    }
}

/// `x_0, ..., x_n` with `x_{i+1} = T(x_i)`.
pub fn iterate_trace(space: &IfmSpace, map: &SelfMap, x0: &Point, n: usize) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    space.check_point(x0)?;
    let mut points = vec![x0.clone()];
    for index in 0..n {
        let next = step(space, map, &points[index], index)?;
        points.push(next);
    }
    Ok(points)
}

fn step(space: &IfmSpace, map: &SelfMap, x: &Point, index: usize) -> Result<Point> {
    map.apply(space, x).map_err(|e| Error::IterationEscape {
        index,
        source: Box::new(e),
    })
}

/// Extra stopping condition evaluated on a candidate limit.
type StopCheck<'a> = &'a dyn Fn(&Point) -> Result<bool>;

/// The shared Picard engine. With a ball, every iterate must lie in the open
/// ball and the limit in the closed ball.
fn picard_engine(
    space: &IfmSpace,
    map: &SelfMap,
    x0: &Point,
    config: &SolveConfig,
    ball: Option<&BallSpec>,
    extra: Option<StopCheck<'_>>,
) -> Result<SolveResult> {
    space.check_point(x0)?;
    let ts = config.ts();
    let eps = config.epsilon;
    let mut points = vec![x0.clone()];
    let mut flags = ball.map(|_| Vec::new());
    let mut notes = Vec::new();

    let mut n = 0;
    let status = loop {
        while points.len() < n + config.window + 1 {
            let index = points.len() - 1;
            let next = step(space, map, &points[index], index)?;
            points.push(next);
        }
        if let (Some(ball), Some(flags)) = (ball, flags.as_mut()) {
            let m = space.eval_raw(&ball.center, &points[n], ball.time.value());
            let inside = m.within_strict(ball.radius);
            flags.push(inside);
            if !inside {
                notes.push(format!("iterate {n} left the open ball"));
                break SolveStatus::DivergedFromBall;
            }
        }
        let residual_ok = ts
            .iter()
            .all(|&t| space.eval_raw(&points[n], &points[n + 1], t).within(eps));
        let cauchy_ok = (1..=config.window).all(|p| {
            ts.iter()
                .all(|&t| space.eval_raw(&points[n], &points[n + p], t).within_strict(eps))
        });
        if residual_ok && cauchy_ok && extra.map_or(Ok(true), |f| f(&points[n]))? {
            break SolveStatus::Converged;
        }
        if n >= config.max_iterations {
            break SolveStatus::BudgetExhausted;
        }
        n += 1;
    };

    let image = points[n + 1].clone();
    points.truncate(n + 1);
    let steps = (0..=n)
        .map(|i| {
            let next = if i < n { &points[i + 1] } else { &image };
            let (mu, nu) = ts
                .iter()
                .map(|&t| {
                    let m = space.eval_raw(&points[i], next, t);
                    (m.mu, m.nu)
                })
                .unzip();
            StepRecord { mu, nu }
        })
        .collect();
    let last = points[n].clone();
    let mut status = status;
    if status == SolveStatus::Converged {
        if let Some(ball) = ball {
            let m = space.eval_raw(&ball.center, &last, ball.time.value());
            if !m.within(ball.radius) {
                notes.push("the limit lies outside the closed ball".into());
                status = SolveStatus::DivergedFromBall;
            }
        }
    }
    Ok(SolveResult {
        status,
        fixed_point: (status == SolveStatus::Converged).then(|| last.clone()),
        iterations: n,
        epsilon: eps,
        residuals: residuals_at(space, &last, &image, &ts),
        coordinate_residual: space.coordinate_distance(&last, &image),
        residual_image: Some(image),
        trace: IterationTrace {
            probe_ts: ts,
            points,
            steps,
            ball_flags: flags,
        },
        hypothesis_report: None,
        supporting_reports: Vec::new(),
        spade: None,
        map_residuals: Vec::new(),
        notes,
    })
}

fn spade_check(space: &IfmSpace, region: &Region, config: &SolveConfig) -> Result<SpadeReport> {
    let count = config.hypothesis_samples.min(100);
    let pairs = PointSampler::new(space, region, config.seed)?.distinct_pairs(count)?;
    spade_probe(
        space,
        &pairs,
        TimeParameter::new(config.spade_horizon)?,
        config.spade_epsilon,
    )
}

const SPADE_NOTE: &str = "the space lacks property ♠ on sampled pairs at the probe horizon";

/// Picard iteration from `x0` for an IF-contractive map on a space with
/// property ♠. Hypotheses are checked over the whole sampling region unless
/// disabled.
pub fn picard_solve(
    space: &IfmSpace,
    map: &SelfMap,
    x0: &Point,
    config: &SolveConfig,
) -> Result<SolveResult> {
    config.validate()?;
    map.validate(space.domain())?;
    let mut reports = Vec::new();
    let mut spade = None;
    if config.hypothesis_checks {
        let check = if_contractive_check_in(
            space,
            map,
            &Region::Whole,
            config.hypothesis_samples,
            &config.probe_ts,
            config.seed,
        )?;
        reports.push(check.clone());
        if !check.passed() {
            return Ok(SolveResult::hypothesis_failed(
                config.epsilon,
                check,
                reports,
                None,
                "the map is not IF-contractive on sampled pairs".into(),
            ));
        }
        let probe = spade_check(space, &Region::Whole, config)?;
        if !probe.passed {
            return Ok(SolveResult::hypothesis_failed(
                config.epsilon,
                check,
                reports,
                Some(probe),
                SPADE_NOTE.into(),
            ));
        }
        spade = Some(probe);
    }
    let mut result = picard_engine(space, map, x0, config, None, None)?;
    result.hypothesis_report = reports.last().cloned();
    result.supporting_reports = reports;
    result.spade = spade;
    Ok(result)
}

/// Picard iteration from the ball center, with the closed-ball hypotheses
/// at `(center, T(center), t)` and contractivity with constant `k` on
/// sampled ball pairs. Iterates must stay in the open ball and the limit in
/// the closed ball.
pub fn closed_ball_solve(
    space: &IfmSpace,
    map: &SelfMap,
    ball: &BallSpec,
    k: f64,
    config: &SolveConfig,
) -> Result<SolveResult> {
    config.validate()?;
    map.validate(space.domain())?;
    space.check_point(&ball.center)?;
    let mut reports = Vec::new();
    let mut spade = None;
    if config.hypothesis_checks {
        let start = closed_ball_hypotheses(space, map, &ball.center, ball.radius, ball.time, k)?;
        reports.push(start.clone());
        if !start.passed() {
            return Ok(SolveResult::hypothesis_failed(
                config.epsilon,
                start,
                reports,
                None,
                "the closed-ball inequalities fail at the center".into(),
            ));
        }
        let region = Region::Ball(ball.clone());
        let check = if_contractive_check_in(
            space,
            map,
            &region,
            config.hypothesis_samples,
            &config.probe_ts,
            config.seed,
        )?;
        reports.push(check.clone());
        if let Some(sup) = check.observed_sup.filter(|&sup| !(sup <= k + K_MARGIN)) {
            return Ok(SolveResult::hypothesis_failed(
                config.epsilon,
                check,
                reports,
                None,
                format!("observed contraction ratio {sup} on ball pairs exceeds k = {k}"),
            ));
        }
        let probe = spade_check(space, &region, config)?;
        if !probe.passed {
            return Ok(SolveResult::hypothesis_failed(
                config.epsilon,
                check,
                reports,
                Some(probe),
                SPADE_NOTE.into(),
            ));
        }
        spade = Some(probe);
    }
    let mut result = picard_engine(space, map, &ball.center, config, Some(ball), None)?;
    result.hypothesis_report = reports.first().cloned();
    result.supporting_reports = reports;
    result.spade = spade;
    Ok(result)
}

/// Solves for a fixed point of `B = T^m` by Picard iteration from `x0`,
/// stopping only once the limit is also fixed by `T` within tolerance. `T` itself need not be
/// contractive; it must be t-uniformly continuous.
pub fn power_map_solve(
    space: &IfmSpace,
    map: &SelfMap,
    m: usize,
    x0: &Point,
    config: &SolveConfig,
) -> Result<SolveResult> {
    config.validate()?;
    map.validate(space.domain())?;
    let power = map.clone().power(m)?;
    let mut reports = Vec::new();
    let mut spade = None;
    if config.hypothesis_checks {
        let check = if_contractive_check_in(
            space,
            &power,
            &Region::Whole,
            config.hypothesis_samples,
            &config.probe_ts,
            config.seed,
        )?;
        reports.push(check.clone());
        if !check.passed() {
            return Ok(SolveResult::hypothesis_failed(
                config.epsilon,
                check,
                reports,
                None,
                format!("T^{m} is not IF-contractive on sampled pairs"),
            ));
        }
        let continuity = t_uniform_continuity_probe_in(
            space,
            map,
            &Region::Whole,
            &[0.1, 0.01],
            config.hypothesis_samples,
            &config.probe_ts,
            config.seed,
        )?;
        reports.push(continuity.clone());
        if !continuity.passed() {
            return Ok(SolveResult::hypothesis_failed(
                config.epsilon,
                continuity,
                reports,
                None,
                "T is not t-uniformly continuous on sampled pairs".into(),
            ));
        }
        let probe = spade_check(space, &Region::Whole, config)?;
        if !probe.passed {
            return Ok(SolveResult::hypothesis_failed(
                config.epsilon,
                check,
                reports,
                Some(probe),
                SPADE_NOTE.into(),
            ));
        }
        spade = Some(probe);
    }
    let ts = config.ts();
    let map_fixed = |x: &Point| -> Result<bool> {
        let tx = map.apply(space, x)?;
        Ok(residuals_hold(&residuals_at(space, &tx, x, &ts), config.epsilon))
    };
    let mut result = picard_engine(space, &power, x0, config, None, Some(&map_fixed))?;
    result.hypothesis_report = reports.first().cloned();
    result.supporting_reports = reports;
    result.spade = spade;
    if let Some(last) = result.trace.points.last() {
        let tx = map.apply(space, last)?;
        result.map_residuals = residuals_at(space, &tx, last, &ts);
        if result.status == SolveStatus::BudgetExhausted
            && residuals_hold(&result.residuals, config.epsilon)
            && !residuals_hold(&result.map_residuals, config.epsilon)
        {
            result.notes.push(format!(
                "T^{m} settled but T moves the last iterate by more than epsilon; \
                 tighten epsilon or adjust the probe grid"
            ));
        }
    }
    Ok(result)
}

/// Picard iteration for a TS-IF contractive map, checked on distinct pairs.
/// The ♠ probe is run and recorded but does not gate the solve.
pub fn ts_if_solve(
    space: &IfmSpace,
    map: &SelfMap,
    x0: &Point,
    config: &SolveConfig,
) -> Result<SolveResult> {
    config.validate()?;
    map.validate(space.domain())?;
    let mut reports = Vec::new();
    let mut spade = None;
    let mut notes = Vec::new();
    if config.hypothesis_checks {
        let check = ts_if_contractive_check_in(
            space,
            map,
            &Region::Whole,
            config.hypothesis_samples,
            &config.probe_ts,
            false,
            config.seed,
        )?;
        reports.push(check.clone());
        if !check.passed() {
            return Ok(SolveResult::hypothesis_failed(
                config.epsilon,
                check,
                reports,
                None,
                "the map is not TS-IF contractive on sampled distinct pairs".into(),
            ));
        }
        let probe = spade_check(space, &Region::Whole, config)?;
        if !probe.passed {
            notes.push(format!("{SPADE_NOTE}; recorded, not enforced"));
        }
        spade = Some(probe);
    }
    let mut result = picard_engine(space, map, x0, config, None, None)?;
    result.hypothesis_report = reports.first().cloned();
    result.supporting_reports = reports;
    result.spade = spade;
    result.notes.extend(notes);
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub starts: Vec<Point>,
    pub statuses: Vec<SolveStatus>,
    pub limits: Vec<Option<Point>>,
    /// Starts whose solve did not converge.
    pub excluded: Vec<usize>,
    /// The pair of limits with the smallest margin, if there are two.
    pub worst_pair: Option<(usize, usize)>,
    /// `min(μ - (1 - ε), ε - ν)` at the worst pair and probe time.
    pub worst_margin: Option<f64>,
    pub max_coordinate_distance: Option<f64>,
    pub passed: bool,
}

impl ToRecords for UniquenessReport {
    fn records(&self) -> Vec<Record> {
        vec![Record::new(
            "uniqueness",
            if self.passed { "pass" } else { "fail" },
            self.worst_margin.unwrap_or(f64::NAN),
            match self.worst_pair {
                Some((i, j)) => format!("worst pair: starts {i} and {j}"),
                None => String::new(),
            },
        )]
    }
}

/// Each start is solved at `epsilon / UNIQUENESS_TIGHTENING` so that limits
/// which are each close to the fixed point are also close to one another at
/// `epsilon`.
pub const UNIQUENESS_TIGHTENING: f64 = 16.0;

/// Solves from every start with [`picard_solve`] and checks that all limits
/// are indistinguishable at the probe times.
pub fn uniqueness_probe(
    space: &IfmSpace,
    map: &SelfMap,
    starts: &[Point],
    config: &SolveConfig,
) -> Result<UniquenessReport> {
    uniqueness_probe_with(space, starts, config, |x0, c| picard_solve(space, map, x0, c))
}

/// [`uniqueness_probe`] with a caller-supplied solve per start. The solve
/// receives the tightened configuration.
pub fn uniqueness_probe_with(
    space: &IfmSpace,
    starts: &[Point],
    config: &SolveConfig,
    solve: impl Fn(&Point, &SolveConfig) -> Result<SolveResult> + Sync,
) -> Result<UniquenessReport> {
    config.validate()?;
    if starts.is_empty() {
        return Err(Error::InvalidArgument("at least one start is required".into()));
    }
    let tight = SolveConfig {
        epsilon: config.epsilon / UNIQUENESS_TIGHTENING,
        ..config.clone()
    };
    let results = starts
        .par_iter()
        .map(|x0| solve(x0, &tight))
        .collect::<Vec<Result<SolveResult>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let limits: Vec<Option<Point>> = results.iter().map(|r| r.fixed_point.clone()).collect();
    let excluded: Vec<usize> = (0..limits.len()).filter(|&i| limits[i].is_none()).collect();
    let ts = config.ts();
    let eps = config.epsilon;

    let mut worst: Option<((usize, usize), f64)> = None;
    let mut max_dist: Option<f64> = None;
    for i in 0..limits.len() {
        for j in i + 1..limits.len() {
            let (Some(a), Some(b)) = (&limits[i], &limits[j]) else {
                continue;
            };
            for &t in &ts {
                let m = space.eval_raw(a, b, t);
                let margin = (m.mu - (1.0 - eps)).min(eps - m.nu);
                if worst.is_none_or(|(_, w)| margin < w) {
                    worst = Some(((i, j), margin));
                }
            }
            if let Some(d) = space.coordinate_distance(a, b) {
                max_dist = Some(max_dist.map_or(d, |m: f64| m.max(d)));
            }
        }
    }
    let converged = limits.len() - excluded.len();
    Ok(UniquenessReport {
        starts: starts.to_vec(),
        statuses: results.iter().map(|r| r.status).collect(),
        limits,
        excluded,
        worst_pair: worst.map(|w| w.0),
        worst_margin: worst.map(|w| w.1),
        max_coordinate_distance: max_dist,
        passed: converged >= 1 && worst.is_none_or(|(_, w)| w >= 0.0),
    })
}
