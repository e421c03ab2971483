//! Dispatch of one configured action and re-validation of stored results.

use std::path::{Path, PathBuf};

use ifmfix::contraction::{
    closed_ball_hypotheses, contractive_sequence_check, if_contractive_check_in,
    t_uniform_continuity_probe_in, ts_if_contractive_check_in, ContractivityReport, Notion,
    SelfMap,
};
use ifmfix::report::{AuditReport, Record, ToRecords};
use ifmfix::solver::{
    closed_ball_solve, iterate_trace, picard_solve, power_map_solve, residuals_at,
    residuals_hold, ts_if_solve, uniqueness_probe_with, SolveConfig, SolveResult, SolveStatus,
    UniquenessReport,
};
use ifmfix::space::{axiom_audit, IfmSpace, Point};
use ifmfix::tnorm::{audit_operator_pair, check_idempotent, OperatorPair, DEFAULT_TOLERANCE};
use serde::{Deserialize, Serialize};

use crate::config::{
    ball_spec, check_point, region, require, unit_open, validate_solve, ActionConfig,
    AuditTarget, ExperimentConfig, Regime,
};
use crate::error::CliError;
use crate::output::{to_json, trace_csv, write_atomic};

pub const REPORT_FILE: &str = "report.txt";
pub const RESULT_FILE: &str = "result.json";
pub const TRACE_FILE: &str = "trace.csv";

/// Space audits default to a looser tolerance than closed-form operators.
const SPACE_AUDIT_TOLERANCE: f64 = 1e-9;

const IDEMPOTENCY_GRID: usize = 101;

/// What a run did, printed to stdout as JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub action: String,
    pub verdict: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    pub files: Vec<PathBuf>,
    pub duration_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorAudit {
    pub report: AuditReport,
    pub idempotent_tnorm: bool,
    pub idempotent_tconorm: bool,
}

impl ToRecords for OperatorAudit {
    fn records(&self) -> Vec<Record> {
        let mut records = self.report.records();
        for (id, flag) in [
            ("idempotent:tnorm", self.idempotent_tnorm),
            ("idempotent:tconorm", self.idempotent_tconorm),
        ] {
            records.push(Record::new(id, if flag { "yes" } else { "no" }, f64::NAN, ""));
        }
        records
    }
}

/// The stored result of a run: the effective config alongside the outcome,
/// so that a result file is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub config: ExperimentConfig,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    #[serde(flatten)]
    pub solve: SolveResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniqueness: Option<UniquenessReport>,
}

struct Written {
    verdict: String,
    passed: bool,
    estimated_k: Option<f64>,
    fixed_point: Option<Point>,
    iterations: Option<usize>,
    files: Vec<PathBuf>,
}

/// Runs the configured action and writes its files into `out`.
pub fn run_action(config: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    let start = std::time::Instant::now();
    validate_solve(&config.solve)?;
    let written = match &config.action {
        ActionConfig::Audit { .. } => audit(config, out)?,
        ActionConfig::Check { .. } => check(config, out)?,
        ActionConfig::Solve { .. } => solve(config, out)?,
    };
    Ok(RunSummary {
        action: config.action.kind().to_string(),
        verdict: written.verdict,
        passed: written.passed,
        estimated_k: written.estimated_k,
        fixed_point: written.fixed_point,
        iterations: written.iterations,
        files: written.files,
        duration_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn write_pair<T: Serialize + ToRecords>(
    config: &ExperimentConfig,
    result: &T,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let document = Document {
        config: config.clone(),
        result,
    };
    Ok(vec![
        write_atomic(out, REPORT_FILE, result.render_records().as_bytes())?,
        write_atomic(out, RESULT_FILE, to_json(&document).as_bytes())?,
    ])
}

fn word(passed: bool) -> String {
    if passed { "pass" } else { "fail" }.to_string()
}

fn audit(config: &ExperimentConfig, out: &Path) -> Result<Written, CliError> {
    let ActionConfig::Audit {
        target,
        samples,
        grid,
        tolerance,
    } = &config.action
    else {
        unreachable!("dispatched on kind")
    };
    let (passed, files) = match target {
        AuditTarget::Space => {
            let space = config.build_space()?;
            let report = axiom_audit(
                &space,
                *samples,
                config.probe_ts(),
                tolerance.unwrap_or(SPACE_AUDIT_TOLERANCE),
                config.solve.seed,
            )?;
            (report.passed(), write_pair(config, &report, out)?)
        }
        AuditTarget::Operators => {
            let mut pair = OperatorPair::by_name(&config.operators)?;
            let tolerance = tolerance.unwrap_or(DEFAULT_TOLERANCE);
            let report = audit_operator_pair(&pair, *grid, tolerance)?;
            let idempotency = check_idempotent(&mut pair, IDEMPOTENCY_GRID, tolerance)?;
            let audit = OperatorAudit {
                report,
                idempotent_tnorm: idempotency.tnorm,
                idempotent_tconorm: idempotency.tconorm,
            };
            (audit.report.passed(), write_pair(config, &audit, out)?)
        }
    };
    Ok(Written {
        verdict: word(passed),
        passed,
        estimated_k: None,
        fixed_point: None,
        iterations: None,
        files,
    })
}

fn check(config: &ExperimentConfig, out: &Path) -> Result<Written, CliError> {
    let ActionConfig::Check {
        notion,
        samples,
        epsilons,
        include_coincident,
        ball,
        k,
        x0,
        length,
    } = &config.action
    else {
        unreachable!("dispatched on kind")
    };
    let space = config.build_space()?;
    let map = config.build_map(&space)?;
    let ts = config.probe_ts();
    let seed = config.solve.seed;
    let report: ContractivityReport = match notion {
        Notion::IfContractive => {
            let region = region(&space, ball, "action.ball")?;
            if_contractive_check_in(&space, &map, &region, *samples, ts, seed)?
        }
        Notion::TsIf => {
            let region = region(&space, ball, "action.ball")?;
            ts_if_contractive_check_in(&space, &map, &region, *samples, ts, *include_coincident, seed)?
        }
        Notion::TUniformContinuity => {
            let region = region(&space, ball, "action.ball")?;
            t_uniform_continuity_probe_in(&space, &map, &region, epsilons, *samples, ts, seed)?
        }
        Notion::ContractiveSequence => {
            let x0 = require(x0, "action.x0")?;
            check_point(&space, x0, "action.x0")?;
            let k = unit_open(*require(k, "action.k")?, "action.k")?;
            let iterates = iterate_trace(&space, &map, x0, *length)?;
            contractive_sequence_check(&space, &iterates, k, ts)?
        }
        Notion::ClosedBallHypotheses => {
            let ball = ball_spec(&space, require(ball, "action.ball")?, "action.ball")?;
            let k = unit_open(*require(k, "action.k")?, "action.k")?;
            closed_ball_hypotheses(&space, &map, &ball.center, ball.radius, ball.time, k)?
        }
    };
    let files = write_pair(config, &report, out)?;
    Ok(Written {
        verdict: report.verdict.to_string(),
        passed: report.passed(),
        estimated_k: report.estimated_k,
        fixed_point: None,
        iterations: None,
        files,
    })
}

fn solve_once(
    space: &IfmSpace,
    map: &SelfMap,
    regime: Regime,
    x0: &Point,
    m: usize,
    config: &SolveConfig,
) -> ifmfix::Result<SolveResult> {
    match regime {
        Regime::Picard => picard_solve(space, map, x0, config),
        Regime::Power => power_map_solve(space, map, m, x0, config),
        Regime::TsIf => ts_if_solve(space, map, x0, config),
        Regime::ClosedBall => unreachable!("closed-ball solves start at the center"),
    }
}

fn solve(config: &ExperimentConfig, out: &Path) -> Result<Written, CliError> {
    let ActionConfig::Solve {
        regime,
        x0,
        m,
        ball,
        k,
        starts,
    } = &config.action
    else {
        unreachable!("dispatched on kind")
    };
    let space = config.build_space()?;
    let map = config.build_map(&space)?;
    let settings = &config.solve;
    let m = match regime {
        Regime::Power => *require(m, "action.m")?,
        _ => 1,
    };
    for (i, s) in starts.iter().enumerate() {
        check_point(&space, s, &format!("action.starts[{i}]"))?;
    }
    let (result, uniqueness) = match regime {
        Regime::ClosedBall => {
            if !starts.is_empty() {
                return Err(CliError::Config {
                    field: "action.starts".into(),
                    message: "closed-ball solves start at the ball center".into(),
                });
            }
            let ball = ball_spec(&space, require(ball, "action.ball")?, "action.ball")?;
            let k = unit_open(*require(k, "action.k")?, "action.k")?;
            (closed_ball_solve(&space, &map, &ball, k, settings)?, None)
        }
        _ => {
            let x0 = require(x0, "action.x0")?;
            check_point(&space, x0, "action.x0")?;
            let result = solve_once(&space, &map, *regime, x0, m, settings)?;
            let uniqueness = if starts.is_empty() {
                None
            } else {
                let mut all = vec![x0.clone()];
                all.extend(starts.iter().cloned());
                Some(uniqueness_probe_with(&space, &all, settings, |p, c| {
                    solve_once(&space, &map, *regime, p, m, c)
                })?)
            };
            (result, uniqueness)
        }
    };
    let passed =
        result.converged() && uniqueness.as_ref().is_none_or(|u| u.passed);
    let mut records = result.render_records();
    if let Some(u) = &uniqueness {
        records.push_str(&u.render_records());
    }
    let document = Document {
        config: config.clone(),
        result: SolveOutcome {
            solve: result.clone(),
            uniqueness,
        },
    };
    let files = vec![
        write_atomic(out, REPORT_FILE, records.as_bytes())?,
        write_atomic(out, RESULT_FILE, to_json(&document).as_bytes())?,
        write_atomic(out, TRACE_FILE, trace_csv(&result.trace).as_bytes())?,
    ];
    Ok(Written {
        verdict: result.status.to_string(),
        passed,
        estimated_k: result.hypothesis_report.as_ref().and_then(|r| r.estimated_k),
        fixed_point: result.fixed_point.clone(),
        iterations: Some(result.iterations),
        files,
    })
}

/// Outcome of re-verifying a stored solve result.
#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub checks: Vec<(String, bool, String)>,
}

impl Validation {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok, _)| *ok)
    }
}

impl ToRecords for Validation {
    fn records(&self) -> Vec<Record> {
        self.checks
            .iter()
            .map(|(id, ok, detail)| Record::new(id.clone(), word(*ok), f64::NAN, detail.clone()))
            .collect()
    }
}

/// Re-verifies the convergence certificate of a stored solve result using
/// only the stored points and the embedded config.
pub fn validate_result(path: &Path) -> Result<Validation, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let document: Document<SolveOutcome> =
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let config = &document.config;
    let ActionConfig::Solve { regime, m, .. } = &config.action else {
        return Err(CliError::Usage(format!(
            "{} does not hold a solve result",
            path.display()
        )));
    };
    let space = config.build_space()?;
    let map = config.build_map(&space)?;
    let iterated = match regime {
        Regime::Power => map.clone().power(*require(m, "action.m")?)?,
        _ => map.clone(),
    };
    let result = &document.result.solve;
    let trace = &result.trace;
    let eps = result.epsilon;
    let mut checks = Vec::new();
    let mut add = |id: &str, ok: bool, detail: String| checks.push((id.to_string(), ok, detail));

    add(
        "status",
        result.status == SolveStatus::Converged,
        result.status.to_string(),
    );
    let Some(x) = &result.fixed_point else {
        add("fixed-point", false, "no fixed point stored".into());
        return Ok(Validation { checks });
    };
    add(
        "fixed-point-is-last-iterate",
        trace.points.last() == Some(x),
        String::new(),
    );
    let mut follows = true;
    for (n, w) in trace.points.windows(2).enumerate() {
        if iterated.apply(&space, &w[0])? != w[1] {
            follows = false;
            add("trace-follows-map", false, format!("step {n}"));
            break;
        }
    }
    if follows {
        add("trace-follows-map", true, format!("{} steps", trace.points.len().saturating_sub(1)));
    }
    let image = iterated.apply(&space, x)?;
    add(
        "residual-image",
        result.residual_image.as_ref() == Some(&image),
        image.to_string(),
    );
    let reproduced = trace.steps.len() == trace.points.len()
        && trace.steps.iter().enumerate().all(|(n, step)| {
            let next = trace.points.get(n + 1).unwrap_or(&image);
            let fresh = residuals_at(&space, &trace.points[n], next, &trace.probe_ts);
            let mu: Vec<f64> = fresh.iter().map(|r| r.mu).collect();
            let nu: Vec<f64> = fresh.iter().map(|r| r.nu).collect();
            step.mu == mu && step.nu == nu
        });
    add("trace-values-reproduce", reproduced, String::new());
    let residuals = residuals_at(&space, x, &image, &trace.probe_ts);
    add(
        "certificate",
        residuals_hold(&residuals, eps) && residuals == result.residuals,
        format!("epsilon={eps:e}"),
    );
    if *regime == Regime::Power {
        let tx = map.apply(&space, x)?;
        let map_residuals = residuals_at(&space, &tx, x, &trace.probe_ts);
        add(
            "map-certificate",
            residuals_hold(&map_residuals, eps),
            format!("epsilon={eps:e}"),
        );
    }
    if let (Some(flags), ActionConfig::Solve { ball: Some(ball), .. }) =
        (&trace.ball_flags, &config.action)
    {
        let ball = ball_spec(&space, ball, "action.ball")?;
        let t = ball.time;
        let mut inside = flags.iter().all(|&f| f) && flags.len() == trace.points.len();
        for p in &trace.points {
            inside &= space.evaluate(&ball.center, p, t)?.within_strict(ball.radius);
        }
        add("iterates-in-open-ball", inside, String::new());
        add(
            "limit-in-closed-ball",
            space.evaluate(&ball.center, x, t)?.within(ball.radius),
            String::new(),
        );
    }
    Ok(Validation { checks })
}
