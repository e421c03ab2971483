//! Atomic file output and the tabular trace format.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ifmfix::report::format_sig17;
use ifmfix::solver::IterationTrace;
use ifmfix::space::Point;
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::CliError;

fn io_error(path: &Path, e: impl ToString) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Writes `contents` to `dir/name` through a temporary file in `dir` and a
/// rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    let mut file = NamedTempFile::new_in(dir).map_err(|e| io_error(dir, e))?;
    file.write_all(contents).map_err(|e| io_error(&path, e))?;
    file.as_file().sync_all().map_err(|e| io_error(&path, e))?;
    file.persist(&path).map_err(|e| io_error(&path, e.error))?;
    Ok(path)
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    text
}

fn point_columns(p: &Point) -> Vec<String> {
    match p {
        Point::Coords(c) => c.iter().map(|v| format_sig17(*v)).collect(),
        Point::Label(l) => vec![l.clone()],
    }
}

/// One header row, then one row per iterate: index, point components (or
/// label), μ and ν at each probe time, and the ball flag when present.
pub fn trace_csv(trace: &IterationTrace) -> String {
    let mut out = String::new();
    let mut header = vec!["n".to_string()];
    match trace.points.first() {
        Some(Point::Coords(c)) => header.extend((0..c.len()).map(|i| format!("x{i}"))),
        Some(Point::Label(_)) | None => header.push("point".into()),
    }
    for t in &trace.probe_ts {
        header.push(format!("mu_t={t}"));
        header.push(format!("nu_t={t}"));
    }
    if trace.ball_flags.is_some() {
        header.push("in_ball".into());
    }
    let _ = writeln!(out, "{}", header.join(","));
    for (n, (p, step)) in trace.points.iter().zip(&trace.steps).enumerate() {
        let mut row = vec![n.to_string()];
        row.extend(point_columns(p));
        for (mu, nu) in step.mu.iter().zip(&step.nu) {
            row.push(format_sig17(*mu));
            row.push(format_sig17(*nu));
        }
        if let Some(flags) = &trace.ball_flags {
            row.push(flags[n].to_string());
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}
