//! Pairwise μ/ν curves for finite spaces.
//!
//! Curves interpolate linearly between breakpoints and stay constant before
//! the first and after the last breakpoint, so monotone breakpoints give a
//! monotone, continuous curve.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A curve over `t > 0`: either a constant or `(t, value)` breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Curve {
    Constant(f64),
    Breakpoints(Vec<(f64, f64)>),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Trend {
    NonDecreasing,
    NonIncreasing,
}

impl Curve {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Curve::Constant(v) => *v,
            Curve::Breakpoints(points) => {
                let first = points[0];
                if t <= first.0 {
                    return first.1;
                }
                for w in points.windows(2) {
                    let ((t0, v0), (t1, v1)) = (w[0], w[1]);
                    if t <= t1 {
                        let s = (t - t0) / (t1 - t0);
                        return v0 + s * (v1 - v0);
                    }
                }
                points[points.len() - 1].1
            }
        }
    }

    pub(crate) fn validate(&self, what: &str, trend: Trend) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        match self {
            Curve::Constant(v) if in_unit(*v) => Ok(()),
            Curve::Constant(v) => Err(Error::InvalidTable(format!(
                "{what}: constant {v} outside [0, 1]"
            ))),
            Curve::Breakpoints(points) => {
                if points.is_empty() {
                    return Err(Error::InvalidTable(format!("{what}: no breakpoints")));
                }
                for &(t, v) in points {
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(Error::InvalidTable(format!(
                            "{what}: breakpoint time {t} is not a positive finite number"
                        )));
                    }
                    if !in_unit(v) {
                        return Err(Error::InvalidTable(format!(
                            "{what}: value {v} at t = {t} outside [0, 1]"
                        )));
                    }
                }
                for w in points.windows(2) {
                    let ((t0, v0), (t1, v1)) = (w[0], w[1]);
                    if t1 <= t0 {
                        return Err(Error::InvalidTable(format!(
                            "{what}: breakpoint times must increase ({t0} then {t1})"
                        )));
                    }
                    let bad = match trend {
                        Trend::NonDecreasing => v1 < v0,
                        Trend::NonIncreasing => v1 > v0,
                    };
                    if bad {
                        let dir = match trend {
                            Trend::NonDecreasing => "nondecreasing",
                            Trend::NonIncreasing => "nonincreasing",
                        };
                        return Err(Error::InvalidTable(format!(
                            "{what}: must be {dir} in t, but goes from {v0} at t = {t0} to {v1} at t = {t1}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// μ and ν curves for one unordered pair of distinct labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairCurves {
    pub a: String,
    pub b: String,
    pub mu: Curve,
    pub nu: Curve,
}

/// Input for a finite tabulated space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedData {
    pub labels: Vec<String>,
    pub pairs: Vec<PairCurves>,
}

impl TabulatedData {
    /// Every distinct pair gets the same constant μ and ν.
    pub fn constant(labels: &[&str], mu: f64, nu: f64) -> Self {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        let mut pairs = Vec::new();
        for i in 0..labels.len() {
            for j in i + 1..labels.len() {
                pairs.push(PairCurves {
                    a: labels[i].clone(),
                    b: labels[j].clone(),
                    mu: Curve::Constant(mu),
                    nu: Curve::Constant(nu),
                });
            }
        }
        Self { labels, pairs }
    }
}

/// Validated lookup table indexed by label position.
#[derive(Debug, Clone)]
pub(crate) struct Table {
    pub labels: Vec<String>,
    index: HashMap<String, usize>,
    // Upper triangle, row-major over i < j.
    curves: Vec<Option<(Curve, Curve)>>,
}

impl Table {
    pub fn build(data: &TabulatedData) -> Result<Self> {
        if data.labels.is_empty() {
            return Err(Error::InvalidTable("at least one label is required".into()));
        }
        let mut index = HashMap::new();
        for (i, l) in data.labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidTable(format!("duplicate label `{l}`")));
            }
        }
        let n = data.labels.len();
        let mut table = Table {
            labels: data.labels.clone(),
            index,
            curves: vec![None; n * n],
        };
        for pc in &data.pairs {
            let i = table.lookup(&pc.a)?;
            let j = table.lookup(&pc.b)?;
            if i == j {
                return Err(Error::InvalidTable(format!(
                    "pair ({}, {}) is diagonal; diagonal values are fixed at (1, 0)",
                    pc.a, pc.b
                )));
            }
            let what = format!("pair ({}, {})", pc.a, pc.b);
            pc.mu.validate(&format!("{what} mu"), Trend::NonDecreasing)?;
            pc.nu.validate(&format!("{what} nu"), Trend::NonIncreasing)?;
            let slot = &mut table.curves[Self::slot(n, i, j)];
            if slot.is_some() {
                return Err(Error::InvalidTable(format!("{what} given more than once")));
            }
            *slot = Some((pc.mu.clone(), pc.nu.clone()));
        }
        for i in 0..n {
            for j in i + 1..n {
                if table.curves[Self::slot(n, i, j)].is_none() {
                    return Err(Error::InvalidTable(format!(
                        "missing data for pair ({}, {})",
                        table.labels[i], table.labels[j]
                    )));
                }
            }
        }
        Ok(table)
    }

    fn slot(n: usize, i: usize, j: usize) -> usize {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        lo * n + hi
    }

    fn lookup(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::InvalidTable(format!("unknown label `{label}`")))
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// μ and ν for labels at positions `i != j`.
    pub fn eval(&self, i: usize, j: usize, t: f64) -> (f64, f64) {
        let (mu, nu) = self.curves[Self::slot(self.labels.len(), i, j)]
            .as_ref()
            .expect("table validated at construction");
        (mu.eval(t), nu.eval(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_constant_extension() {
        let c = Curve::Breakpoints(vec![(1.0, 0.2), (3.0, 0.6)]);
        assert_eq!(c.eval(0.5), 0.2);
        assert_eq!(c.eval(1.0), 0.2);
        assert!((c.eval(2.0) - 0.4).abs() < 1e-15);
        assert_eq!(c.eval(100.0), 0.6);
    }

    #[test]
    fn rejects_decreasing_mu() {
        let c = Curve::Breakpoints(vec![(1.0, 0.6), (2.0, 0.5)]);
        assert!(c.validate("mu", Trend::NonDecreasing).is_err());
        assert!(c.validate("nu", Trend::NonIncreasing).is_ok());
    }

    #[test]
    fn rejects_missing_pair() {
        let mut data = TabulatedData::constant(&["a", "b", "c"], 0.4, 0.5);
        data.pairs.pop();
        let err = Table::build(&data).unwrap_err();
        assert!(err.to_string().contains("missing data"), "{err}");
    }

    #[test]
    fn rejects_duplicates_and_unknown_labels() {
        let mut data = TabulatedData::constant(&["a", "b"], 0.4, 0.5);
        data.pairs.push(data.pairs[0].clone());
        assert!(Table::build(&data).is_err());

        let mut data = TabulatedData::constant(&["a", "b"], 0.4, 0.5);
        data.pairs[0].b = "z".into();
        assert!(Table::build(&data).is_err());
    }
}
