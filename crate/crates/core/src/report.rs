//! Audit reports and the line-oriented record format shared by every check.
//!
//! A record is one tab-separated line: `id`, `verdict`, `value`, `witness`.
//! Numbers in the value column carry 17 significant digits so a report can be
//! compared byte for byte across runs.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::space::Point;

/// Arguments at which an inequality was worst violated (or tightest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Witness {
    /// Scalar arguments, used by operator audits.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Point>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    #[serde(with = "float")]
    pub lhs: f64,
    #[serde(with = "float")]
    pub rhs: f64,
}

impl Witness {
    pub fn scalars(args: Vec<f64>, lhs: f64, rhs: f64) -> Self {
        Self {
            args,
            lhs,
            rhs,
            ..Self::default()
        }
    }

    pub fn at(points: Vec<Point>, times: Vec<f64>, lhs: f64, rhs: f64) -> Self {
        Self {
            points,
            times,
            lhs,
            rhs,
            ..Self::default()
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.args.is_empty() {
            parts.push(format!("args={}", join(self.args.iter())));
        }
        if !self.points.is_empty() {
            parts.push(format!("points={}", join(self.points.iter())));
        }
        if !self.times.is_empty() {
            parts.push(format!("t={}", join(self.times.iter())));
        }
        parts.push(format!("lhs={} rhs={}", self.lhs, self.rhs));
        f.write_str(&parts.join(" "))
    }
}

fn join<T: fmt::Display>(items: impl Iterator<Item = T>) -> String {
    let mut out = String::from("[");
    for (i, item) in items.enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{item}");
    }
    out.push(']');
    out
}

/// Outcome of auditing one clause or axiom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub clause: String,
    pub passed: bool,
    /// Largest observed violation; negative values are slack.
    #[serde(with = "float")]
    pub worst_violation: f64,
    pub witness: Option<Witness>,
    /// Number of individual inequality evaluations behind the verdict.
    pub checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub subject: String,
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn new(subject: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            entries: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn entry(&self, clause: &str) -> Option<&AuditEntry> {
        self.entries.iter().find(|e| e.clause == clause)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }
}

/// One line of the record format.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    pub verdict: String,
    pub value: f64,
    pub witness: String,
}

impl Record {
    pub fn new(
        id: impl Into<String>,
        verdict: impl Into<String>,
        value: f64,
        witness: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            verdict: verdict.into(),
            value,
            witness: witness.into(),
        }
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.id,
            self.verdict,
            format_sig17(self.value),
            if self.witness.is_empty() { "-" } else { &self.witness }
        )
    }
}

/// Renders a float with 17 significant digits in scientific notation.
pub fn format_sig17(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        format!("{value}")
    }
}

/// Types that serialize into the shared record format.
pub trait ToRecords {
    fn records(&self) -> Vec<Record>;

    fn render_records(&self) -> String {
        let mut out = String::new();
        for record in self.records() {
            let _ = writeln!(out, "{record}");
        }
        out
    }
}

fn verdict_word(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

impl ToRecords for AuditReport {
    fn records(&self) -> Vec<Record> {
        let mut records = vec![Record::new(
            format!("audit:{}", self.subject),
            verdict_word(self.passed()),
            self.entries.len() as f64,
            "",
        )];
        records.extend(self.entries.iter().map(|e| {
            Record::new(
                e.clause.clone(),
                verdict_word(e.passed),
                e.worst_violation,
                e.witness.as_ref().map(|w| w.to_string()).unwrap_or_default(),
            )
        }));
        records
    }
}

/// Keeps the worst (largest) violation seen so far; ties keep the earliest
/// sample index so that parallel reductions stay order-independent.
#[derive(Debug, Clone)]
pub(crate) struct Worst {
    pub violation: f64,
    pub index: usize,
    pub witness: Option<Witness>,
    pub checked: usize,
}

impl Worst {
    pub fn empty() -> Self {
        Self {
            violation: f64::NEG_INFINITY,
            index: usize::MAX,
            witness: None,
            checked: 0,
        }
    }

    pub fn observe(&mut self, violation: f64, index: usize, witness: impl FnOnce() -> Witness) {
        self.checked += 1;
        if self.beats(violation, index) {
            self.violation = violation;
            self.index = index;
            self.witness = Some(witness());
        }
    }

    fn beats(&self, violation: f64, index: usize) -> bool {
        // NaN is always worst.
        if violation.is_nan() {
            return !self.violation.is_nan() || index < self.index;
        }
        if self.violation.is_nan() {
            return false;
        }
        violation > self.violation || (violation == self.violation && index < self.index)
    }

    pub fn merge(mut self, other: Worst) -> Worst {
        let checked = self.checked + other.checked;
        if other.witness.is_some() && self.beats(other.violation, other.index) {
            self = other;
        }
        self.checked = checked;
        self
    }

    pub fn into_entry(self, clause: &str, passed: impl FnOnce(f64) -> bool) -> AuditEntry {
        let violation = if self.checked == 0 {
            0.0
        } else {
            self.violation
        };
        AuditEntry {
            clause: clause.to_string(),
            passed: self.checked == 0 || passed(violation),
            worst_violation: violation,
            witness: self.witness,
            checked: self.checked,
        }
    }
}

/// Serde adapter writing non-finite floats as the strings `inf`, `-inf` and
/// `NaN`, which JSON cannot represent as numbers.
pub mod float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    fn parse<E: de::Error>(repr: Repr) -> Result<f64, E> {
        match repr {
            Repr::Number(v) => Ok(v),
            Repr::Text(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "NaN" => Ok(f64::NAN),
                other => Err(E::custom(format!("expected a number, got `{other}`"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            s.serialize_f64(*value)
        } else {
            s.serialize_str(&value.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        parse(Repr::deserialize(d)?)
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(value: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match value {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<super::Repr>::deserialize(d)?
                .map(super::parse)
                .transpose()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_formatting() {
        assert_eq!(format_sig17(0.5), "5.0000000000000000e-1");
        assert_eq!(format_sig17(f64::INFINITY), "inf");
    }

    #[test]
    fn worst_merge_is_order_independent() {
        let mut a = Worst::empty();
        a.observe(1.0, 3, || Witness::scalars(vec![3.0], 1.0, 0.0));
        let mut b = Worst::empty();
        b.observe(1.0, 1, || Witness::scalars(vec![1.0], 1.0, 0.0));
        let ab = a.clone().merge(b.clone());
        let ba = b.merge(a);
        assert_eq!(ab.index, 1);
        assert_eq!(ba.index, 1);
        assert_eq!(ab.checked, 2);
    }

    #[test]
    fn record_line_layout() {
        let r = Record::new("i", "pass", -0.25, "");
        assert_eq!(r.to_string(), "i\tpass\t-2.5000000000000000e-1\t-");
    }
}
