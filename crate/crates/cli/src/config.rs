//! Experiment configuration: a TOML document naming a space, a map and one
//! action, plus shared numeric settings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ifmfix::contraction::{Notion, SelfMap};
use ifmfix::sampling::Region;
use ifmfix::solver::SolveConfig;
use ifmfix::space::{
    BallSpec, BaseMetric, IfmSpace, PairCurves, Point, PointDomain, TabulatedData, TimeParameter,
};
use ifmfix::tnorm::OperatorPair;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceConfig,
    #[serde(default = "default_operators")]
    pub operators: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapConfig>,
    pub action: ActionConfig,
    /// Probe grid, seed and solver budget shared by every action.
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_operators() -> String {
    "min-max".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceConfig {
    Induced {
        #[serde(default = "one")]
        dimension: usize,
        #[serde(default = "euclidean")]
        metric: BaseMetric,
    },
    Tabulated {
        labels: Vec<String>,
        pairs: Vec<PairCurves>,
    },
}

fn one() -> usize {
    1
}

fn euclidean() -> BaseMetric {
    BaseMetric::Euclidean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapConfig {
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    /// `identity`, or `constant` with `point`.
    Builtin {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        point: Option<Point>,
    },
    Table {
        entries: BTreeMap<String, String>,
    },
    Power {
        inner: Box<MapConfig>,
        exponent: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallConfig {
    pub center: Point,
    pub radius: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AuditTarget {
    #[default]
    Space,
    Operators,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Picard,
    ClosedBall,
    Power,
    TsIf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ActionConfig {
    Audit {
        #[serde(default)]
        target: AuditTarget,
        /// Sampled triples for a space audit.
        #[serde(default = "audit_samples")]
        samples: usize,
        /// Grid points per axis for an operator audit.
        #[serde(default = "audit_grid")]
        grid: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    Check {
        notion: Notion,
        #[serde(default = "check_samples")]
        samples: usize,
        #[serde(default = "check_epsilons")]
        epsilons: Vec<f64>,
        #[serde(default)]
        include_coincident: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ball: Option<BallConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<Point>,
        /// Iterates generated for a contractive-sequence check.
        #[serde(default = "sequence_length")]
        length: usize,
    },
    Solve {
        regime: Regime,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<Point>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ball: Option<BallConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
        /// Extra starts for a uniqueness probe.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        starts: Vec<Point>,
    },
}

fn audit_samples() -> usize {
    10_000
}

fn audit_grid() -> usize {
    100
}

fn check_samples() -> usize {
    1000
}

fn check_epsilons() -> Vec<f64> {
    vec![0.1, 0.01]
}

fn sequence_length() -> usize {
    20
}

impl ActionConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ActionConfig::Audit { .. } => "audit",
            ActionConfig::Check { .. } => "check",
            ActionConfig::Solve { .. } => "solve",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

fn field(field: &str, message: impl ToString) -> CliError {
    CliError::Config {
        field: field.to_string(),
        message: message.to_string(),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse { message, .. } => CliError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })
    }

    pub fn build_space(&self) -> Result<IfmSpace, CliError> {
        let operators =
            OperatorPair::by_name(&self.operators).map_err(|e| field("operators", e))?;
        match &self.space {
            SpaceConfig::Induced { dimension, metric } => IfmSpace::induced_from_metric(
                PointDomain::Coordinate {
                    dimension: *dimension,
                    metric: *metric,
                },
                operators,
            )
            .map_err(|e| field("space", e)),
            SpaceConfig::Tabulated { labels, pairs } => IfmSpace::finite_tabulated(
                &TabulatedData {
                    labels: labels.clone(),
                    pairs: pairs.clone(),
                },
                operators,
            )
            .map_err(|e| field("space", e)),
        }
    }

    pub fn build_map(&self, space: &IfmSpace) -> Result<SelfMap, CliError> {
        let config = self
            .map
            .as_ref()
            .ok_or_else(|| field("map", "this action needs a map"))?;
        let map = build_map(config, "map")?;
        map.validate(space.domain()).map_err(|e| field("map", e))?;
        Ok(map)
    }

    pub fn probe_ts(&self) -> &[TimeParameter] {
        &self.solve.probe_ts
    }
}

fn build_map(config: &MapConfig, path: &str) -> Result<SelfMap, CliError> {
    match config {
        MapConfig::Affine { matrix, offset } => {
            SelfMap::affine(matrix.clone(), offset.clone()).map_err(|e| field(path, e))
        }
        MapConfig::Builtin { name, point } => match (name.as_str(), point) {
            ("identity", None) => Ok(SelfMap::identity()),
            ("constant", Some(p)) => Ok(SelfMap::constant(p.clone())),
            ("constant", None) => Err(field(&format!("{path}.point"), "constant map needs a point")),
            ("identity", Some(_)) => Err(field(&format!("{path}.point"), "identity takes no point")),
            (other, _) => Err(field(
                &format!("{path}.name"),
                format!("unknown builtin `{other}` (expected identity or constant)"),
            )),
        },
        MapConfig::Table { entries } => Ok(SelfMap::table(entries.clone())),
        MapConfig::Power { inner, exponent } => build_map(inner, &format!("{path}.inner"))?
            .power(*exponent)
            .map_err(|e| field(&format!("{path}.exponent"), e)),
    }
}

pub fn check_point(space: &IfmSpace, p: &Point, path: &str) -> Result<(), CliError> {
    space.check_point(p).map_err(|e| field(path, e))
}

pub fn require<'a, T>(value: &'a Option<T>, path: &str) -> Result<&'a T, CliError> {
    value
        .as_ref()
        .ok_or_else(|| field(path, "required for this action"))
}

pub fn ball_spec(space: &IfmSpace, ball: &BallConfig, path: &str) -> Result<BallSpec, CliError> {
    check_point(space, &ball.center, &format!("{path}.center"))?;
    let t = TimeParameter::new(ball.t).map_err(|e| field(&format!("{path}.t"), e))?;
    BallSpec::new(ball.center.clone(), ball.radius, t).map_err(|e| field(&format!("{path}.radius"), e))
}

pub fn unit_open(value: f64, path: &str) -> Result<f64, CliError> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(field(path, format!("must lie in (0, 1), got {value}")))
    }
}

pub fn region(space: &IfmSpace, ball: &Option<BallConfig>, path: &str) -> Result<Region, CliError> {
    Ok(match ball {
        Some(b) => Region::Ball(ball_spec(space, b, path)?),
        None => Region::Whole,
    })
}

pub fn validate_solve(config: &SolveConfig) -> Result<(), CliError> {
    config.validate().map_err(|e| field("solve", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_solve() {
        let c = ExperimentConfig::parse(
            r#"
            space = { kind = "induced" }
            map = { kind = "affine", matrix = [[0.5]], offset = [1.0] }
            action = { kind = "solve", regime = "picard", x0 = [0.0] }
            "#,
        )
        .unwrap();
        assert_eq!(c.operators, "min-max");
        assert_eq!(c.solve, SolveConfig::default());
        let space = c.build_space().unwrap();
        c.build_map(&space).unwrap();
    }

    #[test]
    fn unknown_field_names_the_field() {
        let err = ExperimentConfig::parse(
            r#"
            space = { kind = "induced", dimensions = 2 }
            action = { kind = "audit" }
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("dimensions"), "{err}");
    }

    #[test]
    fn parse_errors_carry_a_line() {
        let err = ExperimentConfig::parse("space = { kind = \"induced\" }\naction = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn map_errors_carry_a_path() {
        let c = ExperimentConfig::parse(
            r#"
            space = { kind = "induced", dimension = 2 }
            map = { kind = "power", exponent = 0, inner = { kind = "builtin", name = "identity" } }
            action = { kind = "solve", regime = "power", x0 = [0.0, 0.0], m = 2 }
            "#,
        )
        .unwrap();
        let space = c.build_space().unwrap();
        let err = c.build_map(&space).unwrap_err();
        assert!(err.to_string().contains("map.exponent"), "{err}");
    }
}
