use thiserror::Error;

use crate::space::Point;

/// Errors raised by constructors, evaluators and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {value} is outside the unit interval")]
    OutOfUnitInterval { value: f64 },

    #[error("time parameter must be strictly positive, got {value}")]
    NonPositiveTime { value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator `{operator}` returned {value} for ({a}, {b}), outside [0, 1]")]
    RangeViolation {
        operator: String,
        a: f64,
        b: f64,
        value: f64,
    },

    #[error("no witness found for `{inequality}` within {iterations} bisection steps")]
    NoWitness {
        inequality: &'static str,
        iterations: usize,
    },

    #[error("operator pair `{0}` is not idempotent; an IFM space requires a*a = a and a<>a = a")]
    NonIdempotentOperators(String),

    #[error("invalid tabulated space: {0}")]
    InvalidTable(String),

    #[error("unknown point {0}")]
    UnknownPoint(Point),

    #[error("map `{map}` sends {input} outside the domain ({reason})")]
    DomainEscape {
        map: String,
        input: Point,
        reason: String,
    },

    #[error("iterate {index} left the domain: {source}")]
    IterationEscape {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sequence {index} is not convergent to its stated limit")]
    NotConvergent { index: usize },

    #[error("unknown operator pair `{0}` (expected min-max, product-probsum or lukasiewicz)")]
    UnknownOperators(String),
}

pub type Result<T> = std::result::Result<T, Error>;
