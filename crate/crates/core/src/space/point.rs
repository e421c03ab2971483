use std::fmt;

use serde::{Deserialize, Serialize};

/// A point of a coordinate space or a label of a finite space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Coords(Vec<f64>),
    Label(String),
}

impl Point {
    pub fn scalar(x: f64) -> Self {
        Point::Coords(vec![x])
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Coords(c) => Some(c),
            Point::Label(_) => None,
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            Point::Label(l) => Some(l),
            Point::Coords(_) => None,
        }
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::scalar(x)
    }
}

impl From<Vec<f64>> for Point {
    fn from(c: Vec<f64>) -> Self {
        Point::Coords(c)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(c: [f64; N]) -> Self {
        Point::Coords(c.to_vec())
    }
}

impl From<&str> for Point {
    fn from(l: &str) -> Self {
        Point::Label(l.to_string())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Label(l) => write!(f, "{l}"),
            Point::Coords(c) => {
                f.write_str("(")?;
                for (i, x) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x:?}")?;
                }
                f.write_str(")")
            }
        }
    }
}
