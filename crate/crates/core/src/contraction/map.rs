use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{IfmSpace, Point, PointDomain};

pub type PointFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// A self-map of a space's point domain.
#[derive(Clone)]
pub enum SelfMap {
    /// `x -> A x + b` on a coordinate space.
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    /// Label-to-label lookup on a finite space.
    Table(BTreeMap<String, String>),
    /// Applies the maps left to right.
    Compose(Vec<SelfMap>),
    /// `exponent`-fold composition of `inner`.
    Power { inner: Box<SelfMap>, exponent: usize },
    Custom { name: String, f: PointFn },
}

impl fmt::Debug for SelfMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl SelfMap {
    pub fn affine(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        let n = offset.len();
        if n == 0 || matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "affine map needs a square matrix matching an offset of length {n}"
            )));
        }
        if matrix.iter().flatten().chain(&offset).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "affine map entries must be finite".into(),
            ));
        }
        Ok(SelfMap::Affine { matrix, offset })
    }

    /// `x -> a x + c` on the real line.
    pub fn scalar_affine(a: f64, c: f64) -> Result<Self> {
        Self::affine(vec![vec![a]], vec![c])
    }

    pub fn table<K: Into<String>, V: Into<String>>(
        entries: impl IntoIterator<Item = (K, V)>,
    ) -> Self {
        SelfMap::Table(
            entries
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        )
    }

    pub fn identity() -> Self {
        Self::custom("identity", |x: &Point| x.clone())
    }

    /// The map sending every point to `p`.
    pub fn constant(p: Point) -> Self {
        Self::custom(format!("constant:{p}"), move |_: &Point| p.clone())
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        SelfMap::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn power(self, exponent: usize) -> Result<Self> {
        if exponent == 0 {
            return Err(Error::InvalidArgument("power exponent must be at least 1".into()));
        }
        Ok(SelfMap::Power {
            inner: Box::new(self),
            exponent,
        })
    }

    /// `self` followed by `next`.
    pub fn then(self, next: SelfMap) -> Self {
        SelfMap::Compose(vec![self, next])
    }

    pub fn name(&self) -> String {
        match self {
            SelfMap::Affine { matrix, offset } => {
                let rows: Vec<String> = matrix
                    .iter()
                    .map(|r| {
                        let cells: Vec<String> = r.iter().map(f64::to_string).collect();
                        format!("[{}]", cells.join(", "))
                    })
                    .collect();
                let off: Vec<String> = offset.iter().map(f64::to_string).collect();
                format!("affine([{}], [{}])", rows.join(", "), off.join(", "))
            }
            SelfMap::Table(map) => {
                let cells: Vec<String> = map.iter().map(|(k, v)| format!("{k}->{v}")).collect();
                format!("table({})", cells.join(", "))
            }
            SelfMap::Compose(maps) => {
                let names: Vec<String> = maps.iter().map(SelfMap::name).collect();
                format!("compose({})", names.join(", "))
            }
            SelfMap::Power { inner, exponent } => format!("({})^{exponent}", inner.name()),
            SelfMap::Custom { name, .. } => name.clone(),
        }
    }

    /// Checks that the map's shape fits the domain.
    pub fn validate(&self, domain: &PointDomain) -> Result<()> {
        match (self, domain) {
            (SelfMap::Affine { offset, .. }, PointDomain::Coordinate { dimension, .. }) => {
                if offset.len() != *dimension {
                    return Err(Error::InvalidArgument(format!(
                        "affine map of dimension {} on a space of dimension {dimension}",
                        offset.len()
                    )));
                }
                Ok(())
            }
            (SelfMap::Affine { .. }, PointDomain::Finite { .. }) => Err(Error::InvalidArgument(
                "affine maps need a coordinate space".into(),
            )),
            (SelfMap::Table(map), PointDomain::Finite { labels }) => {
                for l in labels {
                    match map.get(l) {
                        None => {
                            return Err(Error::InvalidArgument(format!(
                                "table map has no image for `{l}`"
                            )))
                        }
                        Some(v) if !labels.contains(v) => {
                            return Err(Error::InvalidArgument(format!(
                                "table map sends `{l}` to unknown label `{v}`"
                            )))
                        }
                        Some(_) => {}
                    }
                }
                if let Some(k) = map.keys().find(|k| !labels.contains(k)) {
                    return Err(Error::InvalidArgument(format!(
                        "table map has an entry for unknown label `{k}`"
                    )));
                }
                Ok(())
            }
            (SelfMap::Table(_), PointDomain::Coordinate { .. }) => Err(Error::InvalidArgument(
                "table maps need a finite space".into(),
            )),
            (SelfMap::Compose(maps), _) => maps.iter().try_for_each(|m| m.validate(domain)),
            (SelfMap::Power { inner, .. }, _) => inner.validate(domain),
            (SelfMap::Custom { .. }, _) => Ok(()),
        }
    }

    /// Applies the map, failing if the image leaves the space's domain.
    pub fn apply(&self, space: &IfmSpace, x: &Point) -> Result<Point> {
        space.check_point(x)?;
        self.apply_in(space.domain(), x)
    }

    fn apply_in(&self, domain: &PointDomain, x: &Point) -> Result<Point> {
        let image = match self {
            SelfMap::Affine { matrix, offset } => {
                let c = x
                    .coords()
                    .filter(|c| c.len() == offset.len())
                    .ok_or_else(|| self.escape(x, "input does not match the matrix size"))?;
                Point::Coords(
                    matrix
                        .iter()
                        .zip(offset)
                        .map(|(row, b)| row.iter().zip(c).map(|(a, v)| a * v).sum::<f64>() + b)
                        .collect(),
                )
            }
            SelfMap::Table(map) => {
                let label = x
                    .label()
                    .ok_or_else(|| self.escape(x, "table maps act on labels"))?;
                Point::Label(
                    map.get(label)
                        .ok_or_else(|| self.escape(x, "no image in the table"))?
                        .clone(),
                )
            }
            SelfMap::Compose(maps) => {
                let mut p = x.clone();
                for m in maps {
                    p = m.apply_in(domain, &p)?;
                }
                p
            }
            SelfMap::Power { inner, exponent } => {
                let mut p = x.clone();
                for _ in 0..*exponent {
                    p = inner.apply_in(domain, &p)?;
                }
                p
            }
            SelfMap::Custom { f, .. } => f(x),
        };
        domain
            .check(&image)
            .map_err(|reason| self.escape(x, &reason))?;
        Ok(image)
    }

    fn escape(&self, x: &Point, reason: &str) -> Error {
        Error::DomainEscape {
            map: self.name(),
            input: x.clone(),
            reason: reason.to_string(),
        }
    }
}
