//! Seeded point and pair sampling over a region of a space.
//!
//! Coordinate spaces are sampled from a box; half of the pairs are drawn
//! uniformly and half as near pairs `y = x + s u` with a random unit direction
//! `u` and a log-uniform scale `s`, so that both large and small distances are
//! exercised. Finite spaces are sampled over labels, enumerating every pair
//! when the budget allows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{BallSpec, IfmSpace, Point, PointDomain};

/// Half-width of the default sampling box around the origin.
pub const DEFAULT_HALF_WIDTH: f64 = 10.0;

/// Near pairs use scales down to `10^-NEAR_DECADES` of the box half-width.
const NEAR_DECADES: f64 = 4.0;

const MAX_REJECTIONS: usize = 10_000;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Where samples are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// A box of [`DEFAULT_HALF_WIDTH`] around the origin, or every label.
    #[default]
    Whole,
    Box { center: Vec<f64>, half_width: f64 },
    /// Points of the closed ball.
    Ball(BallSpec),
}

impl Region {
    /// Whether `p` lies in the region. Boxes are closed.
    pub fn contains(&self, space: &IfmSpace, p: &Point) -> bool {
        if !space.domain().contains(p) {
            return false;
        }
        match self {
            Region::Whole => true,
            Region::Box { center, half_width } => p
                .coords()
                .is_some_and(|c| c.iter().zip(center).all(|(x, c)| (x - c).abs() <= *half_width)),
            Region::Ball(ball) => space
                .eval_raw(&ball.center, p, ball.time.value())
                .within(ball.radius),
        }
    }
}

pub struct PointSampler<'a> {
    space: &'a IfmSpace,
    region: Region,
    rng: ChaCha8Rng,
    center: Vec<f64>,
    half_width: f64,
    labels: Vec<String>,
}

impl<'a> PointSampler<'a> {
    pub fn new(space: &'a IfmSpace, region: &Region, seed: u64) -> Result<Self> {
        let mut sampler = Self {
            space,
            region: region.clone(),
            rng: seeded_rng(seed),
            center: Vec::new(),
            half_width: DEFAULT_HALF_WIDTH,
            labels: Vec::new(),
        };
        match space.domain() {
            PointDomain::Coordinate { dimension, .. } => {
                sampler.center = vec![0.0; *dimension];
                match region {
                    Region::Whole => {}
                    Region::Box { center, half_width } => {
                        if center.len() != *dimension || !(*half_width > 0.0) {
                            return Err(Error::InvalidArgument(format!(
                                "sampling box needs {dimension} center coordinates and a positive half-width"
                            )));
                        }
                        sampler.center = center.clone();
                        sampler.half_width = *half_width;
                    }
                    Region::Ball(ball) => {
                        space.check_point(&ball.center)?;
                        sampler.center = ball.center.coords().unwrap_or_default().to_vec();
                        if space.is_induced() {
                            // μ >= 1 - r  <=>  d <= t r / (1 - r).
                            let t = ball.time.value();
                            sampler.half_width = t * ball.radius / (1.0 - ball.radius);
                        }
                    }
                }
            }
            PointDomain::Finite { labels } => {
                let kept: Vec<String> = labels
                    .iter()
                    .filter(|l| sampler.in_region(&Point::Label((*l).clone())))
                    .cloned()
                    .collect();
                sampler.labels = kept;
                if sampler.labels.is_empty() {
                    return Err(Error::InvalidArgument("sampling region has no points".into()));
                }
            }
        }
        Ok(sampler)
    }

    fn in_region(&self, p: &Point) -> bool {
        self.region.contains(self.space, p)
    }

    fn box_point(&mut self) -> Vec<f64> {
        let hw = self.half_width;
        let rng = &mut self.rng;
        self.center
            .iter()
            .map(|c| c + hw * (2.0 * rng.random::<f64>() - 1.0))
            .collect()
    }

    fn direction(&mut self) -> Vec<f64> {
        let dim = self.center.len();
        loop {
            let v: Vec<f64> = (0..dim)
                .map(|_| 2.0 * self.rng.random::<f64>() - 1.0)
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 && norm <= 1.0 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    fn retry<T>(&mut self, mut draw: impl FnMut(&mut Self) -> Option<T>) -> Result<T> {
        for _ in 0..MAX_REJECTIONS {
            if let Some(v) = draw(self) {
                return Ok(v);
            }
        }
        Err(Error::InvalidArgument(
            "could not draw a point inside the sampling region".into(),
        ))
    }

    /// A uniformly drawn point of the region.
    pub fn point(&mut self) -> Result<Point> {
        if !self.labels.is_empty() {
            let i = self.rng.random_range(0..self.labels.len());
            return Ok(Point::Label(self.labels[i].clone()));
        }
        self.retry(|s| {
            let p = Point::Coords(s.box_point());
            s.in_region(&p).then_some(p)
        })
    }

    /// A point near `x`, at a log-uniform scale.
    pub fn near(&mut self, x: &Point) -> Result<Point> {
        let Point::Coords(base) = x else {
            return self.point();
        };
        let base = base.clone();
        self.retry(|s| {
            let scale = s.half_width * 10f64.powf(-NEAR_DECADES * s.rng.random::<f64>());
            let dir = s.direction();
            let p = Point::Coords(base.iter().zip(&dir).map(|(b, d)| b + scale * d).collect());
            s.in_region(&p).then_some(p)
        })
    }

    /// Either a uniform point or one near `x`, with equal probability.
    pub fn uniform_or_near(&mut self, x: &Point) -> Result<Point> {
        if self.rng.random::<bool>() {
            self.point()
        } else {
            self.near(x)
        }
    }

    /// Pairs `(c, c + s e_i)` along each coordinate axis through the region
    /// center, with `s = min(1, half_width / 2)`. Empty for finite spaces.
    pub fn axis_pairs(&self) -> Vec<(Point, Point)> {
        if !self.labels.is_empty() || self.space.domain().dimension().is_none() {
            return Vec::new();
        }
        let step = self.half_width.min(2.0) / 2.0;
        let c = Point::Coords(self.center.clone());
        (0..self.center.len())
            .filter_map(|i| {
                let mut y = self.center.clone();
                y[i] += step;
                let y = Point::Coords(y);
                (self.in_region(&c) && self.in_region(&y)).then(|| (c.clone(), y))
            })
            .collect()
    }

    /// `count` pairs of distinct points, axis probes first. Finite regions with
    /// at most `count` unordered pairs are enumerated exhaustively.
    pub fn distinct_pairs(&mut self, count: usize) -> Result<Vec<(Point, Point)>> {
        if !self.labels.is_empty() {
            let n = self.labels.len();
            if n < 2 {
                return Ok(Vec::new());
            }
            if n * (n - 1) / 2 <= count {
                let mut pairs = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        pairs.push((
                            Point::Label(self.labels[i].clone()),
                            Point::Label(self.labels[j].clone()),
                        ));
                    }
                }
                return Ok(pairs);
            }
            let mut pairs = Vec::with_capacity(count);
            while pairs.len() < count {
                let i = self.rng.random_range(0..n);
                let j = self.rng.random_range(0..n);
                if i != j {
                    pairs.push((
                        Point::Label(self.labels[i].clone()),
                        Point::Label(self.labels[j].clone()),
                    ));
                }
            }
            return Ok(pairs);
        }
        let mut pairs = self.axis_pairs();
        pairs.truncate(count);
        while pairs.len() < count {
            let x = self.point()?;
            let y = self.uniform_or_near(&x)?;
            if x != y {
                pairs.push((x, y));
            }
        }
        Ok(pairs)
    }

    /// Triples `(x, y, z)` where `y` and `z` are each uniform or near their
    /// predecessor. Coincidences are allowed.
    pub fn triples(&mut self, count: usize) -> Result<Vec<(Point, Point, Point)>> {
        (0..count)
            .map(|_| {
                let x = self.point()?;
                let y = self.uniform_or_near(&x)?;
                let z = self.uniform_or_near(&y)?;
                Ok((x, y, z))
            })
            .collect()
    }
}
