//! Points, labels, open balls and the classifier interface.

use std::fmt;

use crate::rng::RandomStream;
use crate::{Error, Result};

/// A point in `R^d` with finite coordinates, `d >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidPoint(
                "a point needs at least one coordinate".into(),
            ));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "coordinate {} is not finite ({})",
                i + 1,
                coords[i]
            )));
        }
        Ok(Point(coords))
    }

    /// Wraps coordinates produced by arithmetic on valid points.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// `self + scale * offset`, coordinate-wise.
    pub fn offset(&self, offset: &[f64], scale: f64) -> Point {
        debug_assert_eq!(self.dim(), offset.len());
        Point(
            self.0
                .iter()
                .zip(offset)
                .map(|(c, o)| c + scale * o)
                .collect(),
        )
    }
}

/// Panics if any coordinate is not finite.
impl<const N: usize> From<[f64; N]> for Point {
    fn from(coords: [f64; N]) -> Self {
        Point::new(coords.to_vec()).expect("invalid point literal")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Integer class id. Binary tasks use 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub u32);

impl Label {
    pub const ZERO: Label = Label(0);
    pub const ONE: Label = Label(1);

    /// The other binary label.
    pub fn flipped(self) -> Label {
        if self.0 == 0 {
            Label::ONE
        } else {
            Label::ZERO
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An open ball of constant label. Membership is strict: `dist < radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBall {
    pub center: Point,
    pub radius: f64,
    pub label: Label,
}

impl LabeledBall {
    pub fn new(center: Point, radius: f64, label: Label) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be finite and >= 0, got {radius}"
            )));
        }
        Ok(LabeledBall {
            center,
            radius,
            label,
        })
    }

    pub fn contains(&self, x: &Point) -> bool {
        dist(self.center.coords(), x.coords()) < self.radius
    }

    /// `max(0, |x - center| - radius)`.
    pub fn distance_to(&self, x: &Point) -> f64 {
        ball_dist(dist(self.center.coords(), x.coords()), self.radius)
    }
}

#[inline]
pub(crate) fn ball_dist(center_dist: f64, radius: f64) -> f64 {
    (center_dist - radius).max(0.0)
}

/// Euclidean distance between two points of equal dimension.
pub fn distance(p: &Point, q: &Point) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    Ok(dist(p.coords(), q.coords()))
}

/// Unchecked Euclidean distance; every distance in the crate goes through
/// this function so that indexed and linear scans agree bit for bit.
#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A predictor `h: X -> Y`. Implementations must be deterministic.
pub trait Classifier {
    fn predict(&self, x: &Point) -> Label;
}

impl<F> Classifier for F
where
    F: Fn(&Point) -> Label,
{
    fn predict(&self, x: &Point) -> Label {
        self(x)
    }
}

impl Classifier for Box<dyn Classifier + '_> {
    fn predict(&self, x: &Point) -> Label {
        (**self).predict(x)
    }
}

/// Draws points from a marginal distribution over the domain.
pub trait DomainSampler {
    fn dim(&self) -> usize;
    fn sample_point(&self, stream: &mut RandomStream) -> Point;
}

/// Draws labeled points from a joint distribution.
pub trait LabeledSampler: DomainSampler {
    fn sample_labeled(&self, stream: &mut RandomStream) -> (Point, Label);
}

/// Uniform distribution over an axis-aligned box.
#[derive(Debug, Clone)]
pub struct BoxSampler {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxSampler {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidParameter(
                "box bounds must be nonempty and of equal length".into(),
            ));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h))
        {
            return Err(Error::InvalidParameter(
                "box bounds must satisfy lo <= hi".into(),
            ));
        }
        Ok(BoxSampler { lo, hi })
    }

    pub fn unit(dim: usize) -> Self {
        BoxSampler {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }
}

impl DomainSampler for BoxSampler {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn sample_point(&self, stream: &mut RandomStream) -> Point {
        Point::from_raw(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(l, h)| l + (h - l) * stream.uniform())
                .collect(),
        )
    }
}
