//! Synthetic two-class manifolds in the unit square and train/test splits.
//!
//! Every shape is a union of one-dimensional curves in the plane, one set of
//! curves per class, mapped into `[0,1]^2` by a shape-specific similarity
//! transform (uniform scale plus translation, so distances scale uniformly).
//! Points are sampled uniformly in arc length.
//!
//! | shape     | class 0                                  | class 1                      |
//! |-----------|------------------------------------------|------------------------------|
//! | `sines`   | `y = 0.5 sin(2πx)`, `x ∈ [0,2]`          | same curve shifted up by 0.6 |
//! | `sfigure` | upper unit half-circle at (0,0) followed by lower unit half-circle at (2,0) | same chain shifted up by 0.4 |
//! | `nnn`     | first and third "N" stroke               | middle "N" stroke            |
//! | `circles` | circle of radius 1 at the origin         | circle of radius 2           |
//! | `boxes`   | square outline of side 1                 | square outline of side 2     |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::geometry::{DomainSampler, Label, LabeledSampler, Point};
use crate::rng::RandomStream;
use crate::{Error, LabeledDataset, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Sines,
    SFigure,
    Nnn,
    Circles,
    Boxes,
}

impl Shape {
    pub const ALL: [Shape; 5] = [
        Shape::Sines,
        Shape::SFigure,
        Shape::Nnn,
        Shape::Circles,
        Shape::Boxes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Sines => "sines",
            Shape::SFigure => "sfigure",
            Shape::Nnn => "nnn",
            Shape::Circles => "circles",
            Shape::Boxes => "boxes",
        }
    }

    /// The shape's curves and its map into the unit square.
    pub fn geometry(self) -> ShapeGeometry {
        ShapeGeometry::new(self)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|sh| sh.name() == s)
            .ok_or_else(|| Error::UnknownShape(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub shape: Shape,
    pub n: usize,
    pub seed: u64,
    pub label_noise: f64,
}

impl ShapeSpec {
    pub fn new(shape: Shape, n: usize, seed: u64) -> Self {
        ShapeSpec {
            shape,
            n,
            seed,
            label_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

const SINE_TABLE: usize = 8192;

#[derive(Debug, Clone)]
enum Piece {
    Segment {
        a: [f64; 2],
        b: [f64; 2],
    },
    /// Circle arc starting at angle `start`, sweeping `sweep` radians.
    Arc {
        center: [f64; 2],
        radius: f64,
        start: f64,
        sweep: f64,
    },
    /// Graph of `amp * sin(2πx) + offset` over `[x0, x1]`, with a cumulative
    /// arc-length table for inversion.
    Sine {
        x0: f64,
        x1: f64,
        amp: f64,
        offset: f64,
        cum: Vec<f64>,
    },
}

impl Piece {
    fn sine(x0: f64, x1: f64, amp: f64, offset: f64) -> Piece {
        let f = |x: f64| amp * (2.0 * PI * x).sin() + offset;
        let mut cum = Vec::with_capacity(SINE_TABLE + 1);
        cum.push(0.0);
        let h = (x1 - x0) / SINE_TABLE as f64;
        let mut acc = 0.0;
        for i in 0..SINE_TABLE {
            let xa = x0 + i as f64 * h;
            let xb = xa + h;
            acc += (h * h + (f(xb) - f(xa)).powi(2)).sqrt();
            cum.push(acc);
        }
        Piece::Sine {
            x0,
            x1,
            amp,
            offset,
            cum,
        }
    }

    fn length(&self) -> f64 {
        match self {
            Piece::Segment { a, b } => ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt(),
            Piece::Arc { radius, sweep, .. } => radius * sweep.abs(),
            Piece::Sine { cum, .. } => *cum.last().unwrap(),
        }
    }

    /// Point at arc length `s` in `[0, length]`, in raw coordinates.
    fn at(&self, s: f64) -> [f64; 2] {
        match self {
            Piece::Segment { a, b } => {
                let t = if self.length() > 0.0 {
                    s / self.length()
                } else {
                    0.0
                };
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
            }
            Piece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let theta = start + sweep.signum() * s / radius;
                [
                    center[0] + radius * theta.cos(),
                    center[1] + radius * theta.sin(),
                ]
            }
            Piece::Sine {
                x0,
                x1,
                amp,
                offset,
                cum,
            } => {
                let i = cum.partition_point(|&c| c <= s).clamp(1, cum.len() - 1);
                let (ca, cb) = (cum[i - 1], cum[i]);
                let frac = if cb > ca {
                    ((s - ca) / (cb - ca)).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let h = (x1 - x0) / (cum.len() - 1) as f64;
                let x = (x0 + ((i - 1) as f64 + frac) * h).min(*x1);
                [x, amp * (2.0 * PI * x).sin() + offset]
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Curve {
    pieces: Vec<Piece>,
    cum: Vec<f64>,
}

impl Curve {
    fn new(pieces: Vec<Piece>) -> Self {
        let mut cum = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for p in &pieces {
            acc += p.length();
            cum.push(acc);
        }
        Curve { pieces, cum }
    }

    fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn at(&self, s: f64) -> [f64; 2] {
        let i = self
            .cum
            .partition_point(|&c| c <= s)
            .min(self.pieces.len() - 1);
        let start = if i == 0 { 0.0 } else { self.cum[i - 1] };
        let piece = &self.pieces[i];
        piece.at((s - start).clamp(0.0, piece.length()))
    }
}

fn polyline(pts: &[[f64; 2]]) -> Vec<Piece> {
    pts.windows(2)
        .map(|w| Piece::Segment { a: w[0], b: w[1] })
        .collect()
}

fn square(half: f64) -> Vec<Piece> {
    polyline(&[
        [-half, -half],
        [half, -half],
        [half, half],
        [-half, half],
        [-half, -half],
    ])
}

fn n_stroke(x0: f64, width: f64) -> Vec<Piece> {
    polyline(&[[x0, 0.0], [x0, 1.0], [x0 + width, 0.0], [x0 + width, 1.0]])
}

fn s_chain(dy: f64) -> Vec<Piece> {
    vec![
        Piece::Arc {
            center: [0.0, dy],
            radius: 1.0,
            start: PI,
            sweep: -PI,
        },
        Piece::Arc {
            center: [2.0, dy],
            radius: 1.0,
            start: PI,
            sweep: PI,
        },
    ]
}

/// Curves of a shape plus the similarity transform into `[0,1]^2`.
#[derive(Debug, Clone)]
pub struct ShapeGeometry {
    shape: Shape,
    classes: [Curve; 2],
    lo: [f64; 2],
    scale: f64,
    pad: [f64; 2],
}

impl ShapeGeometry {
    fn new(shape: Shape) -> Self {
        let (c0, c1, lo, hi): (Vec<Piece>, Vec<Piece>, [f64; 2], [f64; 2]) = match shape {
            Shape::Sines => (
                vec![Piece::sine(0.0, 2.0, 0.5, 0.0)],
                vec![Piece::sine(0.0, 2.0, 0.5, 0.6)],
                [0.0, -0.5],
                [2.0, 1.1],
            ),
            Shape::SFigure => (s_chain(0.0), s_chain(0.4), [-1.0, -1.0], [3.0, 1.4]),
            Shape::Nnn => {
                let (w, gap) = (0.6, 0.3);
                let mut outer = n_stroke(0.0, w);
                outer.extend(n_stroke(2.0 * (w + gap), w));
                (
                    outer,
                    n_stroke(w + gap, w),
                    [0.0, 0.0],
                    [3.0 * w + 2.0 * gap, 1.0],
                )
            }
            Shape::Circles => (
                vec![Piece::Arc {
                    center: [0.0, 0.0],
                    radius: 1.0,
                    start: 0.0,
                    sweep: 2.0 * PI,
                }],
                vec![Piece::Arc {
                    center: [0.0, 0.0],
                    radius: 2.0,
                    start: 0.0,
                    sweep: 2.0 * PI,
                }],
                [-2.0, -2.0],
                [2.0, 2.0],
            ),
            Shape::Boxes => (square(0.5), square(1.0), [-1.0, -1.0], [1.0, 1.0]),
        };
        let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
        let scale = 1.0 / w.max(h);
        let pad = [(1.0 - w * scale) / 2.0, (1.0 - h * scale) / 2.0];
        ShapeGeometry {
            shape,
            classes: [Curve::new(c0), Curve::new(c1)],
            lo,
            scale,
            pad,
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Raw-to-unit-square scale factor.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn normalize(&self, raw: [f64; 2]) -> Point {
        let c = |k: usize| ((raw[k] - self.lo[k]) * self.scale + self.pad[k]).clamp(0.0, 1.0);
        Point::from_raw(vec![c(0), c(1)])
    }

    pub fn denormalize(&self, p: &Point) -> [f64; 2] {
        let c = |k: usize| (p.coords()[k] - self.pad[k]) / self.scale + self.lo[k];
        [c(0), c(1)]
    }

    /// Total arc length of a class's curves in raw coordinates.
    pub fn class_length(&self, label: Label) -> f64 {
        self.classes[label.0 as usize].length()
    }

    pub fn sample_class(&self, label: Label, stream: &mut RandomStream) -> Point {
        let curve = &self.classes[label.0 as usize];
        let s = stream.uniform() * curve.length();
        self.normalize(curve.at(s))
    }

    /// `count` points evenly spaced in arc length along a class's curves.
    pub fn support(&self, label: Label, count: usize) -> Vec<Point> {
        let curve = &self.classes[label.0 as usize];
        let len = curve.length();
        (0..count)
            .map(|j| self.normalize(curve.at((j as f64 + 0.5) / count as f64 * len)))
            .collect()
    }
}

/// Samples the shape's distribution: class uniformly, then a point uniformly
/// in arc length on that class's curves.
#[derive(Debug, Clone)]
pub struct ShapeSampler {
    geometry: ShapeGeometry,
}

impl ShapeSampler {
    pub fn new(shape: Shape) -> Self {
        ShapeSampler {
            geometry: shape.geometry(),
        }
    }
}

impl DomainSampler for ShapeSampler {
    fn dim(&self) -> usize {
        2
    }

    fn sample_point(&self, stream: &mut RandomStream) -> Point {
        self.sample_labeled(stream).0
    }
}

impl LabeledSampler for ShapeSampler {
    fn sample_labeled(&self, stream: &mut RandomStream) -> (Point, Label) {
        let label = if stream.bernoulli(0.5) {
            Label::ONE
        } else {
            Label::ZERO
        };
        (self.geometry.sample_class(label, stream), label)
    }
}

/// Draws `n` points: item `i` belongs to class `i % 2`. With label noise each
/// label is flipped independently, except items 0 and 1, which keep both
/// classes present.
pub fn generate(spec: &ShapeSpec) -> Result<LabeledDataset> {
    if spec.n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need n >= 2, got {}",
            spec.n
        )));
    }
    if !(0.0..1.0).contains(&spec.label_noise) {
        return Err(Error::InvalidParameter(format!(
            "label noise must lie in [0, 1), got {}",
            spec.label_noise
        )));
    }
    let geometry = spec.shape.geometry();
    let root = RandomStream::new(spec.seed);
    let mut points_stream = root.child(0);
    let mut noise_stream = root.child(1);
    let mut points = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let class = Label((i % 2) as u32);
        points.push(geometry.sample_class(class, &mut points_stream));
        let flip = spec.label_noise > 0.0 && noise_stream.bernoulli(spec.label_noise) && i >= 2;
        labels.push(if flip { class.flipped() } else { class });
    }
    LabeledDataset::new(points, labels)
}

/// Shuffles deterministically and cuts off the first `round(f * n)` items as
/// the training set.
pub fn split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    if ds.len() < 2 {
        return Err(Error::InvalidParameter(
            "split needs at least two items".into(),
        ));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    RandomStream::new(spec.seed).shuffle(&mut order);
    let n_train = (spec.train_fraction * ds.len() as f64).round() as usize;
    let (train, test) = order.split_at(n_train);
    Ok((
        subset_or_degenerate(ds, train)?,
        subset_or_degenerate(ds, test)?,
    ))
}

fn subset_or_degenerate(ds: &LabeledDataset, idx: &[usize]) -> Result<LabeledDataset> {
    if idx.is_empty() {
        return Err(Error::InvalidParameter(
            "split would produce an empty part; use more items or another fraction".into(),
        ));
    }
    ds.subset(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circles_lie_on_their_circles() {
        let ds = generate(&ShapeSpec::new(Shape::Circles, 1000, 7)).unwrap();
        let g = Shape::Circles.geometry();
        assert_eq!(ds.len(), 1000);
        for (p, y) in ds.iter() {
            let [x, z] = g.denormalize(p);
            let r = if y == Label::ZERO { 1.0 } else { 2.0 };
            assert!((x * x + z * z - r * r).abs() <= 1e-9, "{p} label {y}");
        }
    }

    #[test]
    fn sines_lie_on_their_graphs() {
        let ds = generate(&ShapeSpec::new(Shape::Sines, 500, 1)).unwrap();
        let g = Shape::Sines.geometry();
        for (p, y) in ds.iter() {
            let [x, z] = g.denormalize(p);
            let off = if y == Label::ZERO { 0.0 } else { 0.6 };
            assert!((z - (0.5 * (2.0 * PI * x).sin() + off)).abs() < 1e-9);
        }
    }

    #[test]
    fn two_points_have_both_classes() {
        for shape in Shape::ALL {
            let ds = generate(&ShapeSpec::new(shape, 2, 3)).unwrap();
            assert_eq!(ds.classes(), vec![Label::ZERO, Label::ONE]);
        }
    }

    #[test]
    fn generation_is_deterministic_and_in_unit_square() {
        for shape in Shape::ALL {
            let a = generate(&ShapeSpec::new(shape, 300, 5)).unwrap();
            let b = generate(&ShapeSpec::new(shape, 300, 5)).unwrap();
            assert_eq!(a.to_csv_string(), b.to_csv_string());
            assert!(a
                .points()
                .iter()
                .all(|p| p.coords().iter().all(|c| (0.0..=1.0).contains(c))));
            assert_eq!(a.classes().len(), 2);
        }
    }

    #[test]
    fn unknown_shape_is_an_error() {
        assert!(matches!(
            "moons".parse::<Shape>(),
            Err(Error::UnknownShape(_))
        ));
        assert_eq!("nnn".parse::<Shape>().unwrap(), Shape::Nnn);
    }

    #[test]
    fn split_sizes() {
        let ds = generate(&ShapeSpec::new(Shape::Boxes, 1000, 1)).unwrap();
        let (tr, te) = split(
            &ds,
            &SplitSpec {
                train_fraction: 0.8,
                seed: 2,
            },
        )
        .unwrap();
        assert_eq!((tr.len(), te.len()), (800, 200));
        let five = generate(&ShapeSpec::new(Shape::Boxes, 5, 1)).unwrap();
        let (tr, te) = split(
            &five,
            &SplitSpec {
                train_fraction: 0.8,
                seed: 2,
            },
        )
        .unwrap();
        assert_eq!((tr.len(), te.len()), (4, 1));
    }

    #[test]
    fn split_is_a_partition() {
        let ds = generate(&ShapeSpec::new(Shape::Nnn, 101, 4)).unwrap();
        let (tr, te) = split(
            &ds,
            &SplitSpec {
                train_fraction: 0.7,
                seed: 9,
            },
        )
        .unwrap();
        let key = |p: &Point, y: Label| format!("{p}/{y}");
        let mut all: Vec<String> = ds.iter().map(|(p, y)| key(p, y)).collect();
        let mut parts: Vec<String> = tr.iter().chain(te.iter()).map(|(p, y)| key(p, y)).collect();
        all.sort();
        parts.sort();
        assert_eq!(all, parts);
    }

    #[test]
    fn label_noise_flips_some_labels() {
        let mut spec = ShapeSpec::new(Shape::Circles, 2000, 3);
        spec.label_noise = 0.2;
        let ds = generate(&spec).unwrap();
        let flipped = ds
            .labels()
            .iter()
            .enumerate()
            .filter(|(i, y)| y.0 as usize != i % 2)
            .count();
        assert!((300..500).contains(&flipped), "{flipped}");
    }

    #[test]
    fn support_spans_each_class() {
        let g = Shape::Boxes.geometry();
        let s = g.support(Label::ONE, 400);
        assert_eq!(s.len(), 400);
        // outer square of side 2 fills the unit square
        let max_x = s.iter().map(|p| p.coords()[0]).fold(0.0, f64::max);
        assert!(max_x > 0.999);
    }
}
