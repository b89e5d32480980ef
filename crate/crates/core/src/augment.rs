//! Adaptive robust expansion and sampled augmentation.
//!
//! Each item `(x_i, y_i)` is replaced by the open ball of radius
//! `c * ρ_S(x_i, y_i)` around `x_i` carrying label `y_i`. For `c <= 1/2` two
//! balls with different labels never overlap, since both radii are at most
//! half the distance between their centers.

use std::path::Path;

use crate::dataset::{header, push_row, write_file};
use crate::geometry::{LabeledBall, Point};
use crate::neighbors::NnIndex;
use crate::rng::RandomStream;
use crate::{Error, LabeledDataset, Result};

/// How the per-item ball radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusRule {
    /// `c * ρ_S(x_i, y_i)`.
    Adaptive { c: f64 },
    /// The same radius for every item.
    Fixed(f64),
}

impl RadiusRule {
    fn validate(self) -> Result<Self> {
        match self {
            RadiusRule::Adaptive { c } if !(c.is_finite() && c >= 0.0) => {
                Err(Error::InvalidParameter(format!(
                    "expansion factor must be finite and >= 0, got {c}"
                )))
            }
            RadiusRule::Fixed(r) if !(r.is_finite() && r >= 0.0) => Err(Error::InvalidParameter(
                format!("fixed radius must be finite and >= 0, got {r}"),
            )),
            rule => Ok(rule),
        }
    }

    /// Short tag used in file names and report columns, e.g. `adaptive0.667`
    /// or `fixed0.5`.
    pub fn tag(&self) -> String {
        match self {
            RadiusRule::Adaptive { c } => format!("adaptive{}", trim_float(*c)),
            RadiusRule::Fixed(r) => format!("fixed{}", trim_float(*r)),
        }
    }
}

fn trim_float(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionSpec {
    pub radius: RadiusRule,
    /// Samples drawn per ball.
    pub m: usize,
    /// Keep the original items in front of the samples.
    pub include_originals: bool,
    pub seed: u64,
}

impl ExpansionSpec {
    pub fn adaptive(c: f64, m: usize, seed: u64) -> Self {
        ExpansionSpec {
            radius: RadiusRule::Adaptive { c },
            m,
            include_originals: true,
            seed,
        }
    }

    pub fn fixed(radius: f64, m: usize, seed: u64) -> Self {
        ExpansionSpec {
            radius: RadiusRule::Fixed(radius),
            m,
            include_originals: true,
            seed,
        }
    }
}

/// Per-item radii `ρ_S(x_i, y_i)`, in input order.
pub fn opposite_radii(s: &LabeledDataset) -> Result<Vec<f64>> {
    let index = NnIndex::new(s.clone())?;
    s.iter().map(|(x, y)| index.rho(x, y)).collect()
}

/// The `c`-adaptive robust expansion: one ball per item, in input order.
pub fn expand(s: &LabeledDataset, c: f64) -> Result<Vec<LabeledBall>> {
    expand_with(s, RadiusRule::Adaptive { c })
}

pub fn expand_with(s: &LabeledDataset, rule: RadiusRule) -> Result<Vec<LabeledBall>> {
    let rule = rule.validate()?;
    let radii = match rule {
        RadiusRule::Adaptive { c } => opposite_radii(s)?.into_iter().map(|r| c * r).collect(),
        RadiusRule::Fixed(r) => vec![r; s.len()],
    };
    s.iter()
        .zip(radii)
        .map(|((x, y), r)| LabeledBall::new(x.clone(), r, y))
        .collect()
}

/// Uniform sample from the ball of the given radius around `center`.
pub fn sample_ball_uniform(center: &Point, radius: f64, stream: &mut RandomStream) -> Point {
    if radius == 0.0 {
        return center.clone();
    }
    let u = stream.unit_ball(center.dim());
    center.offset(&u, radius)
}

/// A sampled augmentation with provenance.
#[derive(Debug, Clone)]
pub struct Augmented {
    pub data: LabeledDataset,
    /// Source item of each row; `None` for retained originals.
    pub origins: Vec<Option<usize>>,
    /// Ball radius used for each source item.
    pub radii: Vec<f64>,
}

impl Augmented {
    /// CSV with header `x1,...,xd,label,origin` (`-1` for originals).
    pub fn to_csv_string(&self) -> String {
        let mut out = header(self.data.dim(), true);
        for ((p, y), o) in self.data.iter().zip(&self.origins) {
            push_row(&mut out, p, y, Some(o.map_or(-1, |i| i as i64)));
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_csv_string().as_bytes())
    }
}

/// The `m`-sample robust augmentation: `m` uniform draws from every item's
/// ball, labeled like the item. Item `i` draws from `stream.child(i)`, so the
/// samples for one item do not depend on any other item.
pub fn augment(s: &LabeledDataset, spec: &ExpansionSpec) -> Result<Augmented> {
    if spec.m < 1 {
        return Err(Error::InvalidParameter(
            "need at least one sample per ball".into(),
        ));
    }
    let balls = expand_with(s, spec.radius)?;
    let root = RandomStream::new(spec.seed);
    let extra = if spec.include_originals { s.len() } else { 0 };
    let mut points = Vec::with_capacity(s.len() * spec.m + extra);
    let mut labels = Vec::with_capacity(points.capacity());
    let mut origins = Vec::with_capacity(points.capacity());
    if spec.include_originals {
        points.extend(s.points().iter().cloned());
        labels.extend_from_slice(s.labels());
        origins.extend(std::iter::repeat_n(None, s.len()));
    }
    for (i, ball) in balls.iter().enumerate() {
        let mut stream = root.child(i as u64);
        for _ in 0..spec.m {
            points.push(sample_ball_uniform(&ball.center, ball.radius, &mut stream));
            labels.push(ball.label);
            origins.push(Some(i));
        }
    }
    Ok(Augmented {
        data: LabeledDataset::new(points, labels)?,
        origins,
        radii: balls.iter().map(|b| b.radius).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{distance, Label};

    fn two_points() -> LabeledDataset {
        LabeledDataset::from_items([
            (Point::from([0.0, 0.0]), Label(0)),
            (Point::from([1.0, 0.0]), Label(1)),
        ])
        .unwrap()
    }

    #[test]
    fn expand_examples() {
        let s = two_points();
        let zero = expand(&s, 0.0).unwrap();
        assert!(zero.iter().all(|b| b.radius == 0.0));
        assert_eq!(zero[1].center, *s.point(1));
        let half = expand(&s, 0.5).unwrap();
        assert_eq!(
            half.iter().map(|b| b.radius).collect::<Vec<_>>(),
            vec![0.5, 0.5]
        );
        assert_eq!(half[0].label, Label(0));
    }

    #[test]
    fn zero_radius_sample_is_center() {
        let mut st = RandomStream::new(1);
        let c = Point::from([0.3, 0.4]);
        assert_eq!(sample_ball_uniform(&c, 0.0, &mut st), c);
    }

    #[test]
    fn augment_sizes_and_provenance() {
        let s = crate::datagen::generate(&crate::datagen::ShapeSpec::new(
            crate::datagen::Shape::Circles,
            1000,
            1,
        ))
        .unwrap();
        let aug = augment(&s, &ExpansionSpec::adaptive(2.0 / 3.0, 4, 5)).unwrap();
        assert_eq!(aug.data.len(), 5000);
        for (k, o) in aug.origins.iter().enumerate() {
            match o {
                None => assert_eq!(aug.data.point(k), s.point(k)),
                Some(i) => {
                    assert_eq!(aug.data.label(k), s.label(*i));
                    let d = distance(aug.data.point(k), s.point(*i)).unwrap();
                    assert!(d <= aug.radii[*i]);
                }
            }
        }
        let mut spec = ExpansionSpec::adaptive(2.0 / 3.0, 4, 5);
        spec.include_originals = false;
        assert_eq!(augment(&s, &spec).unwrap().data.len(), 4000);
    }

    #[test]
    fn zero_factor_duplicates() {
        let s = two_points();
        let aug = augment(&s, &ExpansionSpec::adaptive(0.0, 1, 3)).unwrap();
        assert_eq!(aug.data.points()[..2], aug.data.points()[2..]);
    }

    #[test]
    fn augmentation_is_deterministic() {
        let s = crate::datagen::generate(&crate::datagen::ShapeSpec::new(
            crate::datagen::Shape::Sines,
            200,
            2,
        ))
        .unwrap();
        let a = augment(&s, &ExpansionSpec::fixed(0.1, 3, 7)).unwrap();
        let b = augment(&s, &ExpansionSpec::fixed(0.1, 3, 7)).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert!(a.to_csv_string().starts_with("x1,x2,label,origin\n"));
    }

    #[test]
    fn invalid_specs() {
        let s = two_points();
        assert!(augment(&s, &ExpansionSpec::adaptive(0.5, 0, 1)).is_err());
        assert!(expand(&s, -1.0).is_err());
        assert!(expand_with(&s, RadiusRule::Fixed(f64::NAN)).is_err());
    }

    #[test]
    fn rule_tags() {
        assert_eq!(RadiusRule::Adaptive { c: 2.0 / 3.0 }.tag(), "adaptive0.667");
        assert_eq!(RadiusRule::Fixed(0.5).tag(), "fixed0.5");
        assert_eq!(RadiusRule::Fixed(2.0).tag(), "fixed2");
    }
}
