//! Labeled datasets and their CSV representation.
//!
//! The CSV schema is a header `x1,...,xd,label` followed by one row per item.
//! Augmented datasets carry an extra trailing `origin` column (see
//! [`crate::augment`]).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::geometry::{dist, Label, Point};
use crate::{Error, Result};

/// A finite labeled sample `S = ((x_1, y_1), ..., (x_n, y_n))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Vec<Point>,
    labels: Vec<Label>,
    dim: usize,
    diameter_bound: f64,
}

impl LabeledDataset {
    /// Builds a dataset; the diameter bound defaults to the larger of `sqrt(d)`
    /// (the unit cube diagonal) and the diagonal of the points' bounding box.
    pub fn new(points: Vec<Point>, labels: Vec<Label>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let dim = match points.first() {
            Some(p) => p.dim(),
            None => return Err(Error::EmptyDataset),
        };
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        let diameter_bound = default_diameter_bound(&points, dim);
        Ok(LabeledDataset {
            points,
            labels,
            dim,
            diameter_bound,
        })
    }

    pub fn from_items(items: impl IntoIterator<Item = (Point, Label)>) -> Result<Self> {
        let (points, labels) = items.into_iter().unzip();
        Self::new(points, labels)
    }

    /// Overrides the ρ sentinel. Must not be smaller than the point set's
    /// bounding-box diagonal.
    pub fn with_diameter_bound(mut self, bound: f64) -> Result<Self> {
        let min = bbox_diagonal(&self.points, self.dim);
        if !(bound.is_finite() && bound >= min) {
            return Err(Error::InvalidParameter(format!(
                "diameter bound {bound} is below the data's bounding-box diagonal {min}"
            )));
        }
        self.diameter_bound = bound;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diameter_bound(&self) -> f64 {
        self.diameter_bound
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, Label)> + '_ {
        self.points.iter().zip(self.labels.iter().copied())
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<Label> {
        let mut c = self.labels.clone();
        c.sort();
        c.dedup();
        c
    }

    pub fn check_dim(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// Items at the given indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.points[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    /// CSV text with header `x1,...,xd,label`. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_csv_string(&self) -> String {
        let mut out = header(self.dim, false);
        for (p, y) in self.iter() {
            push_row(&mut out, p, y, None);
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_csv_string().as_bytes())
    }

    /// Parses CSV text; an optional trailing `origin` column is accepted and
    /// returned separately (`-1` maps to `None`).
    pub fn parse_csv(text: &str) -> Result<(Self, Option<Vec<Option<usize>>>)> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Csv {
                row: 0,
                msg: e.to_string(),
            })?
            .clone();
        let cols: Vec<&str> = headers.iter().collect();
        let has_origin = cols.last() == Some(&"origin");
        let label_col = if has_origin {
            cols.len().wrapping_sub(2)
        } else {
            cols.len().wrapping_sub(1)
        };
        if cols.len() < 2 + has_origin as usize || cols[label_col] != "label" {
            return Err(Error::Csv {
                row: 0,
                msg: "header must be `x1,...,xd,label` (optionally followed by `origin`)".into(),
            });
        }
        for (j, c) in cols[..label_col].iter().enumerate() {
            if *c != format!("x{}", j + 1) {
                return Err(Error::Csv {
                    row: 0,
                    msg: format!("expected column `x{}`, found `{c}`", j + 1),
                });
            }
        }
        let dim = label_col;
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut origins = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| Error::Csv {
                row,
                msg: e.to_string(),
            })?;
            if rec.len() != cols.len() {
                return Err(Error::Csv {
                    row,
                    msg: format!("expected {} fields, found {}", cols.len(), rec.len()),
                });
            }
            let mut coords = Vec::with_capacity(dim);
            for j in 0..dim {
                let v: f64 = rec[j].parse().map_err(|_| Error::Csv {
                    row,
                    msg: format!("feature x{} is not a number: `{}`", j + 1, &rec[j]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv {
                        row,
                        msg: format!("feature x{} is not finite: `{}`", j + 1, &rec[j]),
                    });
                }
                coords.push(v);
            }
            let label: u32 = rec[dim].parse().map_err(|_| Error::Csv {
                row,
                msg: format!("label is not a non-negative integer: `{}`", &rec[dim]),
            })?;
            if has_origin {
                let o: i64 = rec[dim + 1].parse().map_err(|_| Error::Csv {
                    row,
                    msg: format!("origin is not an integer: `{}`", &rec[dim + 1]),
                })?;
                origins.push(if o < 0 { None } else { Some(o as usize) });
            }
            points.push(Point::from_raw(coords));
            labels.push(Label(label));
        }
        let ds = Self::new(points, labels)?;
        Ok((ds, has_origin.then_some(origins)))
    }

    /// Loads a dataset, optionally min-max normalizing every feature to
    /// `[0, 1]`. The fitted normalizer is returned for reuse on test data.
    pub fn load_csv(path: impl AsRef<Path>, normalize: bool) -> Result<(Self, Option<Normalizer>)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (ds, _) = Self::parse_csv(&text)?;
        if normalize {
            let norm = Normalizer::fit(&ds);
            let ds = norm.apply(&ds)?;
            Ok((ds, Some(norm)))
        } else {
            Ok((ds, None))
        }
    }
}

/// Per-feature min-max scaling. Constant features map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    pub fn fit(ds: &LabeledDataset) -> Self {
        let mut min = vec![f64::INFINITY; ds.dim()];
        let mut max = vec![f64::NEG_INFINITY; ds.dim()];
        for p in ds.points() {
            for (j, &c) in p.coords().iter().enumerate() {
                min[j] = min[j].min(c);
                max[j] = max[j].max(c);
            }
        }
        Normalizer { min, max }
    }

    pub fn apply_point(&self, p: &Point) -> Point {
        Point::from_raw(
            p.coords()
                .iter()
                .enumerate()
                .map(|(j, &c)| {
                    let range = self.max[j] - self.min[j];
                    if range > 0.0 {
                        (c - self.min[j]) / range
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
    }

    pub fn apply(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        if ds.dim() != self.min.len() {
            return Err(Error::DimensionMismatch {
                expected: self.min.len(),
                got: ds.dim(),
            });
        }
        LabeledDataset::new(
            ds.points().iter().map(|p| self.apply_point(p)).collect(),
            ds.labels().to_vec(),
        )
    }
}

pub(crate) fn header(dim: usize, origin: bool) -> String {
    let mut out = String::new();
    for j in 1..=dim {
        out.push_str(&format!("x{j},"));
    }
    out.push_str("label");
    if origin {
        out.push_str(",origin");
    }
    out.push('\n');
    out
}

pub(crate) fn push_row(out: &mut String, p: &Point, y: Label, origin: Option<i64>) {
    for c in p.coords() {
        out.push_str(&format!("{c},"));
    }
    out.push_str(&y.0.to_string());
    if let Some(o) = origin {
        out.push_str(&format!(",{o}"));
    }
    out.push('\n');
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn bbox_diagonal(points: &[Point], dim: usize) -> f64 {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in points {
        for (j, &c) in p.coords().iter().enumerate() {
            lo[j] = lo[j].min(c);
            hi[j] = hi[j].max(c);
        }
    }
    dist(&lo, &hi)
}

fn default_diameter_bound(points: &[Point], dim: usize) -> f64 {
    (dim as f64).sqrt().max(bbox_diagonal(points, dim))
}
