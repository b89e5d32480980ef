//! Nearest-opposite-label radii and exact 1-NN over points and balls.
//!
//! Queries go through a uniform grid over the reference points. The grid is an
//! exact accelerator: rings of cells are visited outward from the query cell
//! and the search stops only once every unvisited cell is provably farther
//! than the best candidate, so answers (including smallest-index tie breaking)
//! are identical to a linear scan.

use crate::geometry::{ball_dist, dist, Classifier, Label, LabeledBall, Point};
use crate::{Error, LabeledDataset, Result};

/// Grid acceleration is used for `d <= MAX_GRID_DIM`; higher dimensions fall
/// back to a single cell (a linear scan).
const MAX_GRID_DIM: usize = 3;
const MAX_CELLS: usize = 1 << 20;

#[derive(Debug, Clone)]
struct Grid {
    dim: usize,
    origin: Vec<f64>,
    side: f64,
    shape: Vec<usize>,
    /// Item indices per cell, ascending.
    cells: Vec<Vec<u32>>,
}

impl Grid {
    fn build(flat: &[f64], items: &[usize], dim: usize) -> Grid {
        let coords = |i: usize| &flat[i * dim..(i + 1) * dim];
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in items {
            for (j, &c) in coords(i).iter().enumerate() {
                lo[j] = lo[j].min(c);
                hi[j] = hi[j].max(c);
            }
        }
        let n = items.len().max(1);
        let (side, shape) = if dim > MAX_GRID_DIM || items.len() < 16 {
            (f64::INFINITY, vec![1; dim])
        } else {
            let extent: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| (h - l).max(0.0)).collect();
            let max_extent = extent.iter().cloned().fold(0.0, f64::max);
            if max_extent <= 0.0 {
                (f64::INFINITY, vec![1; dim])
            } else {
                // Aim for about two points per cell; flat axes get one cell.
                let floor = max_extent * 1e-3;
                let vol: f64 = extent.iter().map(|e| e.max(floor)).product();
                let mut side = (2.0 * vol / n as f64).powf(1.0 / dim as f64);
                let mut shape: Vec<usize>;
                loop {
                    shape = extent
                        .iter()
                        .map(|e| ((e / side).floor() as usize + 1).max(1))
                        .collect();
                    if shape.iter().product::<usize>() <= MAX_CELLS {
                        break;
                    }
                    side *= 2.0;
                }
                (side, shape)
            }
        };
        let mut grid = Grid {
            dim,
            origin: if lo[0].is_finite() {
                lo
            } else {
                vec![0.0; dim]
            },
            side,
            cells: vec![Vec::new(); shape.iter().product()],
            shape,
        };
        for &i in items {
            let cell = grid.flat(&grid.cell_of(coords(i)));
            grid.cells[cell].push(i as u32);
        }
        grid
    }

    fn cell_of(&self, x: &[f64]) -> Vec<isize> {
        (0..self.dim)
            .map(|j| {
                if self.side.is_infinite() {
                    0
                } else {
                    let k = ((x[j] - self.origin[j]) / self.side).floor();
                    (k.max(0.0) as isize).min(self.shape[j] as isize - 1)
                }
            })
            .collect()
    }

    fn flat(&self, cell: &[isize]) -> usize {
        self.shape
            .iter()
            .zip(cell)
            .fold(0usize, |idx, (&n, &c)| idx * n + c as usize)
    }

    /// Largest ring around `center` that still intersects the grid.
    fn last_ring(&self, center: &[isize]) -> usize {
        (0..self.dim)
            .map(|j| center[j].max(self.shape[j] as isize - 1 - center[j]) as usize)
            .max()
            .unwrap_or(0)
    }

    /// Visits every grid cell at Chebyshev distance exactly `ring` from
    /// `center`.
    fn for_ring(&self, center: &[isize], ring: usize, mut f: impl FnMut(&[u32])) {
        let r = ring as isize;
        let lo: Vec<isize> = (0..self.dim).map(|j| (-r).max(-center[j])).collect();
        let hi: Vec<isize> = (0..self.dim)
            .map(|j| r.min(self.shape[j] as isize - 1 - center[j]))
            .collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return;
        }
        let mut offset = lo.clone();
        let mut cell = vec![0isize; self.dim];
        loop {
            if offset.iter().any(|o| o.abs() == r) {
                for j in 0..self.dim {
                    cell[j] = center[j] + offset[j];
                }
                f(&self.cells[self.flat(&cell)]);
            }
            // odometer increment over the clipped box
            let mut j = 0;
            loop {
                if j == self.dim {
                    return;
                }
                if offset[j] < hi[j] {
                    offset[j] += 1;
                    break;
                }
                offset[j] = lo[j];
                j += 1;
            }
        }
    }

    /// Minimizes `score(i, center_distance)` over the grid's items; ties go to
    /// the smallest index. `slack` bounds how much `score` can undercut the
    /// center distance (the largest ball radius; 0 for plain points).
    fn nearest(
        &self,
        flat: &[f64],
        x: &[f64],
        slack: f64,
        score: impl Fn(usize, f64) -> f64,
    ) -> Option<(usize, f64)> {
        let center = self.cell_of(x);
        let mut best: Option<(usize, f64)> = None;
        for ring in 0..=self.last_ring(&center) {
            self.for_ring(&center, ring, |items| {
                for &i in items {
                    let i = i as usize;
                    let s = score(i, dist(&flat[i * self.dim..(i + 1) * self.dim], x));
                    let better = match best {
                        None => true,
                        Some((bi, bs)) => s < bs || (s == bs && i < bi),
                    };
                    if better {
                        best = Some((i, s));
                    }
                }
            });
            // Items in rings > `ring` have center distance >= ring * side.
            if let Some((_, bs)) = best {
                if bs < ring as f64 * self.side - slack {
                    break;
                }
            }
        }
        best
    }
}

/// Exact nearest-neighbor index over a labeled dataset.
#[derive(Debug, Clone)]
pub struct NnIndex {
    data: LabeledDataset,
    flat: Vec<f64>,
    all: Grid,
    by_label: Vec<(Label, Grid)>,
}

impl NnIndex {
    pub fn new(data: LabeledDataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let flat: Vec<f64> = data
            .points()
            .iter()
            .flat_map(|p| p.coords().iter().copied())
            .collect();
        let all_items: Vec<usize> = (0..data.len()).collect();
        let all = Grid::build(&flat, &all_items, data.dim());
        let by_label = data
            .classes()
            .into_iter()
            .map(|c| {
                let items: Vec<usize> = (0..data.len()).filter(|&i| data.label(i) == c).collect();
                (c, Grid::build(&flat, &items, data.dim()))
            })
            .collect();
        Ok(NnIndex {
            data,
            flat,
            all,
            by_label,
        })
    }

    pub fn data(&self) -> &LabeledDataset {
        &self.data
    }

    /// Index and distance of the nearest item (smallest index on ties).
    pub fn nearest(&self, x: &Point) -> Result<(usize, f64)> {
        self.data.check_dim(x)?;
        Ok(self
            .all
            .nearest(&self.flat, x.coords(), 0.0, |_, d| d)
            .expect("index is nonempty"))
    }

    /// Nearest item whose label differs from `y`, if any.
    pub fn nearest_other(&self, x: &Point, y: Label) -> Result<Option<(usize, f64)>> {
        self.data.check_dim(x)?;
        let mut best: Option<(usize, f64)> = None;
        for (label, grid) in &self.by_label {
            if *label == y {
                continue;
            }
            if let Some((i, d)) = grid.nearest(&self.flat, x.coords(), 0.0, |_, d| d) {
                let better = match best {
                    None => true,
                    Some((bi, bd)) => d < bd || (d == bd && i < bi),
                };
                if better {
                    best = Some((i, d));
                }
            }
        }
        Ok(best)
    }

    /// `ρ_S(x, y)`: distance to the nearest item labeled differently from `y`,
    /// or the dataset's diameter bound when there is none.
    pub fn rho(&self, x: &Point, y: Label) -> Result<f64> {
        Ok(self
            .nearest_other(x, y)?
            .map_or(self.data.diameter_bound(), |(_, d)| d))
    }

    pub fn classify(&self, x: &Point) -> Result<Label> {
        let (i, _) = self.nearest(x)?;
        Ok(self.data.label(i))
    }
}

/// 1-NN classifier. Panics on dimension mismatch.
impl Classifier for NnIndex {
    fn predict(&self, x: &Point) -> Label {
        self.classify(x)
            .expect("query dimension must match the training data")
    }
}

pub fn rho(s: &LabeledDataset, x: &Point, y: Label) -> Result<f64> {
    NnIndex::new(s.clone())?.rho(x, y)
}

pub fn nn_classify(s: &LabeledDataset, x: &Point) -> Result<Label> {
    NnIndex::new(s.clone())?.classify(x)
}

/// Exact nearest-ball index: minimizes `max(0, |x - center| - radius)`.
#[derive(Debug, Clone)]
pub struct BallIndex {
    balls: Vec<LabeledBall>,
    flat: Vec<f64>,
    grid: Grid,
    max_radius: f64,
}

impl BallIndex {
    pub fn new(balls: Vec<LabeledBall>) -> Result<Self> {
        let dim = match balls.first() {
            Some(b) => b.center.dim(),
            None => return Err(Error::EmptyDataset),
        };
        if let Some(b) = balls.iter().find(|b| b.center.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: b.center.dim(),
            });
        }
        let flat: Vec<f64> = balls
            .iter()
            .flat_map(|b| b.center.coords().iter().copied())
            .collect();
        let items: Vec<usize> = (0..balls.len()).collect();
        let grid = Grid::build(&flat, &items, dim);
        let max_radius = balls.iter().map(|b| b.radius).fold(0.0, f64::max);
        Ok(BallIndex {
            balls,
            flat,
            grid,
            max_radius,
        })
    }

    pub fn balls(&self) -> &[LabeledBall] {
        &self.balls
    }

    pub fn nearest(&self, x: &Point) -> Result<(usize, f64)> {
        let dim = self.balls[0].center.dim();
        if x.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.dim(),
            });
        }
        Ok(self
            .grid
            .nearest(&self.flat, x.coords(), self.max_radius, |i, d| {
                ball_dist(d, self.balls[i].radius)
            })
            .expect("index is nonempty"))
    }

    pub fn classify(&self, x: &Point) -> Result<Label> {
        let (i, _) = self.nearest(x)?;
        Ok(self.balls[i].label)
    }
}

impl Classifier for BallIndex {
    fn predict(&self, x: &Point) -> Label {
        self.classify(x)
            .expect("query dimension must match the balls")
    }
}

pub fn nn_classify_balls(balls: &[LabeledBall], x: &Point) -> Result<Label> {
    BallIndex::new(balls.to_vec())?.classify(x)
}
