//! A `d -> 10 -> 10 -> 1` ReLU network with a sigmoid output, trained by
//! plain mini-batch gradient descent on mean binary cross-entropy.
//!
//! Parameters live in one flat vector in the order
//! `w1 (10 x d, row-major), b1, w2 (10 x 10), b2, w3 (10), b3`. Gradients use
//! the same layout.

use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::write_file;
use crate::geometry::{Classifier, Label, Point};
use crate::rng::RandomStream;
use crate::{Error, LabeledDataset, Result};

pub const HIDDEN: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dim: usize,
    params: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSpec {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec {
            epochs: 2000,
            batch_size: 32,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    len: usize,
}

fn layout(d: usize) -> Layout {
    let w1 = 0;
    let b1 = w1 + HIDDEN * d;
    let w2 = b1 + HIDDEN;
    let b2 = w2 + HIDDEN * HIDDEN;
    let w3 = b2 + HIDDEN;
    let b3 = w3 + HIDDEN;
    Layout {
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
        len: b3 + 1,
    }
}

/// Activations of one forward pass, kept for backpropagation.
struct Trace {
    h1: [f64; HIDDEN],
    h2: [f64; HIDDEN],
    logit: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Mlp {
    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn init(d: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter(
                "input dimension must be >= 1".into(),
            ));
        }
        let l = layout(d);
        let mut params = vec![0.0; l.len];
        let mut s = RandomStream::new(seed);
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut params[range] {
                *p = (2.0 * s.uniform() - 1.0) * bound;
            }
        };
        fill(l.w1..l.b1, d);
        fill(l.w2..l.b2, HIDDEN);
        fill(l.w3..l.b3, HIDDEN);
        Ok(Mlp { dim: d, params })
    }

    pub fn from_params(d: usize, params: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter(
                "input dimension must be >= 1".into(),
            ));
        }
        let len = layout(d).len;
        if params.len() != len {
            return Err(Error::InvalidParameter(format!(
                "expected {len} parameters for d={d}, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        Ok(Mlp { dim: d, params })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Bias entries of all three layers, in layer order.
    pub fn biases(&self) -> Vec<f64> {
        let l = layout(self.dim);
        let mut b = self.params[l.b1..l.w2].to_vec();
        b.extend_from_slice(&self.params[l.b2..l.w3]);
        b.push(self.params[l.b3]);
        b
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let l = layout(self.dim);
        let p = &self.params;
        let mut h1 = [0.0; HIDDEN];
        for (i, h) in h1.iter_mut().enumerate() {
            let row = &p[l.w1 + i * self.dim..l.w1 + (i + 1) * self.dim];
            let z = p[l.b1 + i] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *h = z.max(0.0);
        }
        let mut h2 = [0.0; HIDDEN];
        for (i, h) in h2.iter_mut().enumerate() {
            let row = &p[l.w2 + i * HIDDEN..l.w2 + (i + 1) * HIDDEN];
            let z = p[l.b2 + i] + row.iter().zip(&h1).map(|(w, v)| w * v).sum::<f64>();
            *h = z.max(0.0);
        }
        let logit = p[l.b3]
            + p[l.w3..l.b3]
                .iter()
                .zip(&h2)
                .map(|(w, v)| w * v)
                .sum::<f64>();
        Trace { h1, h2, logit }
    }

    fn check(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// Pre-sigmoid output.
    pub fn logit(&self, x: &Point) -> Result<f64> {
        self.check(x)?;
        Ok(self.trace(x.coords()).logit)
    }

    /// `sigmoid(affine(relu(affine(relu(affine(x))))))`.
    pub fn forward(&self, x: &Point) -> Result<f64> {
        Ok(sigmoid(self.logit(x)?))
    }

    /// Mean binary cross-entropy over `batch`.
    pub fn loss(&self, batch: &LabeledDataset) -> Result<f64> {
        if batch.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: batch.dim(),
            });
        }
        let total: f64 = batch
            .iter()
            .map(|(x, y)| {
                let z = self.trace(x.coords()).logit;
                softplus(z) - target(y) * z
            })
            .sum();
        Ok(total / batch.len() as f64)
    }

    /// Exact gradient of [`Mlp::loss`].
    pub fn grad(&self, batch: &LabeledDataset) -> Result<Vec<f64>> {
        if batch.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: batch.dim(),
            });
        }
        let mut g = vec![0.0; self.params.len()];
        for (x, y) in batch.iter() {
            self.accumulate(x.coords(), target(y), &mut g);
        }
        let scale = 1.0 / batch.len() as f64;
        g.iter_mut().for_each(|v| *v *= scale);
        Ok(g)
    }

    /// Adds the per-sample BCE gradient into `g`.
    fn accumulate(&self, x: &[f64], y: f64, g: &mut [f64]) {
        let l = layout(self.dim);
        let p = &self.params;
        let t = self.trace(x);
        let dz3 = sigmoid(t.logit) - y;
        g[l.b3] += dz3;
        let mut dz2 = [0.0; HIDDEN];
        for i in 0..HIDDEN {
            g[l.w3 + i] += dz3 * t.h2[i];
            if t.h2[i] > 0.0 {
                dz2[i] = dz3 * p[l.w3 + i];
            }
        }
        let mut dh1 = [0.0; HIDDEN];
        for i in 0..HIDDEN {
            if dz2[i] == 0.0 {
                continue;
            }
            g[l.b2 + i] += dz2[i];
            let row = l.w2 + i * HIDDEN;
            for j in 0..HIDDEN {
                g[row + j] += dz2[i] * t.h1[j];
                dh1[j] += dz2[i] * p[row + j];
            }
        }
        for i in 0..HIDDEN {
            if t.h1[i] <= 0.0 || dh1[i] == 0.0 {
                continue;
            }
            g[l.b1 + i] += dh1[i];
            let row = l.w1 + i * self.dim;
            for (j, &v) in x.iter().enumerate() {
                g[row + j] += dh1[i] * v;
            }
        }
    }

    /// Mini-batch gradient descent; data order is reshuffled every epoch from
    /// the spec's seed.
    pub fn train(&self, data: &LabeledDataset, spec: &TrainSpec) -> Result<Mlp> {
        Ok(self.train_with_history(data, spec)?.0)
    }

    /// Like [`Mlp::train`], also returning the mean training loss observed
    /// over each epoch's mini-batches.
    pub fn train_with_history(
        &self,
        data: &LabeledDataset,
        spec: &TrainSpec,
    ) -> Result<(Mlp, Vec<f64>)> {
        if data.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: data.dim(),
            });
        }
        if data.classes().len() < 2 {
            return Err(Error::SingleClass);
        }
        if spec.batch_size == 0 || !(spec.learning_rate > 0.0 && spec.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(
                "batch size and learning rate must be positive".into(),
            ));
        }
        let mut model = self.clone();
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut stream = RandomStream::new(spec.seed);
        let targets: Vec<f64> = data.labels().iter().map(|&y| target(y)).collect();
        let mut g = vec![0.0; model.params.len()];
        let mut history = Vec::with_capacity(spec.epochs);
        for _ in 0..spec.epochs {
            stream.shuffle(&mut order);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(spec.batch_size) {
                g.iter_mut().for_each(|v| *v = 0.0);
                for &i in batch {
                    let x = data.point(i).coords();
                    let z = model.trace(x).logit;
                    epoch_loss += softplus(z) - targets[i] * z;
                    model.accumulate(x, targets[i], &mut g);
                }
                let step = spec.learning_rate / batch.len() as f64;
                for (p, gi) in model.params.iter_mut().zip(&g) {
                    *p -= step * gi;
                }
            }
            history.push(epoch_loss / data.len() as f64);
        }
        Ok((model, history))
    }

    pub fn as_classifier(&self, threshold: f64) -> MlpClassifier<'_> {
        MlpClassifier {
            model: self,
            threshold,
        }
    }

    /// Text format: a `d,h1,h2` header line, then one parameter per line in
    /// layout order with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{},{},{}\n", self.dim, HIDDEN, HIDDEN);
        for p in &self.params {
            writeln!(out, "{p:.16e}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::ModelFormat("empty file".into()))?;
        let dims: Vec<usize> = header
            .split(',')
            .map(|v| v.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::ModelFormat(format!("bad header `{header}`")))?;
        if dims.len() != 3 || dims[1] != HIDDEN || dims[2] != HIDDEN {
            return Err(Error::ModelFormat(format!(
                "header must be `d,{HIDDEN},{HIDDEN}`, found `{header}`"
            )));
        }
        let params = lines
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::ModelFormat(format!("parameter {}: `{l}`", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Mlp::from_params(dims[0], params).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_text().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn target(y: Label) -> f64 {
    if y.0 == 0 {
        0.0
    } else {
        1.0
    }
}

/// Predicts 1 iff `forward(x) >= threshold`.
#[derive(Debug, Clone, Copy)]
pub struct MlpClassifier<'a> {
    model: &'a Mlp,
    threshold: f64,
}

impl Classifier for MlpClassifier<'_> {
    fn predict(&self, x: &Point) -> Label {
        let p = sigmoid(self.model.trace(x.coords()).logit);
        Label((p >= self.threshold) as u32)
    }
}
