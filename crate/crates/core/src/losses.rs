//! Binary, fixed-radius robust and adaptive robust loss estimators.
//!
//! Robust losses quantify over whole balls, which cannot be decided for an
//! arbitrary classifier. The estimators here check the center plus `k`
//! uniform probes, so they are lower bounds on the true losses. A point the
//! classifier already mislabels always counts as 1.
//!
//! Probe offsets are drawn per item from `stream.child(i)` as points of the
//! open unit ball and then scaled to the radius under test. The `*_grid`
//! variants evaluate a sorted radius (or factor) grid with nested probe sets:
//! the value at grid position `j` uses the probes of every position `<= j`,
//! all of which lie inside the `j`-th ball, so the estimates are
//! nondecreasing along the grid by construction.

use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::write_file;
use crate::geometry::{Classifier, DomainSampler, Label, Point};
use crate::neighbors::NnIndex;
use crate::rng::RandomStream;
use crate::{Error, LabeledDataset, Result};

/// Default probe count for the test-time adaptive estimator.
pub const DEFAULT_TESTTIME_PROBES: usize = 10;
/// Default probe count for the fixed-radius and empirical adaptive estimators.
pub const DEFAULT_PROBES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub name: String,
    pub value: f64,
    pub probes_per_point: usize,
    pub seed: u64,
    pub n_evaluated: usize,
}

impl LossReport {
    pub const CSV_HEADER: &'static str = "loss_name,value,probes,seed,n";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.name, self.value, self.probes_per_point, self.seed, self.n_evaluated
        )
    }
}

pub fn reports_to_csv(reports: &[LossReport]) -> String {
    let mut out = String::new();
    writeln!(out, "{}", LossReport::CSV_HEADER).unwrap();
    for r in reports {
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    out
}

pub fn save_reports(path: impl AsRef<Path>, reports: &[LossReport]) -> Result<()> {
    write_file(path.as_ref(), reports_to_csv(reports).as_bytes())
}

fn nonempty(d: &LabeledDataset) -> Result<()> {
    if d.is_empty() {
        Err(Error::EmptyDataset)
    } else {
        Ok(())
    }
}

fn fraction(count: usize, n: usize) -> f64 {
    count as f64 / n as f64
}

/// Offsets in the open unit ball, one set per item.
fn probe_offsets(stream: &RandomStream, item: usize, dim: usize, k: usize) -> Vec<Vec<f64>> {
    let mut s = stream.child(item as u64);
    (0..k).map(|_| s.unit_ball(dim)).collect()
}

/// For one item: the first grid position at which a probe (or the center)
/// disagrees with `y`, or `None` if all probes agree at every radius.
fn first_failure<C: Classifier + ?Sized>(
    h: &C,
    x: &Point,
    y: Label,
    radii: &[f64],
    offsets: &[Vec<f64>],
) -> Option<usize> {
    if h.predict(x) != y {
        return Some(0);
    }
    for (j, &r) in radii.iter().enumerate() {
        if r > 0.0 && offsets.iter().any(|u| h.predict(&x.offset(u, r)) != y) {
            return Some(j);
        }
    }
    None
}

fn check_grid(radii: &[f64], what: &str) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter(format!("{what} grid is empty")));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "{what} values must be finite and >= 0"
        )));
    }
    if radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(format!(
            "{what} grid must be nondecreasing"
        )));
    }
    Ok(())
}

/// Fraction of items with `h(x) != y`.
pub fn binary_loss<C: Classifier + ?Sized>(h: &C, d: &LabeledDataset) -> Result<LossReport> {
    nonempty(d)?;
    let wrong = d.iter().filter(|(x, y)| h.predict(x) != *y).count();
    Ok(LossReport {
        name: "binary".into(),
        value: fraction(wrong, d.len()),
        probes_per_point: 0,
        seed: 0,
        n_evaluated: d.len(),
    })
}

/// Probe estimate of the `r`-robust loss.
pub fn robust_loss_fixed<C: Classifier + ?Sized>(
    h: &C,
    d: &LabeledDataset,
    r: f64,
    k: usize,
    stream: &RandomStream,
) -> Result<LossReport> {
    Ok(robust_loss_fixed_grid(h, d, &[r], k, stream)?.remove(0))
}

/// [`robust_loss_fixed`] over a nondecreasing radius grid with nested probes.
pub fn robust_loss_fixed_grid<C: Classifier + ?Sized>(
    h: &C,
    d: &LabeledDataset,
    radii: &[f64],
    k: usize,
    stream: &RandomStream,
) -> Result<Vec<LossReport>> {
    nonempty(d)?;
    check_grid(radii, "radius")?;
    let mut failures_at = vec![0usize; radii.len()];
    for (i, (x, y)) in d.iter().enumerate() {
        let offsets = probe_offsets(stream, i, d.dim(), k);
        if let Some(j) = first_failure(h, x, y, radii, &offsets) {
            failures_at[j] += 1;
        }
    }
    Ok(cumulative(&failures_at)
        .into_iter()
        .zip(radii)
        .map(|(count, r)| LossReport {
            name: format!("robust_r{r}"),
            value: fraction(count, d.len()),
            probes_per_point: k,
            seed: stream.seed(),
            n_evaluated: d.len(),
        })
        .collect())
}

fn cumulative(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .scan(0, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect()
}

/// Probe estimate of the empirical `c`-adaptive robust loss of `h` on `s`:
/// item `i` counts when `h` does not label its whole expansion ball
/// `B(x_i, c ρ_S(x_i, y_i))` with `y_i`.
pub fn adaptive_robust_empirical<C: Classifier + ?Sized>(
    h: &C,
    s: &LabeledDataset,
    c: f64,
    k: usize,
    stream: &RandomStream,
) -> Result<LossReport> {
    Ok(adaptive_robust_empirical_grid(h, s, &[c], k, stream)?.remove(0))
}

/// [`adaptive_robust_empirical`] over a nondecreasing grid of factors.
pub fn adaptive_robust_empirical_grid<C: Classifier + ?Sized>(
    h: &C,
    s: &LabeledDataset,
    factors: &[f64],
    k: usize,
    stream: &RandomStream,
) -> Result<Vec<LossReport>> {
    nonempty(s)?;
    check_grid(factors, "expansion factor")?;
    if k == 0 {
        return Err(Error::InvalidParameter(
            "adaptive loss needs at least one probe".into(),
        ));
    }
    let index = NnIndex::new(s.clone())?;
    let mut failures_at = vec![0usize; factors.len()];
    for (i, (x, y)) in s.iter().enumerate() {
        let rho = index.rho(x, y)?;
        let radii: Vec<f64> = factors.iter().map(|c| c * rho).collect();
        let offsets = probe_offsets(stream, i, s.dim(), k);
        if let Some(j) = first_failure(h, x, y, &radii, &offsets) {
            failures_at[j] += 1;
        }
    }
    Ok(cumulative(&failures_at)
        .into_iter()
        .zip(factors)
        .map(|(count, c)| LossReport {
            name: format!("adaptive_empirical_c{c}"),
            value: fraction(count, s.len()),
            probes_per_point: k,
            seed: stream.seed(),
            n_evaluated: s.len(),
        })
        .collect())
}

/// Test-time adaptive robust loss: for each test item, `ρ` is its distance
/// to the nearest differently labeled item of `reference`; the item counts
/// when it is mislabeled or one of `k` uniform probes from the ball of radius
/// `factor * ρ` gets a different label.
pub fn adaptive_robust_testtime<C: Classifier + ?Sized>(
    h: &C,
    test: &LabeledDataset,
    reference: &LabeledDataset,
    factor: f64,
    k: usize,
    stream: &RandomStream,
) -> Result<LossReport> {
    nonempty(test)?;
    if reference.classes().len() < 2 {
        return Err(Error::SingleClass);
    }
    if !(factor.is_finite() && factor >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "factor must be finite and >= 0, got {factor}"
        )));
    }
    let index = NnIndex::new(reference.clone())?;
    let mut count = 0;
    for (i, (x, y)) in test.iter().enumerate() {
        let rho = index.rho(x, y)?;
        let offsets = probe_offsets(stream, i, test.dim(), k);
        if first_failure(h, x, y, &[factor * rho], &offsets).is_some() {
            count += 1;
        }
    }
    Ok(LossReport {
        name: "adaptive_robust".into(),
        value: fraction(count, test.len()),
        probes_per_point: k,
        seed: stream.seed(),
        n_evaluated: test.len(),
    })
}

/// Monte-Carlo estimate of `P_X[h1 != h2]` under `sampler`.
pub fn disagreement_mass<A, B, S>(
    h1: &A,
    h2: &B,
    sampler: &S,
    n: usize,
    stream: &RandomStream,
) -> Result<f64>
where
    A: Classifier + ?Sized,
    B: Classifier + ?Sized,
    S: DomainSampler + ?Sized,
{
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut s = stream.clone();
    let differ = (0..n)
        .filter(|_| {
            let x = sampler.sample_point(&mut s);
            h1.predict(&x) != h2.predict(&x)
        })
        .count();
    Ok(fraction(differ, n))
}
