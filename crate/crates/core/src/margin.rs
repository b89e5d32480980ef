//! Margin-canonical Bayes classifiers and margin-rate profiles.
//!
//! The margin area of `h` at radius `r` is the set of points `x` with some
//! `z` in the open ball `B_r(x)` such that `h(z) != h(x)`. Its mass under the
//! marginal, as a function of `r`, is the margin rate when `h` is the
//! nearest-set (margin-canonical) Bayes classifier.

use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::write_file;
use crate::geometry::{dist, Classifier, DomainSampler, Label, Point};
use crate::neighbors::NnIndex;
use crate::rng::RandomStream;
use crate::{Error, LabeledDataset, Result};

/// Steps of the boundary bisection toward a witness point.
pub const WITNESS_BISECTION_STEPS: usize = 30;

/// Supplies, for a point and its predicted label, a point that is believed to
/// carry a different label. Used to find thin margins that random probes
/// miss.
pub trait Witness {
    fn witness(&self, x: &Point, own: Label) -> Option<Point>;
}

/// Nearest-set classifier over dense samplings of the two class supports.
/// Ties go to label 0.
#[derive(Debug, Clone)]
pub struct NearestSetClassifier {
    index: NnIndex,
}

/// Builds the nearest-set classifier `x -> argmin_i dist(x, support_i)`.
pub fn canonical_bayes(support0: Vec<Point>, support1: Vec<Point>) -> Result<NearestSetClassifier> {
    if support0.is_empty() || support1.is_empty() {
        return Err(Error::InvalidParameter(
            "both class supports must be nonempty".into(),
        ));
    }
    let labels = std::iter::repeat_n(Label::ZERO, support0.len())
        .chain(std::iter::repeat_n(Label::ONE, support1.len()))
        .collect();
    // support0 comes first, so smallest-index tie breaking favors label 0.
    let points = support0.into_iter().chain(support1).collect();
    let data = LabeledDataset::new(points, labels)?;
    Ok(NearestSetClassifier {
        index: NnIndex::new(data)?,
    })
}

impl NearestSetClassifier {
    pub fn from_dataset(ds: &LabeledDataset) -> Result<Self> {
        let mut s0 = Vec::new();
        let mut s1 = Vec::new();
        for (p, y) in ds.iter() {
            match y.0 {
                0 => s0.push(p.clone()),
                1 => s1.push(p.clone()),
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "nearest-set classifier is binary; found label {other}"
                    )))
                }
            }
        }
        canonical_bayes(s0, s1)
    }

    pub fn supports(&self) -> &LabeledDataset {
        self.index.data()
    }
}

impl Classifier for NearestSetClassifier {
    fn predict(&self, x: &Point) -> Label {
        self.index.predict(x)
    }
}

impl Witness for NearestSetClassifier {
    /// The nearest point of the other support.
    fn witness(&self, x: &Point, own: Label) -> Option<Point> {
        let (i, _) = self.index.nearest_other(x, own).ok()??;
        Some(self.index.data().point(i).clone())
    }
}

/// Probe test for `x` lying in the margin area of `h` at radius `r`.
///
/// Returns true iff one of `k` uniform probes in `B_r(x)` has a label other
/// than `h(x)`, or bisection along the segment toward `witness` locates a
/// differently labeled point at distance `< r`. Only verified points count,
/// so this is a lower bound on true membership.
pub fn margin_membership<C: Classifier + ?Sized>(
    h: &C,
    x: &Point,
    r: f64,
    k: usize,
    stream: &mut RandomStream,
    witness: Option<&Point>,
) -> bool {
    if r <= 0.0 {
        return false;
    }
    let own = h.predict(x);
    if let Some(w) = witness {
        if witness_crossing(h, x, own, w).is_some_and(|d| d < r) {
            return true;
        }
    }
    (0..k).any(|_| {
        let u = stream.unit_ball(x.dim());
        h.predict(&x.offset(&u, r)) != own
    })
}

/// Distance from `x` to a verified differently labeled point on the segment
/// toward `w`, refined by bisection.
fn witness_crossing<C: Classifier + ?Sized>(
    h: &C,
    x: &Point,
    own: Label,
    w: &Point,
) -> Option<f64> {
    let len = dist(x.coords(), w.coords());
    if len == 0.0 || h.predict(w) == own {
        return None;
    }
    let dir: Vec<f64> = w
        .coords()
        .iter()
        .zip(x.coords())
        .map(|(a, b)| (a - b) / len)
        .collect();
    let (mut lo, mut hi) = (0.0, len);
    for _ in 0..WITNESS_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if h.predict(&x.offset(&dir, mid)) == own {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // `hi` is always a verified flip: either `w` itself or a bisection point.
    Some(if hi == len {
        len
    } else {
        dist(x.offset(&dir, hi).coords(), x.coords())
    })
}

/// Tabulated, monotone estimate of `Φ(r)` over an increasing radius grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub probes: usize,
    pub seed: u64,
    pub n_points: usize,
}

impl MarginProfile {
    /// Builds a profile from raw estimates, enforcing monotonicity by a
    /// running maximum.
    pub fn from_raw(
        radii: Vec<f64>,
        raw: Vec<f64>,
        probes: usize,
        seed: u64,
        n_points: usize,
    ) -> Result<Self> {
        if radii.is_empty() || radii.len() != raw.len() {
            return Err(Error::InvalidParameter(
                "profile needs matching, nonempty radii and values".into(),
            ));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] < 0.0 {
            return Err(Error::InvalidParameter(
                "profile radii must be >= 0 and strictly increasing".into(),
            ));
        }
        let values = raw
            .iter()
            .zip(&radii)
            .scan(0.0f64, |m, (&v, &r)| {
                *m = if r == 0.0 {
                    0.0
                } else {
                    m.max(v.clamp(0.0, 1.0))
                };
                Some(*m)
            })
            .collect();
        Ok(MarginProfile {
            radii,
            values,
            probes,
            seed,
            n_points,
        })
    }

    /// Largest grid radius `r` with `Φ̂(r) <= epsilon`, or 0 if none.
    pub fn inverse(&self, epsilon: f64) -> f64 {
        self.radii
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v <= epsilon)
            .map(|(&r, _)| r)
            .next_back()
            .unwrap_or(0.0)
    }

    /// `Φ̂` at a grid radius (step interpolation: value of the largest grid
    /// radius `<= r`, 0 below the grid).
    pub fn value_at(&self, r: f64) -> f64 {
        let i = self.radii.partition_point(|&g| g <= r);
        if i == 0 {
            0.0
        } else {
            self.values[i - 1]
        }
    }

    /// CSV with header `r,phi_hat`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("r,phi_hat\n");
        for (r, v) in self.radii.iter().zip(&self.values) {
            writeln!(out, "{r},{v}").unwrap();
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_csv_string().as_bytes())
    }
}

/// Estimates `φ^h(r)`: for every grid radius, the fraction of `n` sampled
/// points that lie in the margin area of `h`. The same sampled points and
/// probe stream are reused across radii.
pub fn margin_profile<C, S>(
    sampler: &S,
    h: &C,
    witness: Option<&dyn Witness>,
    radii: &[f64],
    n: usize,
    k: usize,
    stream: &RandomStream,
) -> Result<MarginProfile>
where
    C: Classifier + ?Sized,
    S: DomainSampler + ?Sized,
{
    if n == 0 {
        return Err(Error::InvalidParameter(
            "need at least one sample point".into(),
        ));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) || radii.first().is_none_or(|r| *r < 0.0) {
        return Err(Error::InvalidParameter(
            "radius grid must be >= 0 and strictly increasing".into(),
        ));
    }
    let mut points_stream = stream.child(0);
    let mut counts = vec![0usize; radii.len()];
    for i in 0..n {
        let x = sampler.sample_point(&mut points_stream);
        let own = h.predict(&x);
        let w = witness.and_then(|wt| wt.witness(&x, own));
        let crossing = w.as_ref().and_then(|w| witness_crossing(h, &x, own, w));
        let probe_stream = stream.child(1 + i as u64);
        for (j, &r) in radii.iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            let hit = crossing.is_some_and(|d| d < r) || {
                let mut ps = probe_stream.clone();
                margin_membership(h, &x, r, k, &mut ps, None)
            };
            if hit {
                counts[j] += 1;
            }
        }
    }
    let raw = counts.iter().map(|&c| c as f64 / n as f64).collect();
    MarginProfile::from_raw(radii.to_vec(), raw, k, stream.seed(), n)
}

/// Largest grid radius with `Φ̂(r) <= epsilon`; 0 if none.
pub fn inverse_phi(profile: &MarginProfile, epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    Ok(profile.inverse(epsilon))
}

/// Sample size sufficient for 1-NN on a 0.5-adaptive augmentation to reach
/// error `epsilon` with probability `1 - delta`:
/// `3^d d^(d/2) / (e r^d epsilon delta)` with `r = Φ^{-1}(epsilon)`.
pub fn nn_sample_bound(d: usize, epsilon: f64, delta: f64, r_eps: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0 && delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon and delta must lie in (0, 1], got {epsilon} and {delta}"
        )));
    }
    if !(r_eps > 0.0 && r_eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bound is undefined for margin radius {r_eps}"
        )));
    }
    let df = d as f64;
    // Evaluate in log space; 3^d d^(d/2) overflows long before the quotient does.
    let log =
        df * 3f64.ln() + 0.5 * df * df.ln() - 1.0 - df * r_eps.ln() - epsilon.ln() - delta.ln();
    Ok(log.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn threshold(t: f64) -> impl Fn(&Point) -> Label {
        move |p: &Point| Label((p.coords()[0] >= t) as u32)
    }

    #[test]
    fn canonical_bayes_examples() {
        let h =
            canonical_bayes(vec![Point::from([0.0, 0.0])], vec![Point::from([2.0, 0.0])]).unwrap();
        assert_eq!(h.predict(&Point::from([0.5, 0.0])), Label(0));
        assert_eq!(h.predict(&Point::from([0.0, 0.0])), Label(0));
        assert_eq!(h.predict(&Point::from([1.0, 0.0])), Label(0)); // tie
        assert_eq!(h.predict(&Point::from([1.5, 0.0])), Label(1));
        assert!(canonical_bayes(vec![], vec![Point::from([1.0])]).is_err());
    }

    #[test]
    fn swapped_supports_flip_predictions() {
        let mut s = RandomStream::new(2);
        let a: Vec<Point> = (0..50)
            .map(|_| Point::from_raw(vec![s.uniform(), s.uniform()]))
            .collect();
        let b: Vec<Point> = (0..50)
            .map(|_| Point::from_raw(vec![s.uniform(), s.uniform()]))
            .collect();
        let h = canonical_bayes(a.clone(), b.clone()).unwrap();
        let g = canonical_bayes(b, a).unwrap();
        for _ in 0..2000 {
            let x = Point::from_raw(vec![s.uniform(), s.uniform()]);
            assert_eq!(h.predict(&x), g.predict(&x).flipped());
        }
    }

    #[test]
    fn membership_examples() {
        let h = threshold(0.0);
        let mut st = RandomStream::new(0);
        assert!(!margin_membership(
            &h,
            &Point::from([0.3]),
            0.0,
            10,
            &mut st,
            None
        ));
        assert!(margin_membership(
            &h,
            &Point::from([0.3]),
            0.5,
            0,
            &mut st,
            Some(&Point::from([-1.0]))
        ));
        assert!(!margin_membership(
            &h,
            &Point::from([0.7]),
            0.5,
            100,
            &mut st,
            None
        ));
        // witness beyond reach: crossing at 0.7 > 0.5
        assert!(!margin_membership(
            &h,
            &Point::from([0.7]),
            0.5,
            0,
            &mut st,
            Some(&Point::from([-1.0]))
        ));
    }

    #[test]
    fn inverse_examples() {
        let p =
            MarginProfile::from_raw(vec![0.1, 0.2, 0.3], vec![0.0, 0.05, 0.2], 0, 0, 1).unwrap();
        assert_eq!(inverse_phi(&p, 0.1).unwrap(), 0.2);
        assert_eq!(inverse_phi(&p, 1.0).unwrap(), 0.3);
        let pos = MarginProfile::from_raw(vec![0.1, 0.2], vec![0.01, 0.05], 0, 0, 1).unwrap();
        assert_eq!(inverse_phi(&pos, 0.0).unwrap(), 0.0);
        assert!(inverse_phi(&p, 1.5).is_err());
    }

    #[test]
    fn isotonic_rounding() {
        let p =
            MarginProfile::from_raw(vec![0.0, 0.1, 0.2, 0.3], vec![0.4, 0.2, 0.1, 0.3], 0, 0, 1)
                .unwrap();
        assert_eq!(p.values, vec![0.0, 0.2, 0.2, 0.3]);
        assert!(MarginProfile::from_raw(vec![0.2, 0.1], vec![0.0, 0.0], 0, 0, 1).is_err());
    }

    #[test]
    fn sample_bound_values() {
        assert!(
            (nn_sample_bound(1, 1.0, 1.0, 1.0).unwrap() - 3.0 / std::f64::consts::E).abs() < 1e-12
        );
        let b = nn_sample_bound(2, 0.1, 0.1, 0.1).unwrap();
        let direct = 9.0 * 2.0 / (std::f64::consts::E * 0.01 * 0.1 * 0.1);
        assert!((b / direct - 1.0).abs() < 1e-12);
        let half = nn_sample_bound(2, 0.1, 0.2, 0.1).unwrap();
        assert!((b / half - 2.0).abs() < 1e-12);
        assert!(nn_sample_bound(2, 0.1, 0.1, 0.0).is_err());
    }

    #[test]
    fn threshold_profile_matches_closed_form() {
        struct Unit;
        impl DomainSampler for Unit {
            fn dim(&self) -> usize {
                1
            }
            fn sample_point(&self, s: &mut RandomStream) -> Point {
                Point::from_raw(vec![s.uniform()])
            }
        }
        struct Mirror;
        impl Witness for Mirror {
            fn witness(&self, x: &Point, _: Label) -> Option<Point> {
                Some(Point::from_raw(vec![1.0 - x.coords()[0]]))
            }
        }
        let h = threshold(0.5);
        let radii = [0.0, 0.05, 0.1, 0.25, 0.5, 0.6];
        let p = margin_profile(
            &Unit,
            &h,
            Some(&Mirror),
            &radii,
            20_000,
            2,
            &RandomStream::new(5),
        )
        .unwrap();
        for (r, v) in radii.iter().zip(&p.values) {
            let exact = (2.0 * r).min(1.0);
            assert!((v - exact).abs() < 0.02, "r={r} got {v} want {exact}");
        }
    }
}
