//! Exact finite-support constructions and a small enumerable classifier
//! family over which optimal binary and robust predictors are found by
//! exhaustive search.
//!
//! Coordinates, masses, regression values and radii are all rationals, so
//! every loss here is exact. Margins use open balls: an atom at distance
//! exactly `r` from a decision boundary is outside the `r`-margin.

use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::geometry::{Classifier, DomainSampler, Label, LabeledSampler, Point};
use crate::margin::Witness;
use crate::rng::RandomStream;
use crate::{Error, Result};

/// A point of the support with its mass and `μ(x) = Pr[y = 1 | x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub coords: Vec<Rational64>,
    pub mu: Rational64,
    pub mass: Rational64,
}

impl Atom {
    pub fn point(&self) -> Point {
        Point::from_raw(self.coords.iter().map(to_f64).collect())
    }
}

/// A distribution with finitely many atoms. Masses are positive and sum to
/// exactly 1; every `μ` lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    atoms: Vec<Atom>,
    dim: usize,
}

impl FiniteDistribution {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let dim = atoms.first().ok_or(Error::EmptyDataset)?.coords.len();
        if dim == 0 {
            return Err(Error::InvalidPoint("atom with zero coordinates".into()));
        }
        let mut total = Rational64::zero();
        for a in &atoms {
            if a.coords.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.coords.len(),
                });
            }
            if a.mass <= Rational64::zero() {
                return Err(Error::InvalidParameter(format!(
                    "atom mass must be positive, got {}",
                    a.mass
                )));
            }
            if a.mu < Rational64::zero() || a.mu > Rational64::one() {
                return Err(Error::InvalidParameter(format!(
                    "μ must lie in [0, 1], got {}",
                    a.mu
                )));
            }
            total += a.mass;
        }
        if total != Rational64::one() {
            return Err(Error::InvalidParameter(format!(
                "atom masses sum to {total}, not 1"
            )));
        }
        Ok(FiniteDistribution { atoms, dim })
    }

    /// Equal masses and deterministic labels.
    pub fn uniform_labeled(points: Vec<(Vec<Rational64>, Label)>) -> Result<Self> {
        let n = points.len() as i64;
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let mass = Rational64::new(1, n);
        Self::new(
            points
                .into_iter()
                .map(|(coords, y)| Atom {
                    coords,
                    mu: Rational64::from_integer(i64::from(y.0 != 0)),
                    mass,
                })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The restricted family for this distribution: constant 0, constant 1,
    /// then for each axis the midpoints between consecutive distinct atom
    /// coordinates in ascending order, each as a positive then a negative
    /// halfspace.
    pub fn family(&self) -> Vec<FamilyMember> {
        let mut out = vec![
            FamilyMember::Constant(Label::ZERO),
            FamilyMember::Constant(Label::ONE),
        ];
        for axis in 0..self.dim {
            let mut vals: Vec<Rational64> = self.atoms.iter().map(|a| a.coords[axis]).collect();
            vals.sort();
            vals.dedup();
            for w in vals.windows(2) {
                let threshold = (w[0] + w[1]) / 2;
                for positive in [true, false] {
                    out.push(FamilyMember::Halfspace {
                        axis,
                        threshold,
                        positive,
                    });
                }
            }
        }
        out
    }

    fn check_member(&self, h: &FamilyMember) -> Result<()> {
        if self.family().contains(h) {
            Ok(())
        } else {
            Err(Error::NotInFamily)
        }
    }
}

/// Member of the restricted family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyMember {
    Constant(Label),
    /// Positive: label 1 iff `x[axis] >= threshold`. Negative: label 1 iff
    /// `x[axis] < threshold`.
    Halfspace {
        axis: usize,
        threshold: Rational64,
        positive: bool,
    },
}

impl FamilyMember {
    pub fn predict_exact(&self, x: &[Rational64]) -> Label {
        match *self {
            FamilyMember::Constant(y) => y,
            FamilyMember::Halfspace {
                axis,
                threshold,
                positive,
            } => Label(u32::from((x[axis] >= threshold) == positive)),
        }
    }

    /// Whether `x` is within open distance `r` of a point labeled
    /// differently.
    pub fn in_margin(&self, x: &[Rational64], r: Rational64) -> bool {
        match *self {
            FamilyMember::Constant(_) => false,
            FamilyMember::Halfspace {
                axis, threshold, ..
            } => (x[axis] - threshold).abs() < r,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, FamilyMember::Constant(_))
    }
}

impl fmt::Display for FamilyMember {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FamilyMember::Constant(y) => write!(f, "const{y}"),
            FamilyMember::Halfspace {
                axis,
                threshold,
                positive,
            } => {
                let op = if positive { ">=" } else { "<" };
                write!(f, "1{{x{} {op} {}}}", axis + 1, to_f64(&threshold))
            }
        }
    }
}

impl Classifier for FamilyMember {
    fn predict(&self, x: &Point) -> Label {
        match *self {
            FamilyMember::Constant(y) => y,
            FamilyMember::Halfspace {
                axis,
                threshold,
                positive,
            } => Label(u32::from(
                (x.coords()[axis] >= to_f64(&threshold)) == positive,
            )),
        }
    }
}

impl Witness for FamilyMember {
    /// Reflection of `x` across the threshold hyperplane.
    fn witness(&self, x: &Point, _own: Label) -> Option<Point> {
        match *self {
            FamilyMember::Constant(_) => None,
            FamilyMember::Halfspace {
                axis, threshold, ..
            } => {
                let mut c = x.coords().to_vec();
                c[axis] = 2.0 * to_f64(&threshold) - c[axis];
                Some(Point::from_raw(c))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Binary,
    Robust(Rational64),
}

/// `Σ mass · (μ·1[h = 0] + (1 − μ)·1[h = 1])`.
pub fn exact_binary_loss<C: Classifier + ?Sized>(h: &C, d: &FiniteDistribution) -> Rational64 {
    d.atoms
        .iter()
        .map(|a| a.mass * atom_error(h.predict(&a.point()), a.mu))
        .sum()
}

fn exact_binary_member(h: &FamilyMember, d: &FiniteDistribution) -> Rational64 {
    d.atoms
        .iter()
        .map(|a| a.mass * atom_error(h.predict_exact(&a.coords), a.mu))
        .sum()
}

fn atom_error(pred: Label, mu: Rational64) -> Rational64 {
    if pred.0 == 0 {
        mu
    } else {
        Rational64::one() - mu
    }
}

/// Robust loss of a family member: atoms in the open `r`-margin cost their
/// full mass, all others their expected binary error.
pub fn exact_robust_loss(
    h: &FamilyMember,
    d: &FiniteDistribution,
    r: Rational64,
) -> Result<Rational64> {
    d.check_member(h)?;
    check_radius(r)?;
    Ok(robust_unchecked(h, d, r))
}

fn robust_unchecked(h: &FamilyMember, d: &FiniteDistribution, r: Rational64) -> Rational64 {
    d.atoms
        .iter()
        .map(|a| {
            if h.in_margin(&a.coords, r) {
                a.mass
            } else {
                a.mass * atom_error(h.predict_exact(&a.coords), a.mu)
            }
        })
        .sum()
}

/// Mass of atoms inside the open `r`-margin of `h`.
pub fn exact_margin_mass(
    h: &FamilyMember,
    d: &FiniteDistribution,
    r: Rational64,
) -> Result<Rational64> {
    d.check_member(h)?;
    check_radius(r)?;
    Ok(d.atoms
        .iter()
        .filter(|a| h.in_margin(&a.coords, r))
        .map(|a| a.mass)
        .sum())
}

/// Mass of atoms on which two predictors differ.
pub fn exact_disagreement(
    h1: &FamilyMember,
    h2: &FamilyMember,
    d: &FiniteDistribution,
) -> Rational64 {
    d.atoms
        .iter()
        .filter(|a| h1.predict_exact(&a.coords) != h2.predict_exact(&a.coords))
        .map(|a| a.mass)
        .sum()
}

fn check_radius(r: Rational64) -> Result<()> {
    if r < Rational64::zero() {
        return Err(Error::InvalidParameter(format!(
            "radius must be >= 0, got {r}"
        )));
    }
    Ok(())
}

fn member_loss(h: &FamilyMember, d: &FiniteDistribution, loss: LossKind) -> Rational64 {
    match loss {
        LossKind::Binary => exact_binary_member(h, d),
        LossKind::Robust(r) => robust_unchecked(h, d, r),
    }
}

/// First minimizer of `loss` in enumeration order, with its exact value.
pub fn exact_best(d: &FiniteDistribution, loss: LossKind) -> Result<(FamilyMember, Rational64)> {
    if let LossKind::Robust(r) = loss {
        check_radius(r)?;
    }
    let mut best: Option<(FamilyMember, Rational64)> = None;
    for h in d.family() {
        let v = member_loss(&h, d, loss);
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((h, v));
        }
    }
    Ok(best.expect("family contains both constants"))
}

/// Every family member attaining the minimum of `loss`, in enumeration order.
pub fn optimal_members(d: &FiniteDistribution, loss: LossKind) -> Result<Vec<FamilyMember>> {
    let (_, best) = exact_best(d, loss)?;
    Ok(d.family()
        .into_iter()
        .filter(|h| member_loss(h, d, loss) == best)
        .collect())
}

/// Two atoms at `0` and `gap` on the line, masses 1/2, labels 0 and 1.
pub fn scenario_two_point(gap: Rational64) -> Result<FiniteDistribution> {
    if gap <= Rational64::zero() {
        return Err(Error::InvalidParameter(format!(
            "gap must be positive, got {gap}"
        )));
    }
    FiniteDistribution::uniform_labeled(vec![
        (vec![Rational64::zero()], Label::ZERO),
        (vec![gap], Label::ONE),
    ])
}

/// Strongly separable two-atom line: the same atoms as
/// [`scenario_two_point`], with zero margin mass below `gap / 2` for the
/// midpoint threshold.
pub fn scenario_separable_line(gap: Rational64) -> Result<FiniteDistribution> {
    scenario_two_point(gap)
}

/// Four equally likely atoms `(−1, 0.9)`, `(−1, 1.1)`, `(1, 0.9)`, `(1, 2)`,
/// labeled 1 iff `x2 > 1`.
pub fn scenario_four_point() -> FiniteDistribution {
    let q = |n: i64, d: i64| Rational64::new(n, d);
    let atoms = [
        (q(-1, 1), q(9, 10)),
        (q(-1, 1), q(11, 10)),
        (q(1, 1), q(9, 10)),
        (q(1, 1), q(2, 1)),
    ];
    FiniteDistribution::uniform_labeled(
        atoms
            .into_iter()
            .map(|(a, b)| (vec![a, b], Label(u32::from(b > Rational64::one()))))
            .collect(),
    )
    .expect("four fixed atoms are valid")
}

/// Uniform over `[−2, −1] × [−1, 1] ∪ [1, 2] × [−1, 1]` with
/// `μ = 1/2 + ε/2` where `x2 >= 0` and `1/2 − ε/2` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoRectangles {
    epsilon: f64,
}

impl TwoRectangles {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        Ok(TwoRectangles { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn regression(&self, x: &Point) -> f64 {
        if x.coords()[1] >= 0.0 {
            0.5 + self.epsilon / 2.0
        } else {
            0.5 - self.epsilon / 2.0
        }
    }

    /// `1{x2 >= 0}`.
    pub fn bayes(&self) -> FamilyMember {
        FamilyMember::Halfspace {
            axis: 1,
            threshold: Rational64::zero(),
            positive: true,
        }
    }

    /// `1{x1 >= 0}`.
    pub fn robust_bayes(&self) -> FamilyMember {
        FamilyMember::Halfspace {
            axis: 0,
            threshold: Rational64::zero(),
            positive: true,
        }
    }

    /// Mass of the slab `|x2| < r`, which is the `r`-margin of
    /// [`TwoRectangles::bayes`].
    pub fn slab_mass(&self, r: f64) -> f64 {
        r.clamp(0.0, 1.0)
    }

    /// Binary loss of [`TwoRectangles::bayes`].
    pub fn bayes_binary_loss(&self) -> f64 {
        (1.0 - self.epsilon) / 2.0
    }

    pub fn contains(&self, x: &Point) -> bool {
        let c = x.coords();
        c.len() == 2 && (1.0..=2.0).contains(&c[0].abs()) && (-1.0..=1.0).contains(&c[1])
    }
}

impl DomainSampler for TwoRectangles {
    fn dim(&self) -> usize {
        2
    }

    fn sample_point(&self, stream: &mut RandomStream) -> Point {
        let sign = if stream.bernoulli(0.5) { 1.0 } else { -1.0 };
        let x1 = sign * (1.0 + stream.uniform());
        let x2 = 2.0 * stream.uniform() - 1.0;
        Point::from_raw(vec![x1, x2])
    }
}

impl LabeledSampler for TwoRectangles {
    fn sample_labeled(&self, stream: &mut RandomStream) -> (Point, Label) {
        let x = self.sample_point(stream);
        let y = Label(u32::from(stream.bernoulli(self.regression(&x))));
        (x, y)
    }
}

/// Parses a decimal such as `0.1`, `-2`, `.25` or a fraction `1/3` exactly.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let bad = || Error::InvalidParameter(format!("not an exact decimal or fraction: `{s}`"));
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if (int.is_empty() && frac.is_empty())
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
        || frac.len() > 15
    {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num: i64 = digits.parse().map_err(|_| bad())?;
    let den = 10i64.pow(frac.len() as u32);
    let v = Rational64::new(num, den);
    Ok(if neg { -v } else { v })
}

pub fn to_f64(q: &Rational64) -> f64 {
    q.to_f64().expect("i64 ratio converts to f64")
}
