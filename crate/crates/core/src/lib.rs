//! Locally adaptive adversarial-robustness primitives.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: points, labels, labeled balls, the [`Classifier`] trait and
//!   Euclidean distance.
//! - [`rng`]: the seeded [`RandomStream`] every randomized routine draws from.
//! - [`dataset`]: [`LabeledDataset`], CSV I/O and min-max normalization.
//! - [`datagen`]: synthetic one-dimensional manifolds in the unit square and
//!   train/test splitting.
//! - [`neighbors`]: nearest-opposite-label radii and exact 1-NN over points and
//!   balls, backed by a uniform grid.
//! - [`augment`]: adaptive (and fixed-radius) robust expansion and sampled
//!   augmentation.
//! - [`losses`]: binary, fixed-radius robust and adaptive robust loss
//!   estimators.
//! - [`margin`]: nearest-set canonical Bayes classifiers, margin-rate profiles
//!   and the 1-NN sample-size bound.
//! - [`mlp`]: a 2x10 ReLU network trained with plain mini-batch gradient
//!   descent.
//! - [`scenarios`]: exact finite constructions separating binary and robust
//!   optimality.
//!
//! All randomness is explicit: every estimator takes a [`RandomStream`] and
//! derives per-item child streams from its seed, so results do not depend on
//! evaluation order.

pub mod augment;
pub mod datagen;
pub mod dataset;
mod error;
pub mod geometry;
pub mod losses;
pub mod margin;
pub mod mlp;
pub mod neighbors;
pub mod rng;
pub mod scenarios;

pub use dataset::LabeledDataset;
pub use error::{Error, Result};
pub use geometry::{
    distance, Classifier, DomainSampler, Label, LabeledBall, LabeledSampler, Point,
};
pub use rng::RandomStream;
