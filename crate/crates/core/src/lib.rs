//! Cross-resolution person re-identification at desk scale.
//!
//! The pipeline has four stages, each a module:
//!
//! - [`imaging`] and [`iqa`]: load 8-bit images, measure their sharpness in the
//!   frequency domain and split a training set into high- and low-resolution
//!   halves at the mean score.
//! - [`dataset`]: JSON-lines manifests, the antithetical counterpart generator
//!   (random down-up resampling for sharp images, an enhancer for blurry ones)
//!   and a procedural identity corpus.
//! - [`metric`] and [`trainer`]: cosine-based losses with analytic gradients
//!   (contrastive center loss, center loss, batch-hard triplet, softmax
//!   cross-entropy) and a small fully-connected embedding network trained with
//!   plain SGD.
//! - [`evalkit`]: CMC/mAP ranking, distance statistics, resolution-binned
//!   distance tables and triplet selection histograms.
//!
//! Everything randomized takes an explicit seed; identical seeds give
//! bit-identical results.

pub mod dataset;
pub mod error;
pub mod evalkit;
pub mod grid;
pub mod imaging;
pub mod iqa;
pub mod metric;
pub mod parallel;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use grid::Grid;
pub use imaging::Image;
