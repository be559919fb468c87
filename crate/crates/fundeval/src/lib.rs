//! Quantitative evaluation toolkit for synthetic colour fundus imagery.
//!
//! The crate bundles the numeric machinery needed to score a set of real and
//! synthetic retinal images against each other: Hessian-eigenvalue vesselness
//! maps and the edge loss built on them, image-fidelity metrics (Fréchet
//! distance, MMD, MS-SSIM), vector-quantization codebook mathematics,
//! morphological feature extraction from segmentation masks, and a
//! seed-deterministic statistical validation pipeline (permutation tests,
//! z-scoring, Train-Synthetic-Test-Real).
//!
//! All numeric kernels are generic over the scalar type through the [`Real`]
//! trait; `f64` aliases for the main data types live at the crate root and
//! are what the CLI and most callers want.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub mod embedding;
pub mod error;
pub mod image;
pub mod linalg;
pub mod metrics;
pub mod morphology;
pub mod phantom;
pub mod stats;
pub mod vesselness;
pub mod vq;

pub use error::{Error, Result};

/// Scalar trait bound used by every numeric kernel in this crate.
///
/// Implemented automatically for `f32` and `f64`.
pub trait Real:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Send + Sync + 'static
{
}

/// Shorthand for lifting an `f64` constant into a generic scalar.
#[inline]
pub(crate) fn cast<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("constant representable in scalar type")
}

// Concrete `f64` aliases for the generic core types.

pub type RasterImage = image::RasterImage<f64>;
pub type GrayImage = image::GrayImage<f64>;
pub type ScaleSet = vesselness::ScaleSet<f64>;
pub type VesselnessMap = vesselness::VesselnessMap<f64>;
pub type EmbeddingSet = embedding::EmbeddingSet<f64>;
pub type GaussianSummary = metrics::GaussianSummary<f64>;
pub type ActivationStack = metrics::ActivationStack<f64>;
pub type Codebook = vq::Codebook<f64>;
pub type LatentGrid = vq::LatentGrid<f64>;
pub type QuantizationResult = vq::QuantizationResult<f64>;
pub type RetinalFeatureRow = morphology::RetinalFeatureRow<f64>;
pub type FeatureMatrix = stats::FeatureMatrix<f64>;
