//! Image-fidelity metrics and feature-distance kernels.

mod distance;
mod frechet;
mod mmd;
mod ssim;

pub use distance::{
    embedding_l1_distance, perceptual_stack_distance, ActivationLayer, ActivationStack,
};
pub use frechet::{frechet_distance, gaussian_summary, FrechetDistance, GaussianSummary};
pub use mmd::{
    images_to_pixel_embeddings, median_heuristic_bandwidth, mmd_squared, Bandwidth, MmdEstimator,
};
pub use ssim::{msssim, MSSSIM_WEIGHTS};
