//! Maximum mean discrepancy with a Gaussian kernel.

use crate::embedding::EmbeddingSet;
use crate::image::{green_channel, RasterImage};
use crate::{cast, Error, Real, Result};

/// Kernel bandwidth: a fixed value or the pooled median heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth<T> {
    Median,
    Fixed(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmdEstimator {
    Biased,
    Unbiased,
}

#[inline]
fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Median of pairwise Euclidean distances over the pooled sample.
///
/// Deterministic: distances are sorted and the lower median is taken for
/// even counts.
pub fn median_heuristic_bandwidth<T: Real>(a: &EmbeddingSet<T>, b: &EmbeddingSet<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::mismatch("embedding dimensions differ"));
    }
    let pooled: Vec<&[T]> = a.rows().chain(b.rows()).collect();
    let m = pooled.len();
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            dists.push(sq_dist(pooled[i], pooled[j]).sqrt());
        }
    }
    if dists.is_empty() {
        return Err(Error::invalid("median heuristic needs at least 2 samples"));
    }
    dists.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Ok(dists[(dists.len() - 1) / 2])
}

/// Squared MMD with kernel `k(x, y) = exp(-||x - y||^2 / (2 h^2))`.
pub fn mmd_squared<T: Real>(
    set_a: &EmbeddingSet<T>,
    set_b: &EmbeddingSet<T>,
    bandwidth: Bandwidth<T>,
    estimator: MmdEstimator,
) -> Result<T> {
    if set_a.dim() != set_b.dim() {
        return Err(Error::mismatch(format!(
            "embedding dimensions differ: {} vs {}",
            set_a.dim(),
            set_b.dim()
        )));
    }
    let h = match bandwidth {
        Bandwidth::Fixed(h) => h,
        Bandwidth::Median => median_heuristic_bandwidth(set_a, set_b)?,
    };
    if h <= T::zero() {
        return Err(Error::invalid("bandwidth must be > 0"));
    }
    let na = set_a.len();
    let nb = set_b.len();
    if estimator == MmdEstimator::Unbiased && (na < 2 || nb < 2) {
        return Err(Error::invalid(
            "unbiased estimator requires at least 2 samples per set",
        ));
    }
    let gamma = T::one() / (cast::<T>(2.0) * h * h);
    let kernel = |x: &[T], y: &[T]| (-sq_dist(x, y) * gamma).exp();

    let mut within_a = T::zero();
    for i in 0..na {
        for j in 0..na {
            if estimator == MmdEstimator::Unbiased && i == j {
                continue;
            }
            within_a += kernel(set_a.row(i), set_a.row(j));
        }
    }
    let mut within_b = T::zero();
    for i in 0..nb {
        for j in 0..nb {
            if estimator == MmdEstimator::Unbiased && i == j {
                continue;
            }
            within_b += kernel(set_b.row(i), set_b.row(j));
        }
    }
    let mut cross = T::zero();
    for i in 0..na {
        for j in 0..nb {
            cross += kernel(set_a.row(i), set_b.row(j));
        }
    }

    let naf = cast::<T>(na as f64);
    let nbf = cast::<T>(nb as f64);
    let two = cast::<T>(2.0);
    let value = match estimator {
        MmdEstimator::Biased => {
            within_a / (naf * naf) + within_b / (nbf * nbf) - two * cross / (naf * nbf)
        }
        MmdEstimator::Unbiased => {
            within_a / (naf * (naf - T::one())) + within_b / (nbf * (nbf - T::one()))
                - two * cross / (naf * nbf)
        }
    };
    Ok(value)
}

/// Flatten images into pixel-space embedding rows (row-major over the green
/// channel when inputs are RGB). All images must share dimensions.
pub fn images_to_pixel_embeddings<T: Real>(images: &[RasterImage<T>]) -> Result<EmbeddingSet<T>> {
    if images.is_empty() {
        return Err(Error::invalid("need at least one image"));
    }
    let (w, h) = (images[0].width, images[0].height);
    let mut rows = Vec::with_capacity(images.len());
    for img in images {
        if img.width != w || img.height != h {
            return Err(Error::mismatch(
                "all images must share dimensions for pixel-space MMD",
            ));
        }
        rows.push(green_channel(img).data);
    }
    EmbeddingSet::from_rows(&rows)
}
