//! Fréchet distance between Gaussian summaries of embedding populations.

use crate::embedding::EmbeddingSet;
use crate::linalg::{apply_spectral, mat_mul, symmetric_eigen};
use crate::{cast, Error, Real, Result};

/// Mean and covariance of an embedding population.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary<T> {
    mean: Vec<T>,
    covariance: Vec<T>,
    n: usize,
}

impl<T: Real> GaussianSummary<T> {
    /// `covariance` is `d x d` row-major; it must be symmetric to 1e-9 with a
    /// non-negative diagonal, and summarize at least two samples.
    pub fn new(mean: Vec<T>, covariance: Vec<T>, n: usize) -> Result<Self> {
        let d = mean.len();
        if covariance.len() != d * d {
            return Err(Error::mismatch(format!(
                "covariance length {} != {d}x{d}",
                covariance.len()
            )));
        }
        if n < 2 {
            return Err(Error::invalid("summary requires n >= 2 samples"));
        }
        if mean.iter().any(|v| !v.is_finite()) || covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("summary entries must be finite"));
        }
        let tol = cast::<T>(1e-9);
        for i in 0..d {
            if covariance[i * d + i] < -tol {
                return Err(Error::invalid("covariance diagonal must be non-negative"));
            }
            for j in (i + 1)..d {
                if (covariance[i * d + j] - covariance[j * d + i]).abs() > tol {
                    return Err(Error::invalid("covariance must be symmetric to 1e-9"));
                }
            }
        }
        Ok(Self {
            mean,
            covariance,
            n,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn covariance(&self) -> &[T] {
        &self.covariance
    }

    pub fn samples(&self) -> usize {
        self.n
    }
}

/// Column means and unbiased sample covariance, symmetrized as
/// `(S + S^T) / 2`.
pub fn gaussian_summary<T: Real>(set: &EmbeddingSet<T>) -> Result<GaussianSummary<T>> {
    let n = set.len();
    let d = set.dim();
    if n < 2 {
        return Err(Error::invalid(
            "sample covariance requires at least 2 samples",
        ));
    }
    let inv_n = T::one() / cast::<T>(n as f64);
    let mut mean = vec![T::zero(); d];
    for row in set.rows() {
        for (m, &x) in mean.iter_mut().zip(row.iter()) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m *= inv_n;
    }
    let denom = T::one() / cast::<T>((n - 1) as f64);
    let mut cov = vec![T::zero(); d * d];
    for row in set.rows() {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                cov[i * d + j] += di * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] * denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    GaussianSummary::new(mean, cov, n)
}

/// Result of [`frechet_distance`]; `regularized` flags the epsilon fallback
/// used when a covariance was singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetDistance<T> {
    pub value: T,
    pub regularized: bool,
}

const EPSILON: f64 = 1e-6;

/// `||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa Sb)^{1/2})`.
///
/// The square root is routed through the symmetric eigendecomposition of
/// `Sa^{1/2} Sb Sa^{1/2}`, with eigenvalues clamped at zero before rooting.
/// If either covariance is singular, `1e-6 * I` is added to both and the
/// `regularized` flag is set. The returned value is clamped at zero.
pub fn frechet_distance<T: Real>(
    a: &GaussianSummary<T>,
    b: &GaussianSummary<T>,
) -> Result<FrechetDistance<T>> {
    let d = a.dim();
    if b.dim() != d {
        return Err(Error::mismatch(format!(
            "summaries have dimensions {d} and {}",
            b.dim()
        )));
    }

    let (mut wa, va) = symmetric_eigen(&a.covariance, d);
    let (mut wb, vb) = symmetric_eigen(&b.covariance, d);
    let scale_a = wa.iter().fold(T::one(), |m, w| m.max(w.abs()));
    let scale_b = wb.iter().fold(T::one(), |m, w| m.max(w.abs()));
    let singular_tol = cast::<T>(1e-10);
    let singular = wa.iter().any(|&w| w <= singular_tol * scale_a)
        || wb.iter().any(|&w| w <= singular_tol * scale_b);
    if singular {
        let eps = cast::<T>(EPSILON);
        for w in wa.iter_mut() {
            *w += eps;
        }
        for w in wb.iter_mut() {
            *w += eps;
        }
    }

    let sqrt_a = apply_spectral(&wa, &va, d, |w| w.max(T::zero()).sqrt());
    let sb = apply_spectral(&wb, &vb, d, |w| w);
    let inner = mat_mul(&sqrt_a, &mat_mul(&sb, &sqrt_a, d), d);
    let mut sym = vec![T::zero(); d * d];
    let half = cast::<T>(0.5);
    for i in 0..d {
        for j in 0..d {
            sym[i * d + j] = (inner[i * d + j] + inner[j * d + i]) * half;
        }
    }
    let (wm, _) = symmetric_eigen(&sym, d);
    let mut trace_sqrt = T::zero();
    for &w in &wm {
        trace_sqrt += w.max(T::zero()).sqrt();
    }

    let mut mean_term = T::zero();
    for (&x, &y) in a.mean.iter().zip(b.mean.iter()) {
        let diff = x - y;
        mean_term += diff * diff;
    }
    let mut trace_a = T::zero();
    let mut trace_b = T::zero();
    for &w in &wa {
        trace_a += w;
    }
    for &w in &wb {
        trace_b += w;
    }

    let two = cast::<T>(2.0);
    let value = (mean_term + trace_a + trace_b - two * trace_sqrt).max(T::zero());
    Ok(FrechetDistance {
        value,
        regularized: singular,
    })
}
