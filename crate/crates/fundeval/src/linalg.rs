//! Small dense linear algebra: symmetric eigendecomposition and Cholesky.
//!
//! Matrices are row-major `&[T]` slices of length `n * n`. The routines here
//! are written for the moderate dimensions this crate needs (feature
//! covariances, ridge normal equations); they are deterministic and carry no
//! external dependencies.

use crate::{cast, Error, Real, Result};

/// Multiply two square `n x n` row-major matrices.
pub fn mat_mul<T: Real>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n * n);
    let mut c = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == T::zero() {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues ascending and the
/// k-th eigenvector stored as column k of the row-major `n x n` matrix, so
/// `A = V diag(w) V^T`.
pub fn symmetric_eigen<T: Real>(matrix: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    assert_eq!(matrix.len(), n * n, "matrix must be n*n");
    let mut a = matrix.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    if n > 1 {
        let eps = cast::<T>(1e-30);
        for _sweep in 0..100 {
            let mut off = T::zero();
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[p * n + q] * a[p * n + q];
                }
            }
            if off <= eps * frobenius_sq(&a, n) {
                break;
            }
            for p in 0..(n - 1) {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, &mut v, n, p, q);
                }
            }
        }
    }
    let mut pairs: Vec<(usize, T)> = (0..n).map(|i| (i, a[i * n + i])).collect();
    pairs.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal));
    let eigenvalues: Vec<T> = pairs.iter().map(|&(_, w)| w).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (dst, &(src, _)) in pairs.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + dst] = v[r * n + src];
        }
    }
    (eigenvalues, vectors)
}

fn frobenius_sq<T: Real>(a: &[T], n: usize) -> T {
    let mut s = T::zero();
    for i in 0..n * n {
        s += a[i] * a[i];
    }
    if s == T::zero() {
        T::one()
    } else {
        s
    }
}

fn jacobi_rotate<T: Real>(a: &mut [T], v: &mut [T], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == T::zero() {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (cast::<T>(2.0) * apq);
    // tan of the rotation angle, smaller root for stability
    let t = if theta >= T::zero() {
        T::one() / (theta + (theta * theta + T::one()).sqrt())
    } else {
        -T::one() / (-theta + (theta * theta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;
    let tau = s / (T::one() + c);

    a[p * n + p] = app - t * apq;
    a[q * n + q] = aqq + t * apq;
    a[p * n + q] = T::zero();
    a[q * n + p] = T::zero();
    for k in 0..n {
        if k != p && k != q {
            let akp = a[k * n + p];
            let akq = a[k * n + q];
            let new_kp = akp - s * (akq + tau * akp);
            let new_kq = akq + s * (akp - tau * akq);
            a[k * n + p] = new_kp;
            a[p * n + k] = new_kp;
            a[k * n + q] = new_kq;
            a[q * n + k] = new_kq;
        }
    }
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp - s * (vkq + tau * vkp);
        v[k * n + q] = vkq + s * (vkp - tau * vkq);
    }
}

/// Reconstruct `V f(diag(w)) V^T` from a symmetric eigendecomposition.
pub fn apply_spectral<T: Real>(
    eigenvalues: &[T],
    vectors: &[T],
    n: usize,
    f: impl Fn(T) -> T,
) -> Vec<T> {
    let mut out = vec![T::zero(); n * n];
    for k in 0..n {
        let fw = f(eigenvalues[k]);
        if fw == T::zero() {
            continue;
        }
        for i in 0..n {
            let vik = vectors[i * n + k] * fw;
            for j in 0..n {
                out[i * n + j] += vik * vectors[j * n + k];
            }
        }
    }
    out
}

/// Solve `A x = b` for symmetric positive-definite `A` via Cholesky.
///
/// Pivots below `n * eps * max|diag|` are treated as singular.
pub fn cholesky_solve<T: Real>(a: &[T], b: &[T], n: usize) -> Result<Vec<T>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut max_diag = T::zero();
    for i in 0..n {
        max_diag = max_diag.max(a[i * n + i].abs());
    }
    let pivot_tol = T::epsilon() * cast::<T>(n as f64) * max_diag;
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= pivot_tol {
                    return Err(Error::Singular(
                        "matrix is not positive definite".to_string(),
                    ));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // forward substitution L y = b
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    // back substitution L^T x = y
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}
