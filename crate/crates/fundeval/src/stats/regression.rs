//! Ridge and logistic regression plus their evaluation metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::cholesky_solve;
use crate::{cast, Error, Real, Result};

struct Standardizer<T> {
    mean: Vec<T>,
    scale: Vec<T>,
}

impl<T: Real> Standardizer<T> {
    fn fit(x: &[Vec<T>]) -> Self {
        let n = x.len();
        let m = x[0].len();
        let nf = cast::<T>(n as f64);
        let mut mean = vec![T::zero(); m];
        for row in x {
            for (s, &v) in mean.iter_mut().zip(row) {
                *s += v;
            }
        }
        for s in mean.iter_mut() {
            *s /= nf;
        }
        let mut scale = vec![T::zero(); m];
        for row in x {
            for j in 0..m {
                let d = row[j] - mean[j];
                scale[j] += d * d;
            }
        }
        for s in scale.iter_mut() {
            let sd = (*s / nf).sqrt();
            *s = if sd > T::zero() { sd } else { T::one() };
        }
        Self { mean, scale }
    }

    fn apply(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .zip(self.mean.iter().zip(self.scale.iter()))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }
}

fn check_design<T>(x: &[Vec<T>], targets: usize) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::invalid("empty design matrix"));
    }
    let m = x[0].len();
    if m == 0 || x.iter().any(|r| r.len() != m) {
        return Err(Error::mismatch(
            "design matrix rows must be equal, non-empty",
        ));
    }
    if targets != x.len() {
        return Err(Error::mismatch("target length must match row count"));
    }
    Ok(m)
}

/// A fitted ridge model. `weights`/`intercept` act on raw features; the
/// standardized solution is kept for diagnostics.
#[derive(Debug, Clone)]
pub struct RidgeModel<T> {
    pub weights: Vec<T>,
    pub intercept: T,
    pub std_weights: Vec<T>,
}

impl<T: Real> RidgeModel<T> {
    pub fn predict(&self, row: &[T]) -> T {
        let mut acc = self.intercept;
        for (&w, &v) in self.weights.iter().zip(row) {
            acc += w * v;
        }
        acc
    }
}

/// Ridge regression: features are standardized internally, the intercept is
/// fitted on centered data, and `(X^T X + lambda I) w = X^T y` is solved by a
/// symmetric positive-definite factorization.
pub fn ridge_regression<T: Real>(x: &[Vec<T>], y: &[T], lambda: T) -> Result<RidgeModel<T>> {
    let m = check_design(x, y.len())?;
    if lambda < T::zero() {
        return Err(Error::invalid("lambda must be >= 0"));
    }
    let std = Standardizer::fit(x);
    let xs: Vec<Vec<T>> = x.iter().map(|r| std.apply(r)).collect();
    let y_mean = y.iter().copied().sum::<T>() / cast::<T>(y.len() as f64);

    // normal equations on the standardized, centered problem
    let mut gram = vec![T::zero(); m * m];
    let mut rhs = vec![T::zero(); m];
    for (row, &target) in xs.iter().zip(y) {
        let t = target - y_mean;
        for i in 0..m {
            rhs[i] += row[i] * t;
            for j in i..m {
                gram[i * m + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            gram[i * m + j] = gram[j * m + i];
        }
        gram[i * m + i] += lambda;
    }
    let std_weights = cholesky_solve(&gram, &rhs, m).map_err(|_| {
        Error::Singular(
            "ridge normal equations are singular; set lambda > 0 to regularize".to_string(),
        )
    })?;

    let mut weights = Vec::with_capacity(m);
    let mut intercept = y_mean;
    for j in 0..m {
        let w = std_weights[j] / std.scale[j];
        intercept -= w * std.mean[j];
        weights.push(w);
    }
    Ok(RidgeModel {
        weights,
        intercept,
        std_weights,
    })
}

/// A fitted logistic model (threshold 0.5).
#[derive(Debug, Clone)]
pub struct LogisticModel<T> {
    weights: Vec<T>,
    bias: T,
    mean: Vec<T>,
    scale: Vec<T>,
}

impl<T: Real> LogisticModel<T> {
    pub fn predict_proba(&self, row: &[T]) -> T {
        let mut z = self.bias;
        for (j, &v) in row.iter().enumerate() {
            z += self.weights[j] * (v - self.mean[j]) / self.scale[j];
        }
        T::one() / (T::one() + (-z).exp())
    }

    pub fn predict(&self, row: &[T]) -> bool {
        self.predict_proba(row) > cast::<T>(0.5)
    }
}

/// Full-batch gradient-descent logistic regression on standardized features.
pub fn logistic_binary<T: Real>(
    x: &[Vec<T>],
    y: &[bool],
    epochs: usize,
    learning_rate: T,
    seed: u64,
) -> Result<LogisticModel<T>> {
    let m = check_design(x, y.len())?;
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::invalid(
            "logistic regression needs both classes present",
        ));
    }
    let std = Standardizer::fit(x);
    let xs: Vec<Vec<T>> = x.iter().map(|r| std.apply(r)).collect();
    let n = cast::<T>(x.len() as f64);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<T> = (0..m)
        .map(|_| cast::<T>(rng.gen_range(-0.01..0.01)))
        .collect();
    let mut bias = T::zero();
    for _ in 0..epochs {
        let mut grad_w = vec![T::zero(); m];
        let mut grad_b = T::zero();
        for (row, &label) in xs.iter().zip(y) {
            let mut z = bias;
            for (j, &v) in row.iter().enumerate() {
                z += weights[j] * v;
            }
            let p = T::one() / (T::one() + (-z).exp());
            let err = p - if label { T::one() } else { T::zero() };
            grad_b += err;
            for (g, &v) in grad_w.iter_mut().zip(row) {
                *g += err * v;
            }
        }
        bias -= learning_rate * grad_b / n;
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= learning_rate * *g / n;
        }
    }
    Ok(LogisticModel {
        weights,
        bias,
        mean: std.mean,
        scale: std.scale,
    })
}

/// `F1 = 2PR / (P + R)`, zero when `P + R = 0`.
pub fn f1_score<T: Real>(pred: &[bool], truth: &[bool]) -> Result<T> {
    if pred.len() != truth.len() {
        return Err(Error::mismatch("prediction and truth lengths differ"));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fne = 0usize;
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fne += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 {
        T::zero()
    } else {
        cast::<T>(tp as f64 / (tp + fp) as f64)
    };
    let recall = if tp + fne == 0 {
        T::zero()
    } else {
        cast::<T>(tp as f64 / (tp + fne) as f64)
    };
    if precision + recall == T::zero() {
        return Ok(T::zero());
    }
    Ok(cast::<T>(2.0) * precision * recall / (precision + recall))
}

pub fn mean_absolute_error<T: Real>(pred: &[T], truth: &[T]) -> Result<T> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::mismatch("prediction and truth lengths differ"));
    }
    let mut acc = T::zero();
    for (&p, &t) in pred.iter().zip(truth) {
        acc += (p - t).abs();
    }
    Ok(acc / cast::<T>(pred.len() as f64))
}
