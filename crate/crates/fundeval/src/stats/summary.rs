//! Per-column summaries and z-score normalization against a reference set.

use super::FeatureMatrix;
use crate::{cast, Error, Real, Result};

/// Mean/std of one column; `None` when fewer than two values are present.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSummary<T> {
    pub name: String,
    pub mean: Option<T>,
    pub std: Option<T>,
    pub n: usize,
}

fn mean_std<T: Real>(values: &[T]) -> (Option<T>, Option<T>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = cast::<T>(values.len() as f64);
    let mean = values.iter().copied().sum::<T>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / (n - T::one());
    (Some(mean), Some(var.sqrt()))
}

/// Sample mean and std (divisor n-1) per column, missing cells excluded.
/// Columns with fewer than two values are flagged by `mean`/`std` = `None`.
pub fn summary_stats<T: Real>(fm: &FeatureMatrix<T>) -> Vec<ColumnSummary<T>> {
    (0..fm.n_cols())
        .map(|c| {
            let values = fm.column_values(c);
            let (mean, std) = mean_std(&values);
            let (mean, std) = if values.len() < 2 {
                (None, None)
            } else {
                (mean, std)
            };
            ColumnSummary {
                name: fm.columns()[c].clone(),
                mean,
                std,
                n: values.len(),
            }
        })
        .collect()
}

/// Both matrices standardized with the REAL sample's per-column mean/std.
#[derive(Debug, Clone)]
pub struct ZscoreResult<T> {
    pub real: FeatureMatrix<T>,
    pub other: FeatureMatrix<T>,
    /// Columns that were only centered (real std = 0 or undefined).
    pub degenerate_columns: Vec<String>,
}

/// Standardize both matrices with the real sample's statistics. Columns whose
/// real std is zero (or undefined) are centered only and flagged.
pub fn zscore_normalize<T: Real>(
    real: &FeatureMatrix<T>,
    other: &FeatureMatrix<T>,
) -> Result<ZscoreResult<T>> {
    if !real.same_columns(other) {
        return Err(Error::mismatch(
            "feature matrices must share identical columns",
        ));
    }
    let mut real_z = real.clone();
    let mut other_z = other.clone();
    let mut degenerate = Vec::new();
    for c in 0..real.n_cols() {
        let values = real.column_values(c);
        let (mean, std) = mean_std(&values);
        let mean = mean.unwrap_or(T::zero());
        match std {
            Some(s) if s > T::zero() => {
                real_z.map_column(c, |v| (v - mean) / s);
                other_z.map_column(c, |v| (v - mean) / s);
            }
            _ => {
                degenerate.push(real.columns()[c].clone());
                real_z.map_column(c, |v| v - mean);
                other_z.map_column(c, |v| v - mean);
            }
        }
    }
    Ok(ZscoreResult {
        real: real_z,
        other: other_z,
        degenerate_columns: degenerate,
    })
}
