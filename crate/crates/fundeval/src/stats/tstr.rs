//! Train-Synthetic-Test-Real evaluation harness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{f1_score, logistic_binary, mean_absolute_error, ridge_regression, FeatureMatrix};
use crate::{cast, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSpec {
    pub name: String,
    pub kind: TargetKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Mae,
    F1,
}

impl MetricKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Mae => "mae",
            MetricKind::F1 => "f1",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TstrOptions<T> {
    pub n_repeats: usize,
    pub seed: u64,
    /// Fraction of synthetic rows drawn per repeat.
    pub subsample_fraction: f64,
    pub ridge_lambda: T,
    pub logistic_epochs: usize,
    pub logistic_learning_rate: T,
}

impl<T: Real> Default for TstrOptions<T> {
    fn default() -> Self {
        Self {
            n_repeats: 5,
            seed: 1,
            subsample_fraction: 0.8,
            ridge_lambda: cast(1e-3),
            logistic_epochs: 300,
            logistic_learning_rate: cast(0.5),
        }
    }
}

/// Per-target outcome; a failed target carries `error` and no statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetOutcome<T> {
    pub name: String,
    pub metric: MetricKind,
    pub mean: Option<T>,
    pub std: Option<T>,
    pub n_repeats: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TstrReport<T> {
    pub targets: Vec<TargetOutcome<T>>,
}

struct Joined<T> {
    x: Vec<Vec<T>>,
    y: Vec<T>,
}

/// Complete-case rows: every feature present and the target present. Rows are
/// joined to targets by id when both tables carry ids, else by position.
fn join<T: Real>(
    features: &FeatureMatrix<T>,
    targets: &FeatureMatrix<T>,
    target_col: usize,
) -> Result<Joined<T>> {
    let target_of_row: Vec<Option<T>> = match (features.ids(), targets.ids()) {
        (Some(fids), Some(tids)) => {
            let lookup: std::collections::HashMap<&str, usize> = tids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.as_str(), i))
                .collect();
            fids.iter()
                .map(|id| {
                    lookup
                        .get(id.as_str())
                        .and_then(|&row| targets.get(row, target_col))
                })
                .collect()
        }
        _ => {
            if features.n_rows() != targets.n_rows() {
                return Err(Error::mismatch(
                    "without ids, features and targets must have equal row counts",
                ));
            }
            (0..targets.n_rows())
                .map(|r| targets.get(r, target_col))
                .collect()
        }
    };
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (r, target) in target_of_row.iter().enumerate() {
        let Some(t) = target else { continue };
        let row = features.row(r);
        if row.iter().all(|c| c.is_some()) {
            x.push(row.iter().map(|c| c.unwrap()).collect());
            y.push(*t);
        }
    }
    Ok(Joined { x, y })
}

fn evaluate_target<T: Real>(
    train: &Joined<T>,
    test: &Joined<T>,
    kind: TargetKind,
    target_index: usize,
    options: &TstrOptions<T>,
) -> Result<Vec<T>> {
    let n = train.x.len();
    if n < 2 {
        return Err(Error::invalid("too few complete training rows"));
    }
    if test.x.is_empty() {
        return Err(Error::invalid("no complete test rows"));
    }
    let k = ((n as f64) * options.subsample_fraction).round().max(1.0) as usize;
    let k = k.min(n);
    let mut scores = Vec::with_capacity(options.n_repeats);
    for r in 0..options.n_repeats {
        let seed = options
            .seed
            .wrapping_add(target_index as u64 * 10_000)
            .wrapping_add(r as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked = rand::seq::index::sample(&mut rng, n, k);
        let sub_x: Vec<Vec<T>> = picked.iter().map(|i| train.x[i].clone()).collect();
        let sub_y: Vec<T> = picked.iter().map(|i| train.y[i]).collect();
        let score = match kind {
            TargetKind::Continuous => {
                let model = ridge_regression(&sub_x, &sub_y, options.ridge_lambda)?;
                let preds: Vec<T> = test.x.iter().map(|row| model.predict(row)).collect();
                mean_absolute_error(&preds, &test.y)?
            }
            TargetKind::Binary => {
                let half = cast::<T>(0.5);
                let labels: Vec<bool> = sub_y.iter().map(|&v| v > half).collect();
                let model = logistic_binary(
                    &sub_x,
                    &labels,
                    options.logistic_epochs,
                    options.logistic_learning_rate,
                    seed,
                )?;
                let preds: Vec<bool> = test.x.iter().map(|row| model.predict(row)).collect();
                let truth: Vec<bool> = test.y.iter().map(|&v| v > half).collect();
                f1_score(&preds, &truth)?
            }
        };
        scores.push(score);
    }
    Ok(scores)
}

/// For each repeat, fit on a seeded subsample of the synthetic rows and score
/// on the full real set (MAE for continuous targets, F1 for binary). A target
/// that fails is reported with an error message, not fatally.
pub fn tstr_evaluate<T: Real>(
    synth_features: &FeatureMatrix<T>,
    synth_targets: &FeatureMatrix<T>,
    real_features: &FeatureMatrix<T>,
    real_targets: &FeatureMatrix<T>,
    target_spec: &[TargetSpec],
    options: &TstrOptions<T>,
) -> Result<TstrReport<T>> {
    if !synth_features.same_columns(real_features) {
        return Err(Error::mismatch(
            "synthetic and real feature columns must align",
        ));
    }
    if options.n_repeats == 0 {
        return Err(Error::invalid("n_repeats must be >= 1"));
    }
    let mut outcomes = Vec::with_capacity(target_spec.len());
    for (ti, spec) in target_spec.iter().enumerate() {
        let metric = match spec.kind {
            TargetKind::Continuous => MetricKind::Mae,
            TargetKind::Binary => MetricKind::F1,
        };
        let result = (|| -> Result<Vec<T>> {
            let train_col = synth_targets.column_index(&spec.name).ok_or_else(|| {
                Error::invalid(format!(
                    "target {:?} missing in training targets",
                    spec.name
                ))
            })?;
            let test_col = real_targets.column_index(&spec.name).ok_or_else(|| {
                Error::invalid(format!("target {:?} missing in test targets", spec.name))
            })?;
            let train = join(synth_features, synth_targets, train_col)?;
            let test = join(real_features, real_targets, test_col)?;
            evaluate_target(&train, &test, spec.kind, ti, options)
        })();
        match result {
            Ok(scores) => {
                let n = cast::<T>(scores.len() as f64);
                let mean = scores.iter().copied().sum::<T>() / n;
                let std = if scores.len() > 1 {
                    (scores.iter().map(|&s| (s - mean) * (s - mean)).sum::<T>() / (n - T::one()))
                        .sqrt()
                } else {
                    T::zero()
                };
                outcomes.push(TargetOutcome {
                    name: spec.name.clone(),
                    metric,
                    mean: Some(mean),
                    std: Some(std),
                    n_repeats: scores.len(),
                    error: None,
                });
            }
            Err(e) => outcomes.push(TargetOutcome {
                name: spec.name.clone(),
                metric,
                mean: None,
                std: None,
                n_repeats: 0,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(TstrReport { targets: outcomes })
}
