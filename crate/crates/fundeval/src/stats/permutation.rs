//! Two-sample permutation tests on the absolute difference of means.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{summary_stats, zscore_normalize, FeatureMatrix};
use crate::{cast, Error, Real, Result};

fn mean<T: Real>(values: &[T]) -> T {
    values.iter().copied().sum::<T>() / cast::<T>(values.len() as f64)
}

fn check_sizes<T>(a: &[T], b: &[T]) -> Result<()> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid(
            "permutation test needs at least 2 values per group",
        ));
    }
    Ok(())
}

/// Pool, sort, and split so the statistic stream depends only on the value
/// multiset and group sizes; this makes p exactly invariant under swapping
/// the two groups.
fn canonical_pool<T: Real>(a: &[T], b: &[T]) -> (Vec<T>, usize) {
    let mut pooled: Vec<T> = a.iter().chain(b.iter()).copied().collect();
    pooled.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    (pooled, a.len().min(b.len()))
}

#[inline]
fn split_statistic<T: Real>(pooled: &[T], k: usize) -> T {
    (mean(&pooled[..k]) - mean(&pooled[k..])).abs()
}

/// Monte-Carlo permutation p-value with add-one correction:
/// `p = (1 + #{T_perm >= T_obs}) / (M + 1)`, so `p` is in `(0, 1]`.
pub fn permutation_pvalue<T: Real>(
    a: &[T],
    b: &[T],
    n_permutations: usize,
    seed: u64,
) -> Result<T> {
    check_sizes(a, b)?;
    if n_permutations == 0 {
        return Err(Error::invalid("need at least one permutation"));
    }
    let t_obs = (mean(a) - mean(b)).abs();
    let (mut pooled, k) = canonical_pool(a, b);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count = 0usize;
    for _ in 0..n_permutations {
        pooled.shuffle(&mut rng);
        if split_statistic(&pooled, k) >= t_obs {
            count += 1;
        }
    }
    Ok(cast::<T>((1 + count) as f64 / (n_permutations + 1) as f64))
}

/// Exact p-value by enumerating all `C(n, min(|a|,|b|))` splits, with the
/// same add-one convention. Intended for tiny inputs.
pub fn permutation_pvalue_exhaustive<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    check_sizes(a, b)?;
    let t_obs = (mean(a) - mean(b)).abs();
    let (pooled, k) = canonical_pool(a, b);
    let n = pooled.len();
    if n > 24 {
        return Err(Error::invalid(
            "exhaustive mode is for tiny inputs (pooled size <= 24)",
        ));
    }
    let mut count = 0usize;
    let mut total = 0usize;
    let mut indices: Vec<usize> = (0..k).collect();
    loop {
        let group: Vec<T> = indices.iter().map(|&i| pooled[i]).collect();
        let rest: Vec<T> = (0..n)
            .filter(|i| !indices.contains(i))
            .map(|i| pooled[i])
            .collect();
        total += 1;
        if (mean(&group) - mean(&rest)).abs() >= t_obs {
            count += 1;
        }
        // next lexicographic combination
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(cast::<T>((1 + count) as f64 / (total + 1) as f64));
            }
            i -= 1;
            if indices[i] != i + n - k {
                break;
            }
        }
        indices[i] += 1;
        for j in i + 1..k {
            indices[j] = indices[j - 1] + 1;
        }
    }
}

/// Per-feature entry of a [`PermutationReport`] (statistics are in z-scored
/// units relative to the real sample).
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationFeature<T> {
    pub name: String,
    pub real_mean: T,
    pub real_std: T,
    pub synth_mean: T,
    pub synth_std: T,
    pub p_value: T,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationReport<T> {
    pub features: Vec<PermutationFeature<T>>,
    /// Features with too few values on either side to test.
    pub skipped: Vec<String>,
    pub threshold: T,
    pub n_permutations: usize,
    pub seed: u64,
    pub match_count: usize,
}

/// Z-score both matrices against the real sample and run one permutation
/// test per feature (seed + column index), flagging matches at
/// `p > threshold`.
pub fn distribution_match_report<T: Real>(
    real: &FeatureMatrix<T>,
    synth: &FeatureMatrix<T>,
    threshold: T,
    n_permutations: usize,
    seed: u64,
) -> Result<PermutationReport<T>> {
    let z = zscore_normalize(real, synth)?;
    let real_summary = summary_stats(&z.real);
    let synth_summary = summary_stats(&z.other);
    let mut features = Vec::new();
    let mut skipped = Vec::new();
    for c in 0..real.n_cols() {
        let name = real.columns()[c].clone();
        let a = z.real.column_values(c);
        let b = z.other.column_values(c);
        if a.len() < 2 || b.len() < 2 {
            skipped.push(name);
            continue;
        }
        let p = permutation_pvalue(&a, &b, n_permutations, seed.wrapping_add(c as u64))?;
        features.push(PermutationFeature {
            name,
            real_mean: real_summary[c].mean.unwrap_or(T::zero()),
            real_std: real_summary[c].std.unwrap_or(T::zero()),
            synth_mean: synth_summary[c].mean.unwrap_or(T::zero()),
            synth_std: synth_summary[c].std.unwrap_or(T::zero()),
            p_value: p,
            matched: p > threshold,
        });
    }
    let match_count = features.iter().filter(|f| f.matched).count();
    Ok(PermutationReport {
        features,
        skipped,
        threshold,
        n_permutations,
        seed,
        match_count,
    })
}
