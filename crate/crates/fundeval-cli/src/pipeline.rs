//! Manifest-driven pipeline: fidelity metrics, morphology features,
//! permutation tests, and TSTR, with per-stage failure isolation.
//!
//! Determinism contract: per-image work may run on any number of threads, but
//! results are collected in manifest order and every reduction is sequential,
//! so reports are byte-identical for any `--threads` value.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use fundeval::embedding::{read_embeddings, EmbeddingSet};
use fundeval::image::{green_channel, read_image};
use fundeval::metrics::{
    frechet_distance, gaussian_summary, images_to_pixel_embeddings, mmd_squared, msssim, Bandwidth,
    MmdEstimator,
};
use fundeval::morphology::{extract_feature_row, BinaryMask, FEATURE_NAMES};
use fundeval::stats::{
    distribution_match_report, tstr_evaluate, TargetKind, TargetSpec, TstrOptions,
};
use fundeval::vesselness::edge_loss;
use fundeval::{FeatureMatrix, RasterImage, ScaleSet};

use crate::config::{
    resolve, validate, BandwidthConfig, BandwidthName, EstimatorConfig, PipelineConfig, Stage,
    SyntheticSource, TargetKindConfig,
};
use crate::manifest::{read_manifest, ManifestEntry};
use crate::report::{
    MetricReport, ModelReport, PermutationSection, Provenance, StageFailure, TstrSection,
};

pub struct PipelineOutcome {
    pub report: MetricReport,
    pub report_path: PathBuf,
    pub partial: bool,
}

struct LoadedEntry {
    entry: ManifestEntry,
    image: Option<RasterImage>,
}

struct LoadedSet {
    name: String,
    entries: Vec<LoadedEntry>,
    failures: Vec<StageFailure>,
}

fn load_set(name: &str, manifest_path: &Path) -> Result<LoadedSet> {
    let entries = read_manifest(manifest_path)?;
    let loaded: Vec<(LoadedEntry, Option<StageFailure>)> = entries
        .into_par_iter()
        .map(|entry| {
            let decoded = match &entry.image {
                Some(path) => read_image::<f64>(path).map_err(|e| e.to_string()),
                None => Err("no image path in manifest".to_string()),
            };
            match decoded {
                Ok(img) => (
                    LoadedEntry {
                        entry,
                        image: Some(img),
                    },
                    None,
                ),
                Err(e) => {
                    let failure = StageFailure {
                        model: name.to_string(),
                        stage: "load".to_string(),
                        message: format!("image {} skipped: {e}", entry.id),
                    };
                    (LoadedEntry { entry, image: None }, Some(failure))
                }
            }
        })
        .collect();
    let mut set = LoadedSet {
        name: name.to_string(),
        entries: Vec::with_capacity(loaded.len()),
        failures: Vec::new(),
    };
    for (entry, failure) in loaded {
        set.entries.push(entry);
        set.failures.extend(failure);
    }
    Ok(set)
}

fn load_mask(path: &Path) -> Result<BinaryMask> {
    let img = read_image::<f64>(path)?;
    Ok(BinaryMask::from_gray(&green_channel(&img)))
}

/// Morphology feature matrix for one set, rows in manifest order. Entries
/// whose masks are absent or unreadable produce missing cells.
fn morphology_features(set: &LoadedSet) -> (FeatureMatrix, Vec<StageFailure>) {
    let results: Vec<(Vec<Option<f64>>, Option<StageFailure>)> = set
        .entries
        .par_iter()
        .map(|le| {
            let missing_row = vec![None; FEATURE_NAMES.len()];
            let Some(vessel_path) = &le.entry.vessel else {
                return (missing_row, None);
            };
            let computed = (|| -> Result<Vec<Option<f64>>> {
                let vessel = load_mask(vessel_path)?;
                let artery = le.entry.artery.as_deref().map(load_mask).transpose()?;
                let vein = le.entry.vein.as_deref().map(load_mask).transpose()?;
                let disc = le.entry.disc.as_deref().map(load_mask).transpose()?;
                let cup = le.entry.cup.as_deref().map(load_mask).transpose()?;
                let row = extract_feature_row::<f64>(
                    &vessel,
                    artery.as_ref(),
                    vein.as_ref(),
                    disc.as_ref(),
                    cup.as_ref(),
                )?;
                Ok(row.values().to_vec())
            })();
            match computed {
                Ok(row) => (row, None),
                Err(e) => (
                    missing_row,
                    Some(StageFailure {
                        model: set.name.clone(),
                        stage: "morphology".to_string(),
                        message: format!("image {}: {e}", le.entry.id),
                    }),
                ),
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (row, failure) in results {
        rows.push(row);
        failures.extend(failure);
    }
    let columns = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let fm = FeatureMatrix::new(columns, rows)
        .expect("feature rows are rectangular")
        .with_ids(set.entries.iter().map(|e| e.entry.id.clone()).collect())
        .expect("one id per row");
    (fm, failures)
}

fn embeddings_for(set: &LoadedSet, fef_path: &Path) -> Result<EmbeddingSet<f64>> {
    let all = read_embeddings::<f64>(fef_path)
        .with_context(|| format!("reading embeddings {}", fef_path.display()))?;
    let wanted: Vec<usize> = set
        .entries
        .iter()
        .filter_map(|e| e.entry.embedding_row)
        .collect();
    if wanted.is_empty() {
        return Ok(all);
    }
    if wanted.len() != set.entries.len() {
        bail!("manifest mixes present and absent embedding_row values");
    }
    let mut rows = Vec::with_capacity(wanted.len());
    for r in wanted {
        if r >= all.len() {
            bail!("embedding_row {r} out of range ({} rows)", all.len());
        }
        rows.push(all.row(r).to_vec());
    }
    Ok(EmbeddingSet::from_rows(&rows)?)
}

fn paired_images<'a>(
    real: &'a LoadedSet,
    synth: &'a LoadedSet,
) -> Vec<(&'a RasterImage, &'a RasterImage)> {
    real.entries
        .iter()
        .zip(synth.entries.iter())
        .filter_map(|(r, s)| Some((r.image.as_ref()?, s.image.as_ref()?)))
        .collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

fn available_images(set: &LoadedSet) -> Vec<RasterImage> {
    set.entries.iter().filter_map(|e| e.image.clone()).collect()
}

pub fn run_pipeline(
    cfg: &PipelineConfig,
    base: &Path,
    threads: usize,
    seed_override: Option<u64>,
) -> Result<PipelineOutcome> {
    validate(cfg, base)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building thread pool")?;
    pool.install(|| run_inner(cfg, base, seed_override))
}

fn run_inner(
    cfg: &PipelineConfig,
    base: &Path,
    seed_override: Option<u64>,
) -> Result<PipelineOutcome> {
    let output_dir = resolve(base, &cfg.output_dir);
    std::fs::create_dir_all(&output_dir)
        .with_context(|| format!("creating output dir {}", output_dir.display()))?;

    let permutation_seed = seed_override.unwrap_or(cfg.permutation.seed);
    let tstr_seed = seed_override.unwrap_or_else(|| cfg.tstr.as_ref().map_or(1, |t| t.seed));

    let scales = ScaleSet::new(cfg.scales.clone()).map_err(|e| anyhow!("config scales: {e}"))?;
    let real = load_set("real", &resolve(base, &cfg.real_manifest))?;
    let mut errors: Vec<StageFailure> = real.failures.clone();

    let needs_morphology = cfg.enabled(Stage::Morphology)
        || cfg.enabled(Stage::Permutation)
        || cfg.enabled(Stage::Tstr);
    let real_features = if needs_morphology {
        let (fm, failures) = morphology_features(&real);
        errors.extend(failures);
        fm.write_csv(output_dir.join("features_real.csv"))?;
        Some(fm)
    } else {
        None
    };
    let real_embeddings = match (&cfg.real_embeddings, cfg.enabled(Stage::Fid)) {
        (Some(path), true) => match embeddings_for(&real, &resolve(base, path)) {
            Ok(set) => Some(set),
            Err(e) => {
                errors.push(StageFailure {
                    model: "real".into(),
                    stage: "fid".into(),
                    message: e.to_string(),
                });
                None
            }
        },
        _ => None,
    };
    let real_targets = match &cfg.real_targets {
        Some(path) if cfg.enabled(Stage::Tstr) => {
            Some(FeatureMatrix::from_csv_path(resolve(base, path))?)
        }
        _ => None,
    };

    let mut models = Vec::with_capacity(cfg.synthetic.len());
    for src in &cfg.synthetic {
        let (model, mut failures) = evaluate_model(
            cfg,
            base,
            src,
            &real,
            real_features.as_ref(),
            real_embeddings.as_ref(),
            real_targets.as_ref(),
            &scales,
            &output_dir,
            permutation_seed,
            tstr_seed,
        )?;
        errors.append(&mut failures);
        models.push(model);
    }

    let report = MetricReport {
        models,
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            permutation_seed: cfg.enabled(Stage::Permutation).then_some(permutation_seed),
            tstr_seed: cfg.enabled(Stage::Tstr).then_some(tstr_seed),
        },
        errors,
    };
    let report_path = output_dir.join("report.json");
    std::fs::write(
        &report_path,
        crate::report::render_report(&report, crate::report::RenderStyle::Json),
    )?;
    let partial = !report.errors.is_empty();
    Ok(PipelineOutcome {
        report,
        report_path,
        partial,
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate_model(
    cfg: &PipelineConfig,
    base: &Path,
    src: &SyntheticSource,
    real: &LoadedSet,
    real_features: Option<&FeatureMatrix>,
    real_embeddings: Option<&EmbeddingSet<f64>>,
    real_targets: Option<&FeatureMatrix>,
    scales: &ScaleSet,
    output_dir: &Path,
    permutation_seed: u64,
    tstr_seed: u64,
) -> Result<(ModelReport, Vec<StageFailure>)> {
    let synth = load_set(&src.name, &resolve(base, &src.manifest))?;
    let mut failures = synth.failures.clone();
    let fail = |stage: Stage, message: String, failures: &mut Vec<StageFailure>| {
        failures.push(StageFailure {
            model: src.name.clone(),
            stage: stage.name().to_string(),
            message,
        });
    };
    let mut model = ModelReport {
        name: src.name.clone(),
        ..ModelReport::default()
    };

    if cfg.enabled(Stage::Fid) {
        match (&src.embeddings, real_embeddings) {
            (Some(path), Some(real_set)) => {
                let outcome = embeddings_for(&synth, &resolve(base, path)).and_then(|synth_set| {
                    let a = gaussian_summary(real_set)?;
                    let b = gaussian_summary(&synth_set)?;
                    Ok(frechet_distance(&a, &b)?)
                });
                match outcome {
                    Ok(f) => {
                        model.fid = Some(f.value);
                        model.fid_regularized = Some(f.regularized);
                    }
                    Err(e) => fail(Stage::Fid, e.to_string(), &mut failures),
                }
            }
            (None, _) => fail(
                Stage::Fid,
                "no embeddings configured for this model".into(),
                &mut failures,
            ),
            (_, None) => fail(
                Stage::Fid,
                "real embeddings unavailable".into(),
                &mut failures,
            ),
        }
    }

    if cfg.enabled(Stage::Mmd) {
        let outcome = (|| -> Result<f64> {
            let a = images_to_pixel_embeddings(&available_images(real))?;
            let b = images_to_pixel_embeddings(&available_images(&synth))?;
            let bandwidth = match cfg.mmd.bandwidth {
                BandwidthConfig::Named(BandwidthName::Median) => Bandwidth::Median,
                BandwidthConfig::Fixed(h) => Bandwidth::Fixed(h),
            };
            let estimator = match cfg.mmd.estimator {
                EstimatorConfig::Unbiased => MmdEstimator::Unbiased,
                EstimatorConfig::Biased => MmdEstimator::Biased,
            };
            Ok(mmd_squared(&a, &b, bandwidth, estimator)?)
        })();
        match outcome {
            Ok(v) => model.mmd = Some(v),
            Err(e) => fail(Stage::Mmd, e.to_string(), &mut failures),
        }
    }

    let pairs = paired_images(real, &synth);
    if cfg.enabled(Stage::Msssim) {
        if pairs.is_empty() {
            fail(
                Stage::Msssim,
                "no loadable image pairs".into(),
                &mut failures,
            );
        } else {
            let values: Result<Vec<f64>, fundeval::Error> = pairs
                .par_iter()
                .map(|(a, b)| msssim(&green_channel(a), &green_channel(b), cfg.msssim_levels))
                .collect();
            match values {
                Ok(values) => {
                    let (mean, std) = mean_std(&values);
                    model.msssim_mean = Some(mean);
                    model.msssim_std = Some(std);
                }
                Err(e) => fail(Stage::Msssim, e.to_string(), &mut failures),
            }
        }
    }
    if cfg.enabled(Stage::EdgeLoss) {
        if pairs.is_empty() {
            fail(
                Stage::EdgeLoss,
                "no loadable image pairs".into(),
                &mut failures,
            );
        } else {
            let values: Result<Vec<f64>, fundeval::Error> = pairs
                .par_iter()
                .map(|(a, b)| edge_loss(a, b, scales))
                .collect();
            match values {
                Ok(values) => {
                    let (mean, std) = mean_std(&values);
                    model.edge_loss_mean = Some(mean);
                    model.edge_loss_std = Some(std);
                }
                Err(e) => fail(Stage::EdgeLoss, e.to_string(), &mut failures),
            }
        }
    }

    let synth_features = if cfg.enabled(Stage::Morphology)
        || cfg.enabled(Stage::Permutation)
        || cfg.enabled(Stage::Tstr)
    {
        let (fm, morph_failures) = morphology_features(&synth);
        failures.extend(morph_failures);
        fm.write_csv(output_dir.join(format!("features_{}.csv", src.name)))?;
        Some(fm)
    } else {
        None
    };

    if cfg.enabled(Stage::Permutation) {
        match (real_features, synth_features.as_ref()) {
            (Some(rf), Some(sf)) => {
                match distribution_match_report(
                    rf,
                    sf,
                    cfg.permutation.threshold,
                    cfg.permutation.n_permutations,
                    permutation_seed,
                ) {
                    Ok(report) => model.permutation = Some(PermutationSection::from(&report)),
                    Err(e) => fail(Stage::Permutation, e.to_string(), &mut failures),
                }
            }
            _ => fail(
                Stage::Permutation,
                "morphology features unavailable".into(),
                &mut failures,
            ),
        }
    }

    if cfg.enabled(Stage::Tstr) {
        let outcome = (|| -> Result<TstrSection> {
            let tstr_cfg = cfg
                .tstr
                .as_ref()
                .ok_or_else(|| anyhow!("tstr stage enabled but no tstr config given"))?;
            let rf =
                real_features.ok_or_else(|| anyhow!("real morphology features unavailable"))?;
            let sf = synth_features
                .as_ref()
                .ok_or_else(|| anyhow!("synthetic morphology features unavailable"))?;
            let rt = real_targets.ok_or_else(|| anyhow!("real_targets not configured"))?;
            let st_path = src
                .targets
                .as_ref()
                .ok_or_else(|| anyhow!("no targets configured for this model"))?;
            let st = FeatureMatrix::from_csv_path(resolve(base, st_path))?;
            let specs: Vec<TargetSpec> = tstr_cfg
                .targets
                .iter()
                .map(|t| TargetSpec {
                    name: t.name.clone(),
                    kind: match t.kind {
                        TargetKindConfig::Continuous => TargetKind::Continuous,
                        TargetKindConfig::Binary => TargetKind::Binary,
                    },
                })
                .collect();
            let options = TstrOptions {
                n_repeats: tstr_cfg.repeats,
                seed: tstr_seed,
                subsample_fraction: 0.8,
                ridge_lambda: tstr_cfg.ridge_lambda,
                logistic_epochs: tstr_cfg.logistic_epochs,
                logistic_learning_rate: tstr_cfg.logistic_learning_rate,
            };
            let report = tstr_evaluate(sf, &st, rf, rt, &specs, &options)?;
            Ok(TstrSection::from(&report))
        })();
        match outcome {
            Ok(section) => model.tstr = Some(section),
            Err(e) => fail(Stage::Tstr, e.to_string(), &mut failures),
        }
    }

    Ok((model, failures))
}
