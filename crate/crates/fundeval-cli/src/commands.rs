//! Implementations of the CLI subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use fundeval::embedding::{read_embeddings, write_fef};
use fundeval::image::{green_channel, read_image, write_pgm};
use fundeval::metrics::{
    frechet_distance, gaussian_summary, images_to_pixel_embeddings, mmd_squared, msssim, Bandwidth,
    MmdEstimator,
};
use fundeval::morphology::{extract_feature_row, BinaryMask, FEATURE_NAMES};
use fundeval::stats::{
    distribution_match_report, tstr_evaluate, TargetKind, TargetSpec, TstrOptions,
};
use fundeval::vesselness::{edge_loss, edge_loss_unnormalized, meijering_vesselness};
use fundeval::vq::{kmeans_codebook, quantize, read_latent_grid, Codebook};
use fundeval::{FeatureMatrix, ScaleSet};

use crate::report::{render_report, MetricReport, PermutationSection, RenderStyle, TstrSection};

pub fn scale_set(scales: &[f64]) -> Result<ScaleSet> {
    Ok(ScaleSet::new(scales.to_vec())?)
}

pub fn cmd_vesselness(input: &Path, output: &Path, scales: &[f64]) -> Result<()> {
    let img = read_image::<f64>(input)?;
    let map = meijering_vesselness(&green_channel(&img), &scale_set(scales)?)?;
    write_pgm(output, &map.to_gray())?;
    println!("wrote {}", output.display());
    Ok(())
}

pub fn cmd_edge_loss(a: &Path, b: &Path, scales: &[f64], no_normalize: bool) -> Result<()> {
    let ia = read_image::<f64>(a)?;
    let ib = read_image::<f64>(b)?;
    let set = scale_set(scales)?;
    let value = if no_normalize {
        edge_loss_unnormalized(&ia, &ib, &set)?
    } else {
        edge_loss(&ia, &ib, &set)?
    };
    println!("{value}");
    Ok(())
}

pub fn cmd_msssim(pairs: &Path, levels: usize) -> Result<()> {
    let base = pairs.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(pairs)
        .with_context(|| format!("reading pairs file {}", pairs.display()))?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() < 2 {
            bail!("pairs file must have two columns of image paths");
        }
        let pa = base.join(&record[0]);
        let pb = base.join(&record[1]);
        let a = green_channel(&read_image::<f64>(&pa)?);
        let b = green_channel(&read_image::<f64>(&pb)?);
        let v = msssim(&a, &b, levels)?;
        println!("{},{},{v}", &record[0], &record[1]);
        values.push(v);
    }
    if values.is_empty() {
        bail!("pairs file has no rows");
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    println!("mean [std]: {mean:.6} [{std:.6}]");
    Ok(())
}

pub fn cmd_fid(a: &Path, b: &Path) -> Result<()> {
    let sa = gaussian_summary(&read_embeddings::<f64>(a)?)?;
    let sb = gaussian_summary(&read_embeddings::<f64>(b)?)?;
    let f = frechet_distance(&sa, &sb)?;
    if f.regularized {
        eprintln!("warning: singular covariance; added 1e-6 * I before the square root");
    }
    println!("{}", f.value);
    Ok(())
}

fn images_in_dir(dir: &Path) -> Result<Vec<fundeval::RasterImage>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("png") | Some("pgm")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .png or .pgm files in {}", dir.display());
    }
    paths.iter().map(|p| Ok(read_image::<f64>(p)?)).collect()
}

pub fn cmd_mmd(a_dir: &Path, b_dir: &Path, bandwidth: &str, estimator: &str) -> Result<()> {
    let a = images_to_pixel_embeddings(&images_in_dir(a_dir)?)?;
    let b = images_to_pixel_embeddings(&images_in_dir(b_dir)?)?;
    let bandwidth =
        match bandwidth {
            "median" => Bandwidth::Median,
            other => Bandwidth::Fixed(other.parse::<f64>().with_context(|| {
                format!("bandwidth must be `median` or a number, got {other:?}")
            })?),
        };
    let estimator = match estimator {
        "unbiased" => MmdEstimator::Unbiased,
        "biased" => MmdEstimator::Biased,
        other => bail!("estimator must be `unbiased` or `biased`, got {other:?}"),
    };
    let v = mmd_squared(&a, &b, bandwidth, estimator)?;
    println!("{v}");
    Ok(())
}

pub fn cmd_quantize(latents: &Path, codebook: &Path, beta: f64) -> Result<()> {
    let grid = read_latent_grid::<f64>(latents)?;
    let cb = Codebook::from_embedding_set(&read_embeddings::<f64>(codebook)?);
    let q = quantize(&grid, &cb, beta)?;
    let payload = serde_json::json!({
        "h": grid.h,
        "w": grid.w,
        "codebook_loss": q.codebook_loss,
        "commitment_loss": q.commitment_loss,
        "perplexity": q.perplexity,
    });
    println!("{}", serde_json::to_string_pretty(&payload)?);
    Ok(())
}

pub fn cmd_codebook_fit(
    features: &Path,
    k: usize,
    iters: usize,
    seed: u64,
    output: &Path,
) -> Result<()> {
    let set = read_embeddings::<f64>(features)?;
    let fit = kmeans_codebook(&set, k, iters, seed)?;
    write_fef(output, &fit.codebook.to_embedding_set())?;
    let final_inertia = fit.inertia.last().copied().unwrap_or(0.0);
    println!(
        "wrote {} ({} entries, dim {}, final inertia {final_inertia:.6})",
        output.display(),
        k,
        fit.codebook.dim()
    );
    Ok(())
}

fn load_mask_arg(path: &Path) -> Result<BinaryMask> {
    let img = read_image::<f64>(path)?;
    Ok(BinaryMask::from_gray(&green_channel(&img)))
}

pub struct MorphArgs<'a> {
    pub vessel: Option<&'a Path>,
    pub artery: Option<&'a Path>,
    pub vein: Option<&'a Path>,
    pub disc: Option<&'a Path>,
    pub cup: Option<&'a Path>,
    pub manifest: Option<&'a Path>,
    pub output: &'a Path,
}

pub fn cmd_morph(args: &MorphArgs) -> Result<()> {
    let columns: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let (ids, rows) = match (args.manifest, args.vessel) {
        (Some(manifest), None) => {
            let entries = crate::manifest::read_manifest(manifest)?;
            let mut ids = Vec::new();
            let mut rows = Vec::new();
            for entry in entries {
                let Some(vessel) = &entry.vessel else {
                    bail!("manifest row {} has no vessel mask", entry.id);
                };
                let vessel = load_mask_arg(vessel)?;
                let artery = entry.artery.as_deref().map(load_mask_arg).transpose()?;
                let vein = entry.vein.as_deref().map(load_mask_arg).transpose()?;
                let disc = entry.disc.as_deref().map(load_mask_arg).transpose()?;
                let cup = entry.cup.as_deref().map(load_mask_arg).transpose()?;
                let row = extract_feature_row::<f64>(
                    &vessel,
                    artery.as_ref(),
                    vein.as_ref(),
                    disc.as_ref(),
                    cup.as_ref(),
                )?;
                ids.push(entry.id);
                rows.push(row.values().to_vec());
            }
            (ids, rows)
        }
        (None, Some(vessel_path)) => {
            let vessel = load_mask_arg(vessel_path)?;
            let artery = args.artery.map(load_mask_arg).transpose()?;
            let vein = args.vein.map(load_mask_arg).transpose()?;
            let disc = args.disc.map(load_mask_arg).transpose()?;
            let cup = args.cup.map(load_mask_arg).transpose()?;
            let row = extract_feature_row::<f64>(
                &vessel,
                artery.as_ref(),
                vein.as_ref(),
                disc.as_ref(),
                cup.as_ref(),
            )?;
            let id = vessel_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "sample".to_string());
            (vec![id], vec![row.values().to_vec()])
        }
        _ => bail!("pass either --vessel (single image) or --manifest (batch), not both"),
    };
    let fm = FeatureMatrix::new(columns, rows)?.with_ids(ids)?;
    fm.write_csv(args.output)?;
    println!("wrote {}", args.output.display());
    Ok(())
}

pub fn cmd_permtest(
    real: &Path,
    synth: &Path,
    permutations: usize,
    threshold: f64,
    seed: u64,
    output: &Path,
) -> Result<()> {
    let real_fm = FeatureMatrix::from_csv_path(real)?;
    let synth_fm = FeatureMatrix::from_csv_path(synth)?;
    let report = distribution_match_report(&real_fm, &synth_fm, threshold, permutations, seed)?;
    let section = PermutationSection::from(&report);
    let mut json = serde_json::to_string_pretty(&section)?;
    json.push('\n');
    std::fs::write(output, &json)?;
    println!(
        "{} of {} features matched (p > {threshold})",
        section.match_count,
        section.features.len()
    );
    for f in &section.features {
        println!(
            "  {}  p={:.4}  {}",
            f.name,
            f.p_value,
            if f.matched { "match" } else { "no match" }
        );
    }
    println!("wrote {}", output.display());
    Ok(())
}

pub fn parse_target_spec(spec: &str) -> Result<Vec<TargetSpec>> {
    spec.split(',')
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (name, kind) = item
                .split_once(':')
                .with_context(|| format!("target {item:?} must look like name:cont or name:bin"))?;
            let kind = match kind {
                "cont" | "continuous" => TargetKind::Continuous,
                "bin" | "binary" => TargetKind::Binary,
                other => bail!("unknown target kind {other:?} (use cont or bin)"),
            };
            Ok(TargetSpec {
                name: name.to_string(),
                kind,
            })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_tstr(
    train: &Path,
    train_targets: &Path,
    test: &Path,
    test_targets: &Path,
    targets: &str,
    repeats: usize,
    seed: u64,
    output: &Path,
) -> Result<()> {
    let specs = parse_target_spec(targets)?;
    if specs.is_empty() {
        bail!("no targets given");
    }
    let options = TstrOptions {
        n_repeats: repeats,
        seed,
        ..TstrOptions::default()
    };
    let report = tstr_evaluate(
        &FeatureMatrix::from_csv_path(train)?,
        &FeatureMatrix::from_csv_path(train_targets)?,
        &FeatureMatrix::from_csv_path(test)?,
        &FeatureMatrix::from_csv_path(test_targets)?,
        &specs,
        &options,
    )?;
    let section = TstrSection::from(&report);
    let mut json = serde_json::to_string_pretty(&section)?;
    json.push('\n');
    std::fs::write(output, &json)?;
    for t in &section.targets {
        match (t.mean, t.std) {
            (Some(mean), Some(std)) => println!("{}  {:.2} ({:.2})", t.name, mean, std),
            _ => println!(
                "{}  - ({})",
                t.name,
                t.error.as_deref().unwrap_or("not evaluated")
            ),
        }
    }
    println!("wrote {}", output.display());
    Ok(())
}

pub fn cmd_render(report_path: &Path, style: &str) -> Result<()> {
    let text = std::fs::read_to_string(report_path)
        .with_context(|| format!("reading report {}", report_path.display()))?;
    let report: MetricReport = serde_json::from_str(&text)
        .with_context(|| format!("parsing report {}", report_path.display()))?;
    let style = match style {
        "json" => RenderStyle::Json,
        "table" => RenderStyle::Table,
        other => bail!("style must be `json` or `table`, got {other:?}"),
    };
    print!("{}", render_report(&report, style));
    Ok(())
}
