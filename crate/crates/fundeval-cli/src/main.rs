//! `fundeval`: evaluation toolkit for synthetic colour fundus imagery.
//!
//! Exit codes: 0 success, 1 fatal error, 2 partial stage failure.

mod commands;
mod config;
mod manifest;
mod pipeline;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "fundeval",
    version,
    about = "Quantitative evaluation of synthetic fundus imagery"
)]
struct Cli {
    /// Override every RNG seed used by the invoked command (must come
    /// before the subcommand; subcommands keep their own --seed flags).
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for the pipeline (0 = auto). Reports are identical for
    /// any thread count.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Pipeline config file (consumed by `run`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the vesselness map of an image as an 8-bit PGM.
    Vesselness {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        scales: Vec<f64>,
    },
    /// RMS distance between the vesselness maps of two images.
    EdgeLoss {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        scales: Vec<f64>,
        /// Compare raw responses instead of per-image normalized maps.
        #[arg(long)]
        no_normalize: bool,
    },
    /// MS-SSIM over explicit image pairs (two-column CSV of paths).
    Msssim {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value_t = 5)]
        levels: usize,
    },
    /// Fréchet distance between two embedding files (FEF1 or CSV).
    Fid {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Pixel-space MMD^2 between two image directories.
    Mmd {
        #[arg(long)]
        a_dir: PathBuf,
        #[arg(long)]
        b_dir: PathBuf,
        /// `median` or a positive number.
        #[arg(long, default_value = "median")]
        bandwidth: String,
        #[arg(long, default_value = "unbiased")]
        estimator: String,
    },
    /// Nearest-neighbour quantization of a latent grid against a codebook.
    Quantize {
        #[arg(long)]
        latents: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        beta: f64,
    },
    /// Fit a codebook to embeddings with seeded k-means.
    CodebookFit {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 512)]
        k: usize,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Morphological features from masks (single image or manifest batch).
    Morph {
        #[arg(long)]
        vessel: Option<PathBuf>,
        #[arg(long)]
        artery: Option<PathBuf>,
        #[arg(long)]
        vein: Option<PathBuf>,
        #[arg(long)]
        disc: Option<PathBuf>,
        #[arg(long)]
        cup: Option<PathBuf>,
        /// Batch mode: manifest CSV (id,image,vessel,artery,vein,disc,cup,embedding_row).
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Permutation distribution-match test between two feature CSVs.
    Permtest {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        synth: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        permutations: usize,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train-Synthetic-Test-Real evaluation over feature/target CSVs.
    Tstr {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        train_targets: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        test_targets: PathBuf,
        /// Comma list of name:cont or name:bin.
        #[arg(long)]
        targets: String,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the full pipeline described by a config file (see --config).
    Run,
    /// Re-render a report.json as a table or JSON.
    Render {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value = "table")]
        style: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Vesselness {
            input,
            output,
            scales,
        } => commands::cmd_vesselness(&input, &output, &scales)?,
        Command::EdgeLoss {
            a,
            b,
            scales,
            no_normalize,
        } => commands::cmd_edge_loss(&a, &b, &scales, no_normalize)?,
        Command::Msssim { pairs, levels } => commands::cmd_msssim(&pairs, levels)?,
        Command::Fid { a, b } => commands::cmd_fid(&a, &b)?,
        Command::Mmd {
            a_dir,
            b_dir,
            bandwidth,
            estimator,
        } => commands::cmd_mmd(&a_dir, &b_dir, &bandwidth, &estimator)?,
        Command::Quantize {
            latents,
            codebook,
            beta,
        } => commands::cmd_quantize(&latents, &codebook, beta)?,
        Command::CodebookFit {
            features,
            k,
            iters,
            seed,
            output,
        } => {
            let seed = cli.seed.unwrap_or(seed);
            commands::cmd_codebook_fit(&features, k, iters, seed, &output)?
        }
        Command::Morph {
            vessel,
            artery,
            vein,
            disc,
            cup,
            manifest,
            output,
        } => commands::cmd_morph(&commands::MorphArgs {
            vessel: vessel.as_deref(),
            artery: artery.as_deref(),
            vein: vein.as_deref(),
            disc: disc.as_deref(),
            cup: cup.as_deref(),
            manifest: manifest.as_deref(),
            output: &output,
        })?,
        Command::Permtest {
            real,
            synth,
            permutations,
            threshold,
            seed,
            output,
        } => {
            let seed = cli.seed.unwrap_or(seed);
            commands::cmd_permtest(&real, &synth, permutations, threshold, seed, &output)?
        }
        Command::Tstr {
            train,
            train_targets,
            test,
            test_targets,
            targets,
            repeats,
            seed,
            output,
        } => {
            let seed = cli.seed.unwrap_or(seed);
            commands::cmd_tstr(
                &train,
                &train_targets,
                &test,
                &test_targets,
                &targets,
                repeats,
                seed,
                &output,
            )?
        }
        Command::Run => {
            let Some(path) = cli.config else {
                bail!("`run` needs --config <file>");
            };
            let (cfg, base) = config::load_config(&path)?;
            let outcome = pipeline::run_pipeline(&cfg, &base, cli.threads, cli.seed)?;
            print!(
                "{}",
                report::render_report(&outcome.report, report::RenderStyle::Table)
            );
            println!("wrote {}", outcome.report_path.display());
            if outcome.partial {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Render { report, style } => commands::cmd_render(&report, &style)?,
    }
    Ok(ExitCode::SUCCESS)
}
