//! Pipeline configuration: strict JSON parsing, defaults, validation, and
//! the provenance hash.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Fid,
    Mmd,
    Msssim,
    EdgeLoss,
    Morphology,
    Permutation,
    Tstr,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Fid => "fid",
            Stage::Mmd => "mmd",
            Stage::Msssim => "msssim",
            Stage::EdgeLoss => "edge_loss",
            Stage::Morphology => "morphology",
            Stage::Permutation => "permutation",
            Stage::Tstr => "tstr",
        }
    }

    pub fn all() -> Vec<Stage> {
        vec![
            Stage::Fid,
            Stage::Mmd,
            Stage::Msssim,
            Stage::EdgeLoss,
            Stage::Morphology,
            Stage::Permutation,
            Stage::Tstr,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub name: String,
    pub manifest: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthConfig {
    Named(BandwidthName),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthName {
    Median,
}

impl Default for BandwidthConfig {
    fn default() -> Self {
        BandwidthConfig::Named(BandwidthName::Median)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorConfig {
    Unbiased,
    Biased,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmdConfig {
    pub bandwidth: BandwidthConfig,
    pub estimator: EstimatorConfig,
}

impl Default for MmdConfig {
    fn default() -> Self {
        Self {
            bandwidth: BandwidthConfig::default(),
            estimator: EstimatorConfig::Unbiased,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PermutationConfig {
    pub n_permutations: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        Self {
            n_permutations: 10_000,
            threshold: 0.05,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKindConfig {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub name: String,
    pub kind: TargetKindConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TstrConfig {
    pub targets: Vec<TargetConfig>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_ridge_lambda")]
    pub ridge_lambda: f64,
    #[serde(default = "default_logistic_epochs")]
    pub logistic_epochs: usize,
    #[serde(default = "default_logistic_learning_rate")]
    pub logistic_learning_rate: f64,
}

fn default_repeats() -> usize {
    5
}
fn default_seed() -> u64 {
    1
}
fn default_ridge_lambda() -> f64 {
    1e-3
}
fn default_logistic_epochs() -> usize {
    300
}
fn default_logistic_learning_rate() -> f64 {
    0.5
}
fn default_scales() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}
fn default_msssim_levels() -> usize {
    5
}
fn default_stages() -> Vec<Stage> {
    Stage::all()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub real_manifest: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real_embeddings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real_targets: Option<PathBuf>,
    pub synthetic: Vec<SyntheticSource>,
    #[serde(default = "default_stages")]
    pub metrics: Vec<Stage>,
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    #[serde(default = "default_msssim_levels")]
    pub msssim_levels: usize,
    #[serde(default)]
    pub mmd: MmdConfig,
    #[serde(default)]
    pub permutation: PermutationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tstr: Option<TstrConfig>,
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    pub fn enabled(&self, stage: Stage) -> bool {
        self.metrics.contains(&stage)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

/// Parse a strict JSON config; unknown keys and missing required keys are
/// errors naming the key.
pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let cfg: PipelineConfig = serde_json::from_str(text).map_err(rewrite_serde_error)?;
    let mut seen = BTreeSet::new();
    for src in &cfg.synthetic {
        if !seen.insert(src.name.clone()) {
            bail!("config: duplicate synthetic model name {:?}", src.name);
        }
    }
    if cfg.scales.is_empty() {
        bail!("config: scales must be non-empty");
    }
    Ok(cfg)
}

fn rewrite_serde_error(e: serde_json::Error) -> anyhow::Error {
    let msg = e.to_string();
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(key) = rest.split('`').next() {
            return anyhow::anyhow!("missing key: {key}");
        }
    }
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        if let Some(key) = rest.split('`').next() {
            return anyhow::anyhow!("unknown key: {key}");
        }
    }
    anyhow::anyhow!("config: {msg}")
}

/// Resolve a config-relative path against the config file's directory.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Check the config invariants that involve the filesystem: at least one
/// synthetic source, and every referenced path exists.
pub fn validate(cfg: &PipelineConfig, base: &Path) -> Result<()> {
    if cfg.synthetic.is_empty() {
        bail!("config: at least one synthetic manifest is required");
    }
    let check = |what: &str, p: &Path| -> Result<()> {
        let full = resolve(base, p);
        if !full.exists() {
            bail!("config: {what} path does not exist: {}", full.display());
        }
        Ok(())
    };
    check("real_manifest", &cfg.real_manifest)?;
    if let Some(p) = &cfg.real_embeddings {
        check("real_embeddings", p)?;
    }
    if let Some(p) = &cfg.real_targets {
        check("real_targets", p)?;
    }
    for src in &cfg.synthetic {
        check(&format!("synthetic {:?} manifest", src.name), &src.manifest)?;
        if let Some(p) = &src.embeddings {
            check(&format!("synthetic {:?} embeddings", src.name), p)?;
        }
        if let Some(p) = &src.targets {
            check(&format!("synthetic {:?} targets", src.name), p)?;
        }
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<(PipelineConfig, PathBuf)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg = parse_config(&text)?;
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, base))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "real_manifest": "real.csv",
        "synthetic": [{"name": "m1", "manifest": "m1.csv"}],
        "output_dir": "out"
    }"#;

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.scales, vec![1.0, 2.0, 3.0]);
        assert_eq!(cfg.permutation.n_permutations, 10_000);
        assert_eq!(cfg.permutation.threshold, 0.05);
        assert_eq!(cfg.msssim_levels, 5);
        assert_eq!(cfg.metrics.len(), 7);
        assert!(cfg.tstr.is_none());
    }

    #[test]
    fn missing_required_key_names_the_key() {
        let err = parse_config(r#"{"synthetic": [], "output_dir": "out"}"#).unwrap_err();
        assert_eq!(err.to_string(), "missing key: real_manifest");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let bad = r#"{
            "real_manifest": "real.csv",
            "synthetic": [],
            "output_dir": "out",
            "bogus": 1
        }"#;
        let err = parse_config(bad).unwrap_err();
        assert_eq!(err.to_string(), "unknown key: bogus");
    }

    #[test]
    fn config_round_trips() {
        let cfg = parse_config(MINIMAL).unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn bandwidth_accepts_median_or_number() {
        let med: BandwidthConfig = serde_json::from_str(r#""median""#).unwrap();
        assert_eq!(med, BandwidthConfig::Named(BandwidthName::Median));
        let fixed: BandwidthConfig = serde_json::from_str("2.5").unwrap();
        assert_eq!(fixed, BandwidthConfig::Fixed(2.5));
    }

    mod hash_properties {
        use super::*;
        use proptest::prelude::*;

        fn base_config(
            manifest: &str,
            scales: &[f64],
            n_permutations: usize,
            threshold: f64,
            seed: u64,
            levels: usize,
        ) -> PipelineConfig {
            PipelineConfig {
                real_manifest: manifest.into(),
                real_embeddings: None,
                real_targets: None,
                synthetic: vec![SyntheticSource {
                    name: "m".into(),
                    manifest: "m.csv".into(),
                    embeddings: None,
                    targets: None,
                }],
                metrics: Stage::all(),
                scales: scales.to_vec(),
                msssim_levels: levels,
                mmd: MmdConfig::default(),
                permutation: PermutationConfig {
                    n_permutations,
                    threshold,
                    seed,
                },
                tstr: None,
                output_dir: "out".into(),
            }
        }

        proptest! {
            // hash changes iff any config field changes
            #[test]
            fn hash_tracks_field_mutations(
                n_permutations in 1usize..100_000,
                threshold in 0.001f64..0.5,
                seed in 0u64..1_000_000,
                levels in 1usize..=5,
                scale in 0.5f64..8.0,
                mutation in 0usize..6,
            ) {
                let cfg = base_config("real.csv", &[1.0, scale + 10.0], n_permutations, threshold, seed, levels);
                prop_assert_eq!(cfg.hash(), cfg.clone().hash());

                let mut mutated = cfg.clone();
                match mutation {
                    0 => mutated.real_manifest = "other.csv".into(),
                    1 => mutated.permutation.n_permutations = n_permutations + 1,
                    2 => mutated.permutation.seed = seed.wrapping_add(1),
                    3 => mutated.scales.push(scale + 100.0),
                    4 => mutated.msssim_levels = levels % 5 + 1,
                    _ => mutated.synthetic[0].name = "m2".into(),
                }
                prop_assert_ne!(cfg.hash(), mutated.hash());
            }
        }
    }
}
