//! Structured metric reports and their JSON/table renderings.

use fundeval::stats::{PermutationReport, TstrReport};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub name: String,
    pub real_mean: f64,
    pub real_std: f64,
    pub synth_mean: f64,
    pub synth_std: f64,
    pub p_value: f64,
    #[serde(rename = "match")]
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationSection {
    pub threshold: f64,
    pub n_permutations: usize,
    pub seed: u64,
    pub match_count: usize,
    pub features: Vec<FeatureEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

impl From<&PermutationReport<f64>> for PermutationSection {
    fn from(r: &PermutationReport<f64>) -> Self {
        Self {
            threshold: r.threshold,
            n_permutations: r.n_permutations,
            seed: r.seed,
            match_count: r.match_count,
            features: r
                .features
                .iter()
                .map(|f| FeatureEntry {
                    name: f.name.clone(),
                    real_mean: f.real_mean,
                    real_std: f.real_std,
                    synth_mean: f.synth_mean,
                    synth_std: f.synth_std,
                    p_value: f.p_value,
                    matched: f.matched,
                })
                .collect(),
            skipped: r.skipped.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEntry {
    pub name: String,
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    pub n_repeats: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TstrSection {
    pub targets: Vec<TargetEntry>,
}

impl From<&TstrReport<f64>> for TstrSection {
    fn from(r: &TstrReport<f64>) -> Self {
        Self {
            targets: r
                .targets
                .iter()
                .map(|t| TargetEntry {
                    name: t.name.clone(),
                    metric: t.metric.as_str().to_string(),
                    mean: t.mean,
                    std: t.std,
                    n_repeats: t.n_repeats,
                    error: t.error.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ModelReport {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fid_regularized: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mmd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msssim_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msssim_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_loss_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_loss_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<PermutationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tstr: Option<TstrSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tstr_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub model: String,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub models: Vec<ModelReport>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<StageFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderStyle {
    Json,
    Table,
}

pub fn render_report(report: &MetricReport, style: RenderStyle) -> String {
    match style {
        RenderStyle::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        RenderStyle::Table => render_table(report),
    }
}

fn opt2(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into())
}

fn opt3(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

fn bracketed(mean: Option<f64>, std: Option<f64>) -> String {
    match (mean, std) {
        (Some(m), Some(s)) => format!("{m:.3} [{s:.3}]"),
        _ => "-".into(),
    }
}

fn render_table(report: &MetricReport) -> String {
    let mut out = String::new();
    let any_edge = report.models.iter().any(|m| m.edge_loss_mean.is_some());
    out.push_str("Model  FID \u{2193}  MMD \u{2193}  MS-SSIM \u{2191}");
    if any_edge {
        out.push_str("  Edge loss \u{2193}");
    }
    out.push('\n');
    for m in &report.models {
        out.push_str(&format!(
            "{}  {}  {}  {}",
            m.name,
            opt2(m.fid),
            opt3(m.mmd),
            bracketed(m.msssim_mean, m.msssim_std),
        ));
        if any_edge {
            out.push_str(&format!(
                "  {}",
                bracketed(m.edge_loss_mean, m.edge_loss_std)
            ));
        }
        out.push('\n');
    }
    for m in &report.models {
        if let Some(perm) = &m.permutation {
            out.push('\n');
            out.push_str(&format!(
                "Distribution match ({}): {} of {} features matched (p > {})\n",
                m.name,
                perm.match_count,
                perm.features.len(),
                perm.threshold,
            ));
            for f in &perm.features {
                out.push_str(&format!(
                    "  {}  p={:.4}  {}\n",
                    f.name,
                    f.p_value,
                    if f.matched { "match" } else { "no match" }
                ));
            }
        }
    }
    for m in &report.models {
        if let Some(tstr) = &m.tstr {
            out.push('\n');
            out.push_str(&format!("TSTR ({})\n", m.name));
            for t in &tstr.targets {
                match (t.mean, t.std) {
                    (Some(mean), Some(std)) => {
                        out.push_str(&format!("  {}  {:.2} ({:.2})\n", t.name, mean, std));
                    }
                    _ => {
                        let reason = t.error.as_deref().unwrap_or("not evaluated");
                        out.push_str(&format!("  {}  - ({reason})\n", t.name));
                    }
                }
            }
        }
    }
    if !report.errors.is_empty() {
        out.push('\n');
        out.push_str("Stage failures:\n");
        for e in &report.errors {
            out.push_str(&format!("  [{}] {}: {}\n", e.model, e.stage, e.message));
        }
    }
    out
}
