//! Dataset manifest: one CSV row per image linking masks and embedding rows.
//!
//! Columns: `id,image,vessel,artery,vein,disc,cup,embedding_row`. Empty cells
//! mean "not available". Paths are resolved relative to the manifest file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    /// Absent for mask-only manifests (the `morph` batch mode).
    pub image: Option<PathBuf>,
    pub vessel: Option<PathBuf>,
    pub artery: Option<PathBuf>,
    pub vein: Option<PathBuf>,
    pub disc: Option<PathBuf>,
    pub cup: Option<PathBuf>,
    pub embedding_row: Option<usize>,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let expected = [
        "id",
        "image",
        "vessel",
        "artery",
        "vein",
        "disc",
        "cup",
        "embedding_row",
    ];
    let column = |name: &str| headers.iter().position(|h| h == name);
    let Some(id_col) = column("id") else {
        bail!("manifest {}: missing `id` column", path.display());
    };
    for h in headers.iter() {
        if !expected.contains(&h) {
            bail!("manifest {}: unknown column {h:?}", path.display());
        }
    }
    let path_at = |record: &csv::StringRecord, col: Option<usize>| -> Option<PathBuf> {
        col.and_then(|c| record.get(c))
            .filter(|s| !s.is_empty())
            .map(|s| base.join(s))
    };
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record?;
        let id = record
            .get(id_col)
            .filter(|s| !s.is_empty())
            .with_context(|| format!("manifest {}: row without id", path.display()))?
            .to_string();
        let image = path_at(&record, column("image"));
        let embedding_row = match column("embedding_row").and_then(|c| record.get(c)) {
            Some("") | None => None,
            Some(cell) => Some(cell.parse::<usize>().with_context(|| {
                format!(
                    "manifest {}: row {id}: bad embedding_row {cell:?}",
                    path.display()
                )
            })?),
        };
        entries.push(ManifestEntry {
            id,
            image,
            vessel: path_at(&record, column("vessel")),
            artery: path_at(&record, column("artery")),
            vein: path_at(&record, column("vein")),
            disc: path_at(&record, column("disc")),
            cup: path_at(&record, column("cup")),
            embedding_row,
        });
    }
    if entries.is_empty() {
        bail!("manifest {} has no rows", path.display());
    }
    Ok(entries)
}
