//! Embedding sets and their on-disk formats.
//!
//! The binary format "FEF1" is: bytes 0-3 ASCII `FEF1`, bytes 4-7 u32 LE
//! sample count `n`, bytes 8-11 u32 LE dimension `d`, then `n * d` f32 LE
//! values row-major. A CSV alternative (header row, one sample per line) is
//! accepted as well.

use std::path::Path;

use crate::{Error, Real, Result};

/// `n x d` matrix of row embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet<T> {
    n: usize,
    d: usize,
    data: Vec<T>,
}

impl<T: Real> EmbeddingSet<T> {
    pub fn new(n: usize, d: usize, data: Vec<T>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid("embedding set must have n >= 1 and d >= 1"));
        }
        if data.len() != n * d {
            return Err(Error::mismatch(format!(
                "embedding data length {} != {n}x{d}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding entries must be finite"));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("embedding set must have n >= 1"));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::mismatch("embedding rows have unequal lengths"));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), d, data)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.d)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }
}

const MAGIC: &[u8; 4] = b"FEF1";

/// Serialize to FEF1 bytes. Values are stored as f32.
pub fn to_fef_bytes<T: Real>(set: &EmbeddingSet<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + set.data.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(set.n as u32).to_le_bytes());
    out.extend_from_slice(&(set.d as u32).to_le_bytes());
    for &v in &set.data {
        let f = v.to_f32().unwrap_or(0.0);
        out.extend_from_slice(&f.to_le_bytes());
    }
    out
}

/// Parse FEF1 bytes.
pub fn from_fef_bytes<T: Real>(bytes: &[u8]) -> Result<EmbeddingSet<T>> {
    if bytes.len() < 12 {
        return Err(Error::Decode("fef: truncated header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Decode("fef: bad magic, expected FEF1".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = 12 + n * d * 4;
    if bytes.len() != expected {
        return Err(Error::Decode(format!(
            "fef: expected {expected} bytes for {n}x{d}, found {}",
            bytes.len()
        )));
    }
    let mut data = Vec::with_capacity(n * d);
    for chunk in bytes[12..].chunks_exact(4) {
        let f = f32::from_le_bytes(chunk.try_into().unwrap());
        data.push(
            T::from_f32(f).ok_or_else(|| Error::Decode("fef: unrepresentable value".into()))?,
        );
    }
    EmbeddingSet::new(n, d, data)
}

pub fn read_fef<T: Real>(path: impl AsRef<Path>) -> Result<EmbeddingSet<T>> {
    from_fef_bytes(&std::fs::read(path)?)
}

pub fn write_fef<T: Real>(path: impl AsRef<Path>, set: &EmbeddingSet<T>) -> Result<()> {
    std::fs::write(path, to_fef_bytes(set))?;
    Ok(())
}

/// Read the CSV alternative: header row, one sample per line.
pub fn read_embedding_csv<T: Real>(path: impl AsRef<Path>) -> Result<EmbeddingSet<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(|e| Error::Decode(format!("embedding csv: {e}")))?;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Decode(format!("embedding csv: {e}")))?;
        let row = record
            .iter()
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .ok()
                    .and_then(T::from_f64)
                    .ok_or_else(|| Error::Decode(format!("embedding csv: bad value {cell:?}")))
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    EmbeddingSet::from_rows(&rows)
}

/// Read either format, dispatching on the FEF1 magic.
pub fn read_embeddings<T: Real>(path: impl AsRef<Path>) -> Result<EmbeddingSet<T>> {
    let bytes = std::fs::read(path.as_ref())?;
    if bytes.starts_with(MAGIC) {
        from_fef_bytes(&bytes)
    } else {
        read_embedding_csv(path)
    }
}
