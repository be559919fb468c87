//! Vector-quantization codebook mathematics: nearest-neighbour assignment,
//! codebook/commitment loss values, k-means fitting, and usage diagnostics.
//!
//! Loss values are computed as pure functions; no gradient machinery is
//! involved. Nearest-neighbour ties break toward the lowest codebook index.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::{cast, Error, Real, Result};

/// `K x d` matrix of codebook entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T> {
    k: usize,
    d: usize,
    entries: Vec<T>,
}

impl<T: Real> Codebook<T> {
    pub fn new(k: usize, d: usize, entries: Vec<T>) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::invalid("codebook must have K >= 1 and d >= 1"));
        }
        if entries.len() != k * d {
            return Err(Error::mismatch(format!(
                "codebook entries length {} != {k}x{d}",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("codebook entries must be finite"));
        }
        Ok(Self { k, d, entries })
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn entry(&self, k: usize) -> &[T] {
        &self.entries[k * self.d..(k + 1) * self.d]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn to_embedding_set(&self) -> EmbeddingSet<T> {
        EmbeddingSet::new(self.k, self.d, self.entries.clone()).expect("valid by construction")
    }

    pub fn from_embedding_set(set: &EmbeddingSet<T>) -> Self {
        Self {
            k: set.len(),
            d: set.dim(),
            entries: set.data().to_vec(),
        }
    }
}

/// `h x w` grid of `d`-dimensional latent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid<T> {
    pub h: usize,
    pub w: usize,
    pub d: usize,
    data: Vec<T>,
}

impl<T: Real> LatentGrid<T> {
    pub fn new(h: usize, w: usize, d: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != h * w * d {
            return Err(Error::mismatch(format!(
                "latent data length {} != {h}x{w}x{d}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("latent entries must be finite"));
        }
        Ok(Self { h, w, d, data })
    }

    pub fn cells(&self) -> usize {
        self.h * self.w
    }

    #[inline]
    pub fn vector(&self, cell: usize) -> &[T] {
        &self.data[cell * self.d..(cell + 1) * self.d]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }
}

/// Output of [`quantize`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationResult<T> {
    pub indices: Vec<usize>,
    pub quantized: LatentGrid<T>,
    pub codebook_loss: T,
    pub commitment_loss: T,
    pub perplexity: T,
}

#[inline]
fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Map each grid vector to its nearest codebook entry (squared Euclidean,
/// ties to the lowest index) and compute the loss values.
///
/// `codebook_loss` is the grid mean of `||z - e||^2`; `commitment_loss` is
/// `beta` times the same quantity.
pub fn quantize<T: Real>(
    z: &LatentGrid<T>,
    cb: &Codebook<T>,
    beta: T,
) -> Result<QuantizationResult<T>> {
    if z.d != cb.dim() {
        return Err(Error::mismatch(format!(
            "latent dimension {} != codebook dimension {}",
            z.d,
            cb.dim()
        )));
    }
    let cells = z.cells();
    if cells == 0 {
        return Err(Error::invalid("latent grid is empty"));
    }
    let mut indices = Vec::with_capacity(cells);
    let mut quantized = Vec::with_capacity(cells * z.d);
    let mut loss_sum = T::zero();
    for cell in 0..cells {
        let v = z.vector(cell);
        let mut best_k = 0usize;
        let mut best_d = sq_dist(v, cb.entry(0));
        for k in 1..cb.len() {
            let d = sq_dist(v, cb.entry(k));
            if d < best_d {
                best_d = d;
                best_k = k;
            }
        }
        indices.push(best_k);
        quantized.extend_from_slice(cb.entry(best_k));
        loss_sum += best_d;
    }
    let codebook_loss = loss_sum / cast::<T>(cells as f64);
    let commitment_loss = beta * codebook_loss;
    let perplexity = perplexity(&indices, cb.len())?;
    Ok(QuantizationResult {
        indices,
        quantized: LatentGrid::new(z.h, z.w, z.d, quantized)?,
        codebook_loss,
        commitment_loss,
        perplexity,
    })
}

/// `exp(-sum p_k ln p_k)` over codebook usage frequencies, with
/// `0 ln 0 = 0`. Ranges from 1 (collapse) to K (uniform usage).
pub fn perplexity<T: Real>(indices: &[usize], k: usize) -> Result<T> {
    if indices.is_empty() {
        return Err(Error::invalid("perplexity needs at least one index"));
    }
    let mut counts = vec![0usize; k];
    for &i in indices {
        if i >= k {
            return Err(Error::invalid(format!("index {i} out of range for K={k}")));
        }
        counts[i] += 1;
    }
    let total = cast::<T>(indices.len() as f64);
    let mut entropy = T::zero();
    for &c in &counts {
        if c > 0 {
            let p = cast::<T>(c as f64) / total;
            entropy -= p * p.ln();
        }
    }
    Ok(entropy.exp())
}

/// A fitted codebook plus the per-iteration inertia trace.
#[derive(Debug, Clone)]
pub struct KmeansFit<T> {
    pub codebook: Codebook<T>,
    /// Total squared distance to assigned centroids after each Lloyd
    /// iteration; non-increasing.
    pub inertia: Vec<T>,
}

/// Fit a codebook with seeded k-means++ initialization and Lloyd iterations.
/// Empty clusters are re-seeded to the point farthest from its centroid.
pub fn kmeans_codebook<T: Real>(
    set: &EmbeddingSet<T>,
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<KmeansFit<T>> {
    let n = set.len();
    let d = set.dim();
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if n < k {
        return Err(Error::invalid(format!(
            "k-means needs n >= K, got n={n}, K={k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centroids: Vec<T> = Vec::with_capacity(k * d);
    let first = rng.gen_range(0..n);
    centroids.extend_from_slice(set.row(first));
    let mut min_d2: Vec<T> = (0..n)
        .map(|i| sq_dist(set.row(i), &centroids[0..d]))
        .collect();
    while centroids.len() < k * d {
        let total: T = min_d2.iter().copied().sum();
        let chosen = if total > T::zero() {
            let mut target = cast::<T>(rng.gen::<f64>()) * total;
            let mut pick = n - 1;
            for (i, &w) in min_d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        let start = centroids.len();
        centroids.extend_from_slice(set.row(chosen));
        let c = &centroids[start..start + d];
        for (i, slot) in min_d2.iter_mut().enumerate() {
            let dnew = sq_dist(set.row(i), c);
            if dnew < *slot {
                *slot = dnew;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    let mut inertia_trace = Vec::with_capacity(iters);
    for _ in 0..iters {
        // assign
        let mut inertia = T::zero();
        for i in 0..n {
            let row = set.row(i);
            let mut best_k = 0usize;
            let mut best_d = sq_dist(row, &centroids[0..d]);
            for c in 1..k {
                let dist = sq_dist(row, &centroids[c * d..(c + 1) * d]);
                if dist < best_d {
                    best_d = dist;
                    best_k = c;
                }
            }
            assignment[i] = best_k;
            inertia += best_d;
        }
        inertia_trace.push(inertia);

        // update
        let mut sums = vec![T::zero(); k * d];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i];
            counts[c] += 1;
            for (s, &x) in sums[c * d..(c + 1) * d].iter_mut().zip(set.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed to the point farthest from its assigned centroid
                let mut far_i = 0usize;
                let mut far_d = T::neg_infinity();
                for i in 0..n {
                    let a = assignment[i];
                    let dist = sq_dist(set.row(i), &centroids[a * d..(a + 1) * d]);
                    if dist > far_d {
                        far_d = dist;
                        far_i = i;
                    }
                }
                centroids[c * d..(c + 1) * d].copy_from_slice(set.row(far_i));
            } else {
                let inv = T::one() / cast::<T>(counts[c] as f64);
                for (slot, &s) in centroids[c * d..(c + 1) * d]
                    .iter_mut()
                    .zip(&sums[c * d..(c + 1) * d])
                {
                    *slot = s * inv;
                }
            }
        }
    }

    Ok(KmeansFit {
        codebook: Codebook::new(k, d, centroids)?,
        inertia: inertia_trace,
    })
}

/// Sidecar recording the grid shape of a latent FEF file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GridSidecar {
    pub h: usize,
    pub w: usize,
}

/// Write a latent grid as FEF1 (`(h*w) x d`) plus a `<path>.json` sidecar
/// holding `{"h": .., "w": ..}`.
pub fn write_latent_grid<T: Real>(path: impl AsRef<Path>, grid: &LatentGrid<T>) -> Result<()> {
    let path = path.as_ref();
    let set = EmbeddingSet::new(grid.cells(), grid.d, grid.data().to_vec())?;
    crate::embedding::write_fef(path, &set)?;
    let sidecar = GridSidecar {
        h: grid.h,
        w: grid.w,
    };
    let json = serde_json::to_string(&sidecar)
        .map_err(|e| Error::Decode(format!("sidecar encode: {e}")))?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

/// Read a latent grid from FEF1 plus its JSON sidecar. Without a sidecar the
/// grid is treated as a single row (`h = 1`).
pub fn read_latent_grid<T: Real>(path: impl AsRef<Path>) -> Result<LatentGrid<T>> {
    let path = path.as_ref();
    let set = crate::embedding::read_fef::<T>(path)?;
    let sidecar = sidecar_path(path);
    let (h, w) = if sidecar.exists() {
        let text = std::fs::read_to_string(&sidecar)?;
        let sc: GridSidecar = serde_json::from_str(&text)
            .map_err(|e| Error::Decode(format!("sidecar parse: {e}")))?;
        (sc.h, sc.w)
    } else {
        (1, set.len())
    };
    if h * w != set.len() {
        return Err(Error::mismatch(format!(
            "sidecar {h}x{w} does not match {} rows",
            set.len()
        )));
    }
    LatentGrid::new(h, w, set.dim(), set.data().to_vec())
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".json");
    std::path::PathBuf::from(os)
}
