//! Multi-scale structural similarity (MS-SSIM).
//!
//! Standard construction: 11x11 Gaussian window with sigma 1.5, stabilizers
//! `C1 = (0.01 L)^2` and `C2 = (0.03 L)^2` with dynamic range `L = 1`,
//! contrast-structure terms at every level, the luminance term only at the
//! coarsest level, 2x2 average pooling between levels, and the five published
//! level weights. Negative per-level means are clamped at zero before the
//! weighted product so the result stays real.

use crate::image::GrayImage;
use crate::{cast, Error, Real, Result};

pub const MSSSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;
const C1: f64 = 1e-4; // (0.01 * 1)^2
const C2: f64 = 9e-4; // (0.03 * 1)^2

fn gaussian_window<T: Real>() -> Vec<T> {
    let r = (WINDOW / 2) as f64;
    let mut taps: Vec<T> = (0..WINDOW)
        .map(|i| {
            let t = i as f64 - r;
            cast::<T>((-t * t / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp())
        })
        .collect();
    let sum: T = taps.iter().copied().sum();
    for w in taps.iter_mut() {
        *w /= sum;
    }
    taps
}

/// Valid-mode separable correlation with the 1D window.
fn window_filter<T: Real>(img: &GrayImage<T>, taps: &[T]) -> GrayImage<T> {
    let k = taps.len();
    let (w, h) = (img.width, img.height);
    let ow = w - k + 1;
    // horizontal pass
    let mut tmp = vec![T::zero(); ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = T::zero();
            for (i, &t) in taps.iter().enumerate() {
                acc += t * img.get(x + i, y);
            }
            tmp[y * ow + x] = acc;
        }
    }
    // vertical pass
    let oh = h - k + 1;
    let mut out = GrayImage::filled(ow, oh, T::zero());
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = T::zero();
            for (i, &t) in taps.iter().enumerate() {
                acc += t * tmp[(y + i) * ow + x];
            }
            out.set(x, y, acc);
        }
    }
    out
}

fn product_image<T: Real>(a: &GrayImage<T>, b: &GrayImage<T>) -> GrayImage<T> {
    GrayImage {
        width: a.width,
        height: a.height,
        data: a
            .data
            .iter()
            .zip(b.data.iter())
            .map(|(&x, &y)| x * y)
            .collect(),
    }
}

/// 2x2 average pooling; odd trailing rows/columns are dropped.
fn downsample2<T: Real>(img: &GrayImage<T>) -> GrayImage<T> {
    let ow = img.width / 2;
    let oh = img.height / 2;
    let quarter = cast::<T>(0.25);
    let mut out = GrayImage::filled(ow, oh, T::zero());
    for y in 0..oh {
        for x in 0..ow {
            let s = img.get(2 * x, 2 * y)
                + img.get(2 * x + 1, 2 * y)
                + img.get(2 * x, 2 * y + 1)
                + img.get(2 * x + 1, 2 * y + 1);
            out.set(x, y, s * quarter);
        }
    }
    out
}

/// Mean contrast-structure and (optionally) luminance terms at one scale.
fn level_terms<T: Real>(a: &GrayImage<T>, b: &GrayImage<T>, with_luminance: bool) -> (T, T) {
    let taps = gaussian_window::<T>();
    let mu_a = window_filter(a, &taps);
    let mu_b = window_filter(b, &taps);
    let aa = window_filter(&product_image(a, a), &taps);
    let bb = window_filter(&product_image(b, b), &taps);
    let ab = window_filter(&product_image(a, b), &taps);

    let c1 = cast::<T>(C1);
    let c2 = cast::<T>(C2);
    let two = cast::<T>(2.0);
    let n = mu_a.data.len();
    let mut cs_sum = T::zero();
    let mut lum_sum = T::zero();
    for i in 0..n {
        let ma = mu_a.data[i];
        let mb = mu_b.data[i];
        let va = aa.data[i] - ma * ma;
        let vb = bb.data[i] - mb * mb;
        let vab = ab.data[i] - ma * mb;
        cs_sum += (two * vab + c2) / (va + vb + c2);
        if with_luminance {
            lum_sum += (two * (ma * mb) + c1) / (ma * ma + mb * mb + c1);
        }
    }
    let inv = T::one() / cast::<T>(n as f64);
    (cs_sum * inv, lum_sum * inv)
}

/// MS-SSIM over `levels` scales (1 to 5). For fewer than five levels the
/// leading weights are renormalized to sum to one.
pub fn msssim<T: Real>(a: &GrayImage<T>, b: &GrayImage<T>, levels: usize) -> Result<T> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::mismatch(format!(
            "images differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    if levels == 0 || levels > MSSSIM_WEIGHTS.len() {
        return Err(Error::invalid("levels must be between 1 and 5"));
    }
    let min_side = a.width.min(a.height);
    let needed = WINDOW << (levels - 1);
    if min_side < needed {
        return Err(Error::invalid(format!(
            "min(W,H) = {min_side} too small for {levels} levels; need >= {needed}"
        )));
    }

    let mut weights: Vec<T> = MSSSIM_WEIGHTS[..levels].iter().map(|&w| cast(w)).collect();
    if levels < MSSSIM_WEIGHTS.len() {
        let sum: T = weights.iter().copied().sum();
        for w in weights.iter_mut() {
            *w /= sum;
        }
    }

    let mut cur_a = a.clone();
    let mut cur_b = b.clone();
    let mut score = T::one();
    for (level, &weight) in weights.iter().enumerate() {
        let coarsest = level + 1 == levels;
        let (cs, lum) = level_terms(&cur_a, &cur_b, coarsest);
        let cs = cs.max(T::zero());
        score *= cs.powf(weight);
        if coarsest {
            score *= lum.max(T::zero()).powf(weight);
        } else {
            cur_a = downsample2(&cur_a);
            cur_b = downsample2(&cur_b);
        }
    }
    Ok(score)
}
