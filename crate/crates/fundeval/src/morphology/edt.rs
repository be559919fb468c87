//! Exact Euclidean distance transform (two-pass parabolic envelope).

use super::BinaryMask;
use crate::image::GrayImage;
use crate::{cast, Real};

// Large finite stand-in for "no background seen yet"; any real squared
// distance in an image is far below this.
const FAR: f64 = 1e12;

/// Exact distance from each foreground pixel to the nearest background pixel.
/// The image border counts as background; background pixels map to 0.
pub fn euclidean_distance_transform<T: Real>(mask: &BinaryMask) -> GrayImage<T> {
    let (w, h) = (mask.width, mask.height);
    // embed in a background ring so the border acts as background
    let (ew, eh) = (w + 2, h + 2);
    let mut f = vec![0.0f64; ew * eh];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                f[(y + 1) * ew + (x + 1)] = FAR;
            }
        }
    }

    // rows
    let mut row_in = vec![0.0f64; ew];
    let mut row_out = vec![0.0f64; ew];
    for y in 0..eh {
        row_in.copy_from_slice(&f[y * ew..(y + 1) * ew]);
        dt1d(&row_in, &mut row_out);
        f[y * ew..(y + 1) * ew].copy_from_slice(&row_out);
    }
    // columns
    let mut col_in = vec![0.0f64; eh];
    let mut col_out = vec![0.0f64; eh];
    for x in 0..ew {
        for y in 0..eh {
            col_in[y] = f[y * ew + x];
        }
        dt1d(&col_in, &mut col_out);
        for y in 0..eh {
            f[y * ew + x] = col_out[y];
        }
    }

    let mut out = GrayImage::filled(w, h, T::zero());
    for y in 0..h {
        for x in 0..w {
            let d2 = f[(y + 1) * ew + (x + 1)];
            out.set(x, y, cast::<T>(d2.sqrt()));
        }
    }
    out
}

/// 1D squared-distance transform via the lower envelope of parabolas.
fn dt1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n]; // parabola locations
    let mut z = vec![0.0f64; n + 1]; // envelope boundaries
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        // pop parabolas the new one dominates; z[0] = -inf stops the walk
        loop {
            let vk = v[k] as f64;
            let s = ((f[q] + qf * qf) - (f[v[k]] + vk * vk)) / (2.0 * qf - 2.0 * vk);
            if s <= z[k] {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for q in 0..n {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let vk = v[k] as f64;
        out[q] = (qf - vk) * (qf - vk) + f[v[k]];
    }
}
