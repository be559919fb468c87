//! Image containers, channel handling, and resampling.
//!
//! Intensities are floating point in `[0, 1]` after decoding; filtering can
//! take values outside that range, which is why [`GrayImage`] is unbounded.

mod codec;
mod filter;

pub use codec::{
    decode_auto, decode_image, encode_pgm, encode_png, read_image, write_pgm, write_png,
    ImageFormat,
};
pub use filter::gaussian_derivative;

use crate::{cast, Error, Real, Result};

/// A decoded raster: 1 (gray) or 3 (RGB) channels, row-major and
/// channel-interleaved, intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage<T> {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<T>,
}

/// A single-channel floating-point grid. Values are unbounded (filter
/// responses live here too).
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> RasterImage<T> {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::mismatch(format!(
                "data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> T {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Bilinear resample with half-pixel-centered sampling.
    pub fn resize_bilinear(&self, out_w: usize, out_h: usize) -> Result<Self> {
        if out_w == 0 || out_h == 0 {
            return Err(Error::invalid("target dimensions must be >= 1"));
        }
        if out_w == self.width && out_h == self.height {
            return Ok(self.clone());
        }
        let data = resize_plane(
            &self.data,
            self.width,
            self.height,
            self.channels,
            out_w,
            out_h,
        );
        Ok(Self {
            width: out_w,
            height: out_h,
            channels: self.channels,
            data,
        })
    }
}

impl<T: Real> GrayImage<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::mismatch(format!(
                "data length {} != {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    pub fn min_max(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Lift into a 1-channel raster (for encoders that take rasters).
    pub fn to_raster(&self) -> RasterImage<T> {
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.clone(),
        }
    }

    pub fn resize_bilinear(&self, out_w: usize, out_h: usize) -> Result<Self> {
        if out_w == 0 || out_h == 0 {
            return Err(Error::invalid("target dimensions must be >= 1"));
        }
        if out_w == self.width && out_h == self.height {
            return Ok(self.clone());
        }
        let data = resize_plane(&self.data, self.width, self.height, 1, out_w, out_h);
        Ok(Self {
            width: out_w,
            height: out_h,
            data,
        })
    }
}

/// Extract the green channel (identity for already-gray input).
pub fn green_channel<T: Real>(img: &RasterImage<T>) -> GrayImage<T> {
    match img.channels {
        1 => GrayImage {
            width: img.width,
            height: img.height,
            data: img.data.clone(),
        },
        _ => {
            let mut data = Vec::with_capacity(img.width * img.height);
            for px in img.data.chunks_exact(img.channels) {
                data.push(px[1]);
            }
            GrayImage {
                width: img.width,
                height: img.height,
                data,
            }
        }
    }
}

fn resize_plane<T: Real>(
    src: &[T],
    w: usize,
    h: usize,
    channels: usize,
    out_w: usize,
    out_h: usize,
) -> Vec<T> {
    let half = cast::<T>(0.5);
    let sx_scale = cast::<T>(w as f64 / out_w as f64);
    let sy_scale = cast::<T>(h as f64 / out_h as f64);
    let mut out = Vec::with_capacity(out_w * out_h * channels);
    for oy in 0..out_h {
        let sy = (cast::<T>(oy as f64) + half) * sy_scale - half;
        let sy = sy.max(T::zero()).min(cast::<T>((h - 1) as f64));
        let y0 = sy.floor().to_usize().unwrap_or(0).min(h - 1);
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - cast::<T>(y0 as f64);
        for ox in 0..out_w {
            let sx = (cast::<T>(ox as f64) + half) * sx_scale - half;
            let sx = sx.max(T::zero()).min(cast::<T>((w - 1) as f64));
            let x0 = sx.floor().to_usize().unwrap_or(0).min(w - 1);
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - cast::<T>(x0 as f64);
            for c in 0..channels {
                let p00 = src[(y0 * w + x0) * channels + c];
                let p01 = src[(y0 * w + x1) * channels + c];
                let p10 = src[(y1 * w + x0) * channels + c];
                let p11 = src[(y1 * w + x1) * channels + c];
                let top = p00 + fx * (p01 - p00);
                let bottom = p10 + fx * (p11 - p10);
                let v = top + fy * (bottom - top);
                // keep the interpolant inside its corner hull despite rounding
                let lo = p00.min(p01).min(p10).min(p11);
                let hi = p00.max(p01).max(p10).max(p11);
                out.push(v.max(lo).min(hi));
            }
        }
    }
    out
}
