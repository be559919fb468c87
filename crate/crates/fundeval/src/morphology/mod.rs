//! Retinal morphology from segmentation masks: skeletons, widths, density,
//! fractal dimension, disc/cup geometry, and vascular calibre equivalents.

mod edt;
mod features;
mod skeleton;

pub use edt::euclidean_distance_transform;
pub use features::{
    disc_cup_geometry, extract_feature_row, fractal_dimension, knudtson_equivalent,
    vascular_equivalents, vessel_density, vessel_width_stats, DiscCupGeometry, RetinalFeatureRow,
    VascularEquivalents, WidthStats, CRAE_COEFFICIENT, CRVE_COEFFICIENT, FEATURE_NAMES,
};
pub use skeleton::skeletonize;

use crate::image::GrayImage;
use crate::{cast, Error, Real, Result};

/// Boolean pixel grid; `true` marks structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::mismatch(format!(
                "mask data length {} != {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    /// Threshold a decoded gray image: an 8-bit sample above 127 is
    /// foreground.
    pub fn from_gray<T: Real>(img: &GrayImage<T>) -> Self {
        let threshold = cast::<T>(127.5 / 255.0);
        Self {
            width: img.width,
            height: img.height,
            data: img.data.iter().map(|&v| v > threshold).collect(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count_foreground(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self
                .data
                .iter()
                .zip(other.data.iter())
                .all(|(&a, &b)| !a || b)
    }

    /// Tight bounding box `(min_x, min_y, max_x, max_y)` of the foreground.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bounds: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bounds = Some(match bounds {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        bounds
    }
}

/// 8-connected components of the foreground, in first-pixel scan order.
pub fn connected_components(mask: &BinaryMask) -> Vec<BinaryMask> {
    let (w, h) = (mask.width, mask.height);
    let mut visited = vec![false; w * h];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.data[start] || visited[start] {
            continue;
        }
        let mut comp = BinaryMask::empty(w, h);
        stack.push(start);
        visited[start] = true;
        while let Some(idx) = stack.pop() {
            comp.data[idx] = true;
            let x = idx % w;
            let y = idx / w;
            for dy in -1i32..=1 {
                for dx in -1i32..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = x as i32 + dx;
                    let ny = y as i32 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i32 || ny >= h as i32 {
                        continue;
                    }
                    let nidx = ny as usize * w + nx as usize;
                    if mask.data[nidx] && !visited[nidx] {
                        visited[nidx] = true;
                        stack.push(nidx);
                    }
                }
            }
        }
        components.push(comp);
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_gray_thresholds_above_127() {
        let img = GrayImage::new(4, 1, vec![0.0, 127.0 / 255.0, 128.0 / 255.0, 1.0]).unwrap();
        let mask = BinaryMask::from_gray(&img);
        assert_eq!(mask.data, vec![false, false, true, true]);
    }

    #[test]
    fn components_are_split_by_8_connectivity() {
        let mut mask = BinaryMask::empty(6, 3);
        mask.set(0, 0, true);
        mask.set(1, 1, true); // diagonal joins
        mask.set(4, 0, true); // separate
        let comps = connected_components(&mask);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].count_foreground(), 2);
        assert_eq!(comps[1].count_foreground(), 1);
    }
}
