//! Scalar retinal features computed from masks.

use super::{connected_components, euclidean_distance_transform, skeletonize, BinaryMask};
use crate::{cast, Error, Real, Result};

/// Knudtson revised-formula branch coefficients.
pub const CRAE_COEFFICIENT: f64 = 0.88;
pub const CRVE_COEFFICIENT: f64 = 0.95;

/// Column names of [`RetinalFeatureRow`], in serialization order.
pub const FEATURE_NAMES: [&str; 11] = [
    "vessel_density",
    "fractal_dimension",
    "mean_vessel_width",
    "disc_height",
    "disc_width",
    "cup_height",
    "cup_width",
    "vertical_cup_disc_ratio",
    "crae",
    "crve",
    "avr",
];

/// Foreground fraction of the whole frame.
pub fn vessel_density<T: Real>(mask: &BinaryMask) -> T {
    cast::<T>(mask.count_foreground() as f64 / (mask.width * mask.height) as f64)
}

/// Box-counting fractal dimension.
///
/// Boxes are `2^j` pixels for `j = 1 ..= floor(log2(min(W,H)/4))`, anchored
/// at the origin; the dimension is the least-squares slope of `ln N(s)`
/// against `ln(1/s)`.
pub fn fractal_dimension<T: Real>(mask: &BinaryMask) -> Result<T> {
    if mask.count_foreground() == 0 {
        return Err(Error::invalid("fractal dimension of an empty mask"));
    }
    let min_side = mask.width.min(mask.height);
    let j_max = if min_side >= 8 {
        (min_side / 4).ilog2() as usize
    } else {
        0
    };
    if j_max < 3 {
        return Err(Error::invalid(format!(
            "mask too small for box counting: min side {min_side} gives {j_max} box sizes, need >= 3"
        )));
    }
    let mut xs = Vec::with_capacity(j_max);
    let mut ys = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let s = 1usize << j;
        let gw = mask.width.div_ceil(s);
        let gh = mask.height.div_ceil(s);
        let mut occupied = vec![false; gw * gh];
        for y in 0..mask.height {
            for x in 0..mask.width {
                if mask.get(x, y) {
                    occupied[(y / s) * gw + (x / s)] = true;
                }
            }
        }
        let n = occupied.iter().filter(|&&v| v).count();
        xs.push(-(s as f64).ln());
        ys.push((n as f64).ln());
    }
    // least-squares slope
    let m = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / m;
    let mean_y = ys.iter().sum::<f64>() / m;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    Ok(cast::<T>(num / den))
}

/// Width statistics over skeleton pixels: width = `2 * EDT - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthStats<T> {
    pub mean: T,
    pub std: T,
    pub n_skeleton: usize,
}

/// Mean and population std of per-skeleton-pixel widths; `(0, 0, 0)` for an
/// empty mask.
pub fn vessel_width_stats<T: Real>(mask: &BinaryMask) -> WidthStats<T> {
    let skeleton = skeletonize(mask);
    let edt = euclidean_distance_transform::<T>(mask);
    let two = cast::<T>(2.0);
    let mut widths: Vec<T> = Vec::new();
    for (i, &on) in skeleton.data.iter().enumerate() {
        if on {
            widths.push(two * edt.data[i] - T::one());
        }
    }
    if widths.is_empty() {
        return WidthStats {
            mean: T::zero(),
            std: T::zero(),
            n_skeleton: 0,
        };
    }
    let n = cast::<T>(widths.len() as f64);
    let mean = widths.iter().copied().sum::<T>() / n;
    let var = widths.iter().map(|&w| (w - mean) * (w - mean)).sum::<T>() / n;
    WidthStats {
        mean,
        std: var.sqrt(),
        n_skeleton: widths.len(),
    }
}

/// Bounding-box geometry of the optic disc and cup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscCupGeometry<T> {
    pub disc_height: T,
    pub disc_width: T,
    pub cup_height: Option<T>,
    pub cup_width: Option<T>,
    /// `cup_height / disc_height`; missing when the cup mask is empty.
    pub vertical_cup_disc_ratio: Option<T>,
}

pub fn disc_cup_geometry<T: Real>(
    disc: &BinaryMask,
    cup: &BinaryMask,
) -> Result<DiscCupGeometry<T>> {
    let (dx0, dy0, dx1, dy1) = disc
        .bounding_box()
        .ok_or_else(|| Error::invalid("disc mask is empty"))?;
    let disc_height = cast::<T>((dy1 - dy0 + 1) as f64);
    let disc_width = cast::<T>((dx1 - dx0 + 1) as f64);
    let (cup_height, cup_width, ratio) = match cup.bounding_box() {
        Some((cx0, cy0, cx1, cy1)) => {
            let ch = cast::<T>((cy1 - cy0 + 1) as f64);
            let cw = cast::<T>((cx1 - cx0 + 1) as f64);
            (Some(ch), Some(cw), Some(ch / disc_height))
        }
        None => (None, None, None),
    };
    Ok(DiscCupGeometry {
        disc_height,
        disc_width,
        cup_height,
        cup_width,
        vertical_cup_disc_ratio: ratio,
    })
}

/// One Knudtson iterative-pairing reduction: repeatedly combine the largest
/// and smallest remaining widths as `c * sqrt(big^2 + small^2)`, carrying the
/// median on odd counts, until one value remains.
pub fn knudtson_equivalent<T: Real>(widths: &[T], coefficient: T) -> Result<T> {
    if widths.len() != 6 {
        return Err(Error::invalid(format!(
            "exactly six widths required, got {}",
            widths.len()
        )));
    }
    if widths.iter().any(|&w| w <= T::zero()) {
        return Err(Error::invalid("widths must be positive"));
    }
    let mut vals = widths.to_vec();
    while vals.len() > 1 {
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        let n = vals.len();
        let mut next = Vec::with_capacity(n / 2 + 1);
        for i in 0..n / 2 {
            let big = vals[i];
            let small = vals[n - 1 - i];
            next.push(coefficient * (big * big + small * small).sqrt());
        }
        if n % 2 == 1 {
            next.push(vals[n / 2]);
        }
        vals = next;
    }
    Ok(vals[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VascularEquivalents<T> {
    pub crae: T,
    pub crve: T,
    pub avr: T,
}

/// CRAE/CRVE from the six widest arteriole and venule widths, and their
/// ratio AVR.
pub fn vascular_equivalents<T: Real>(
    arteriole_widths: &[T],
    venule_widths: &[T],
) -> Result<VascularEquivalents<T>> {
    let crae = knudtson_equivalent(arteriole_widths, cast(CRAE_COEFFICIENT))?;
    let crve = knudtson_equivalent(venule_widths, cast(CRVE_COEFFICIENT))?;
    Ok(VascularEquivalents {
        crae,
        crve,
        avr: crae / crve,
    })
}

/// Per-image morphological feature row; absent inputs yield missing fields,
/// never silent zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct RetinalFeatureRow<T> {
    pub vessel_density: Option<T>,
    pub fractal_dimension: Option<T>,
    pub mean_vessel_width: Option<T>,
    pub disc_height: Option<T>,
    pub disc_width: Option<T>,
    pub cup_height: Option<T>,
    pub cup_width: Option<T>,
    pub vertical_cup_disc_ratio: Option<T>,
    pub crae: Option<T>,
    pub crve: Option<T>,
    pub avr: Option<T>,
}

impl<T: Copy> RetinalFeatureRow<T> {
    /// Values in [`FEATURE_NAMES`] order.
    pub fn values(&self) -> [Option<T>; 11] {
        [
            self.vessel_density,
            self.fractal_dimension,
            self.mean_vessel_width,
            self.disc_height,
            self.disc_width,
            self.cup_height,
            self.cup_width,
            self.vertical_cup_disc_ratio,
            self.crae,
            self.crve,
            self.avr,
        ]
    }
}

/// Six largest per-component mean widths, or `None` when fewer than six
/// components carry a positive width.
fn six_widest_component_widths<T: Real>(mask: &BinaryMask) -> Option<Vec<T>> {
    let mut widths: Vec<T> = connected_components(mask)
        .iter()
        .map(|c| vessel_width_stats::<T>(c).mean)
        .filter(|&w| w > T::zero())
        .collect();
    if widths.len() < 6 {
        return None;
    }
    widths.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    widths.truncate(6);
    Some(widths)
}

/// Populate every computable feature from the supplied masks.
pub fn extract_feature_row<T: Real>(
    vessel: &BinaryMask,
    artery: Option<&BinaryMask>,
    vein: Option<&BinaryMask>,
    disc: Option<&BinaryMask>,
    cup: Option<&BinaryMask>,
) -> Result<RetinalFeatureRow<T>> {
    let any_foreground = vessel.count_foreground() > 0
        || [artery, vein, disc, cup]
            .iter()
            .flatten()
            .any(|m| m.count_foreground() > 0);
    if !any_foreground {
        return Err(Error::invalid("all masks are empty"));
    }

    let vessel_density = Some(vessel_density::<T>(vessel));
    let fractal = fractal_dimension::<T>(vessel).ok();
    let width_stats = vessel_width_stats::<T>(vessel);
    let mean_vessel_width = (width_stats.n_skeleton > 0).then_some(width_stats.mean);

    let geometry = match disc {
        Some(d) if d.count_foreground() > 0 => {
            let empty = BinaryMask::empty(d.width, d.height);
            let cup_mask = cup.unwrap_or(&empty);
            Some(disc_cup_geometry::<T>(d, cup_mask)?)
        }
        _ => None,
    };

    let artery_widths = artery.and_then(six_widest_component_widths::<T>);
    let vein_widths = vein.and_then(six_widest_component_widths::<T>);
    let crae = match &artery_widths {
        Some(w) => Some(knudtson_equivalent(w, cast(CRAE_COEFFICIENT))?),
        None => None,
    };
    let crve = match &vein_widths {
        Some(w) => Some(knudtson_equivalent(w, cast(CRVE_COEFFICIENT))?),
        None => None,
    };
    let avr = match (crae, crve) {
        (Some(a), Some(v)) => Some(a / v),
        _ => None,
    };

    Ok(RetinalFeatureRow {
        vessel_density,
        fractal_dimension: fractal,
        mean_vessel_width,
        disc_height: geometry.as_ref().map(|g| g.disc_height),
        disc_width: geometry.as_ref().map(|g| g.disc_width),
        cup_height: geometry.as_ref().and_then(|g| g.cup_height),
        cup_width: geometry.as_ref().and_then(|g| g.cup_width),
        vertical_cup_disc_ratio: geometry.as_ref().and_then(|g| g.vertical_cup_disc_ratio),
        crae,
        crve,
        avr,
    })
}
