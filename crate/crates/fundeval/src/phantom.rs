//! Deterministic synthetic images and masks.
//!
//! These generators stand in for fundus photographs and AutoMorph-style
//! segmentation masks in tests, examples, and the bundled demo dataset. They
//! are seeded and pure, so fixtures are reproducible byte for byte.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::{GrayImage, RasterImage};
use crate::morphology::BinaryMask;
use crate::{cast, Real, Result};

/// Uniform gray field.
pub fn blank<T: Real>(width: usize, height: usize, value: f64) -> GrayImage<T> {
    GrayImage::filled(width, height, cast(value))
}

/// Bright field with a centered dark vertical band of the given width.
pub fn vertical_line<T: Real>(width: usize, height: usize, line_width: usize) -> GrayImage<T> {
    let mut img = blank(width, height, 0.9);
    let x0 = width / 2 - line_width / 2;
    for y in 0..height {
        for x in x0..(x0 + line_width).min(width) {
            img.set(x, y, cast(0.1));
        }
    }
    img
}

/// Pixel columns of the band drawn by [`vertical_line`].
pub fn vertical_line_columns(width: usize, line_width: usize) -> std::ops::Range<usize> {
    let x0 = width / 2 - line_width / 2;
    x0..x0 + line_width
}

/// A synthetic "fundus" sample: an RGB image plus the matching masks.
pub struct FundusPhantom<T> {
    pub image: RasterImage<T>,
    pub vessel: BinaryMask,
    pub artery: BinaryMask,
    pub vein: BinaryMask,
    pub disc: BinaryMask,
    pub cup: BinaryMask,
}

/// Generate a deterministic fundus-like phantom.
///
/// A bright optic disc with a concentric cup sits off-centre; eight artery
/// and eight vein strokes radiate outward as separate components (enough for
/// the six-widest-vessel calibre summaries). `jitter` perturbs geometry so a
/// "synthetic model" set can differ from a "real" set in a controlled way.
pub fn fundus_phantom<T: Real>(seed: u64, size: usize, jitter: f64) -> FundusPhantom<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;

    let mut red = GrayImage::filled(size, size, T::zero());
    let mut green = GrayImage::filled(size, size, T::zero());
    let mut blue = GrayImage::filled(size, size, T::zero());

    // retinal background with a soft radial falloff
    let cx = s / 2.0;
    let cy = s / 2.0;
    for y in 0..size {
        for x in 0..size {
            let dx = (x as f64 - cx) / (s / 2.0);
            let dy = (y as f64 - cy) / (s / 2.0);
            let r2 = dx * dx + dy * dy;
            let vignette = (1.0 - 0.35 * r2).max(0.0);
            red.set(x, y, cast(0.82 * vignette));
            green.set(x, y, cast(0.52 * vignette));
            blue.set(x, y, cast(0.28 * vignette));
        }
    }

    // optic disc and cup
    let disc_r = s * (0.10 + 0.02 * jitter * rng.gen_range(-1.0..1.0));
    let disc_cx = cx + s * 0.18 + jitter * rng.gen_range(-3.0..3.0);
    let disc_cy = cy + jitter * rng.gen_range(-3.0..3.0);
    let cup_r = disc_r * (0.45 + 0.1 * jitter * rng.gen_range(-1.0..1.0));

    let mut disc = BinaryMask::empty(size, size);
    let mut cup = BinaryMask::empty(size, size);
    stamp_disk(&mut disc, disc_cx, disc_cy, disc_r);
    stamp_disk(&mut cup, disc_cx, disc_cy, cup_r);
    paint_disk(&mut red, disc_cx, disc_cy, disc_r, 0.95);
    paint_disk(&mut green, disc_cx, disc_cy, disc_r, 0.80);
    paint_disk(&mut blue, disc_cx, disc_cy, disc_r, 0.45);
    paint_disk(&mut green, disc_cx, disc_cy, cup_r, 0.92);

    // vessels: strokes radiating from near the disc, arteries and veins
    // interleaved by angle so components stay separate
    let mut artery = BinaryMask::empty(size, size);
    let mut vein = BinaryMask::empty(size, size);
    let n_each = 8;
    for i in 0..(2 * n_each) {
        let angle = (i as f64 / (2 * n_each) as f64) * std::f64::consts::TAU
            + rng.gen_range(-0.05..0.05) * (1.0 + jitter);
        let is_artery = i % 2 == 0;
        let width = if is_artery {
            1.0 + 0.35 * (i / 2 % 4) as f64 + 0.3 * jitter * rng.gen_range(0.0..1.0)
        } else {
            1.4 + 0.4 * (i / 2 % 4) as f64 + 0.3 * jitter * rng.gen_range(0.0..1.0)
        };
        let bend = rng.gen_range(-0.4..0.4);
        let start_r = disc_r * 1.3;
        let end_r = s * 0.46;
        let mut points = Vec::new();
        let steps = 40;
        for t in 0..=steps {
            let f = t as f64 / steps as f64;
            let r = start_r + (end_r - start_r) * f;
            let a = angle + bend * f * f;
            points.push((disc_cx + r * a.cos(), disc_cy + r * a.sin()));
        }
        let target = if is_artery { &mut artery } else { &mut vein };
        for &(px, py) in &points {
            stamp_disk(target, px, py, width);
        }
        // vessels darken the image, most strongly in the green channel
        for &(px, py) in &points {
            darken_disk(&mut green, px, py, width + 0.5, 0.45);
            darken_disk(&mut red, px, py, width + 0.5, 0.25);
        }
    }

    let mut vessel = BinaryMask::empty(size, size);
    for i in 0..vessel.data.len() {
        vessel.data[i] = artery.data[i] || vein.data[i];
    }

    let mut data = Vec::with_capacity(size * size * 3);
    for i in 0..size * size {
        data.push(clamp01(red.data[i]));
        data.push(clamp01(green.data[i]));
        data.push(clamp01(blue.data[i]));
    }
    let image = RasterImage {
        width: size,
        height: size,
        channels: 3,
        data,
    };

    FundusPhantom {
        image,
        vessel,
        artery,
        vein,
        disc,
        cup,
    }
}

/// Sierpinski triangle by midpoint subdivision, leaves filled solid.
pub fn sierpinski_triangle(size: usize, depth: usize) -> BinaryMask {
    let mut mask = BinaryMask::empty(size, size);
    let s = (size - 1) as f64;
    subdivide(&mut mask, (0.0, s), (s, s), (s / 2.0, 0.0), depth);
    mask
}

type P = (f64, f64);

fn subdivide(mask: &mut BinaryMask, p0: P, p1: P, p2: P, depth: usize) {
    if depth == 0 {
        fill_triangle(mask, p0, p1, p2);
        return;
    }
    let m01 = ((p0.0 + p1.0) / 2.0, (p0.1 + p1.1) / 2.0);
    let m02 = ((p0.0 + p2.0) / 2.0, (p0.1 + p2.1) / 2.0);
    let m12 = ((p1.0 + p2.0) / 2.0, (p1.1 + p2.1) / 2.0);
    subdivide(mask, p0, m01, m02, depth - 1);
    subdivide(mask, m01, p1, m12, depth - 1);
    subdivide(mask, m02, m12, p2, depth - 1);
}

fn fill_triangle(mask: &mut BinaryMask, p0: P, p1: P, p2: P) {
    let min_x = p0.0.min(p1.0).min(p2.0).floor().max(0.0) as usize;
    let max_x = (p0.0.max(p1.0).max(p2.0).ceil() as usize).min(mask.width - 1);
    let min_y = p0.1.min(p1.1).min(p2.1).floor().max(0.0) as usize;
    let max_y = (p0.1.max(p1.1).max(p2.1).ceil() as usize).min(mask.height - 1);
    let sign = |a: P, b: P, c: P| (a.0 - c.0) * (b.1 - c.1) - (b.0 - c.0) * (a.1 - c.1);
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            let p = (x as f64, y as f64);
            let d1 = sign(p, p0, p1);
            let d2 = sign(p, p1, p2);
            let d3 = sign(p, p2, p0);
            let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
            let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
            if !(has_neg && has_pos) {
                mask.set(x, y, true);
            }
        }
    }
}

fn clamp01<T: Real>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}

fn stamp_disk(mask: &mut BinaryMask, cx: f64, cy: f64, r: f64) {
    let x0 = ((cx - r).floor().max(0.0)) as usize;
    let x1 = ((cx + r).ceil().min(mask.width as f64 - 1.0)) as usize;
    let y0 = ((cy - r).floor().max(0.0)) as usize;
    let y1 = ((cy + r).ceil().min(mask.height as f64 - 1.0)) as usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            if dx * dx + dy * dy <= r * r {
                mask.data[y * mask.width + x] = true;
            }
        }
    }
}

fn paint_disk<T: Real>(img: &mut GrayImage<T>, cx: f64, cy: f64, r: f64, value: f64) {
    let x0 = ((cx - r).floor().max(0.0)) as usize;
    let x1 = ((cx + r).ceil().min(img.width as f64 - 1.0)) as usize;
    let y0 = ((cy - r).floor().max(0.0)) as usize;
    let y1 = ((cy + r).ceil().min(img.height as f64 - 1.0)) as usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            if dx * dx + dy * dy <= r * r {
                img.set(x, y, cast(value));
            }
        }
    }
}

fn darken_disk<T: Real>(img: &mut GrayImage<T>, cx: f64, cy: f64, r: f64, factor: f64) {
    let x0 = ((cx - r).floor().max(0.0)) as usize;
    let x1 = ((cx + r).ceil().min(img.width as f64 - 1.0)) as usize;
    let y0 = ((cy - r).floor().max(0.0)) as usize;
    let y1 = ((cy + r).ceil().min(img.height as f64 - 1.0)) as usize;
    let keep = cast::<T>(factor);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            if dx * dx + dy * dy <= r * r {
                let v = img.get(x, y);
                img.set(x, y, v * keep);
            }
        }
    }
}

/// Write a complete demo dataset (images, masks, manifests, embeddings,
/// targets, and a pipeline config) under `root` and return the config path.
///
/// Two sets are generated: `real` and a jittered `modelA`. The layout matches
/// what the `run` subcommand consumes, so the output is directly runnable.
pub fn write_demo_dataset(root: &Path, per_set: usize, size: usize) -> Result<PathBuf> {
    write_demo_set(root, "real", 0, per_set, size, 0.6, 0.0)?;
    write_demo_set(root, "modelA", 100, per_set, size, 0.6, 0.3)?;
    let msssim_levels = {
        let mut levels = 1usize;
        while levels < 5 && size >= 11 << levels {
            levels += 1;
        }
        levels
    };
    let config = serde_json::json!({
        "real_manifest": "real_manifest.csv",
        "real_embeddings": "real.fef",
        "real_targets": "real_targets.csv",
        "synthetic": [{
            "name": "modelA",
            "manifest": "modelA_manifest.csv",
            "embeddings": "modelA.fef",
            "targets": "modelA_targets.csv"
        }],
        "scales": [1.0, 2.0, 3.0],
        "msssim_levels": msssim_levels,
        "mmd": {"bandwidth": "median", "estimator": "unbiased"},
        "permutation": {"n_permutations": 400, "threshold": 0.05, "seed": 11},
        "tstr": {
            "targets": [
                {"name": "age", "kind": "continuous"},
                {"name": "sex", "kind": "binary"}
            ],
            "repeats": 3,
            "seed": 5
        },
        "output_dir": "out"
    });
    let path = root.join("config.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&config).expect("config json"),
    )?;
    Ok(path)
}

fn write_demo_set(
    root: &Path,
    set_name: &str,
    seed_base: u64,
    per_set: usize,
    size: usize,
    jitter: f64,
    embedding_shift: f64,
) -> Result<()> {
    use std::fmt::Write as _;

    let dir = root.join(set_name);
    std::fs::create_dir_all(&dir)?;
    let mut manifest = String::from("id,image,vessel,artery,vein,disc,cup,embedding_row\n");
    let mut targets = String::from("id,age,sex\n");
    let mut rng = ChaCha8Rng::seed_from_u64(777 ^ seed_base);
    let mut embedding_rows = Vec::with_capacity(per_set);
    for row in 0..per_set {
        let id = format!("{set_name}_{row:02}");
        let p = fundus_phantom::<f64>(seed_base + row as u64, size, jitter);
        crate::image::write_png(dir.join(format!("{id}.png")), &p.image)?;
        for (suffix, mask) in [
            ("vessel", &p.vessel),
            ("artery", &p.artery),
            ("vein", &p.vein),
            ("disc", &p.disc),
            ("cup", &p.cup),
        ] {
            let gray = GrayImage::<f64> {
                width: mask.width,
                height: mask.height,
                data: mask
                    .data
                    .iter()
                    .map(|&v| if v { 1.0 } else { 0.0 })
                    .collect(),
            };
            crate::image::write_pgm(dir.join(format!("{id}_{suffix}.pgm")), &gray)?;
        }
        writeln!(
            manifest,
            "{id},{set_name}/{id}.png,{set_name}/{id}_vessel.pgm,{set_name}/{id}_artery.pgm,{set_name}/{id}_vein.pgm,{set_name}/{id}_disc.pgm,{set_name}/{id}_cup.pgm,{row}"
        )
        .expect("string write");
        let age = 45.0 + 1.5 * row as f64 + rng.gen_range(-2.0..2.0);
        writeln!(targets, "{id},{age},{}", row % 2).expect("string write");
        embedding_rows.push(
            (0..8)
                .map(|_| embedding_shift + rng.gen_range(-1.0..1.0))
                .collect::<Vec<f64>>(),
        );
    }
    std::fs::write(root.join(format!("{set_name}_manifest.csv")), manifest)?;
    std::fs::write(root.join(format!("{set_name}_targets.csv")), targets)?;
    let set = crate::embedding::EmbeddingSet::from_rows(&embedding_rows)?;
    crate::embedding::write_fef(root.join(format!("{set_name}.fef")), &set)?;
    Ok(())
}
