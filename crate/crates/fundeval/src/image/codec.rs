//! 8-bit PNG and binary PGM (P5) readers and writers.
//!
//! Decoding maps sample `u` of an image with maximum value `m` to `u / m`;
//! encoding quantizes back with `round(v * 255)`, so decode -> encode ->
//! decode is the identity on pixel data.

use std::io::Cursor;
use std::path::Path;

use crate::{cast, Error, Real, Result};

use super::{GrayImage, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Pgm,
}

/// Decode an 8-bit PNG (gray or RGB) or binary PGM.
pub fn decode_image<T: Real>(bytes: &[u8], format: ImageFormat) -> Result<RasterImage<T>> {
    match format {
        ImageFormat::Png => decode_png(bytes),
        ImageFormat::Pgm => decode_pgm(bytes),
    }
}

/// Decode by sniffing the magic bytes.
pub fn decode_auto<T: Real>(bytes: &[u8]) -> Result<RasterImage<T>> {
    if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else {
        Err(Error::Decode("unrecognized image magic".to_string()))
    }
}

/// Read and decode an image file, dispatching on its magic bytes.
pub fn read_image<T: Real>(path: impl AsRef<Path>) -> Result<RasterImage<T>> {
    let bytes = std::fs::read(path.as_ref())?;
    decode_auto(&bytes)
}

fn decode_png<T: Real>(bytes: &[u8]) -> Result<RasterImage<T>> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Decode(format!("png: {e}")))?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "png bit depth {:?}; only 8-bit is supported",
            info.bit_depth
        )));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "png color type {other:?}; only gray and RGB are supported"
            )));
        }
    };
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Decode(format!("png: {e}")))?;
    buf.truncate(frame.buffer_size());
    let data = buf.iter().map(|&u| cast::<T>(u as f64 / 255.0)).collect();
    RasterImage::new(width, height, channels, data)
}

fn decode_pgm<T: Real>(bytes: &[u8]) -> Result<RasterImage<T>> {
    let mut pos = 0usize;
    let magic = take_token(bytes, &mut pos).ok_or_else(|| Error::Decode("empty pgm".into()))?;
    if magic != b"P5" {
        return Err(Error::UnsupportedFormat(format!(
            "pnm magic {:?}; only binary P5 is supported",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = parse_dim(bytes, &mut pos, "width")?;
    let height = parse_dim(bytes, &mut pos, "height")?;
    let maxval = parse_dim(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "pgm maxval {maxval}; only 8-bit (maxval <= 255) is supported"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width * height;
    if bytes.len() < pos + n {
        return Err(Error::Decode(format!(
            "pgm truncated: expected {n} raster bytes, found {}",
            bytes.len().saturating_sub(pos)
        )));
    }
    let data = bytes[pos..pos + n]
        .iter()
        .map(|&u| cast::<T>(u as f64 / maxval as f64))
        .collect();
    RasterImage::new(width, height, 1, data)
}

fn parse_dim(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = take_token(bytes, pos)
        .ok_or_else(|| Error::Decode(format!("pgm header missing {what}")))?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::Decode(format!("pgm header has invalid {what}")))
}

/// Next whitespace-delimited token, skipping `#` comment lines.
fn take_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(&bytes[start..*pos])
}

#[inline]
fn quantize<T: Real>(v: T) -> u8 {
    let scaled = (v * cast::<T>(255.0)).round();
    let scaled = scaled.max(T::zero()).min(cast::<T>(255.0));
    scaled.to_u8().unwrap_or(0)
}

/// Encode as 8-bit PNG (grayscale for 1 channel, RGB for 3).
pub fn encode_png<T: Real>(img: &RasterImage<T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        encoder.set_color(match img.channels {
            1 => png::ColorType::Grayscale,
            _ => png::ColorType::Rgb,
        });
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Decode(format!("png encode: {e}")))?;
        let bytes: Vec<u8> = img.data.iter().map(|&v| quantize(v)).collect();
        writer
            .write_image_data(&bytes)
            .map_err(|e| Error::Decode(format!("png encode: {e}")))?;
    }
    Ok(out)
}

/// Encode a single-channel image as binary PGM with maxval 255.
pub fn encode_pgm<T: Real>(img: &GrayImage<T>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.data.iter().map(|&v| quantize(v)));
    out
}

pub fn write_png<T: Real>(path: impl AsRef<Path>, img: &RasterImage<T>) -> Result<()> {
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn write_pgm<T: Real>(path: impl AsRef<Path>, img: &GrayImage<T>) -> Result<()> {
    std::fs::write(path, encode_pgm(img))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_decodes_scaled_values() {
        let bytes = b"P5\n2 2\n255\n\x00\x80\xff\x40";
        let img = decode_image::<f64>(bytes, ImageFormat::Pgm).unwrap();
        assert_eq!(img.channels, 1);
        let expected = [0.0, 128.0 / 255.0, 1.0, 64.0 / 255.0];
        for (v, e) in img.data.iter().zip(expected.iter()) {
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn pgm_handles_comments_and_rejects_16bit() {
        let bytes = b"P5\n# a comment\n2 1\n255\n\x10\x20";
        let img = decode_image::<f64>(bytes, ImageFormat::Pgm).unwrap();
        assert_eq!((img.width, img.height), (2, 1));

        let wide = b"P5\n2 1\n65535\n\x00\x00\x00\x00";
        assert!(matches!(
            decode_image::<f64>(wide, ImageFormat::Pgm),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn pgm_rejects_truncation_and_bad_magic() {
        assert!(matches!(
            decode_image::<f64>(b"P5\n4 4\n255\n\x00", ImageFormat::Pgm),
            Err(Error::Decode(_))
        ));
        assert!(matches!(
            decode_image::<f64>(b"P6\n1 1\n255\n\x00\x00\x00", ImageFormat::Pgm),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn png_round_trips_rgb_pixel() {
        let img = RasterImage::new(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        let bytes = encode_png(&img).unwrap();
        let back = decode_image::<f64>(&bytes, ImageFormat::Png).unwrap();
        assert_eq!(back.channels, 3);
        assert_eq!(back.data, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn png_rejects_malformed() {
        assert!(decode_image::<f64>(b"\x89PNG\r\n\x1a\njunk", ImageFormat::Png).is_err());
    }

    #[test]
    fn png_rejects_palette_images() {
        let mut bytes = Vec::new();
        {
            let mut encoder = png::Encoder::new(&mut bytes, 2, 1);
            encoder.set_color(png::ColorType::Indexed);
            encoder.set_depth(png::BitDepth::Eight);
            encoder.set_palette(vec![255, 0, 0, 0, 255, 0]);
            let mut writer = encoder.write_header().unwrap();
            writer.write_image_data(&[0, 1]).unwrap();
        }
        assert!(matches!(
            decode_image::<f64>(&bytes, ImageFormat::Png),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn decode_encode_decode_is_identity() {
        // deterministic 256x256 gray phantom
        let w = 256;
        let mut data = Vec::with_capacity(w * w);
        for y in 0..w {
            for x in 0..w {
                data.push((((x * 7 + y * 13) % 256) as f64) / 255.0);
            }
        }
        let img = RasterImage::new(w, w, 1, data).unwrap();
        let first = encode_png(&img).unwrap();
        let decoded = decode_image::<f64>(&first, ImageFormat::Png).unwrap();
        assert_eq!(decoded.data, img.data);
        let second = encode_png(&decoded).unwrap();
        let decoded2 = decode_image::<f64>(&second, ImageFormat::Png).unwrap();
        assert_eq!(decoded2.data, img.data);
    }

    #[test]
    fn pgm_round_trip() {
        let img = GrayImage::new(3, 2, vec![0.0, 0.5, 1.0, 0.25, 0.75, 0.1]).unwrap();
        let bytes = encode_pgm(&img);
        let back = decode_image::<f64>(&bytes, ImageFormat::Pgm).unwrap();
        let again = encode_pgm(&crate::image::green_channel(&back));
        assert_eq!(bytes, again);
    }
}
