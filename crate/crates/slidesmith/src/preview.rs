//! Preview sidecar writers: PNG for viewing, PGM for grayscale debugging.
//!
//! Encoders run with pinned settings (fixed compression, fixed filter) so
//! that repeated runs produce byte-identical files — previews take part in
//! the same determinism contract as the deck archive.

use std::fs;
use std::io;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::ImageEncoder;
use slidesmith_core::raster::{GrayImage, RasterImage};

/// Encode to PNG in memory (8-bit sRGB, no alpha).
pub fn encode_png(img: &RasterImage) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    let encoder =
        PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::NoFilter);
    encoder
        .write_image(&img.pixels, img.width, img.height, image::ExtendedColorType::Rgb8)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    Ok(out)
}

pub fn write_png(img: &RasterImage, path: &Path) -> io::Result<()> {
    fs::write(path, encode_png(img)?)
}

/// Encode to binary PGM (P5, maxval 255); luminance is quantized by
/// round(v * 255).
pub fn encode_pgm(gray: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", gray.width, gray.height).into_bytes();
    out.extend(gray.values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn write_pgm(gray: &GrayImage, path: &Path) -> io::Result<()> {
    fs::write(path, encode_pgm(gray))
}
