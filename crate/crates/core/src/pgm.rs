//! Binary PGM (P5, maxval 255) encoding for masks and heatmaps.

use ndarray::Array2;
use std::path::Path;

pub fn encode_pgm(pixels: &Array2<u8>) -> Vec<u8> {
    let (h, w) = pixels.dim();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(pixels.iter());
    out
}

pub fn write_pgm(pixels: &Array2<u8>, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, encode_pgm(pixels))
}

/// Maps non-negative values linearly onto 0..=255 with the maximum at 255.
/// Non-finite values and an all-zero field map to 0.
pub fn normalize_to_max(values: &Array2<f64>) -> Array2<u8> {
    let max = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    values.mapv(|v| {
        if max > 0.0 && v.is_finite() {
            (v.max(0.0) / max * 255.0).round() as u8
        } else {
            0
        }
    })
}
