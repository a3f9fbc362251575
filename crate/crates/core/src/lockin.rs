//! Lock-in amplitude mapping and the regional indicator reduction.
//!
//! The cube is binned into `block_size × block_size` blocks (trailing rows
//! and columns that do not fill a block are dropped). Every block-mean
//! series is linearly detrended and projected onto the unit-RMS reference
//! pair; `√(I² + Q²)/√2` is then the amplitude of the in-band component in
//! DN. Projections are accumulated frame by frame, so the cube is read once
//! and the detrend is applied analytically from two extra running sums.

use crate::face_rois::{Indicator, Mask, RegionMaskSet, ANALYSIS_REGIONS};
use crate::media::ScalarCube;
use crate::pgm::normalize_to_max;
use crate::pulse::ReferenceSignal;
use ndarray::{Array2, Axis};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

pub const DEFAULT_BLOCK_SIZE: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum LockinError {
    #[error("reference has {reference} samples but the cube has {frames} frames")]
    LengthMismatch { reference: usize, frames: usize },
    #[error("block size {block} does not fit a {height}x{width} frame")]
    InvalidBlockSize { block: usize, height: usize, width: usize },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("region {0} is missing")]
    MissingRegion(String),
    #[error("region {0} covers no mapped pixels")]
    EmptyMask(String),
    #[error("all merged indicator values are zero")]
    ZeroDenominator,
}

impl LockinError {
    pub fn kind(&self) -> &'static str {
        match self {
            LockinError::LengthMismatch { .. } => "LengthMismatch",
            LockinError::InvalidBlockSize { .. } => "InvalidBlockSize",
            LockinError::DimMismatch(_) => "DimMismatch",
            LockinError::MissingRegion(_) => "MissingRegion",
            LockinError::EmptyMask(_) => "EmptyMask",
            LockinError::ZeroDenominator => "ZeroDenominator",
        }
    }
}

/// Pulsation amplitude per block, DN.
#[derive(Debug, Clone, PartialEq)]
pub struct BpaMap {
    /// `floor(H/block) × floor(W/block)` amplitudes.
    pub amplitudes: Array2<f64>,
    pub heart_rate: f64,
    pub block_size: usize,
    /// Frame size the map was computed from.
    pub frame_dims: (usize, usize),
}

impl BpaMap {
    /// Amplitude of every frame pixel. Pixels outside the block grid get 0.
    pub fn upsampled(&self) -> Array2<f64> {
        let b = self.block_size;
        let (bh, bw) = self.amplitudes.dim();
        Array2::from_shape_fn(self.frame_dims, |(y, x)| {
            if y / b < bh && x / b < bw {
                self.amplitudes[[y / b, x / b]]
            } else {
                0.0
            }
        })
    }

    /// Block-resolution heatmap scaled so the largest amplitude is 255.
    pub fn to_pgm(&self) -> Array2<u8> {
        normalize_to_max(&self.amplitudes)
    }

    pub fn scaled(&self, k: f64) -> BpaMap {
        BpaMap {
            amplitudes: self.amplitudes.mapv(|a| a * k),
            ..self.clone()
        }
    }
}

/// Lock-in amplitude of every block-mean series.
pub fn bpa_map(cube: &ScalarCube, reference: &ReferenceSignal, block_size: usize) -> Result<BpaMap, LockinError> {
    let (t_len, h, w) = cube.data.dim();
    if reference.in_phase.len() != t_len || reference.quadrature.len() != t_len {
        return Err(LockinError::LengthMismatch {
            reference: reference.in_phase.len(),
            frames: t_len,
        });
    }
    let b = block_size;
    if b == 0 || b > h || b > w {
        return Err(LockinError::InvalidBlockSize { block: b, height: h, width: w });
    }
    let (bh, bw) = (h / b, w / b);
    let inv_area = 1.0 / (b * b) as f64;

    // per block: Σx·ip, Σx·q, Σx, Σt·x
    let mut acc = vec![[0.0f64; 4]; bh * bw];
    for (t, frame) in cube.data.axis_iter(Axis(0)).enumerate() {
        let (ip, q, tf) = (reference.in_phase[t], reference.quadrature[t], t as f64);
        acc.par_chunks_mut(bw).enumerate().for_each(|(by, row_acc)| {
            let mut sums = vec![0.0f64; bw];
            for y in by * b..(by + 1) * b {
                let row = frame.row(y);
                for (bx, s) in sums.iter_mut().enumerate() {
                    *s += row
                        .slice(ndarray::s![bx * b..(bx + 1) * b])
                        .iter()
                        .map(|&v| f64::from(v))
                        .sum::<f64>();
                }
            }
            for (cell, s) in row_acc.iter_mut().zip(sums) {
                let x = s * inv_area;
                cell[0] += x * ip;
                cell[1] += x * q;
                cell[2] += x;
                cell[3] += tf * x;
            }
        });
    }

    let n = t_len as f64;
    let t_mean = (n - 1.0) / 2.0;
    let s_tt = n * (n * n - 1.0) / 12.0;
    let ref_sums = |r: &[f64]| -> (f64, f64) {
        r.iter()
            .enumerate()
            .fold((0.0, 0.0), |(s, st), (t, &v)| (s + v, st + t as f64 * v))
    };
    let (ip_sum, ip_tsum) = ref_sums(&reference.in_phase);
    let (q_sum, q_tsum) = ref_sums(&reference.quadrature);
    let amplitudes: Vec<f64> = acc
        .iter()
        .map(|&[sx_ip, sx_q, sx, stx]| {
            let slope = if s_tt > 0.0 { (stx - t_mean * sx) / s_tt } else { 0.0 };
            let intercept = sx / n - slope * t_mean;
            let i = 2.0 / n * (sx_ip - intercept * ip_sum - slope * ip_tsum);
            let qv = 2.0 / n * (sx_q - intercept * q_sum - slope * q_tsum);
            (i * i + qv * qv).sqrt() / std::f64::consts::SQRT_2
        })
        .collect();
    Ok(BpaMap {
        amplitudes: Array2::from_shape_vec((bh, bw), amplitudes).expect("grid size"),
        heart_rate: reference.heart_rate,
        block_size: b,
        frame_dims: (h, w),
    })
}

/// Regional means, left/right-merged values and relative indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionalBpa {
    /// Mean amplitude of each analysis region, DN.
    pub raw: BTreeMap<String, f64>,
    /// Pixel-count-weighted merge per [`Indicator`], DN.
    pub merged: [f64; 3],
    /// `merged / Σ merged`.
    pub relative: [f64; 3],
}

impl RegionalBpa {
    pub fn merged_of(&self, indicator: Indicator) -> f64 {
        self.merged[indicator.index()]
    }

    pub fn relative_of(&self, indicator: Indicator) -> f64 {
        self.relative[indicator.index()]
    }

    /// `region,raw_bpa,merged_bpa,relative_bpa`: one row per analysis
    /// region (raw only), then one row per indicator (merged and relative).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("region,raw_bpa,merged_bpa,relative_bpa\n");
        for name in ANALYSIS_REGIONS {
            let _ = writeln!(out, "{name},{},,", self.raw[name]);
        }
        for ind in Indicator::ALL {
            let _ = writeln!(out, "{},,{},{}", ind.name(), self.merged_of(ind), self.relative_of(ind));
        }
        out
    }
}

/// Mean over the blocks lying fully inside the mask. A mask too thin to
/// contain any whole block falls back to weighting every touched block by
/// the number of mask pixels it holds.
fn region_mean(map: &BpaMap, mask: &Mask) -> Option<f64> {
    let b = map.block_size;
    let (bh, bw) = map.amplitudes.dim();
    let full = (b * b) as f64;
    let (mut inside_sum, mut inside_n) = (0.0, 0usize);
    let (mut cov_sum, mut cov_w) = (0.0, 0.0);
    for by in 0..bh {
        for bx in 0..bw {
            let covered = mask
                .slice(ndarray::s![by * b..(by + 1) * b, bx * b..(bx + 1) * b])
                .iter()
                .filter(|&&m| m)
                .count() as f64;
            if covered == 0.0 {
                continue;
            }
            let a = map.amplitudes[[by, bx]];
            cov_sum += covered * a;
            cov_w += covered;
            if covered == full {
                inside_sum += a;
                inside_n += 1;
            }
        }
    }
    if inside_n > 0 {
        Some(inside_sum / inside_n as f64)
    } else if cov_w > 0.0 {
        Some(cov_sum / cov_w)
    } else {
        None
    }
}

pub fn regional_bpa(map: &BpaMap, masks: &RegionMaskSet) -> Result<RegionalBpa, LockinError> {
    if masks.dims() != map.frame_dims {
        return Err(LockinError::DimMismatch(format!(
            "masks {:?} vs map frame {:?}",
            masks.dims(),
            map.frame_dims
        )));
    }
    let mut raw = BTreeMap::new();
    for name in ANALYSIS_REGIONS {
        let mask = masks.get(name).ok_or_else(|| LockinError::MissingRegion(name.into()))?;
        let mean = region_mean(map, mask).ok_or_else(|| LockinError::EmptyMask(name.into()))?;
        raw.insert(name.to_string(), mean);
    }
    let mut merged = [0.0; 3];
    for ind in Indicator::ALL {
        let (mut sum, mut weight) = (0.0, 0.0);
        for &name in ind.regions() {
            let n = masks.pixel_count(name) as f64;
            sum += n * raw[name];
            weight += n;
        }
        merged[ind.index()] = sum / weight;
    }
    let total: f64 = merged.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(LockinError::ZeroDenominator);
    }
    let relative = merged.map(|m| m / total);
    Ok(RegionalBpa { raw, merged, relative })
}
