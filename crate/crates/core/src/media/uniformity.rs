use super::MediaError;
use ndarray::ArrayView2;

/// Illumination uniformity ratios over a masked region.
///
/// `u1 = min / max` and `u2 = min / mean` of the masked values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniformity {
    pub u1: f64,
    pub u2: f64,
}

pub fn illumination_uniformity(
    frame: ArrayView2<'_, f64>,
    mask: ArrayView2<'_, bool>,
) -> Result<Uniformity, MediaError> {
    if frame.dim() != mask.dim() {
        return Err(MediaError::DimMismatch(format!(
            "frame {:?} vs mask {:?}",
            frame.dim(),
            mask.dim()
        )));
    }
    let (mut min, mut max, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for (&v, _) in frame.iter().zip(mask.iter()).filter(|(_, &m)| m) {
        min = min.min(v);
        max = max.max(v);
        sum += v;
        n += 1;
    }
    if n == 0 {
        return Err(MediaError::EmptyMask);
    }
    if max <= 0.0 {
        return Err(MediaError::AllZero);
    }
    let mean = sum / n as f64;
    Ok(Uniformity {
        u1: min / max,
        u2: min / mean,
    })
}
