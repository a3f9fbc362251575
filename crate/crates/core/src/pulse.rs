//! Global pulse extraction, heart-rate estimation and the lock-in reference.
//!
//! The global pulse is the per-frame mean over the face mask with a linear
//! trend removed. Its strongest spectral peak inside the physiological band
//! gives the heart rate; band-passing the pulse around that rate and taking
//! the Hilbert transform yields the unit-RMS in-phase/quadrature pair used
//! by [`crate::lockin`].

use crate::face_rois::Mask;
use crate::media::ScalarCube;
use crate::spectral::{band_analytic, bin_frequency, linear_detrend, magnitude_spectrum};
use ndarray::Axis;
use std::fmt::Write as _;
use thiserror::Error;

/// Default physiological search band, Hz (42–180 bpm).
pub const DEFAULT_BAND: (f64, f64) = (0.7, 3.0);
/// Default reference bandwidth around the detected rate, Hz.
pub const DEFAULT_BANDWIDTH: f64 = 0.4;
/// Minimum ratio of the in-band spectral peak to the in-band median
/// magnitude for a pulse to count as detected.
pub const DEFAULT_PEAK_RATIO: f64 = 3.5;

#[derive(Debug, Error, PartialEq)]
pub enum PulseError {
    #[error("face mask selects no pixels")]
    EmptyMask,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("pulse has {frames} samples, at least {required} (2 s) are needed")]
    TooShort { frames: usize, required: usize },
    #[error("pulse contains non-finite values")]
    NonFinite,
    #[error("band out of range: {0}")]
    BandOutOfRange(String),
    #[error("no FFT bin inside the band")]
    EmptyBand,
    #[error("no pulse detected (peak/median ratio {ratio:.3})")]
    NoPulseDetected { ratio: f64 },
    #[error("no signal energy inside the reference band")]
    SilentBand,
}

impl PulseError {
    pub fn kind(&self) -> &'static str {
        match self {
            PulseError::EmptyMask => "EmptyMask",
            PulseError::DimMismatch(_) => "DimMismatch",
            PulseError::TooShort { .. } => "TooShort",
            PulseError::NonFinite => "NonFinite",
            PulseError::BandOutOfRange(_) => "BandOutOfRange",
            PulseError::EmptyBand => "EmptyBand",
            PulseError::NoPulseDetected { .. } => "NoPulseDetected",
            PulseError::SilentBand => "SilentBand",
        }
    }
}

/// Detrended, zero-mean pulse waveform in DN.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSignal {
    values: Vec<f64>,
    fps: f64,
}

impl PulseSignal {
    /// Detrends `raw` and checks the length and finiteness invariants.
    pub fn new(raw: &[f64], fps: f64) -> Result<Self, PulseError> {
        let required = (2.0 * fps).ceil() as usize;
        if raw.len() < required.max(2) {
            return Err(PulseError::TooShort {
                frames: raw.len(),
                required,
            });
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(PulseError::NonFinite);
        }
        Ok(PulseSignal {
            values: linear_detrend(raw),
            fps,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, k: f64) -> PulseSignal {
        PulseSignal {
            values: self.values.iter().map(|v| v * k).collect(),
            fps: self.fps,
        }
    }

    /// Frequency resolution of the full-length spectrum, Hz.
    pub fn resolution(&self) -> f64 {
        self.fps / self.values.len() as f64
    }
}

/// Unit-RMS, zero-mean in-phase and quadrature reference waveforms.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    pub in_phase: Vec<f64>,
    pub quadrature: Vec<f64>,
    pub heart_rate: f64,
    pub bandwidth: f64,
}

impl ReferenceSignal {
    pub fn len(&self) -> usize {
        self.in_phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_phase.is_empty()
    }
}

/// Mean of the masked pixels in every frame, linearly detrended.
pub fn global_pulse(cube: &ScalarCube, face_mask: &Mask) -> Result<PulseSignal, PulseError> {
    if face_mask.dim() != (cube.height(), cube.width()) {
        return Err(PulseError::DimMismatch(format!(
            "mask {:?} vs frame {}x{}",
            face_mask.dim(),
            cube.height(),
            cube.width()
        )));
    }
    let count = face_mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(PulseError::EmptyMask);
    }
    let mask = face_mask.as_standard_layout();
    let mask = mask.as_slice().expect("standard layout");
    let raw: Vec<f64> = cube
        .data
        .axis_iter(Axis(0))
        .map(|frame| {
            let sum: f64 = frame
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(&v, _)| f64::from(v))
                .sum();
            sum / count as f64
        })
        .collect();
    PulseSignal::new(&raw, cube.fps)
}

/// Heart rate as the frequency of the largest spectral magnitude inside
/// `band`, using the default peak-to-median detection ratio.
pub fn estimate_heart_rate(pulse: &PulseSignal, band: (f64, f64)) -> Result<f64, PulseError> {
    estimate_heart_rate_with_ratio(pulse, band, DEFAULT_PEAK_RATIO)
}

pub fn estimate_heart_rate_with_ratio(
    pulse: &PulseSignal,
    band: (f64, f64),
    min_peak_ratio: f64,
) -> Result<f64, PulseError> {
    let (lo, hi) = band;
    let nyquist = pulse.fps / 2.0;
    if !(lo > 0.0 && lo < hi && hi < nyquist) {
        return Err(PulseError::BandOutOfRange(format!(
            "need 0 < {lo} < {hi} < {nyquist}"
        )));
    }
    let n = pulse.len();
    let mags = magnitude_spectrum(&linear_detrend(pulse.values()));
    let in_band: Vec<(usize, f64)> = mags
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(k, _)| {
            let f = bin_frequency(k, n, pulse.fps);
            f >= lo && f <= hi
        })
        .map(|(k, &m)| (k, m))
        .collect();
    if in_band.is_empty() {
        return Err(PulseError::EmptyBand);
    }
    let (peak_bin, peak) = in_band
        .iter()
        .copied()
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let median = median(in_band.iter().map(|&(_, m)| m).collect());
    let ratio = if median > 0.0 { peak / median } else if peak > 0.0 { f64::INFINITY } else { 0.0 };
    if peak <= 0.0 || ratio < min_peak_ratio {
        return Err(PulseError::NoPulseDetected { ratio });
    }
    Ok(bin_frequency(peak_bin, n, pulse.fps))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Band-passes the pulse to `heart_rate ± bandwidth/2` and builds the
/// normalized in-phase/quadrature pair.
pub fn make_reference(pulse: &PulseSignal, heart_rate: f64, bandwidth: f64) -> Result<ReferenceSignal, PulseError> {
    let (lo, hi) = (heart_rate - bandwidth / 2.0, heart_rate + bandwidth / 2.0);
    let nyquist = pulse.fps / 2.0;
    if !(bandwidth > 0.0 && lo > 0.0 && hi < nyquist) {
        return Err(PulseError::BandOutOfRange(format!(
            "[{lo}, {hi}] Hz must lie inside (0, {nyquist})"
        )));
    }
    let (band, quad) = band_analytic(pulse.values(), pulse.fps, lo, hi);
    let total = rms(pulse.values());
    let in_band = rms(&band);
    if in_band == 0.0 || in_band <= 1e-10 * total {
        return Err(PulseError::SilentBand);
    }
    Ok(ReferenceSignal {
        in_phase: normalize(band),
        quadrature: normalize(quad),
        heart_rate,
        bandwidth,
    })
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn normalize(mut x: Vec<f64>) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    let r = rms(&x);
    x.iter_mut().for_each(|v| *v /= r);
    x
}

/// `t_seconds,value` CSV of a uniformly sampled series.
pub fn series_csv(values: &[f64], fps: f64) -> String {
    let mut out = String::from("t_seconds,value\n");
    for (t, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{},{}", t as f64 / fps, v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array2, Array3};
    use std::f64::consts::TAU;

    fn tone(n: usize, fps: f64, parts: &[(f64, f64, f64)]) -> Vec<f64> {
        (0..n)
            .map(|t| {
                parts
                    .iter()
                    .map(|&(a, f, ph)| a * (TAU * f * t as f64 / fps + ph).sin())
                    .sum()
            })
            .collect()
    }

    /// Cosine even about the record midpoint: orthogonal to any line, so
    /// detrending leaves it untouched.
    fn centred_cos(n: usize, fps: f64, a: f64, f: f64) -> Vec<f64> {
        let mid = (n - 1) as f64 / 2.0;
        (0..n).map(|t| a * (TAU * f * (t as f64 - mid) / fps).cos()).collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn white_noise_rarely_passes_detection() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let trials = 400;
        let detected = (0..trials)
            .filter(|&seed| {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let raw: Vec<f64> = (0..1600).map(|_| StandardNormal.sample(&mut rng)).collect();
                let p = PulseSignal::new(&raw, 100.0).unwrap();
                match estimate_heart_rate(&p, DEFAULT_BAND) {
                    Ok(_) => true,
                    Err(PulseError::NoPulseDetected { .. }) => false,
                    Err(e) => panic!("{e}"),
                }
            })
            .count();
        assert!((detected as f64) < 0.05 * trials as f64, "{detected}/{trials} false detections");
    }

    #[test]
    fn constant_frames_give_detrended_series() {
        let v: Vec<f64> = tone(400, 100.0, &[(3.0, 1.25, 0.0)]).iter().map(|x| x + 500.0).collect();
        let cube = ScalarCube::new(Array3::from_shape_fn((400, 3, 4), |(t, _, _)| v[t] as f32), 100.0);
        let mask = Array2::from_shape_fn((3, 4), |(y, x)| y == 1 || x == 0);
        let p = global_pulse(&cube, &mask).unwrap();
        let expected = linear_detrend(&v.iter().map(|&x| f64::from(x as f32)).collect::<Vec<_>>());
        for (a, b) in p.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn half_mask_signal_amplitude() {
        let a = 2.5;
        let s = centred_cos(1600, 100.0, a, 1.25);
        let mask = Array2::from_shape_fn((4, 4), |(_, x)| x < 2);
        let cube = ScalarCube::new(
            Array3::from_shape_fn((1600, 4, 4), |(t, _, x)| if x < 2 { (100.0 + s[t]) as f32 } else { 7.0 }),
            100.0,
        );
        let p = global_pulse(&cube, &mask).unwrap();
        // peak of the recovered sinusoid equals the in-mask amplitude
        let amp = 2.0 * dot(p.values(), &centred_cos(1600, 100.0, 1.0, 1.25)) / 1600.0;
        assert!((amp - a).abs() < 1e-5, "{amp}");
    }

    #[test]
    fn ramp_cube_pulse_is_zero() {
        let cube = ScalarCube::new(Array3::from_shape_fn((300, 2, 2), |(t, y, x)| (t * 3 + y + x) as f32), 100.0);
        let p = global_pulse(&cube, &Array2::from_elem((2, 2), true)).unwrap();
        assert!(p.values().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn empty_mask() {
        let cube = ScalarCube::new(Array3::zeros((300, 2, 2)), 100.0);
        assert_eq!(global_pulse(&cube, &Array2::from_elem((2, 2), false)), Err(PulseError::EmptyMask));
    }

    #[test]
    fn too_short() {
        assert!(matches!(PulseSignal::new(&[0.0; 150], 100.0), Err(PulseError::TooShort { .. })));
    }

    #[test]
    fn integer_bin_rate_is_exact() {
        let p = PulseSignal::new(&tone(1600, 100.0, &[(1.0, 1.25, 0.3)]), 100.0).unwrap();
        assert_eq!(estimate_heart_rate(&p, DEFAULT_BAND).unwrap(), 1.25);
    }

    #[test]
    fn stronger_tone_wins() {
        let p = PulseSignal::new(&tone(1600, 100.0, &[(1.0, 1.0, 0.0), (0.5, 2.0, 0.0)]), 100.0).unwrap();
        assert_eq!(estimate_heart_rate(&p, (0.7, 3.0)).unwrap(), 1.0);
    }

    #[test]
    fn flat_pulse_is_not_detected() {
        let p = PulseSignal::new(&[5.0; 400], 100.0).unwrap();
        assert!(matches!(estimate_heart_rate(&p, DEFAULT_BAND), Err(PulseError::NoPulseDetected { .. })));
    }

    #[test]
    fn band_errors() {
        let p = PulseSignal::new(&tone(400, 100.0, &[(1.0, 1.25, 0.0)]), 100.0).unwrap();
        assert!(matches!(estimate_heart_rate(&p, (3.0, 1.0)), Err(PulseError::BandOutOfRange(_))));
        assert!(matches!(estimate_heart_rate(&p, (1.0, 60.0)), Err(PulseError::BandOutOfRange(_))));
        // resolution is 0.25 Hz, nothing between 1.01 and 1.2
        assert_eq!(estimate_heart_rate(&p, (1.01, 1.2)), Err(PulseError::EmptyBand));
    }

    #[test]
    fn reference_of_sine() {
        let p = PulseSignal::new(&centred_cos(1600, 100.0, 3.0, 1.25), 100.0).unwrap();
        let r = make_reference(&p, 1.25, DEFAULT_BANDWIDTH).unwrap();
        let sqrt2 = std::f64::consts::SQRT_2;
        for t in 0..1600 {
            let ph = TAU * 1.25 * (t as f64 - 799.5) / 100.0;
            assert!((r.in_phase[t] - sqrt2 * ph.cos()).abs() < 1e-9);
            // quadrature lags by 90 degrees
            assert!((r.quadrature[t] - sqrt2 * ph.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn reference_invariants_on_off_bin_tone() {
        let p = PulseSignal::new(&tone(1600, 100.0, &[(2.0, 1.18, 0.4), (0.7, 2.4, 0.0)]), 100.0).unwrap();
        let r = make_reference(&p, 1.1875, DEFAULT_BANDWIDTH).unwrap();
        let n = r.len() as f64;
        for x in [&r.in_phase, &r.quadrature] {
            assert!((x.iter().sum::<f64>() / n).abs() < 1e-9);
            assert!((dot(x, x) / n - 1.0).abs() < 1e-9);
        }
        assert!((dot(&r.in_phase, &r.quadrature) / n).abs() < 1e-6);
    }

    #[test]
    fn reference_scale_invariant() {
        let p = PulseSignal::new(&tone(1600, 100.0, &[(2.0, 1.3, 0.1)]), 100.0).unwrap();
        let a = make_reference(&p, 1.3, 0.4).unwrap();
        let b = make_reference(&p.scaled(37.0), 1.3, 0.4).unwrap();
        for (x, y) in a.in_phase.iter().zip(&b.in_phase) {
            assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in a.quadrature.iter().zip(&b.quadrature) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn silent_band() {
        let p = PulseSignal::new(&centred_cos(1600, 100.0, 1.0, 1.25), 100.0).unwrap();
        assert_eq!(make_reference(&p, 2.5, 0.4), Err(PulseError::SilentBand));
        assert!(matches!(make_reference(&p, 0.1, 0.4), Err(PulseError::BandOutOfRange(_))));
    }

    #[test]
    fn csv_layout() {
        assert_eq!(series_csv(&[1.5, -2.0], 4.0), "t_seconds,value\n0,1.5\n0.25,-2\n");
    }
}
