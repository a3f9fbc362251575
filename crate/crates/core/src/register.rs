//! Sub-pixel translational registration by phase correlation.
//!
//! Shifts are content displacements: `estimate_shift(reference, moving)`
//! returns `d` such that `moving(x) ≈ reference(x − d)`, and
//! [`apply_shift`] with `d` moves content by `+d`. Registering a frame
//! therefore resamples it with `−d`.
//!
//! The cross-power spectrum is whitened, tapered with a Gaussian (a σ = 1 px
//! blur of the correlation surface) and inverted. The Gaussian makes the
//! peak locally log-quadratic, so a 3×3 least-squares fit on log values
//! locates it without the bias a plain parabola has on a sharp peak.

use crate::media::ScalarCube;
use crate::spectral::{signed_freq, Fft2};
use ndarray::{Array2, ArrayView2, ArrayViewMut2, Axis};
use ndarray::parallel::prelude::*;
use rustfft::num_complex::Complex;
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

/// Frames whose correlation confidence falls below this are flagged.
pub const LOW_CONFIDENCE: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum RegisterError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("image is constant")]
    DegenerateImage,
    #[error("shift ({dx}, {dy}) exceeds half the frame")]
    ShiftTooLarge { dx: f64, dy: f64 },
    #[error("reference frame {index} out of range for {frames} frames")]
    BadReferenceIndex { index: usize, frames: usize },
}

impl RegisterError {
    pub fn kind(&self) -> &'static str {
        match self {
            RegisterError::DimMismatch(_) => "DimMismatch",
            RegisterError::DegenerateImage => "DegenerateImage",
            RegisterError::ShiftTooLarge { .. } => "ShiftTooLarge",
            RegisterError::BadReferenceIndex { .. } => "BadReferenceIndex",
        }
    }
}

/// Content displacement of a frame relative to the reference, px.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameShift {
    /// Positive to the right.
    pub dx: f64,
    /// Positive downwards.
    pub dy: f64,
    /// Correlation peak relative to a perfect match, in `[0, 1]`.
    pub confidence: f64,
}

impl FrameShift {
    pub const ZERO: FrameShift = FrameShift { dx: 0.0, dy: 0.0, confidence: 1.0 };

    pub fn new(dx: f64, dy: f64) -> Self {
        FrameShift { dx, dy, confidence: 1.0 }
    }

    pub fn negated(self) -> Self {
        FrameShift { dx: -self.dx, dy: -self.dy, ..self }
    }

    pub fn is_flagged(&self) -> bool {
        self.confidence < LOW_CONFIDENCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegistrationConfig {
    /// Hann taper before the FFT; suppresses wrap-around edges on
    /// non-periodic frames. Disable for circularly shifted content.
    pub window: bool,
    /// Gaussian blur of the correlation surface, px.
    pub sigma: f64,
    /// Whitening floor relative to the largest cross-power magnitude.
    pub eps: f64,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        RegistrationConfig { window: true, sigma: 1.0, eps: 1e-9 }
    }
}

fn hann(n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![1.0; n];
    }
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()).collect()
}

/// Phase-correlation estimator with a fixed, pre-transformed reference.
pub struct ShiftEstimator {
    fft: Fft2,
    config: RegistrationConfig,
    win_y: Vec<f64>,
    win_x: Vec<f64>,
    reference_conj: Vec<Complex<f64>>,
    gauss: Vec<f64>,
}

impl ShiftEstimator {
    pub fn new(reference: ArrayView2<f32>, config: RegistrationConfig) -> Result<Self, RegisterError> {
        let (h, w) = reference.dim();
        if h == 0 || w == 0 {
            return Err(RegisterError::DimMismatch("empty frame".into()));
        }
        let (win_y, win_x) = if config.window { (hann(h), hann(w)) } else { (vec![1.0; h], vec![1.0; w]) };
        let mut est = ShiftEstimator {
            fft: Fft2::new(h, w),
            config,
            win_y,
            win_x,
            reference_conj: Vec::new(),
            gauss: Vec::new(),
        };
        est.reference_conj = est.spectrum(reference)?.iter().map(|c| c.conj()).collect();
        let s2 = 2.0 * PI * PI * config.sigma * config.sigma;
        est.gauss = (0..h)
            .flat_map(|y| {
                let fy = signed_freq(y, h);
                (0..w).map(move |x| {
                    let fx = signed_freq(x, w);
                    (-s2 * (fx * fx + fy * fy)).exp()
                })
            })
            .collect();
        Ok(est)
    }

    fn dims(&self) -> (usize, usize) {
        (self.fft.h, self.fft.w)
    }

    fn spectrum(&self, frame: ArrayView2<f32>) -> Result<Vec<Complex<f64>>, RegisterError> {
        let (h, w) = self.dims();
        let n = (h * w) as f64;
        let mean = frame.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let (lo, hi) = frame
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
            return Err(RegisterError::DegenerateImage);
        }
        let mut buf: Vec<Complex<f64>> = frame
            .indexed_iter()
            .map(|((y, x), &v)| Complex::new((f64::from(v) - mean) * self.win_y[y] * self.win_x[x], 0.0))
            .collect();
        self.fft.run(&mut buf, false);
        Ok(buf)
    }

    pub fn estimate(&self, moving: ArrayView2<f32>) -> Result<FrameShift, RegisterError> {
        let (h, w) = self.dims();
        if moving.dim() != (h, w) {
            return Err(RegisterError::DimMismatch(format!("{:?} vs {:?}", moving.dim(), (h, w))));
        }
        let mut buf = self.spectrum(moving)?;
        for (c, r) in buf.iter_mut().zip(&self.reference_conj) {
            *c *= r;
        }
        let floor = self.config.eps * buf.iter().map(|c| c.norm()).fold(0.0, f64::max);
        // a perfect match would put all of this weight into the peak
        let mut ideal = 0.0;
        for (c, g) in buf.iter_mut().zip(&self.gauss) {
            let weight = g / (c.norm() + floor);
            ideal += weight * c.norm();
            *c *= weight;
        }
        self.fft.run(&mut buf, true);
        let n = (h * w) as f64;
        let ideal = ideal / n;
        let surface = Array2::from_shape_fn((h, w), |(y, x)| buf[y * w + x].re / n);

        let ((py, px), peak) = surface
            .indexed_iter()
            .fold(((0, 0), f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        let at = |dy: isize, dx: isize| {
            let y = (py as isize + dy).rem_euclid(h as isize) as usize;
            let x = (px as isize + dx).rem_euclid(w as isize) as usize;
            surface[[y, x]]
        };
        let mut patch = [[0.0; 3]; 3];
        for (j, row) in patch.iter_mut().enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = at(j as isize - 1, i as isize - 1);
            }
        }
        let (ox, oy) = peak_offset(&patch, w > 1, h > 1);
        let wrap = |p: usize, n: usize| if p > n / 2 { p as f64 - n as f64 } else { p as f64 };
        Ok(FrameShift {
            dx: wrap(px, w) + ox,
            dy: wrap(py, h) + oy,
            confidence: if ideal > 0.0 { (peak / ideal).clamp(0.0, 1.0) } else { 0.0 },
        })
    }
}

/// Sub-pixel offset of the centre of a 3×3 patch from a least-squares
/// quadratic fit, on log values when all are positive.
fn peak_offset(patch: &[[f64; 3]; 3], fit_x: bool, fit_y: bool) -> (f64, f64) {
    let use_log = patch.iter().flatten().all(|&v| v > 0.0);
    let z = |j: usize, i: usize| if use_log { patch[j][i].ln() } else { patch[j][i] };
    // orthogonal-basis LS coefficients on the grid {-1,0,1}²
    let (mut b, mut c, mut d, mut e, mut f) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 0..3 {
        for i in 0..3 {
            let (x, y) = (i as f64 - 1.0, j as f64 - 1.0);
            let v = z(j, i);
            b += x * v / 6.0;
            c += y * v / 6.0;
            d += (x * x - 2.0 / 3.0) * v / 2.0;
            e += (y * y - 2.0 / 3.0) * v / 2.0;
            f += x * y * v / 4.0;
        }
    }
    if !fit_x {
        b = 0.0;
        f = 0.0;
    }
    if !fit_y {
        c = 0.0;
        f = 0.0;
    }
    // solve [2d f; f 2e] [x y]ᵀ = −[b c]ᵀ
    let det = 4.0 * d * e - f * f;
    let (ox, oy) = if d < 0.0 && e < 0.0 && det > 0.0 {
        ((-b * 2.0 * e + c * f) / det, (-c * 2.0 * d + b * f) / det)
    } else {
        let axis = |lin: f64, quad: f64| if quad < 0.0 { -lin / (2.0 * quad) } else { 0.0 };
        (axis(b, d), axis(c, e))
    };
    (
        if fit_x { ox.clamp(-1.0, 1.0) } else { 0.0 },
        if fit_y { oy.clamp(-1.0, 1.0) } else { 0.0 },
    )
}

/// Displacement of `moving` relative to `reference` with default settings.
pub fn estimate_shift(reference: ArrayView2<f32>, moving: ArrayView2<f32>) -> Result<FrameShift, RegisterError> {
    estimate_shift_with(reference, moving, RegistrationConfig::default())
}

pub fn estimate_shift_with(
    reference: ArrayView2<f32>,
    moving: ArrayView2<f32>,
    config: RegistrationConfig,
) -> Result<FrameShift, RegisterError> {
    if reference.dim() != moving.dim() {
        return Err(RegisterError::DimMismatch(format!("{:?} vs {:?}", reference.dim(), moving.dim())));
    }
    ShiftEstimator::new(reference, config)?.estimate(moving)
}

fn check_bounds(shift: FrameShift, h: usize, w: usize) -> Result<(), RegisterError> {
    if !(shift.dx.abs() < w as f64 / 2.0 && shift.dy.abs() < h as f64 / 2.0) {
        return Err(RegisterError::ShiftTooLarge { dx: shift.dx, dy: shift.dy });
    }
    Ok(())
}

/// Source index pairs and weight along one axis for output `i − d`.
fn axis_taps(n: usize, d: f64) -> Vec<(usize, usize, f32)> {
    (0..n)
        .map(|i| {
            let s = (i as f64 - d).clamp(0.0, (n - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, (s - i0 as f64) as f32)
        })
        .collect()
}

fn resample_into(src: ArrayView2<f32>, shift: FrameShift, mut out: ArrayViewMut2<f32>) {
    let (h, w) = src.dim();
    let ty = axis_taps(h, shift.dy);
    let tx = axis_taps(w, shift.dx);
    for (y, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let (y0, y1, wy) = ty[y];
        let (r0, r1) = (src.row(y0), src.row(y1));
        for (x, o) in row.iter_mut().enumerate() {
            let (x0, x1, wx) = tx[x];
            let top = r0[x0] + wx * (r0[x1] - r0[x0]);
            let bottom = r1[x0] + wx * (r1[x1] - r1[x0]);
            *o = top + wy * (bottom - top);
        }
    }
}

/// Moves content by `(dx, dy)`: `out(x, y) = frame(x − dx, y − dy)`,
/// bilinear, with coordinates clamped to the frame edge.
pub fn apply_shift(frame: ArrayView2<f32>, shift: FrameShift) -> Result<Array2<f32>, RegisterError> {
    let (h, w) = frame.dim();
    check_bounds(shift, h, w)?;
    let mut out = Array2::zeros((h, w));
    resample_into(frame, shift, out.view_mut());
    Ok(out)
}

/// Aligns every frame to `reference_index` in place. The returned shifts
/// are the estimated content displacements (the reference frame gets
/// exactly zero).
pub fn register_cube(
    mut cube: ScalarCube,
    reference_index: usize,
    config: RegistrationConfig,
) -> Result<(ScalarCube, Vec<FrameShift>), RegisterError> {
    let frames = cube.frames();
    if reference_index >= frames {
        return Err(RegisterError::BadReferenceIndex { index: reference_index, frames });
    }
    let (h, w) = (cube.height(), cube.width());
    let estimator = ShiftEstimator::new(cube.frame(reference_index), config)?;
    let shifts: Vec<Result<FrameShift, RegisterError>> = cube
        .data
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .map(|(t, mut frame)| {
            if t == reference_index {
                return Ok(FrameShift::ZERO);
            }
            let shift = estimator.estimate(frame.view())?;
            check_bounds(shift, h, w)?;
            let src = frame.to_owned();
            resample_into(src.view(), shift.negated(), frame.view_mut());
            Ok(shift)
        })
        .collect();
    let shifts = shifts.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok((cube, shifts))
}

/// `frame,dx,dy,confidence` CSV.
pub fn shifts_csv(shifts: &[FrameShift]) -> String {
    let mut out = String::from("frame,dx,dy,confidence\n");
    for (t, s) in shifts.iter().enumerate() {
        let _ = writeln!(out, "{t},{},{},{}", s.dx, s.dy, s.confidence);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    /// Smooth periodic random field (Gaussian-filtered white noise).
    fn pattern(h: usize, w: usize, seed: u64) -> Array2<f64> {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let fft = Fft2::new(h, w);
        let mut buf: Vec<Complex<f64>> = (0..h * w).map(|_| Complex::new(StandardNormal.sample(&mut rng), 0.0)).collect();
        fft.run(&mut buf, false);
        for y in 0..h {
            for x in 0..w {
                let f2 = signed_freq(x, w).powi(2) + signed_freq(y, h).powi(2);
                buf[y * w + x] *= (-2.0 * PI * PI * 2.5 * 2.5 * f2).exp();
            }
        }
        fft.run(&mut buf, true);
        Array2::from_shape_fn((h, w), |(y, x)| buf[y * w + x].re / (h * w) as f64)
    }

    /// Exact sub-pixel translation of a periodic image: `out(x) = img(x − d)`.
    fn fourier_shift(img: &Array2<f64>, dx: f64, dy: f64) -> Array2<f32> {
        let (h, w) = img.dim();
        let fft = Fft2::new(h, w);
        let mut buf: Vec<Complex<f64>> = img.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft.run(&mut buf, false);
        for y in 0..h {
            for x in 0..w {
                let (fx, fy) = (signed_freq(x, w), signed_freq(y, h));
                // the Nyquist row/column cannot carry a pure phase ramp
                let keep = !(w % 2 == 0 && x == w / 2) && !(h % 2 == 0 && y == h / 2);
                let ph = -TAU * (fx * dx + fy * dy);
                buf[y * w + x] = if keep { buf[y * w + x] * Complex::from_polar(1.0, ph) } else { Complex::new(0.0, 0.0) };
            }
        }
        fft.run(&mut buf, true);
        Array2::from_shape_fn((h, w), |(y, x)| (buf[y * w + x].re / (h * w) as f64) as f32)
    }

    fn to_f32(a: &Array2<f64>) -> Array2<f32> {
        a.mapv(|v| v as f32)
    }

    fn circular(img: &Array2<f64>, dx: isize, dy: isize) -> Array2<f32> {
        let (h, w) = img.dim();
        Array2::from_shape_fn((h, w), |(y, x)| {
            let sy = (y as isize - dy).rem_euclid(h as isize) as usize;
            let sx = (x as isize - dx).rem_euclid(w as isize) as usize;
            img[[sy, sx]] as f32
        })
    }

    const NO_WINDOW: RegistrationConfig = RegistrationConfig { window: false, sigma: 1.0, eps: 1e-9 };

    #[test]
    fn identity() {
        let img = to_f32(&pattern(64, 80, 1));
        let s = estimate_shift(img.view(), img.view()).unwrap();
        assert!(s.dx.abs() < 1e-9 && s.dy.abs() < 1e-9);
        assert!(s.confidence > 0.99, "{}", s.confidence);
    }

    #[test]
    fn integer_circular_shift() {
        let img = pattern(64, 80, 2);
        let s = estimate_shift_with(to_f32(&img).view(), circular(&img, 3, -2).view(), NO_WINDOW).unwrap();
        assert!((s.dx - 3.0).abs() < 1e-6, "{s:?}");
        assert!((s.dy + 2.0).abs() < 1e-6, "{s:?}");
    }

    #[test]
    fn fourier_subpixel_shift() {
        let img = pattern(64, 64, 3);
        let moved = fourier_shift(&img, 2.5, -1.25);
        let s = estimate_shift_with(fourier_shift(&img, 0.0, 0.0).view(), moved.view(), NO_WINDOW).unwrap();
        assert!((s.dx - 2.5).abs() < 0.1 && (s.dy + 1.25).abs() < 0.1, "{s:?}");
        // the taper biases towards zero on small periodic frames, less so on larger ones
        let img = pattern(128, 128, 3);
        let moved = fourier_shift(&img, 2.5, -1.25);
        let s = estimate_shift(fourier_shift(&img, 0.0, 0.0).view(), moved.view()).unwrap();
        assert!((s.dx - 2.5).abs() < 0.1 && (s.dy + 1.25).abs() < 0.1, "{s:?}");
    }

    #[test]
    fn constant_image_is_degenerate() {
        let flat = Array2::from_elem((8, 8), 3.0f32);
        let img = to_f32(&pattern(8, 8, 0));
        assert_eq!(estimate_shift(flat.view(), img.view()), Err(RegisterError::DegenerateImage));
        assert_eq!(estimate_shift(img.view(), flat.view()), Err(RegisterError::DegenerateImage));
        let other = Array2::zeros((8, 9));
        assert!(matches!(estimate_shift(img.view(), other.view()), Err(RegisterError::DimMismatch(_))));
    }

    #[test]
    fn zero_shift_is_identity() {
        let img = to_f32(&pattern(16, 20, 4));
        assert_eq!(apply_shift(img.view(), FrameShift::new(0.0, 0.0)).unwrap(), img);
    }

    #[test]
    fn ramp_drops_by_one() {
        let ramp = Array2::from_shape_fn((5, 10), |(_, x)| x as f32);
        let out = apply_shift(ramp.view(), FrameShift::new(1.0, 0.0)).unwrap();
        for y in 0..5 {
            for x in 1..10 {
                assert_eq!(out[[y, x]], ramp[[y, x]] - 1.0);
            }
            assert_eq!(out[[y, 0]], 0.0);
        }
    }

    #[test]
    fn round_trip_within_half_percent() {
        let img = pattern(64, 64, 5).mapv(|v| v + 20.0);
        let f = to_f32(&img);
        let there = apply_shift(f.view(), FrameShift::new(2.5, 0.0)).unwrap();
        let back = apply_shift(there.view(), FrameShift::new(-2.5, 0.0)).unwrap();
        let (mut err, mut norm) = (0.0, 0.0);
        for y in 0..64 {
            for x in 4..60 {
                err += (f64::from(back[[y, x]]) - img[[y, x]]).powi(2);
                norm += img[[y, x]].powi(2);
            }
        }
        assert!((err / norm).sqrt() < 0.005, "{}", (err / norm).sqrt());
    }

    #[test]
    fn oversized_shift_rejected() {
        let img = Array2::<f32>::zeros((10, 10));
        assert!(matches!(apply_shift(img.view(), FrameShift::new(5.0, 0.0)), Err(RegisterError::ShiftTooLarge { .. })));
    }

    #[test]
    fn single_frame_cube() {
        let cube = ScalarCube::new(to_f32(&pattern(16, 16, 6)).insert_axis(Axis(0)), 100.0);
        let (out, shifts) = register_cube(cube.clone(), 0, RegistrationConfig::default()).unwrap();
        assert_eq!(shifts, vec![FrameShift::ZERO]);
        assert_eq!(out, cube);
        assert!(matches!(
            register_cube(cube, 1, RegistrationConfig::default()),
            Err(RegisterError::BadReferenceIndex { .. })
        ));
    }

    #[test]
    fn cube_registration_tracks_and_aligns() {
        let img = pattern(64, 64, 7);
        let truth: Vec<(f64, f64)> = (0..12).map(|t| (0.3 * t as f64 - 1.0, -0.2 * t as f64)).collect();
        let mut data = Array3::zeros((12, 64, 64));
        for (t, &(dx, dy)) in truth.iter().enumerate() {
            data.index_axis_mut(Axis(0), t).assign(&fourier_shift(&img, dx, dy));
        }
        let cube = ScalarCube::new(data, 100.0);
        let (out, shifts) = register_cube(cube.clone(), 0, NO_WINDOW).unwrap();
        assert_eq!(shifts[0], FrameShift::ZERO);
        for (s, &(dx, dy)) in shifts.iter().zip(&truth).skip(1) {
            assert!((s.dx - (dx - truth[0].0)).abs() < 0.1 && (s.dy - (dy - truth[0].1)).abs() < 0.1, "{s:?}");
        }
        let variance = |c: &ScalarCube| {
            let mean = c.data.mean_axis(Axis(0)).unwrap();
            let mut v = 0.0;
            for f in c.data.axis_iter(Axis(0)) {
                for y in 8..56 {
                    for x in 8..56 {
                        v += (f64::from(f[[y, x]]) - f64::from(mean[[y, x]])).powi(2);
                    }
                }
            }
            v
        };
        assert!(variance(&out) <= 0.1 * variance(&cube));
    }

    #[test]
    fn csv_layout() {
        let csv = shifts_csv(&[FrameShift::ZERO, FrameShift { dx: 0.5, dy: -1.0, confidence: 0.25 }]);
        assert_eq!(csv, "frame,dx,dy,confidence\n0,0,0,1\n1,0.5,-1,0.25\n");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn antisymmetric(dx in -4.0f64..4.0, dy in -4.0f64..4.0, seed in 0u64..5) {
            let img = pattern(48, 48, seed);
            let a = fourier_shift(&img, 0.0, 0.0);
            let b = fourier_shift(&img, dx, dy);
            let ab = estimate_shift(a.view(), b.view()).unwrap();
            let ba = estimate_shift(b.view(), a.view()).unwrap();
            prop_assert!((ab.dx + ba.dx).abs() < 0.05 && (ab.dy + ba.dy).abs() < 0.05, "{:?} {:?}", ab, ba);
        }

        #[test]
        fn equivariant(dx in -3.0f64..3.0, dy in -3.0f64..3.0, ox in -2.0f64..2.0, oy in -2.0f64..2.0) {
            let img = pattern(48, 48, 2);
            let base = fourier_shift(&img, 0.0, 0.0);
            let moved = fourier_shift(&img, dx, dy);
            let pre = fourier_shift(&img, -ox, -oy);
            let direct = estimate_shift_with(base.view(), moved.view(), NO_WINDOW).unwrap();
            let offset = estimate_shift_with(pre.view(), moved.view(), NO_WINDOW).unwrap();
            prop_assert!((offset.dx - (direct.dx + ox)).abs() < 0.1);
            prop_assert!((offset.dy - (direct.dy + oy)).abs() < 0.1);
        }
    }
}
