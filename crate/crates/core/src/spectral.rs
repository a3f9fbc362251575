//! 1-D spectral helpers shared by the pulse and lock-in stages.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Removes the least-squares line `a + b·t` from a series.
pub fn linear_detrend(x: &[f64]) -> Vec<f64> {
    let (a, b) = line_fit(x);
    x.iter().enumerate().map(|(t, &v)| v - (a + b * t as f64)).collect()
}

/// Least-squares `(intercept, slope)` of `x` against the sample index.
pub fn line_fit(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let t_mean = (n - 1) as f64 / 2.0;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, &v) in x.iter().enumerate() {
        let dt = t as f64 - t_mean;
        sxy += dt * (v - mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    (mean - slope * t_mean, slope)
}

/// Frequency in Hz of bin `k` of an `n`-point transform.
pub fn bin_frequency(k: usize, n: usize, fps: f64) -> f64 {
    k as f64 * fps / n as f64
}

fn forward(x: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn inverse_real(mut buf: Vec<Complex<f64>>) -> Vec<f64> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// One-sided magnitude spectrum, bins `0..=n/2`.
pub fn magnitude_spectrum(x: &[f64]) -> Vec<f64> {
    let spec = forward(x);
    spec[..x.len() / 2 + 1].iter().map(|c| c.norm()).collect()
}

/// Band-limits `x` to `[lo, hi]` Hz by zeroing FFT bins outside the band and
/// returns the band-passed signal with its Hilbert transform (positive
/// frequencies rotated by −90°, so a sine maps to minus a cosine).
pub fn band_analytic(x: &[f64], fps: f64, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let spec = forward(x);
    let mut band = vec![Complex::new(0.0, 0.0); n];
    let mut quad = vec![Complex::new(0.0, 0.0); n];
    for k in 1..n.div_ceil(2) {
        let f = bin_frequency(k, n, fps);
        if f >= lo && f <= hi {
            band[k] = spec[k];
            band[n - k] = spec[n - k];
            quad[k] = spec[k] * Complex::new(0.0, -1.0);
            quad[n - k] = spec[n - k] * Complex::new(0.0, 1.0);
        }
    }
    // the Nyquist bin has no quadrature partner and is left out of the band
    (inverse_real(band), inverse_real(quad))
}

/// Signed frequency of bin `k` of an `n`-point transform, cycles/sample.
pub fn signed_freq(k: usize, n: usize) -> f64 {
    let k = if k > n / 2 { k as f64 - n as f64 } else { k as f64 };
    k / n as f64
}

/// Row-column 2-D FFT over row-major `h × w` buffers (unnormalized).
pub(crate) struct Fft2 {
    pub h: usize,
    pub w: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(h: usize, w: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            h,
            w,
            row_fwd: planner.plan_fft_forward(w),
            col_fwd: planner.plan_fft_forward(h),
            row_inv: planner.plan_fft_inverse(w),
            col_inv: planner.plan_fft_inverse(h),
        }
    }

    /// In-place 2-D transform of a row-major `h × w` buffer.
    pub fn run(&self, buf: &mut [Complex<f64>], inverse: bool) {
        let (row, col) = if inverse { (&self.row_inv, &self.col_inv) } else { (&self.row_fwd, &self.col_fwd) };
        row.process(buf);
        let mut column = vec![Complex::new(0.0, 0.0); self.h];
        for x in 0..self.w {
            for (y, c) in column.iter_mut().enumerate() {
                *c = buf[y * self.w + x];
            }
            col.process(&mut column);
            for (y, c) in column.iter().enumerate() {
                buf[y * self.w + x] = *c;
            }
        }
    }
}
