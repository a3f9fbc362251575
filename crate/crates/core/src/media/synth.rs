//! Synthetic facial videos with known pulsation, motion and noise.
//!
//! A scene is a static background plus an optional smooth texture and a set
//! of region patches, each pulsating sinusoidally at the heart rate:
//!
//! ```text
//! sample(t, y, x) = baseline(r) + texture(p) + amp(r) * sin(2π f t / fps + phase(r)) + noise
//! ```
//!
//! where `p = (x + 0.5 - dx_t, y + 0.5 - dy_t)` is the pixel center moved
//! back by the frame's displacement, so scene content travels by
//! `(dx_t, dy_t)`. Samples are rounded to the nearest DN and clamped.

use super::{Channel, MediaError, VideoCube};
use crate::face_rois::{layout, rasterize_polygon, Indicator, RegionSpec, ANALYSIS_REGIONS};
use ndarray::{Array2, Array4, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use crate::spectral::{signed_freq, Fft2};
use rustfft::num_complex::Complex;
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Half-open box `[x0, x1) × [y0, y1)` in pixel coordinates.
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Shape {
    fn vertices(&self) -> Vec<[f64; 2]> {
        match self {
            Shape::Rect { x0, y0, x1, y1 } => vec![[*x0, *y0], [*x1, *y0], [*x1, *y1], [*x0, *y1]],
            Shape::Polygon { vertices } => vertices.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPatch {
    pub name: String,
    pub shape: Shape,
    /// DN
    pub baseline: f64,
    /// DN
    pub amplitude: f64,
    /// rad
    #[serde(default)]
    pub phase: f64,
}

/// Stationary Gaussian random field with a Gaussian autocorrelation, a
/// stand-in for skin texture with a dense, smooth spectrum. Fixed by its
/// own seed, so it does not change with the noise seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Texture {
    /// RMS deviation, DN.
    pub rms: f64,
    /// Smoothing length (σ of the Gaussian kernel), px.
    pub correlation_px: f64,
    pub seed: u64,
}

impl Default for Texture {
    fn default() -> Self {
        Texture {
            rms: 150.0,
            correlation_px: 3.0,
            seed: 7,
        }
    }
}

/// The texture on a periodic grid padded beyond the frame by more than the
/// largest displacement, kept in the frequency domain so any sub-pixel
/// translation is rendered exactly.
struct TextureField {
    fft: Fft2,
    spectrum: Vec<Complex<f64>>,
    pad: usize,
}

/// Smallest integer ≥ `n` whose only prime factors are 2, 3 and 5.
fn smooth_size(n: usize) -> usize {
    (n.max(1)..)
        .find(|&m| {
            let mut r = m;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            r == 1
        })
        .expect("5-smooth numbers are unbounded")
}

impl TextureField {
    fn new(texture: &Texture, height: usize, width: usize, max_shift: f64) -> Self {
        let pad = max_shift.ceil() as usize + (4.0 * texture.correlation_px).ceil() as usize + 2;
        let (ph, pw) = (smooth_size(height + 2 * pad), smooth_size(width + 2 * pad));
        let fft = Fft2::new(ph, pw);
        let mut rng = ChaCha8Rng::seed_from_u64(texture.seed);
        let mut spectrum: Vec<Complex<f64>> = (0..ph * pw)
            .map(|_| Complex::new(StandardNormal.sample(&mut rng), 0.0))
            .collect();
        fft.run(&mut spectrum, false);
        let s2 = 2.0 * PI * PI * texture.correlation_px * texture.correlation_px;
        for y in 0..ph {
            for x in 0..pw {
                let (fy, fx) = (signed_freq(y, ph), signed_freq(x, pw));
                // Nyquist bins have no well-defined sub-pixel phase
                let nyquist = (ph % 2 == 0 && y == ph / 2) || (pw % 2 == 0 && x == pw / 2);
                let gain = if nyquist { 0.0 } else { (-s2 * (fx * fx + fy * fy)).exp() };
                spectrum[y * pw + x] *= gain;
            }
        }
        // Parseval: scale so the field RMS equals the requested value
        let n = (ph * pw) as f64;
        let power = spectrum.iter().skip(1).map(|c| c.norm_sqr()).sum::<f64>() / (n * n);
        spectrum[0] = Complex::new(0.0, 0.0);
        let k = if power > 0.0 { texture.rms / power.sqrt() } else { 0.0 };
        spectrum.iter_mut().for_each(|c| *c *= k / n);
        TextureField { fft, spectrum, pad }
    }

    /// Texture under a frame whose content is displaced by `shift`.
    fn render(&self, shift: [f64; 2], height: usize, width: usize) -> Array2<f64> {
        let (ph, pw) = (self.fft.h, self.fft.w);
        let mut buf = self.spectrum.clone();
        for y in 0..ph {
            let fy = signed_freq(y, ph) * shift[1];
            for x in 0..pw {
                let phase = -TAU * (signed_freq(x, pw) * shift[0] + fy);
                buf[y * pw + x] *= Complex::from_polar(1.0, phase);
            }
        }
        self.fft.run(&mut buf, true);
        Array2::from_shape_fn((height, width), |(y, x)| buf[(y + self.pad) * pw + x + self.pad].re)
    }
}

/// Per-frame displacement of scene content, in px.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Motion {
    #[default]
    Static,
    /// Frame `t` is displaced by `t * (dx_per_frame, dy_per_frame)`.
    Drift { dx_per_frame: f64, dy_per_frame: f64 },
    Trajectory { shifts: Vec<[f64; 2]> },
}

impl Motion {
    pub fn shift(&self, t: usize) -> [f64; 2] {
        match self {
            Motion::Static => [0.0, 0.0],
            Motion::Drift {
                dx_per_frame,
                dy_per_frame,
            } => [t as f64 * dx_per_frame, t as f64 * dy_per_frame],
            Motion::Trajectory { shifts } => shifts[t],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub fps: f64,
    pub bit_depth: u8,
    #[serde(default = "default_channels")]
    pub channels: Vec<Channel>,
    pub heart_rate_hz: f64,
    /// DN outside every region patch.
    pub background: f64,
    #[serde(default)]
    pub texture: Option<Texture>,
    pub regions: Vec<RegionPatch>,
    #[serde(default)]
    pub motion: Motion,
    #[serde(default)]
    pub noise_sigma: f64,
}

fn default_channels() -> Vec<Channel> {
    vec![Channel::G]
}

impl Default for SceneSpec {
    /// Full acquisition geometry: 16 s at 100 fps, 640×512, 16-bit.
    fn default() -> Self {
        SceneSpec::synthetic_face(1600, 512, 640, [4.0, 2.0, 2.0])
    }
}

impl SceneSpec {
    /// The schematic face from [`layout`] with the default region polygons.
    /// `amplitudes` are the cheek, side-forehead and central-forehead
    /// pulsation amplitudes in DN; both sides of a pair share a value.
    pub fn synthetic_face(frames: usize, height: usize, width: usize, amplitudes: [f64; 3]) -> Self {
        let landmarks = layout::synthetic_landmarks(height, width);
        let spec = RegionSpec::default();
        let background = 20_000.0;
        let regions = ANALYSIS_REGIONS
            .iter()
            .map(|&name| {
                let group = Indicator::ALL
                    .into_iter()
                    .find(|g| g.regions().contains(&name))
                    .expect("every analysis region belongs to an indicator");
                RegionPatch {
                    name: name.to_string(),
                    shape: Shape::Polygon {
                        vertices: landmarks.polygon(&spec.regions[name]),
                    },
                    baseline: background,
                    amplitude: amplitudes[group.index()],
                    phase: 0.0,
                }
            })
            .collect();
        SceneSpec {
            frames,
            height,
            width,
            fps: 100.0,
            bit_depth: 16,
            channels: default_channels(),
            heart_rate_hz: 1.25,
            background,
            texture: Some(Texture::default()),
            regions,
            motion: Motion::Static,
            noise_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), MediaError> {
        let invalid = |m: String| Err(MediaError::InvalidScene(m));
        if self.frames == 0 || self.height == 0 || self.width == 0 {
            return invalid("frames, height and width must be positive".into());
        }
        if !(1..=16).contains(&self.bit_depth) {
            return invalid(format!("bit depth {} outside 1..=16", self.bit_depth));
        }
        if self.channels.is_empty() {
            return invalid("no channels".into());
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return invalid(format!("fps {} must be > 0", self.fps));
        }
        if !(self.heart_rate_hz > 0.0 && self.heart_rate_hz < self.fps / 2.0) {
            return invalid(format!(
                "heart rate {} Hz must lie in (0, fps/2 = {})",
                self.heart_rate_hz,
                self.fps / 2.0
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return invalid(format!("noise sigma {} must be >= 0", self.noise_sigma));
        }
        if let Motion::Trajectory { shifts } = &self.motion {
            if shifts.len() != self.frames {
                return invalid(format!("trajectory has {} shifts for {} frames", shifts.len(), self.frames));
            }
        }
        if let Some(tex) = &self.texture {
            if !(tex.rms.is_finite() && tex.rms >= 0.0 && tex.correlation_px >= 1.0) {
                return invalid("texture needs rms >= 0 and correlation_px >= 1".into());
            }
        }
        for r in &self.regions {
            if !(r.amplitude.is_finite() && r.amplitude >= 0.0) {
                return invalid(format!("region {}: amplitude must be >= 0", r.name));
            }
        }

        let ceiling = ((1u32 << self.bit_depth) - 1) as f64;
        // a Gaussian field essentially never exceeds six standard deviations
        let tex = self.texture.as_ref().map_or(0.0, |t| 6.0 * t.rms);
        let margin = tex + 5.0 * self.noise_sigma;
        let levels = std::iter::once(("background", self.background, 0.0))
            .chain(self.regions.iter().map(|r| (r.name.as_str(), r.baseline, r.amplitude)));
        for (name, baseline, amp) in levels {
            let (hi, lo) = (baseline + amp + margin, baseline - amp - margin);
            if hi >= ceiling || lo < 0.0 {
                return Err(MediaError::ClippingRisk(format!(
                    "{name}: range [{lo}, {hi}] DN exceeds [0, {ceiling}]"
                )));
            }
        }
        Ok(())
    }
}

/// Known answers for a synthesized video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub heart_rate_hz: f64,
    /// Pulsation amplitude per region name, DN.
    pub region_bpa: BTreeMap<String, f64>,
    /// Cheek, side forehead, central forehead; present when the scene
    /// defines all five analysis regions with non-zero total amplitude.
    pub relative_bpa: Option<[f64; 3]>,
    /// Content displacement per frame, px.
    pub shifts: Vec<[f64; 2]>,
}

impl GroundTruth {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serializes")
    }
}

pub fn synthesize_video(spec: &SceneSpec, seed: u64) -> Result<(VideoCube, GroundTruth), MediaError> {
    spec.validate()?;
    let (t_len, h, w) = (spec.frames, spec.height, spec.width);
    let n_ch = spec.channels.len();
    let ceiling = ((1u32 << spec.bit_depth) - 1) as f64;
    let max_shift = (0..t_len)
        .map(|t| spec.motion.shift(t))
        .fold(0.0f64, |m, s| m.max(s[0].abs()).max(s[1].abs()));
    let texture = spec.texture.as_ref().map(|tex| TextureField::new(tex, h, w, max_shift));
    let vertices: Vec<Vec<[f64; 2]>> = spec.regions.iter().map(|r| r.shape.vertices()).collect();

    let mut samples = Array4::<u16>::zeros((t_len, n_ch, h, w));
    let mut cached: Option<([f64; 2], Array2<f64>, Array2<u8>)> = None;
    let mut frame0_labels = None;
    let mut values = vec![0.0f64; h * w];

    for (t, mut frame) in samples.axis_iter_mut(Axis(0)).enumerate() {
        let shift = spec.motion.shift(t);
        if cached.as_ref().is_none_or(|(s, _, _)| *s != shift) {
            let labels = label_map(&vertices, shift, h, w);
            let base = base_field(spec, texture.as_ref(), &labels, shift);
            cached = Some((shift, base, labels));
        }
        let (_, base, labels) = cached.as_ref().unwrap();
        if t == 0 {
            frame0_labels = Some(labels.clone());
        }

        let phase_t = TAU * spec.heart_rate_hz * t as f64 / spec.fps;
        let mut pulse = vec![0.0];
        pulse.extend(spec.regions.iter().map(|r| r.amplitude * (phase_t + r.phase).sin()));

        for ((v, &b), &l) in values.iter_mut().zip(base.iter()).zip(labels.iter()) {
            *v = b + pulse[l as usize];
        }
        if spec.noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            for v in values.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += spec.noise_sigma * z;
            }
        }
        let first = frame.index_axis_mut(Axis(0), 0);
        for (dst, &v) in first.into_iter().zip(values.iter()) {
            *dst = v.round().clamp(0.0, ceiling) as u16;
        }
        for c in 1..n_ch {
            let (head, mut tail) = frame.view_mut().split_at(Axis(0), c);
            tail.index_axis_mut(Axis(0), 0).assign(&head.index_axis(Axis(0), 0));
        }
    }

    let truth = ground_truth(spec, frame0_labels.as_ref().expect("at least one frame"));
    let cube = VideoCube::new(samples, spec.channels.clone(), spec.fps, spec.bit_depth)?;
    Ok((cube, truth))
}

/// Region index per pixel (0 = background, `i + 1` = region `i`); earlier
/// regions win where patches overlap.
fn label_map(vertices: &[Vec<[f64; 2]>], shift: [f64; 2], h: usize, w: usize) -> Array2<u8> {
    let mut labels = Array2::<u8>::zeros((h, w));
    for (i, poly) in vertices.iter().enumerate() {
        let moved: Vec<[f64; 2]> = poly.iter().map(|p| [p[0] + shift[0], p[1] + shift[1]]).collect();
        let mask = rasterize_polygon(&moved, h, w);
        for (l, &m) in labels.iter_mut().zip(mask.iter()) {
            if m && *l == 0 {
                *l = (i + 1) as u8;
            }
        }
    }
    labels
}

/// Static part of a frame: baselines plus texture at displaced coordinates.
fn base_field(spec: &SceneSpec, texture: Option<&TextureField>, labels: &Array2<u8>, shift: [f64; 2]) -> Array2<f64> {
    let (h, w) = labels.dim();
    let mut base = labels.mapv(|l| {
        if l == 0 {
            spec.background
        } else {
            spec.regions[l as usize - 1].baseline
        }
    });
    if let Some(field) = texture {
        base += &field.render(shift, h, w);
    }
    base
}

fn ground_truth(spec: &SceneSpec, labels: &Array2<u8>) -> GroundTruth {
    let region_bpa: BTreeMap<String, f64> = spec.regions.iter().map(|r| (r.name.clone(), r.amplitude)).collect();
    let mut counts = vec![0usize; spec.regions.len() + 1];
    for &l in labels.iter() {
        counts[l as usize] += 1;
    }
    let merged: Option<Vec<f64>> = Indicator::ALL
        .iter()
        .map(|g| {
            let (mut sum, mut n) = (0.0, 0usize);
            for name in g.regions() {
                let i = spec.regions.iter().position(|r| r.name == *name)?;
                sum += spec.regions[i].amplitude * counts[i + 1] as f64;
                n += counts[i + 1];
            }
            (n > 0).then(|| sum / n as f64)
        })
        .collect();
    let relative_bpa = merged.and_then(|m| {
        let total: f64 = m.iter().sum();
        (total > 0.0).then(|| [m[0] / total, m[1] / total, m[2] / total])
    });
    GroundTruth {
        heart_rate_hz: spec.heart_rate_hz,
        region_bpa,
        relative_bpa,
        shifts: (0..spec.frames).map(|t| spec.motion.shift(t)).collect(),
    }
}
