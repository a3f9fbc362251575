//! Raw video cubes, channel selection, synthetic fixtures and illumination
//! uniformity.

mod container;
pub mod synth;
mod uniformity;

pub use container::{load_video, read_video, save_video, write_video, HEADER_FIXED_LEN, MAGIC};
pub use synth::{synthesize_video, GroundTruth, Motion, RegionPatch, SceneSpec, Shape, Texture};
pub use uniformity::{illumination_uniformity, Uniformity};

use ndarray::{Array3, Array4, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MediaError {
    #[error("not a TAIV container (bad magic)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),
    #[error("payload holds {actual} bytes, header implies {expected}")]
    TruncatedPayload { expected: u64, actual: u64 },
    #[error("invalid cube: {0}")]
    InvalidCube(String),
    #[error("channel {0} not present in cube")]
    MissingChannel(Channel),
    #[error("mask selects no pixels")]
    EmptyMask,
    #[error("masked values are all zero")]
    AllZero,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("scene would clip: {0}")]
    ClippingRisk(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl MediaError {
    pub fn kind(&self) -> &'static str {
        match self {
            MediaError::BadMagic => "BadMagic",
            MediaError::UnsupportedVersion(_) => "UnsupportedVersion",
            MediaError::TruncatedPayload { .. } => "TruncatedPayload",
            MediaError::InvalidCube(_) => "InvalidCube",
            MediaError::MissingChannel(_) => "MissingChannel",
            MediaError::EmptyMask => "EmptyMask",
            MediaError::AllZero => "AllZero",
            MediaError::DimMismatch(_) => "DimMismatch",
            MediaError::ClippingRisk(_) => "ClippingRisk",
            MediaError::InvalidScene(_) => "InvalidScene",
            MediaError::Io(_) => "IoFailure",
        }
    }
}

/// Color plane of a video cube. The numeric tag is the on-disk code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    R,
    G,
    B,
}

impl Channel {
    pub fn tag(self) -> u8 {
        match self {
            Channel::R => 0,
            Channel::G => 1,
            Channel::B => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Channel> {
        match tag {
            0 => Some(Channel::R),
            1 => Some(Channel::G),
            2 => Some(Channel::B),
            _ => None,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Channel::R => "R",
            Channel::G => "G",
            Channel::B => "B",
        };
        f.write_str(s)
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "R" | "r" => Ok(Channel::R),
            "G" | "g" => Ok(Channel::G),
            "B" | "b" => Ok(Channel::B),
            other => Err(format!("unknown channel {other:?}, expected R, G or B")),
        }
    }
}

/// Raw multi-channel video in digital numbers (DN).
///
/// Samples are stored as `(frame, channel, row, col)`, the same order as the
/// container payload.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoCube {
    samples: Array4<u16>,
    channels: Vec<Channel>,
    fps: f64,
    bit_depth: u8,
}

impl VideoCube {
    pub fn new(
        samples: Array4<u16>,
        channels: Vec<Channel>,
        fps: f64,
        bit_depth: u8,
    ) -> Result<Self, MediaError> {
        let cube = VideoCube {
            samples,
            channels,
            fps,
            bit_depth,
        };
        cube.validate()?;
        Ok(cube)
    }

    /// Checks every cube invariant, including the sample bound.
    pub fn validate(&self) -> Result<(), MediaError> {
        if !(1..=16).contains(&self.bit_depth) {
            return Err(MediaError::InvalidCube(format!(
                "bit depth {} outside 1..=16",
                self.bit_depth
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(MediaError::InvalidCube(format!("fps {} must be > 0", self.fps)));
        }
        if self.channels.is_empty() {
            return Err(MediaError::InvalidCube("no channels".into()));
        }
        for (i, c) in self.channels.iter().enumerate() {
            if self.channels[..i].contains(c) {
                return Err(MediaError::InvalidCube(format!("duplicate channel {c}")));
            }
        }
        if self.samples.shape()[1] != self.channels.len() {
            return Err(MediaError::InvalidCube(format!(
                "{} channel planes but {} channel tags",
                self.samples.shape()[1],
                self.channels.len()
            )));
        }
        if self.bit_depth < 16 {
            let limit = 1u32 << self.bit_depth;
            if let Some(v) = self.samples.iter().find(|&&v| u32::from(v) >= limit) {
                return Err(MediaError::InvalidCube(format!(
                    "sample {v} exceeds {}-bit range",
                    self.bit_depth
                )));
            }
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.samples.shape()[0]
    }

    pub fn height(&self) -> usize {
        self.samples.shape()[2]
    }

    pub fn width(&self) -> usize {
        self.samples.shape()[3]
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn duration_s(&self) -> f64 {
        self.frames() as f64 / self.fps
    }

    pub fn samples(&self) -> &Array4<u16> {
        &self.samples
    }

    pub fn into_samples(self) -> Array4<u16> {
        self.samples
    }

    /// One channel plane of one frame.
    pub fn plane(&self, frame: usize, channel: Channel) -> Option<ArrayView2<'_, u16>> {
        let c = self.channels.iter().position(|&x| x == channel)?;
        Some(self.samples.index_axis(Axis(0), frame).index_axis_move(Axis(0), c))
    }
}

/// Single-channel `T×H×W` cube as floats, the working representation after
/// channel selection and registration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCube {
    pub data: Array3<f32>,
    pub fps: f64,
}

impl ScalarCube {
    pub fn new(data: Array3<f32>, fps: f64) -> Self {
        ScalarCube { data, fps }
    }

    pub fn frames(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn height(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn frame(&self, t: usize) -> ArrayView2<'_, f32> {
        self.data.index_axis(Axis(0), t)
    }
}

/// Selects one color plane of every frame, preserving frame order.
pub fn extract_channel(cube: &VideoCube, channel: Channel) -> Result<ScalarCube, MediaError> {
    let c = cube
        .channels
        .iter()
        .position(|&x| x == channel)
        .ok_or(MediaError::MissingChannel(channel))?;
    let plane = cube.samples.index_axis(Axis(1), c);
    Ok(ScalarCube::new(plane.mapv(f32::from), cube.fps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array4;

    #[test]
    fn extract_green_from_green_only_is_identity() {
        let samples = Array4::from_shape_fn((3, 1, 2, 4), |(t, _, y, x)| (t * 100 + y * 10 + x) as u16);
        let cube = VideoCube::new(samples.clone(), vec![Channel::G], 100.0, 16).unwrap();
        let g = extract_channel(&cube, Channel::G).unwrap();
        assert_eq!(g.data, samples.index_axis(Axis(1), 0).mapv(f32::from));
        assert_eq!(g.fps, 100.0);
    }

    #[test]
    fn extract_green_plane_of_rgb() {
        let samples = Array4::from_shape_fn((2, 3, 3, 3), |(_, c, _, _)| [1u16, 7, 3][c]);
        let cube = VideoCube::new(samples, vec![Channel::R, Channel::G, Channel::B], 30.0, 8).unwrap();
        let g = extract_channel(&cube, Channel::G).unwrap();
        assert!(g.data.iter().all(|&v| v == 7.0));
    }

    #[test]
    fn extract_missing_channel() {
        let cube = VideoCube::new(Array4::zeros((1, 1, 2, 2)), vec![Channel::G], 30.0, 16).unwrap();
        assert!(matches!(
            extract_channel(&cube, Channel::R),
            Err(MediaError::MissingChannel(Channel::R))
        ));
    }

    #[test]
    fn rejects_samples_beyond_bit_depth() {
        let mut samples = Array4::zeros((1, 1, 2, 2));
        samples[[0, 0, 1, 1]] = 4096;
        let err = VideoCube::new(samples, vec![Channel::G], 30.0, 12).unwrap_err();
        assert_eq!(err.kind(), "InvalidCube");
    }

    #[test]
    fn rejects_duplicate_channels() {
        let err = VideoCube::new(Array4::zeros((1, 2, 2, 2)), vec![Channel::G, Channel::G], 30.0, 16)
            .unwrap_err();
        assert_eq!(err.kind(), "InvalidCube");
    }
}
