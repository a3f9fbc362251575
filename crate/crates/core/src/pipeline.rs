//! End-to-end analysis of one facial video.

use crate::face_rois::{build_region_masks, LandmarkSet, RegionMaskSet, RegionSpec, RoiError};
use crate::lockin::{bpa_map, regional_bpa, BpaMap, LockinError, RegionalBpa, DEFAULT_BLOCK_SIZE};
use crate::media::{extract_channel, Channel, MediaError, VideoCube};
use crate::pulse::{
    estimate_heart_rate_with_ratio, global_pulse, make_reference, PulseError, PulseSignal, ReferenceSignal, DEFAULT_BAND,
    DEFAULT_BANDWIDTH, DEFAULT_PEAK_RATIO,
};
use crate::register::{register_cube, FrameShift, RegisterError, RegistrationConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub channel: Channel,
    /// Heart-rate search band, Hz.
    pub band: (f64, f64),
    /// Reference bandwidth around the heart rate, Hz.
    pub bandwidth: f64,
    pub block_size: usize,
    pub reference_frame: usize,
    /// Skip motion correction entirely.
    pub register: bool,
    /// Hann taper in the shift estimator.
    pub window: bool,
    /// Minimum in-band peak-to-median ratio for a detected pulse.
    pub peak_ratio: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            channel: Channel::G,
            band: DEFAULT_BAND,
            bandwidth: DEFAULT_BANDWIDTH,
            block_size: DEFAULT_BLOCK_SIZE,
            reference_frame: 0,
            register: true,
            window: true,
            peak_ratio: DEFAULT_PEAK_RATIO,
        }
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Register(#[from] RegisterError),
    #[error(transparent)]
    Roi(#[from] RoiError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Lockin(#[from] LockinError),
}

impl AnalysisError {
    pub fn kind(&self) -> &'static str {
        match self {
            AnalysisError::Media(e) => e.kind(),
            AnalysisError::Register(e) => e.kind(),
            AnalysisError::Roi(e) => e.kind(),
            AnalysisError::Pulse(e) => e.kind(),
            AnalysisError::Lockin(e) => e.kind(),
        }
    }

    /// Whether the inputs themselves were unusable, as opposed to the
    /// analysis failing on valid inputs.
    pub fn is_input_error(&self) -> bool {
        match self {
            AnalysisError::Media(_) | AnalysisError::Roi(_) => true,
            AnalysisError::Register(e) => matches!(e, RegisterError::DimMismatch(_) | RegisterError::BadReferenceIndex { .. }),
            AnalysisError::Lockin(e) => matches!(e, LockinError::DimMismatch(_) | LockinError::InvalidBlockSize { .. }),
            AnalysisError::Pulse(e) => matches!(e, PulseError::DimMismatch(_) | PulseError::TooShort { .. } | PulseError::BandOutOfRange(_)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub shifts: Vec<FrameShift>,
    pub masks: RegionMaskSet,
    pub pulse: PulseSignal,
    pub heart_rate: f64,
    pub reference: ReferenceSignal,
    pub map: BpaMap,
    pub regional: RegionalBpa,
}

/// Channel selection, registration, region masks, global pulse, heart
/// rate, reference, lock-in map and regional reduction. The video is
/// consumed so its samples can be released once the analysis channel is
/// extracted.
pub fn analyze(video: VideoCube, landmarks: &LandmarkSet, regions: &RegionSpec, config: &AnalysisConfig) -> Result<Analysis, AnalysisError> {
    let (h, w) = (video.height(), video.width());
    if landmarks.dims() != (h, w) {
        return Err(RoiError::InvalidSpec(format!(
            "landmarks are for a {:?} image, video frames are {h}x{w}",
            landmarks.dims()
        ))
        .into());
    }
    let masks = build_region_masks(landmarks, regions)?;
    let cube = extract_channel(&video, config.channel)?;
    drop(video);

    let (cube, shifts) = if config.register {
        let reg = RegistrationConfig { window: config.window, ..RegistrationConfig::default() };
        register_cube(cube, config.reference_frame, reg)?
    } else {
        let n = cube.frames();
        (cube, vec![FrameShift::ZERO; n])
    };

    let pulse = global_pulse(&cube, masks.face())?;
    let heart_rate = estimate_heart_rate_with_ratio(&pulse, config.band, config.peak_ratio)?;
    let reference = make_reference(&pulse, heart_rate, config.bandwidth)?;
    let map = bpa_map(&cube, &reference, config.block_size)?;
    let regional = regional_bpa(&map, &masks)?;
    Ok(Analysis {
        shifts,
        masks,
        pulse,
        heart_rate,
        reference,
        map,
        regional,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::face_rois::layout::synthetic_landmarks;
    use crate::media::{synthesize_video, SceneSpec};

    #[test]
    fn small_static_scene() {
        let spec = SceneSpec::synthetic_face(400, 128, 160, [4.0, 2.0, 2.0]);
        let (video, truth) = synthesize_video(&spec, 3).unwrap();
        let a = analyze(video, &synthetic_landmarks(128, 160), &RegionSpec::default(), &AnalysisConfig::default()).unwrap();
        assert_eq!(a.heart_rate, 1.25);
        let want = truth.relative_bpa.unwrap();
        for i in 0..3 {
            assert!((a.regional.relative[i] - want[i]).abs() < 0.05 * want[i], "{:?} vs {want:?}", a.regional.relative);
        }
        assert!((a.regional.relative.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_video_has_no_pulse() {
        let spec = SceneSpec::synthetic_face(400, 64, 80, [0.0, 0.0, 0.0]);
        let (video, _) = synthesize_video(&spec, 3).unwrap();
        let err = analyze(video, &synthetic_landmarks(64, 80), &RegionSpec::default(), &AnalysisConfig::default()).unwrap_err();
        assert_eq!(err.kind(), "NoPulseDetected");
        assert!(!err.is_input_error());
    }

    #[test]
    fn landmark_size_must_match() {
        let spec = SceneSpec::synthetic_face(300, 64, 80, [4.0, 2.0, 2.0]);
        let (video, _) = synthesize_video(&spec, 3).unwrap();
        let err = analyze(video, &synthetic_landmarks(65, 80), &RegionSpec::default(), &AnalysisConfig::default()).unwrap_err();
        assert!(err.is_input_error());
    }

    #[test]
    fn config_json_is_partial() {
        let c: AnalysisConfig = serde_json::from_str(r#"{"block_size": 2, "band": [0.8, 2.5]}"#).unwrap();
        assert_eq!(c.block_size, 2);
        assert_eq!(c.band, (0.8, 2.5));
        assert_eq!(c.channel, Channel::G);
        assert!(serde_json::from_str::<AnalysisConfig>(r#"{"blocksize": 2}"#).is_err());
    }
}
