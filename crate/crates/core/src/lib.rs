//! Region-resolved facial imaging photoplethysmography.
//!
//! The pipeline turns a raw 16-bit facial video into a per-pixel blood
//! pulsation amplitude (BPA) map and three normalized regional indicators
//! (cheek, side forehead, central forehead):
//!
//! 1. [`media`]: raw container I/O, channel selection, synthetic fixtures.
//! 2. [`register`]: sub-pixel translational co-registration of frames.
//! 3. [`face_rois`]: 81-point landmarks to named region masks.
//! 4. [`pulse`]: global pulse, heart rate and the I/Q lock-in reference.
//! 5. [`lockin`]: per-block lock-in amplitude and regional reduction.
//!
//! [`pipeline::analyze`] runs these steps in order on one video.
//!
//! Alongside it, [`ct_map`] builds en-face choroidal thickness maps from
//! segmented boundary surfaces and [`stats`] links indicators to mean
//! thickness (correlation, outlier-masked regression, cutoff
//! classification, ROC/AUC).

pub mod ct_map;
pub mod face_rois;
pub mod lockin;
pub mod media;
pub mod pipeline;
pub mod pgm;
pub mod plot;
pub mod pulse;
pub mod register;
pub mod spectral;
pub mod stats;

pub use face_rois::{LandmarkSet, Mask, RegionMaskSet, RegionSpec};
pub use lockin::{BpaMap, RegionalBpa};
pub use media::{Channel, ScalarCube, VideoCube};
pub use pulse::{PulseSignal, ReferenceSignal};
pub use register::FrameShift;
