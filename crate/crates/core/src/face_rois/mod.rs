//! Facial landmarks to named region masks.
//!
//! Landmarks follow the 81-point convention: 0–67 are the classic 68-point
//! layout (jaw, brows, nose, eyes, mouth) and 68–80 run along the upper
//! forehead. Regions are polygons through landmark indices, described by a
//! [`RegionSpec`]; the default spec ships with the crate and can be
//! overridden per study.

pub mod layout;
pub mod raster;

use crate::pgm;
use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use thiserror::Error;

pub use raster::{point_in_polygon, rasterize_polygon};

/// Boolean `H×W` pixel mask; `true` marks pixels inside the region.
pub type Mask = Array2<bool>;

pub const LANDMARK_COUNT: usize = 81;

pub const CHEEK_L: &str = "cheek_L";
pub const CHEEK_R: &str = "cheek_R";
pub const SIDE_FOREHEAD_L: &str = "side_forehead_L";
pub const SIDE_FOREHEAD_R: &str = "side_forehead_R";
pub const CENTRAL_FOREHEAD: &str = "central_forehead";
pub const FACE: &str = "face";

/// The five analysis regions. `_L`/`_R` refer to the subject's sides.
pub const ANALYSIS_REGIONS: [&str; 5] = [CHEEK_L, CHEEK_R, SIDE_FOREHEAD_L, SIDE_FOREHEAD_R, CENTRAL_FOREHEAD];

/// Left/right-merged facial indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    Cheek,
    SideForehead,
    CentralForehead,
}

impl Indicator {
    pub const ALL: [Indicator; 3] = [Indicator::Cheek, Indicator::SideForehead, Indicator::CentralForehead];

    pub fn name(self) -> &'static str {
        match self {
            Indicator::Cheek => "cheek",
            Indicator::SideForehead => "side_forehead",
            Indicator::CentralForehead => "central_forehead",
        }
    }

    /// Analysis regions merged into this indicator.
    pub fn regions(self) -> &'static [&'static str] {
        match self {
            Indicator::Cheek => &[CHEEK_L, CHEEK_R],
            Indicator::SideForehead => &[SIDE_FOREHEAD_L, SIDE_FOREHEAD_R],
            Indicator::CentralForehead => &[CENTRAL_FOREHEAD],
        }
    }

    pub fn index(self) -> usize {
        match self {
            Indicator::Cheek => 0,
            Indicator::SideForehead => 1,
            Indicator::CentralForehead => 2,
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum RoiError {
    #[error("expected {LANDMARK_COUNT} landmarks, found {0}")]
    WrongCount(usize),
    #[error("landmark {index} at ({x}, {y}) lies outside the {width}x{height} image")]
    OutOfBounds {
        index: usize,
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("invalid region spec: {0}")]
    InvalidSpec(String),
    #[error("region {0} rasterizes to zero pixels")]
    EmptyRegion(String),
    #[error("regions {0} and {1} overlap")]
    OverlapViolation(String, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RoiError {
    pub fn kind(&self) -> &'static str {
        match self {
            RoiError::WrongCount(_) => "WrongCount",
            RoiError::OutOfBounds { .. } => "OutOfBounds",
            RoiError::MalformedJson(_) => "MalformedJson",
            RoiError::InvalidSpec(_) => "InvalidSpec",
            RoiError::EmptyRegion(_) => "EmptyRegion",
            RoiError::OverlapViolation(..) => "OverlapViolation",
            RoiError::Io(_) => "IoFailure",
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ImageDims {
    h: usize,
    w: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct LandmarkJson {
    image: ImageDims,
    points: Vec<[f64; 2]>,
}

/// 81 facial landmarks in pixel coordinates (`x` right, `y` down).
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<[f64; 2]>,
    height: usize,
    width: usize,
}

impl LandmarkSet {
    pub fn new(points: Vec<[f64; 2]>, height: usize, width: usize) -> Result<Self, RoiError> {
        if points.len() != LANDMARK_COUNT {
            return Err(RoiError::WrongCount(points.len()));
        }
        for (index, &[x, y]) in points.iter().enumerate() {
            let inside = x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0 && x < width as f64 && y < height as f64;
            if !inside {
                return Err(RoiError::OutOfBounds {
                    index,
                    x,
                    y,
                    width,
                    height,
                });
            }
        }
        Ok(LandmarkSet { points, height, width })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn from_json(text: &str) -> Result<Self, RoiError> {
        let raw: LandmarkJson = serde_json::from_str(text).map_err(|e| RoiError::MalformedJson(e.to_string()))?;
        LandmarkSet::new(raw.points, raw.image.h, raw.image.w)
    }

    pub fn to_json(&self) -> String {
        let raw = LandmarkJson {
            image: ImageDims {
                h: self.height,
                w: self.width,
            },
            points: self.points.clone(),
        };
        serde_json::to_string(&raw).expect("landmarks serialize")
    }

    /// Vertex list of a region polygon.
    pub fn polygon(&self, indices: &[usize]) -> Vec<[f64; 2]> {
        indices.iter().map(|&i| self.points[i]).collect()
    }
}

pub fn load_landmarks(path: impl AsRef<Path>) -> Result<LandmarkSet, RoiError> {
    LandmarkSet::from_json(&std::fs::read_to_string(path)?)
}

/// Region name to polygon landmark indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionSpec {
    pub regions: BTreeMap<String, Vec<usize>>,
}

impl RegionSpec {
    pub fn from_json(text: &str) -> Result<Self, RoiError> {
        let spec: RegionSpec = serde_json::from_str(text).map_err(|e| RoiError::MalformedJson(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RoiError> {
        RegionSpec::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), RoiError> {
        for name in ANALYSIS_REGIONS {
            if !self.regions.contains_key(name) {
                return Err(RoiError::InvalidSpec(format!("missing region {name}")));
            }
        }
        for (name, indices) in &self.regions {
            if !ANALYSIS_REGIONS.contains(&name.as_str()) && name != FACE {
                return Err(RoiError::InvalidSpec(format!("unknown region {name}")));
            }
            if indices.len() < 3 {
                return Err(RoiError::InvalidSpec(format!("region {name} needs at least 3 vertices")));
            }
            if let Some(&bad) = indices.iter().find(|&&i| i >= LANDMARK_COUNT) {
                return Err(RoiError::InvalidSpec(format!("region {name}: index {bad} out of range")));
            }
        }
        Ok(())
    }
}

impl Default for RegionSpec {
    fn default() -> Self {
        RegionSpec::from_json(include_str!("../../assets/default_regions.json")).expect("bundled region spec is valid")
    }
}

/// Named region masks on the video frame grid.
#[derive(Debug, Clone)]
pub struct RegionMaskSet {
    masks: BTreeMap<String, Mask>,
    counts: BTreeMap<String, usize>,
}

impl RegionMaskSet {
    /// Builds a set from precomputed masks, enforcing the same invariants
    /// as [`build_region_masks`].
    pub fn from_masks(mut masks: BTreeMap<String, Mask>) -> Result<Self, RoiError> {
        let dims = masks
            .values()
            .next()
            .map(|m| m.dim())
            .ok_or_else(|| RoiError::InvalidSpec("no masks".into()))?;
        if masks.values().any(|m| m.dim() != dims) {
            return Err(RoiError::InvalidSpec("masks differ in size".into()));
        }
        for name in ANALYSIS_REGIONS {
            match masks.get(name) {
                None => return Err(RoiError::InvalidSpec(format!("missing region {name}"))),
                Some(m) if !m.iter().any(|&v| v) => return Err(RoiError::EmptyRegion(name.into())),
                Some(_) => {}
            }
        }
        for (i, a) in ANALYSIS_REGIONS.iter().enumerate() {
            for b in &ANALYSIS_REGIONS[i + 1..] {
                if Zip::from(&masks[*a]).and(&masks[*b]).any(|&x, &y| x && y) {
                    return Err(RoiError::OverlapViolation(a.to_string(), b.to_string()));
                }
            }
        }
        if !masks.contains_key(FACE) {
            let mut face = Mask::from_elem(dims, false);
            for name in ANALYSIS_REGIONS {
                Zip::from(&mut face).and(&masks[name]).for_each(|f, &m| *f |= m);
            }
            masks.insert(FACE.to_string(), face);
        }
        let counts = masks
            .iter()
            .map(|(k, m)| (k.clone(), m.iter().filter(|&&v| v).count()))
            .collect();
        Ok(RegionMaskSet { masks, counts })
    }

    pub fn get(&self, name: &str) -> Option<&Mask> {
        self.masks.get(name)
    }

    pub fn face(&self) -> &Mask {
        &self.masks[FACE]
    }

    pub fn pixel_count(&self, name: &str) -> usize {
        self.counts.get(name).copied().unwrap_or(0)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.face().dim()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Mask)> {
        self.masks.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Rasterizes each region polygon (even-odd fill at pixel centers). The face
/// mask is the union of the five analysis regions unless the region spec names one.
pub fn build_region_masks(landmarks: &LandmarkSet, spec: &RegionSpec) -> Result<RegionMaskSet, RoiError> {
    spec.validate()?;
    let (h, w) = landmarks.dims();
    let masks = spec
        .regions
        .iter()
        .map(|(name, indices)| {
            let mask = rasterize_polygon(&landmarks.polygon(indices), h, w);
            if !mask.iter().any(|&v| v) {
                return Err(RoiError::EmptyRegion(name.clone()));
            }
            Ok((name.clone(), mask))
        })
        .collect::<Result<BTreeMap<_, _>, _>>()?;
    RegionMaskSet::from_masks(masks)
}

/// Writes a mask as binary PGM, 255 inside and 0 outside.
pub fn write_mask_pgm(mask: &Mask, path: impl AsRef<Path>) -> std::io::Result<()> {
    let bytes = mask.mapv(|v| if v { 255u8 } else { 0 });
    pgm::write_pgm(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points_json(n: usize, w: usize, h: usize, last_x: f64) -> String {
        let mut pts: Vec<String> = (0..n).map(|i| format!("[{}, {}]", i % w, i % h)).collect();
        if let Some(p) = pts.last_mut() {
            *p = format!("[{last_x}, 1]");
        }
        format!(r#"{{"image": {{"h": {h}, "w": {w}}}, "points": [{}]}}"#, pts.join(","))
    }

    #[test]
    fn loads_valid_81_points() {
        let set = LandmarkSet::from_json(&points_json(81, 64, 48, 3.0)).unwrap();
        assert_eq!(set.points().len(), 81);
        assert_eq!(set.dims(), (48, 64));
    }

    #[test]
    fn rejects_68_points() {
        assert!(matches!(
            LandmarkSet::from_json(&points_json(68, 64, 48, 3.0)),
            Err(RoiError::WrongCount(68))
        ));
    }

    #[test]
    fn rejects_point_at_width() {
        assert!(matches!(
            LandmarkSet::from_json(&points_json(81, 64, 48, 64.0)),
            Err(RoiError::OutOfBounds { index: 80, .. })
        ));
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(LandmarkSet::from_json("{\"image\": 3"), Err(RoiError::MalformedJson(_))));
    }

    #[test]
    fn json_round_trip() {
        let set = layout::synthetic_landmarks(120, 160);
        assert_eq!(LandmarkSet::from_json(&set.to_json()).unwrap(), set);
    }

    #[test]
    fn default_spec_is_valid() {
        let spec = RegionSpec::default();
        assert_eq!(spec.regions.len(), 5);
        spec.validate().unwrap();
    }

    #[test]
    fn spec_rejects_bad_index_and_short_polygon() {
        let mut spec = RegionSpec::default();
        spec.regions.insert(CHEEK_L.into(), vec![1, 2, 81]);
        assert!(matches!(spec.validate(), Err(RoiError::InvalidSpec(_))));
        spec.regions.insert(CHEEK_L.into(), vec![1, 2]);
        assert!(matches!(spec.validate(), Err(RoiError::InvalidSpec(_))));
    }

    fn square_landmarks(squares: &[[f64; 4]]) -> (LandmarkSet, RegionSpec) {
        // park unused points at (0,0); region i uses points 4i..4i+3
        let mut points = vec![[0.0, 0.0]; LANDMARK_COUNT];
        let mut regions = BTreeMap::new();
        for (i, (&[x0, y0, x1, y1], name)) in squares.iter().zip(ANALYSIS_REGIONS).enumerate() {
            let base = 4 * i + 1;
            points[base] = [x0, y0];
            points[base + 1] = [x1, y0];
            points[base + 2] = [x1, y1];
            points[base + 3] = [x0, y1];
            regions.insert(name.to_string(), (base..base + 4).collect());
        }
        (LandmarkSet::new(points, 64, 64).unwrap(), RegionSpec { regions })
    }

    #[test]
    fn disjoint_squares() {
        let (lm, spec) = square_landmarks(&[
            [10.0, 10.0, 20.0, 20.0],
            [30.0, 10.0, 40.0, 20.0],
            [10.0, 30.0, 15.0, 35.0],
            [30.0, 30.0, 35.0, 35.0],
            [45.0, 45.0, 50.0, 50.0],
        ]);
        let set = build_region_masks(&lm, &spec).unwrap();
        assert_eq!(set.pixel_count(CHEEK_L), 100);
        assert_eq!(set.pixel_count(FACE), 100 + 100 + 25 + 25 + 25);
    }

    #[test]
    fn overlapping_squares() {
        let (lm, spec) = square_landmarks(&[
            [10.0, 10.0, 20.0, 20.0],
            [15.0, 15.0, 25.0, 25.0],
            [10.0, 30.0, 15.0, 35.0],
            [30.0, 30.0, 35.0, 35.0],
            [45.0, 45.0, 50.0, 50.0],
        ]);
        assert!(matches!(
            build_region_masks(&lm, &spec),
            Err(RoiError::OverlapViolation(..))
        ));
    }

    #[test]
    fn degenerate_region_is_empty() {
        let (mut lm, spec) = square_landmarks(&[
            [10.0, 10.0, 20.0, 20.0],
            [30.0, 10.0, 40.0, 20.0],
            [10.0, 30.0, 15.0, 35.0],
            [30.0, 30.0, 35.0, 35.0],
            [45.0, 45.0, 50.0, 50.0],
        ]);
        // collapse cheek_R onto a line
        for (k, i) in (5..9).enumerate() {
            lm.points[i] = [30.0 + k as f64, 10.0 + k as f64];
        }
        assert!(matches!(build_region_masks(&lm, &spec), Err(RoiError::EmptyRegion(name)) if name == CHEEK_R));
    }

    #[test]
    fn default_layout_masks_are_disjoint_and_sizable() {
        for (h, w) in [(128, 160), (256, 320), (512, 640)] {
            let lm = layout::synthetic_landmarks(h, w);
            let set = build_region_masks(&lm, &RegionSpec::default()).unwrap();
            for name in ANALYSIS_REGIONS {
                assert!(set.pixel_count(name) > 0, "{name} empty at {h}x{w}");
            }
        }
        let lm = layout::synthetic_landmarks(256, 320);
        let set = build_region_masks(&lm, &RegionSpec::default()).unwrap();
        for name in ANALYSIS_REGIONS {
            assert!(set.pixel_count(name) >= 1000, "{name}: {}", set.pixel_count(name));
        }
    }

    #[test]
    fn mask_pgm_export() {
        let mut m = Mask::from_elem((2, 3), false);
        m[[1, 2]] = true;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        write_mask_pgm(&m, &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert_eq!(&bytes[11..], &[0, 0, 0, 0, 0, 255]);
    }
}
