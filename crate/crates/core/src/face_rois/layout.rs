//! Schematic frontal face used for fixtures.
//!
//! Points are placed in normalized coordinates and scaled to the frame, so
//! the default [`RegionSpec`](super::RegionSpec) yields five disjoint,
//! non-empty regions at any reasonable frame size. Forehead points 68–80 run
//! along the hairline from image left to image right.

use super::{LandmarkSet, LANDMARK_COUNT};
use std::f64::consts::PI;

/// Normalized `(u, v)` positions of all 81 landmarks.
pub fn normalized_face() -> Vec<[f64; 2]> {
    let mut pts = Vec::with_capacity(LANDMARK_COUNT);

    // 0-16 jaw: lower half ellipse, image left to image right
    for k in 0..17 {
        let theta = PI + k as f64 * PI / 16.0;
        pts.push([0.5 + 0.30 * theta.cos(), 0.45 - 0.42 * theta.sin()]);
    }
    // 17-21 and 22-26 brows
    let brow = [[0.27, 0.36], [0.31, 0.345], [0.35, 0.34], [0.39, 0.34], [0.44, 0.35]];
    pts.extend(brow);
    pts.extend(brow.iter().rev().map(|&[u, v]| [1.0 - u, v]));
    // 27-30 nose bridge, 31-35 nostrils
    pts.extend([[0.5, 0.40], [0.5, 0.46], [0.5, 0.52], [0.5, 0.58]]);
    pts.extend([[0.45, 0.61], [0.475, 0.62], [0.5, 0.625], [0.525, 0.62], [0.55, 0.61]]);
    // 36-41 eye on image left (outer corner first), 42-47 mirrored (inner corner first)
    let eye = [[0.31, 0.42], [0.34, 0.405], [0.38, 0.405], [0.41, 0.42], [0.38, 0.435], [0.34, 0.435]];
    pts.extend(eye);
    pts.extend([3, 2, 1, 0, 5, 4].iter().map(|&i| [1.0 - eye[i][0], eye[i][1]]));
    // 48-59 outer lip, 60-67 inner lip
    for k in 0..12 {
        let theta = PI - k as f64 * 2.0 * PI / 12.0;
        pts.push([0.5 + 0.09 * theta.cos(), 0.72 - 0.04 * theta.sin()]);
    }
    for k in 0..8 {
        let theta = PI - k as f64 * 2.0 * PI / 8.0;
        pts.push([0.5 + 0.06 * theta.cos(), 0.72 - 0.015 * theta.sin()]);
    }
    // 68-80 hairline arc
    for j in 0..13 {
        let s = j as f64 / 12.0;
        pts.push([0.22 + 0.56 * s, 0.30 - 0.20 * (PI * s).sin()]);
    }
    debug_assert_eq!(pts.len(), LANDMARK_COUNT);
    pts
}

/// The schematic face scaled to a `height × width` frame.
pub fn synthetic_landmarks(height: usize, width: usize) -> LandmarkSet {
    let points = normalized_face()
        .into_iter()
        .map(|[u, v]| [u * width as f64, v * height as f64])
        .collect();
    LandmarkSet::new(points, height, width).expect("schematic face lies inside the frame")
}
