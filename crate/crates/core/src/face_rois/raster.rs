//! Even-odd polygon fill sampled at pixel centers.
//!
//! Pixel `(row, col)` is inside when its center `(col + 0.5, row + 0.5)`
//! satisfies the crossing rule: a ray cast toward +x crosses the boundary an
//! odd number of times, an edge counting when exactly one endpoint lies
//! strictly below the ray. This half-open convention assigns a point on a
//! shared edge to exactly one of two abutting polygons.

use ndarray::Array2;

/// Crossing-rule membership test for a single point.
pub fn point_in_polygon(px: f64, py: f64, vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = ordered_edge(vertices[i], vertices[(i + 1) % n]);
        if (a[1] > py) != (b[1] > py) && px < edge_x_at(a, b, py) {
            inside = !inside;
        }
    }
    inside
}

/// Scanline rasterization of a polygon onto a `height × width` grid.
pub fn rasterize_polygon(vertices: &[[f64; 2]], height: usize, width: usize) -> Array2<bool> {
    let mut mask = Array2::from_elem((height, width), false);
    let n = vertices.len();
    if n < 3 || height == 0 || width == 0 {
        return mask;
    }
    let edges: Vec<([f64; 2], [f64; 2])> = (0..n)
        .map(|i| ordered_edge(vertices[i], vertices[(i + 1) % n]))
        .filter(|(a, b)| a[1] != b[1])
        .collect();
    let ymin = vertices.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min);
    let ymax = vertices.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max);
    let row_lo = (ymin - 0.5).floor().max(0.0) as usize;
    let row_hi = ((ymax - 0.5).ceil().max(0.0) as usize).min(height - 1);

    let mut crossings = Vec::with_capacity(8);
    for row in row_lo..=row_hi {
        let yc = row as f64 + 0.5;
        crossings.clear();
        crossings.extend(
            edges
                .iter()
                .filter(|(a, b)| (a[1] > yc) != (b[1] > yc))
                .map(|&(a, b)| edge_x_at(a, b, yc)),
        );
        crossings.sort_by(|a, b| a.total_cmp(b));
        // centers with c[2k] <= xc < c[2k+1] have an odd count of crossings to their right
        for pair in crossings.chunks_exact(2) {
            let first = (pair[0] - 0.5).ceil().max(0.0);
            let end = (pair[1] - 0.5).ceil().min(width as f64);
            if end <= first {
                continue;
            }
            for col in first as usize..end as usize {
                mask[[row, col]] = true;
            }
        }
    }
    mask
}

/// Canonical endpoint order so an edge shared by two polygons yields the
/// same intersection regardless of traversal direction.
fn ordered_edge(p: [f64; 2], q: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    if (p[1], p[0]) <= (q[1], q[0]) {
        (p, q)
    } else {
        (q, p)
    }
}

fn edge_x_at(a: [f64; 2], b: [f64; 2], y: f64) -> f64 {
    a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: crossing test evaluated with exact orientation
    /// signs instead of intersection coordinates.
    fn brute_force_inside(px: f64, py: f64, vertices: &[[f64; 2]]) -> bool {
        let n = vertices.len();
        let mut inside = false;
        for i in 0..n {
            let (mut a, mut b) = (vertices[i], vertices[(i + 1) % n]);
            if (a[1] > py) == (b[1] > py) {
                continue;
            }
            if a[1] > b[1] {
                std::mem::swap(&mut a, &mut b);
            }
            // with a below b, the point is left of the upward edge iff the cross product is positive
            let cross = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]);
            if cross > 0.0 {
                inside = !inside;
            }
        }
        inside
    }

    fn brute_force_mask(vertices: &[[f64; 2]], h: usize, w: usize) -> Array2<bool> {
        Array2::from_shape_fn((h, w), |(r, c)| brute_force_inside(c as f64 + 0.5, r as f64 + 0.5, vertices))
    }

    #[test]
    fn axis_aligned_square_has_100_pixels() {
        let sq = [[10.0, 10.0], [20.0, 10.0], [20.0, 20.0], [10.0, 20.0]];
        let m = rasterize_polygon(&sq, 32, 32);
        assert_eq!(m.iter().filter(|&&v| v).count(), 100);
        assert_eq!(m, brute_force_mask(&sq, 32, 32));
        assert!(m[[10, 10]] && m[[19, 19]] && !m[[20, 10]] && !m[[10, 20]]);
    }

    #[test]
    fn collinear_polygon_is_empty() {
        let line = [[1.0, 1.0], [5.0, 5.0], [9.0, 9.0]];
        assert!(rasterize_polygon(&line, 12, 12).iter().all(|&v| !v));
    }

    #[test]
    fn abutting_polygons_do_not_overlap() {
        let left = [[2.0, 1.0], [6.3, 1.0], [5.1, 9.7], [2.0, 9.7]];
        let right = [[6.3, 1.0], [11.0, 1.0], [11.0, 9.7], [5.1, 9.7]];
        let a = rasterize_polygon(&left, 12, 12);
        let b = rasterize_polygon(&right, 12, 12);
        assert!(a.iter().zip(b.iter()).all(|(&x, &y)| !(x && y)));
    }

    #[test]
    fn clipped_at_borders() {
        let sq = [[-5.0, -5.0], [3.0, -5.0], [3.0, 3.0], [-5.0, 3.0]];
        let m = rasterize_polygon(&sq, 8, 8);
        assert_eq!(m.iter().filter(|&&v| v).count(), 9);
    }

    fn simple_polygon() -> impl Strategy<Value = Vec<[f64; 2]>> {
        // star-shaped around a center: sorted angles guarantee a simple polygon;
        // coordinates snapped to 1/8 px keep both predicates exact
        (3usize..10, 4.0f64..28.0, 4.0f64..28.0)
            .prop_flat_map(|(n, cx, cy)| {
                (
                    proptest::collection::vec((0.0f64..1.0, 1.0f64..14.0), n),
                    Just(cx),
                    Just(cy),
                )
            })
            .prop_map(|(mut pts, cx, cy)| {
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                pts.iter()
                    .map(|&(t, r)| {
                        let ang = t * std::f64::consts::TAU;
                        let snap = |v: f64| (v * 8.0).round() / 8.0;
                        [snap(cx + r * ang.cos()), snap(cy + r * ang.sin())]
                    })
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn agrees_with_brute_force(poly in simple_polygon()) {
            prop_assert_eq!(rasterize_polygon(&poly, 32, 32), brute_force_mask(&poly, 32, 32));
        }

        #[test]
        fn point_test_agrees_with_brute_force(poly in simple_polygon(), px in 0.0f64..32.0, py in 0.0f64..32.0) {
            let (px, py) = ((px * 8.0).round() / 8.0, (py * 8.0).round() / 8.0);
            prop_assert_eq!(point_in_polygon(px, py, &poly), brute_force_inside(px, py, &poly));
        }

        #[test]
        fn integer_translation_shifts_mask(poly in simple_polygon(), a in -6i32..6, b in -6i32..6) {
            let moved: Vec<[f64; 2]> = poly.iter().map(|p| [p[0] + a as f64, p[1] + b as f64]).collect();
            let m0 = rasterize_polygon(&poly, 32, 32);
            let m1 = rasterize_polygon(&moved, 32, 32);
            for r in 0..32i32 {
                for c in 0..32i32 {
                    let (sr, sc) = (r - b, c - a);
                    if (0..32).contains(&sr) && (0..32).contains(&sc) {
                        prop_assert_eq!(m1[[r as usize, c as usize]], m0[[sr as usize, sc as usize]]);
                    }
                }
            }
        }
    }
}
