//! Even-odd point-in-polygon containment for city boundary assignment.

use crate::geo::GeoPoint;

/// Even-odd (crossing number) test against a single ring.
///
/// Rings may be open or closed (a repeated last vertex is harmless).
/// Treats coordinates as planar lon/lat, which matches how census Place
/// boundaries are distributed and is exact for the polygon sizes in play.
pub fn point_in_ring(pt: GeoPoint, ring: &[[f64; 2]]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let (x, y) = (pt.lon, pt.lat);
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (ring[i][0], ring[i][1]);
        let (xj, yj) = (ring[j][0], ring[j][1]);
        if (yi > y) != (yj > y) {
            let x_cross = xi + (y - yi) / (yj - yi) * (xj - xi);
            if x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Even-odd containment across all rings of a polygon. Holes fall out of
/// the parity count without being distinguished from shells.
pub fn point_in_polygon(pt: GeoPoint, rings: &[Vec<[f64; 2]>]) -> bool {
    let mut crossings_odd = false;
    for ring in rings {
        if point_in_ring(pt, ring) {
            crossings_odd = !crossings_odd;
        }
    }
    crossings_odd
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(lon: f64, lat: f64) -> GeoPoint {
        GeoPoint::new(lon, lat).unwrap()
    }

    fn unit_square() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    }

    #[test]
    fn square_contains_interior_point() {
        assert!(point_in_ring(p(0.5, 0.5), &unit_square()));
    }

    #[test]
    fn square_excludes_exterior_point() {
        assert!(!point_in_ring(p(1.5, 0.5), &unit_square()));
        assert!(!point_in_ring(p(0.5, -0.5), &unit_square()));
    }

    #[test]
    fn hole_is_outside() {
        let shell = vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]];
        let hole = vec![[1.0, 1.0], [3.0, 1.0], [3.0, 3.0], [1.0, 3.0]];
        let rings = vec![shell, hole];
        assert!(point_in_polygon(p(0.5, 0.5), &rings));
        assert!(!point_in_polygon(p(2.0, 2.0), &rings));
    }

    #[test]
    fn degenerate_ring_contains_nothing() {
        assert!(!point_in_ring(p(0.0, 0.0), &[[0.0, 0.0], [1.0, 1.0]]));
    }

    /// Half-plane oracle for convex polygons: a point is inside iff it is
    /// on the interior side of every edge.
    fn convex_contains(pt: GeoPoint, verts: &[[f64; 2]]) -> bool {
        let n = verts.len();
        let mut sign = 0i8;
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            let cross = (b[0] - a[0]) * (pt.lat - a[1]) - (b[1] - a[1]) * (pt.lon - a[0]);
            if cross == 0.0 {
                continue;
            }
            let s = if cross > 0.0 { 1 } else { -1 };
            if sign == 0 {
                sign = s;
            } else if s != sign {
                return false;
            }
        }
        true
    }

    #[test]
    fn random_points_match_halfplane_oracle_on_convex_polygons() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        // Regular polygons of varying vertex count, counterclockwise.
        for sides in [3usize, 4, 5, 8, 12] {
            let verts: Vec<[f64; 2]> = (0..sides)
                .map(|k| {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
                    [th.cos(), th.sin()]
                })
                .collect();
            for _ in 0..100 {
                let pt = p(rng.gen_range(-1.5f64..1.5), rng.gen_range(-1.5f64..1.5));
                assert_eq!(
                    point_in_ring(pt, &verts),
                    convex_contains(pt, &verts),
                    "sides={sides} pt=({}, {})",
                    pt.lon,
                    pt.lat
                );
            }
        }
    }
}
