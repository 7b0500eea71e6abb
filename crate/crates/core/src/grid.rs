//! Uniform lat/lon grid over the national bank point set.
//!
//! Queries are exact: the grid only prunes candidates by a bounding box
//! that is guaranteed to contain the query circle; the final filter is
//! the haversine distance itself. The index is immutable after build,
//! so concurrent read-only queries are safe.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geo::{haversine_miles, GeoPoint, EARTH_RADIUS_MILES, MILES_PER_DEGREE_LAT};

/// Default bucket height in degrees of latitude (~3.45 mi), so a 2-mile
/// query touches a window of at most a few cells at US bank densities.
pub const DEFAULT_CELL_SIZE_DEG: f64 = 0.05;

/// Safety margin applied to bounding-box half-widths so float rounding
/// can never exclude a point that lies exactly on the radius.
const BBOX_MARGIN: f64 = 1.0 + 1e-9;

/// Grid-bucketed point index answering exact count-within-radius queries.
#[derive(Debug)]
pub struct BankIndex {
    cell_size: f64,
    buckets: HashMap<(i32, i32), Vec<u32>>,
    points: Vec<GeoPoint>,
    ids: Vec<String>,
}

impl BankIndex {
    /// Build the index. Deterministic: same input order yields identical
    /// bucket contents, and query results do not depend on order at all.
    pub fn build(points: &[(String, GeoPoint)], cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0) {
            return Err(Error::invalid_input(format!(
                "cell_size must be positive, got {cell_size}"
            )));
        }
        let mut index = BankIndex {
            cell_size,
            buckets: HashMap::new(),
            points: Vec::with_capacity(points.len()),
            ids: Vec::with_capacity(points.len()),
        };
        for (id, p) in points {
            if !p.lon.is_finite() || !p.lat.is_finite() {
                return Err(Error::invalid_input(format!(
                    "point {id} has non-finite coordinates"
                )));
            }
            let key = index.cell_of(*p);
            let slot = index.points.len() as u32;
            index.buckets.entry(key).or_default().push(slot);
            index.points.push(*p);
            index.ids.push(id.clone());
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// Total number of bucketed entries; equals `len()` by construction.
    pub fn bucket_total(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }

    fn cell_of(&self, p: GeoPoint) -> (i32, i32) {
        (
            (p.lon / self.cell_size).floor() as i32,
            (p.lat / self.cell_size).floor() as i32,
        )
    }

    /// Exact count of points within `radius_miles` of `center`
    /// (boundary inclusive).
    pub fn count_within(&self, center: GeoPoint, radius_miles: f64) -> Result<usize> {
        if !(radius_miles > 0.0) {
            return Err(Error::invalid_input(format!(
                "radius must be positive, got {radius_miles}"
            )));
        }
        if self.points.is_empty() {
            return Ok(0);
        }

        let d_lat = radius_miles / MILES_PER_DEGREE_LAT * BBOX_MARGIN;
        let lat_lo = (center.lat - d_lat).max(-90.0);
        let lat_hi = (center.lat + d_lat).min(90.0);

        let d_lon = lon_half_width_deg(center.lat, lat_lo, lat_hi, radius_miles);

        let y0 = (lat_lo / self.cell_size).floor() as i32;
        let y1 = (lat_hi / self.cell_size).floor() as i32;

        let mut count = 0usize;
        for (lon_lo, lon_hi) in lon_intervals(center.lon, d_lon) {
            let x0 = (lon_lo / self.cell_size).floor() as i32;
            let x1 = (lon_hi / self.cell_size).floor() as i32;
            for x in x0..=x1 {
                for y in y0..=y1 {
                    if let Some(bucket) = self.buckets.get(&(x, y)) {
                        for &slot in bucket {
                            if haversine_miles(center, self.points[slot as usize]) <= radius_miles
                            {
                                count += 1;
                            }
                        }
                    }
                }
            }
        }
        Ok(count)
    }
}

/// Conservative longitude half-width (degrees) of the bounding box.
///
/// From the haversine identity, any point within distance r satisfies
/// |sin(dlon/2)| <= sin(r/2R) / sqrt(cos(lat_c) * cos(lat_p)), so using
/// the largest |lat| in the latitude band gives an upper bound on dlon.
/// Degenerates to 180 near the poles, which just means a full scan of
/// the (clamped) band.
fn lon_half_width_deg(center_lat: f64, lat_lo: f64, lat_hi: f64, radius_miles: f64) -> f64 {
    let band_lat = lat_lo.abs().max(lat_hi.abs()).to_radians();
    let half_chord = (radius_miles / (2.0 * EARTH_RADIUS_MILES)).sin();
    let denom = (center_lat.to_radians().cos() * band_lat.cos()).max(0.0).sqrt();
    if denom <= 1e-9 {
        return 180.0;
    }
    let s = (half_chord / denom).min(1.0);
    ((2.0 * s.asin()).to_degrees() * BBOX_MARGIN).min(180.0)
}

/// Longitude interval(s) covering [center - d, center + d], split at the
/// antimeridian so cell ranges stay within stored coordinates.
fn lon_intervals(center_lon: f64, d_lon: f64) -> Vec<(f64, f64)> {
    if d_lon >= 180.0 {
        return vec![(-180.0, 180.0)];
    }
    let lo = center_lon - d_lon;
    let hi = center_lon + d_lon;
    if lo < -180.0 {
        vec![(lo + 360.0, 180.0), (-180.0, hi)]
    } else if hi > 180.0 {
        vec![(lo, 180.0), (-180.0, hi - 360.0)]
    } else {
        vec![(lo, hi)]
    }
}
