//! Geodesic primitives: points, great-circle distance in miles, and the
//! radius-membership predicate every other module relies on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in statute miles.
pub const EARTH_RADIUS_MILES: f64 = 3958.8;

/// Miles per degree of latitude on the reference sphere (~69.09).
pub const MILES_PER_DEGREE_LAT: f64 = EARTH_RADIUS_MILES * std::f64::consts::PI / 180.0;

/// A geographic coordinate: degrees east and degrees north.
///
/// Construction normalizes longitude into [-180, 180] and rejects
/// non-finite values and out-of-range latitudes, so downstream code can
/// treat every `GeoPoint` as valid.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lon: f64,
    pub lat: f64,
}

impl GeoPoint {
    pub fn new(lon: f64, lat: f64) -> Result<Self> {
        if !lon.is_finite() || !lat.is_finite() {
            return Err(Error::invalid_input(format!(
                "non-finite coordinate ({lon}, {lat})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::invalid_input(format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        let mut lon = lon;
        while lon > 180.0 {
            lon -= 360.0;
        }
        while lon < -180.0 {
            lon += 360.0;
        }
        Ok(GeoPoint { lon, lat })
    }
}

/// Great-circle distance between two points on the mean-radius sphere.
///
/// Symmetric, non-negative, and exactly zero for identical coordinates.
pub fn haversine_miles(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let d_lat = (b.lat - a.lat).to_radians();
    let d_lon = (b.lon - a.lon).to_radians();

    let h = (d_lat * 0.5).sin().powi(2) + lat1.cos() * lat2.cos() * (d_lon * 0.5).sin().powi(2);
    2.0 * EARTH_RADIUS_MILES * h.sqrt().min(1.0).asin()
}

/// Boundary-inclusive radius membership: distance == radius counts as
/// inside, so tie behavior is deterministic.
pub fn within_radius(center: GeoPoint, candidate: GeoPoint, radius_miles: f64) -> Result<bool> {
    if !(radius_miles > 0.0) {
        return Err(Error::invalid_input(format!(
            "radius must be positive, got {radius_miles}"
        )));
    }
    Ok(haversine_miles(center, candidate) <= radius_miles)
}
