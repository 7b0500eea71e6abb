//! Census Bureau four-region mapping for the lower 48 states plus DC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    Northeast,
    Midwest,
    South,
    West,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Northeast => "Northeast",
            Region::Midwest => "Midwest",
            Region::South => "South",
            Region::West => "West",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const NORTHEAST: [&str; 9] = ["CT", "ME", "MA", "NH", "NJ", "NY", "PA", "RI", "VT"];
pub const MIDWEST: [&str; 12] = [
    "IL", "IN", "IA", "KS", "MI", "MN", "MO", "NE", "ND", "OH", "SD", "WI",
];
pub const SOUTH: [&str; 17] = [
    "AL", "AR", "DC", "DE", "FL", "GA", "KY", "LA", "MD", "MS", "NC", "OK", "SC", "TN", "TX",
    "VA", "WV",
];
pub const WEST: [&str; 11] = [
    "AZ", "CA", "CO", "ID", "MT", "NV", "NM", "OR", "UT", "WA", "WY",
];

/// Census region of a USPS state code (lower 48 + DC).
pub fn assign_region(state: &str) -> Result<Region> {
    let s = state.trim().to_ascii_uppercase();
    if NORTHEAST.contains(&s.as_str()) {
        Ok(Region::Northeast)
    } else if MIDWEST.contains(&s.as_str()) {
        Ok(Region::Midwest)
    } else if SOUTH.contains(&s.as_str()) {
        Ok(Region::South)
    } else if WEST.contains(&s.as_str()) {
        Ok(Region::West)
    } else {
        Err(Error::validation(format!("unknown state code {state:?}")))
    }
}
