//! Toolkit for locating under-banked neighborhoods in city block-group
//! data and comparing their socioeconomic profiles across cities.
//!
//! Pipeline: ingest CSV/GeoJSON inputs, count bank branches around each
//! block-group centroid with an exact grid index, apply the desert
//! criterion, aggregate per-city profiles, run the cross-city statistics,
//! and emit every table and figure dataset with a checksummed manifest.
//! A seeded synthetic generator produces ground-truth fixtures for
//! end-to-end validation.

pub mod citystats;
pub mod classify;
pub mod error;
pub mod geo;
pub mod grid;
pub mod ingest;
pub mod poly;
pub mod region;
pub mod report;
pub mod stats;
pub mod synth;

pub use citystats::{AreaProfile, AreaType, BankCountQuantiles, CityProfile, Variable};
pub use classify::{BankCounts, DesertCriterion, DesertLabel};
pub use error::{Error, Result};
pub use geo::{haversine_miles, GeoPoint, EARTH_RADIUS_MILES};
pub use grid::{BankIndex, DEFAULT_CELL_SIZE_DEG};
pub use ingest::{BankBranch, BlockGroup, City, CityBoundaries, Dataset, LoadReport, SizeClass};
pub use region::Region;
pub use report::{Manifest, ManifestEntry, ReportBundle};
pub use stats::{TheilSenFit, DEFAULT_BOOTSTRAP_REPS};
pub use synth::{GroundTruth, SynthConfig};
