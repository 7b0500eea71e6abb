//! The banking-desert criterion applied to every block group.
//!
//! A block group is a desert if it has `max_1mi` or fewer banks within
//! one mile OR `max_2mi` or fewer within two miles. The thresholds are
//! integer comparisons on counts, never floating-point densities, so
//! classification is bit-exact. At the defaults (1, 4) both conditions
//! correspond to a density of 1/pi ~ 0.318 banks per square mile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::BankIndex;
use crate::ingest::BlockGroup;

/// Desert thresholds and the radii they are evaluated at.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DesertCriterion {
    pub max_1mi: u32,
    pub max_2mi: u32,
    pub radius_1mi: f64,
    pub radius_2mi: f64,
}

impl Default for DesertCriterion {
    fn default() -> Self {
        DesertCriterion {
            max_1mi: 1,
            max_2mi: 4,
            radius_1mi: 1.0,
            radius_2mi: 2.0,
        }
    }
}

/// Bank counts in the two buffers around one block-group centroid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BankCounts {
    pub geoid: String,
    pub count_1mi: u32,
    pub count_2mi: u32,
}

/// Classification result with the implied densities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DesertLabel {
    pub geoid: String,
    pub is_desert: bool,
    /// count_1mi / pi (banks per square mile in the 1-mile circle).
    pub density_1mi: f64,
    /// count_2mi / (4 pi).
    pub density_2mi: f64,
}

/// Count banks in the 1- and 2-mile buffers around every block-group
/// centroid. Counts are exact per the index contract.
pub fn compute_counts(
    block_groups: &[BlockGroup],
    index: &BankIndex,
    criterion: &DesertCriterion,
) -> Result<Vec<BankCounts>> {
    block_groups
        .iter()
        .map(|bg| {
            let count_1mi = index.count_within(bg.centroid, criterion.radius_1mi)? as u32;
            let count_2mi = index.count_within(bg.centroid, criterion.radius_2mi)? as u32;
            Ok(BankCounts {
                geoid: bg.geoid.clone(),
                count_1mi,
                count_2mi,
            })
        })
        .collect()
}

/// The desert predicate. Errors if the counts violate the containment
/// invariant (the 2-mile circle is a superset of the 1-mile circle).
pub fn is_desert(counts: &BankCounts, criterion: &DesertCriterion) -> Result<bool> {
    if counts.count_2mi < counts.count_1mi {
        return Err(Error::internal(format!(
            "block group {}: count_2mi {} < count_1mi {}",
            counts.geoid, counts.count_2mi, counts.count_1mi
        )));
    }
    Ok(counts.count_1mi <= criterion.max_1mi || counts.count_2mi <= criterion.max_2mi)
}

/// Classification with densities attached.
pub fn label(counts: &BankCounts, criterion: &DesertCriterion) -> Result<DesertLabel> {
    let is_desert = is_desert(counts, criterion)?;
    Ok(DesertLabel {
        geoid: counts.geoid.clone(),
        is_desert,
        density_1mi: counts.count_1mi as f64 / std::f64::consts::PI,
        density_2mi: counts.count_2mi as f64 / (4.0 * std::f64::consts::PI),
    })
}

/// Classify every block group against an index of the national bank set.
pub fn classify_all(
    block_groups: &[BlockGroup],
    index: &BankIndex,
    criterion: &DesertCriterion,
) -> Result<(Vec<BankCounts>, Vec<DesertLabel>)> {
    let counts = compute_counts(block_groups, index, criterion)?;
    let labels = counts
        .iter()
        .map(|c| label(c, criterion))
        .collect::<Result<Vec<_>>>()?;
    Ok((counts, labels))
}
