//! Per-city aggregation of block-group labels and demographics into the
//! measures the cross-city analysis consumes.
//!
//! Rates divide by the area's own population; concentrations divide by
//! the citywide count of the same variable. A side with a zero
//! denominator has no rate: it is represented as an absent value, never
//! 0, and such cities drop out of desert-vs-nondesert comparisons while
//! staying in the desert-share outputs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::classify::{BankCounts, DesertLabel};
use crate::error::{Error, Result};
use crate::ingest::{BlockGroup, Dataset, SizeClass};
use crate::region::Region;
use crate::stats::quantile;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AreaType {
    Desert,
    NonDesert,
}

impl AreaType {
    pub fn name(self) -> &'static str {
        match self {
            AreaType::Desert => "Desert",
            AreaType::NonDesert => "NonDesert",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            AreaType::Desert => "desert",
            AreaType::NonDesert => "nondesert",
        }
    }
}

/// The six analysis variables, named as in the published tables.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variable {
    PercPov,
    PercWht,
    PercBlk,
    PercPovC,
    PercWhtC,
    PercBlkC,
}

impl Variable {
    pub const ALL: [Variable; 6] = [
        Variable::PercPov,
        Variable::PercWht,
        Variable::PercBlk,
        Variable::PercPovC,
        Variable::PercWhtC,
        Variable::PercBlkC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::PercPov => "PercPov",
            Variable::PercWht => "PercWht",
            Variable::PercBlk => "PercBlk",
            Variable::PercPovC => "PercPovC",
            Variable::PercWhtC => "PercWhtC",
            Variable::PercBlkC => "PercBlkC",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Variable::PercPov => "percpov",
            Variable::PercWht => "percwht",
            Variable::PercBlk => "percblk",
            Variable::PercPovC => "percpovc",
            Variable::PercWhtC => "percwhtc",
            Variable::PercBlkC => "percblkc",
        }
    }

    /// Row label used for the desert-side regressors in the fit table.
    pub fn desert_label(self) -> &'static str {
        match self {
            Variable::PercPov => "despercpov",
            Variable::PercWht => "despercwht",
            Variable::PercBlk => "despercblk",
            Variable::PercPovC => "despercpovc",
            Variable::PercWhtC => "despercwhtc",
            Variable::PercBlkC => "despercblkc",
        }
    }

    pub fn of(self, profile: &AreaProfile) -> Option<f64> {
        match self {
            Variable::PercPov => profile.perc_pov,
            Variable::PercWht => profile.perc_wht,
            Variable::PercBlk => profile.perc_blk,
            Variable::PercPovC => profile.perc_pov_c,
            Variable::PercWhtC => profile.perc_wht_c,
            Variable::PercBlkC => profile.perc_blk_c,
        }
    }
}

/// Aggregate demographics for one side (desert or non-desert) of a city.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AreaProfile {
    pub area_type: AreaType,
    pub population: u64,
    pub poverty_pop: u64,
    pub black_pop: u64,
    pub white_pop: u64,
    pub land_area_sqmi: f64,
    pub n_block_groups: usize,
    pub perc_pov: Option<f64>,
    pub perc_blk: Option<f64>,
    pub perc_wht: Option<f64>,
    pub perc_pov_c: Option<f64>,
    pub perc_blk_c: Option<f64>,
    pub perc_wht_c: Option<f64>,
}

fn rate(count: u64, denom: u64) -> Option<f64> {
    if denom == 0 {
        None
    } else {
        Some(100.0 * count as f64 / denom as f64)
    }
}

impl AreaProfile {
    fn build(
        area_type: AreaType,
        groups: &[&BlockGroup],
        city_pov: u64,
        city_blk: u64,
        city_wht: u64,
    ) -> AreaProfile {
        let population: u64 = groups.iter().map(|g| g.population).sum();
        let poverty_pop: u64 = groups.iter().map(|g| g.poverty_pop).sum();
        let black_pop: u64 = groups.iter().map(|g| g.black_pop).sum();
        let white_pop: u64 = groups.iter().map(|g| g.white_pop).sum();
        let land_area_sqmi: f64 = groups.iter().map(|g| g.land_area_sqmi).sum();
        AreaProfile {
            area_type,
            population,
            poverty_pop,
            black_pop,
            white_pop,
            land_area_sqmi,
            n_block_groups: groups.len(),
            perc_pov: rate(poverty_pop, population),
            perc_blk: rate(black_pop, population),
            perc_wht: rate(white_pop, population),
            perc_pov_c: rate(poverty_pop, city_pov),
            perc_blk_c: rate(black_pop, city_blk),
            perc_wht_c: rate(white_pop, city_wht),
        }
    }
}

/// Bank-count quantiles at the 5/10/50/90% levels for one radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BankCountQuantiles {
    pub q05: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

impl BankCountQuantiles {
    fn compute(counts: &[f64]) -> Result<BankCountQuantiles> {
        Ok(BankCountQuantiles {
            q05: quantile(counts, 0.05)?,
            q10: quantile(counts, 0.10)?,
            q50: quantile(counts, 0.50)?,
            q90: quantile(counts, 0.90)?,
        })
    }
}

/// Everything the cross-city analysis needs about one city.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CityProfile {
    pub city_id: String,
    pub name: String,
    pub state: String,
    /// Census Places population: used for size ranking, never for shares.
    pub population: u64,
    pub size_class: SizeClass,
    pub region: Region,
    pub quantiles_1mi: BankCountQuantiles,
    pub quantiles_2mi: BankCountQuantiles,
    pub desert_share_pop: f64,
    pub desert_share_area: f64,
    pub desert_share_bg: f64,
    pub desert: AreaProfile,
    pub nondesert: AreaProfile,
    /// desert.perc_pov - nondesert.perc_pov, when both sides are defined.
    pub pov_diff: Option<f64>,
    pub pov_conc_diff: Option<f64>,
}

impl CityProfile {
    /// Citywide poverty rate over the city's block groups.
    pub fn citywide_perc_pov(&self) -> Option<f64> {
        rate(
            self.desert.poverty_pop + self.nondesert.poverty_pop,
            self.desert.population + self.nondesert.population,
        )
    }
}

/// Quantiles of a city's per-block-group bank counts for one radius.
pub fn bank_count_quantiles(counts: &[u32]) -> Result<BankCountQuantiles> {
    let values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    BankCountQuantiles::compute(&values)
}

/// Desert shares of population, land area, and block-group count, as
/// percentages of the city totals.
pub fn desert_shares(
    desert: &AreaProfile,
    nondesert: &AreaProfile,
) -> Result<(f64, f64, f64)> {
    let pop = desert.population + nondesert.population;
    if pop == 0 {
        return Err(Error::validation("city block-group population is zero"));
    }
    let area = desert.land_area_sqmi + nondesert.land_area_sqmi;
    let n_bg = desert.n_block_groups + nondesert.n_block_groups;
    Ok((
        100.0 * desert.population as f64 / pop as f64,
        100.0 * desert.land_area_sqmi / area,
        100.0 * desert.n_block_groups as f64 / n_bg as f64,
    ))
}

/// Desert-minus-nondesert poverty differentials; absent when either
/// side's rate is undefined.
pub fn poverty_differential(profile: &CityProfile) -> (Option<f64>, Option<f64>) {
    let diff = match (profile.desert.perc_pov, profile.nondesert.perc_pov) {
        (Some(d), Some(n)) => Some(d - n),
        _ => None,
    };
    let conc_diff = match (profile.desert.perc_pov_c, profile.nondesert.perc_pov_c) {
        (Some(d), Some(n)) => Some(d - n),
        _ => None,
    };
    (diff, conc_diff)
}

/// Aggregate every labeled city of the dataset into a `CityProfile`.
///
/// Cities whose block groups have zero total population are flagged in
/// the returned notices and excluded. Output order is city_id ascending
/// so concurrent upstream processing cannot change the result.
pub fn build_city_profiles(
    dataset: &Dataset,
    counts: &[BankCounts],
    labels: &[DesertLabel],
) -> Result<(Vec<CityProfile>, Vec<String>)> {
    let count_by_geoid: HashMap<&str, &BankCounts> =
        counts.iter().map(|c| (c.geoid.as_str(), c)).collect();
    let label_by_geoid: HashMap<&str, &DesertLabel> =
        labels.iter().map(|l| (l.geoid.as_str(), l)).collect();

    let mut by_city: HashMap<&str, Vec<&BlockGroup>> = HashMap::new();
    for bg in &dataset.block_groups {
        if let Some(city_id) = &bg.city_id {
            by_city.entry(city_id.as_str()).or_default().push(bg);
        }
    }

    let mut cities: Vec<&crate::ingest::City> = dataset.cities.iter().collect();
    cities.sort_by(|a, b| a.city_id.cmp(&b.city_id));

    let mut profiles = Vec::with_capacity(cities.len());
    let mut notices = Vec::new();
    for city in cities {
        let groups = match by_city.get(city.city_id.as_str()) {
            Some(g) => g,
            None => {
                notices.push(format!("city {} has no block groups", city.city_id));
                continue;
            }
        };

        let mut c1 = Vec::with_capacity(groups.len());
        let mut c2 = Vec::with_capacity(groups.len());
        let mut desert_groups = Vec::new();
        let mut nondesert_groups = Vec::new();
        for bg in groups {
            let counts = count_by_geoid.get(bg.geoid.as_str()).ok_or_else(|| {
                Error::internal(format!("block group {} has no bank counts", bg.geoid))
            })?;
            let label = label_by_geoid.get(bg.geoid.as_str()).ok_or_else(|| {
                Error::internal(format!("block group {} is unlabeled", bg.geoid))
            })?;
            c1.push(counts.count_1mi as f64);
            c2.push(counts.count_2mi as f64);
            if label.is_desert {
                desert_groups.push(*bg);
            } else {
                nondesert_groups.push(*bg);
            }
        }

        let city_pov: u64 = groups.iter().map(|g| g.poverty_pop).sum();
        let city_blk: u64 = groups.iter().map(|g| g.black_pop).sum();
        let city_wht: u64 = groups.iter().map(|g| g.white_pop).sum();

        let desert = AreaProfile::build(AreaType::Desert, &desert_groups, city_pov, city_blk, city_wht);
        let nondesert =
            AreaProfile::build(AreaType::NonDesert, &nondesert_groups, city_pov, city_blk, city_wht);

        let (share_pop, share_area, share_bg) = match desert_shares(&desert, &nondesert) {
            Ok(shares) => shares,
            Err(_) => {
                notices.push(format!(
                    "city {} ({}) has zero block-group population; excluded from sample",
                    city.city_id, city.name
                ));
                continue;
            }
        };

        let mut profile = CityProfile {
            city_id: city.city_id.clone(),
            name: city.name.clone(),
            state: city.state.clone(),
            population: city.population,
            size_class: city.size_class,
            region: city.region,
            quantiles_1mi: BankCountQuantiles::compute(&c1)?,
            quantiles_2mi: BankCountQuantiles::compute(&c2)?,
            desert_share_pop: share_pop,
            desert_share_area: share_area,
            desert_share_bg: share_bg,
            desert,
            nondesert,
            pov_diff: None,
            pov_conc_diff: None,
        };
        let (diff, conc_diff) = poverty_differential(&profile);
        profile.pov_diff = diff;
        profile.pov_conc_diff = conc_diff;
        profiles.push(profile);
    }
    Ok((profiles, notices))
}
