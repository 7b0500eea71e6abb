//! Deterministic synthetic-city generator.
//!
//! Cities are square lat/lon grids of block-group cells with exact land
//! areas, split into a "banked" patch and a geographically separated
//! zero-bank "desert" patch, so ground-truth labels and shares are known
//! analytically. Banks are drawn from a seeded Poisson process over the
//! banked patch. Output files use the exact ingest CSV schemas, plus a
//! ground_truth.json recording the PRNG identifier, seed, and per-city
//! expectations.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{haversine_miles, GeoPoint, MILES_PER_DEGREE_LAT};

/// PRNG identifier written into the ground-truth file.
pub const PRNG_ID: &str = "chacha8";

/// Miles of clear separation between a city's banked and desert patches.
/// Must exceed the 2-mile buffer radius by a comfortable margin so no
/// bank can ever fall inside a desert block group's buffer.
const PATCH_GAP_MILES: f64 = 8.0;

/// Bounded retries for the realized-count guarantee.
const MAX_REROLLS: usize = 50;

/// A planted linear relation: desert population share (percent) as a
/// function of the desert-area poverty rate (percent).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PlantedRelation {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_cities: usize,
    /// Block groups per city = bg_grid_side^2.
    pub bg_grid_side: usize,
    pub bg_cell_miles: f64,
    /// Banks per square mile in the banked patch.
    pub bank_intensity: f64,
    /// Relative intensity change per mile of distance from the banked
    /// patch center (clamped at zero).
    pub intensity_gradient: f64,
    /// Desert block-group fraction range used when no relation is planted.
    pub desert_fraction_range: (f64, f64),
    /// Nondesert poverty-rate range (percent), drawn per city.
    pub pov_rate_range: (f64, f64),
    /// Desert poverty-rate range used when no relation is planted.
    pub desert_pov_rate_range: (f64, f64),
    pub blk_share: f64,
    pub wht_share: f64,
    pub planted: Option<PlantedRelation>,
    /// States cycled across cities; controls the region mix.
    pub region_cycle: Vec<String>,
    /// Re-roll bank draws until every banked centroid has at least 2
    /// banks within 1 mile and 5 within 2 miles. `None` enables this
    /// automatically when the intensity is high enough to make it cheap.
    pub ensure_banked: Option<bool>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            n_cities: 20,
            bg_grid_side: 10,
            bg_cell_miles: 0.5,
            bank_intensity: 10.0,
            intensity_gradient: 0.0,
            desert_fraction_range: (0.10, 0.55),
            pov_rate_range: (5.0, 25.0),
            desert_pov_rate_range: (2.0, 40.0),
            blk_share: 0.20,
            wht_share: 0.60,
            planted: None,
            region_cycle: vec!["NY".into(), "IL".into(), "TX".into(), "CA".into()],
            ensure_banked: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CityTruth {
    pub city_id: String,
    pub n_bg: usize,
    pub n_desert_bg: usize,
    /// Exact when every block group has equal population.
    pub expected_desert_share_pop: f64,
    /// Poverty rate written into the desert block groups, if any exist.
    pub desert_pov_rate: Option<f64>,
    /// Whether realized bank counts were verified (forced labels hold).
    pub labels_forced: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundTruth {
    pub prng: String,
    pub seed: u64,
    pub planted: Option<PlantedRelation>,
    pub cities: Vec<CityTruth>,
}

struct CityPlan {
    city_id: String,
    name: String,
    state: String,
    population: u64,
    n_desert: usize,
    desert_pov_rate: f64,
    nondesert_pov_rate: f64,
    lat0: f64,
    lon0: f64,
}

/// Generate the dataset on disk: banks.csv, block_groups.csv,
/// cities.csv, ground_truth.json. Same seed, same bytes.
pub fn generate(config: &SynthConfig, out_dir: &Path) -> Result<GroundTruth> {
    validate_config(config)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(out_dir.display().to_string(), e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let total_bg = config.bg_grid_side * config.bg_grid_side;

    let mut banks_csv = String::from("branch_id,lon,lat\n");
    let mut bg_csv = String::from(
        "geoid,centroid_lon,centroid_lat,land_area_sqmi,population,poverty_pop,black_pop,white_pop,city_id\n",
    );
    let mut cities_csv = String::from("city_id,name,state,population\n");
    let mut truths = Vec::with_capacity(config.n_cities);

    for i in 0..config.n_cities {
        let plan = plan_city(config, i, total_bg, &mut rng)?;
        let truth = emit_city(config, &plan, total_bg, &mut rng, &mut banks_csv, &mut bg_csv)?;
        cities_csv.push_str(&format!(
            "{},{},{},{}\n",
            plan.city_id, plan.name, plan.state, plan.population
        ));
        truths.push(truth);
    }

    let ground_truth = GroundTruth {
        prng: PRNG_ID.into(),
        seed: config.seed,
        planted: config.planted,
        cities: truths,
    };

    write_file(out_dir, "banks.csv", banks_csv.as_bytes())?;
    write_file(out_dir, "block_groups.csv", bg_csv.as_bytes())?;
    write_file(out_dir, "cities.csv", cities_csv.as_bytes())?;
    let gt_json = serde_json::to_vec_pretty(&ground_truth)
        .map_err(|e| Error::internal(format!("ground truth serialization: {e}")))?;
    write_file(out_dir, "ground_truth.json", &gt_json)?;
    Ok(ground_truth)
}

fn validate_config(config: &SynthConfig) -> Result<()> {
    if config.n_cities == 0 || config.bg_grid_side == 0 {
        return Err(Error::invalid_input("n_cities and bg_grid_side must be positive"));
    }
    if !(config.bg_cell_miles > 0.0) {
        return Err(Error::invalid_input("bg_cell_miles must be positive"));
    }
    if config.bank_intensity < 0.0 {
        return Err(Error::invalid_input("bank_intensity must be non-negative"));
    }
    if config.region_cycle.is_empty() {
        return Err(Error::invalid_input("region_cycle must not be empty"));
    }
    let total_bg = (config.n_cities * config.bg_grid_side * config.bg_grid_side) as f64;
    let cell_area = config.bg_cell_miles * config.bg_cell_miles;
    let expected_points = total_bg + total_bg * cell_area * config.bank_intensity;
    if expected_points > 1e7 {
        return Err(Error::invalid_input(format!(
            "config implies ~{expected_points:.0} points, above the 1e7 limit"
        )));
    }
    Ok(())
}

fn plan_city(
    config: &SynthConfig,
    i: usize,
    total_bg: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CityPlan> {
    let n = config.n_cities;
    let (n_desert, desert_pov_rate) = match config.planted {
        Some(rel) => {
            if rel.slope == 0.0 {
                return Err(Error::invalid_input("planted slope must be nonzero"));
            }
            // Pick the desert block-group count first, then solve the
            // relation for the poverty rate that makes it exact.
            let (d_min, d_max) = (total_bg / 8 + 2, total_bg / 2);
            let d = if n > 1 {
                d_min + i * (d_max - d_min) / (n - 1)
            } else {
                d_min
            };
            let share = 100.0 * d as f64 / total_bg as f64;
            let x = (share - rel.intercept) / rel.slope;
            if !(0.0..=100.0).contains(&x) {
                return Err(Error::invalid_input(format!(
                    "planted relation puts desert poverty rate {x:.1} outside [0, 100]"
                )));
            }
            (d, x)
        }
        None => {
            let (lo, hi) = config.desert_fraction_range;
            let f = if hi > lo { rng.gen_range(lo..hi) } else { lo };
            let d = ((total_bg as f64 * f).round() as usize).min(total_bg);
            let (plo, phi) = config.desert_pov_rate_range;
            let x = if phi > plo { rng.gen_range(plo..phi) } else { plo };
            (d, x)
        }
    };
    let (plo, phi) = config.pov_rate_range;
    let nondesert_pov_rate = if phi > plo { rng.gen_range(plo..phi) } else { plo };

    // Grid of well-separated anchor points at mid latitudes.
    let cols = 24usize;
    let lat0 = 32.0 + (i / cols) as f64 * 1.0;
    let lon0 = -123.0 + (i % cols) as f64 * 1.8;

    // Population mix spans the medium/large boundary deterministically.
    let population = 105_000 + ((i as u64 * 37) % 100) * 3_000;
    let state = config.region_cycle[i % config.region_cycle.len()].clone();
    Ok(CityPlan {
        city_id: format!("C{i:04}"),
        name: format!("Synthville {i}"),
        state,
        population,
        n_desert,
        desert_pov_rate,
        nondesert_pov_rate,
        lat0,
        lon0,
    })
}

fn emit_city(
    config: &SynthConfig,
    plan: &CityPlan,
    total_bg: usize,
    rng: &mut ChaCha8Rng,
    banks_csv: &mut String,
    bg_csv: &mut String,
) -> Result<CityTruth> {
    let n_banked = total_bg - plan.n_desert;
    let cell = config.bg_cell_miles;
    let d_lat = cell / MILES_PER_DEGREE_LAT;
    let d_lon = cell / (MILES_PER_DEGREE_LAT * plan.lat0.to_radians().cos());

    let banked_side = (n_banked as f64).sqrt().ceil() as usize;
    let desert_side = (plan.n_desert as f64).sqrt().ceil().max(1.0) as usize;
    // Desert patch sits east of the banked patch, separated by the gap.
    let desert_lon0 =
        plan.lon0 + banked_side as f64 * d_lon + PATCH_GAP_MILES / (MILES_PER_DEGREE_LAT * plan.lat0.to_radians().cos());

    let banked_centroids: Vec<GeoPoint> = (0..n_banked)
        .map(|k| GeoPoint {
            lon: plan.lon0 + ((k % banked_side) as f64 + 0.5) * d_lon,
            lat: plan.lat0 + ((k / banked_side) as f64 + 0.5) * d_lat,
        })
        .collect();
    let desert_centroids: Vec<GeoPoint> = (0..plan.n_desert)
        .map(|k| GeoPoint {
            lon: desert_lon0 + ((k % desert_side) as f64 + 0.5) * d_lon,
            lat: plan.lat0 + ((k / desert_side) as f64 + 0.5) * d_lat,
        })
        .collect();

    // Bank draw: Poisson per banked cell, intensity shaped by distance
    // from the patch center.
    let patch_center = GeoPoint {
        lon: plan.lon0 + banked_side as f64 * d_lon / 2.0,
        lat: plan.lat0 + (n_banked as f64 / banked_side.max(1) as f64).ceil() * d_lat / 2.0,
    };
    let cell_area = cell * cell;
    let ensure = config
        .ensure_banked
        .unwrap_or(config.bank_intensity * std::f64::consts::PI >= 10.0);

    let mut banks: Vec<GeoPoint> = Vec::new();
    let mut attempts = 0;
    loop {
        attempts += 1;
        banks.clear();
        for (k, c) in banked_centroids.iter().enumerate() {
            let dist = haversine_miles(*c, patch_center);
            let lambda =
                (config.bank_intensity * (1.0 + config.intensity_gradient * dist)).max(0.0);
            let mean = lambda * cell_area;
            let count = if mean > 0.0 {
                Poisson::new(mean)
                    .map_err(|e| Error::internal(format!("poisson: {e}")))?
                    .sample(rng) as usize
            } else {
                0
            };
            let cell_lon0 = plan.lon0 + (k % banked_side) as f64 * d_lon;
            let cell_lat0 = plan.lat0 + (k / banked_side) as f64 * d_lat;
            for _ in 0..count {
                banks.push(GeoPoint {
                    lon: cell_lon0 + rng.gen::<f64>() * d_lon,
                    lat: cell_lat0 + rng.gen::<f64>() * d_lat,
                });
            }
        }
        if !ensure || banked_ok(&banked_centroids, &banks) {
            break;
        }
        if attempts >= MAX_REROLLS {
            return Err(Error::invalid_input(format!(
                "city {}: could not realize >=2 banks within 1 mile of every banked centroid after {MAX_REROLLS} draws; raise bank_intensity",
                plan.city_id
            )));
        }
    }

    for (j, b) in banks.iter().enumerate() {
        banks_csv.push_str(&format!("B{}-{j:06},{},{}\n", plan.city_id, b.lon, b.lat));
    }

    let city_num: usize = plan.city_id[1..].parse().unwrap_or(0);
    let pop_per_bg: u64 = 1000;
    let mut emit_bg = |idx: usize, c: &GeoPoint, pov_rate: f64, rng: &mut ChaCha8Rng| {
        let pov = ((pov_rate / 100.0) * pop_per_bg as f64).round() as u64;
        let blk = ((config.blk_share + rng.gen_range(-0.02..0.02)).clamp(0.0, 1.0)
            * pop_per_bg as f64)
            .round() as u64;
        let wht = ((config.wht_share + rng.gen_range(-0.02..0.02)).clamp(0.0, 1.0)
            * pop_per_bg as f64)
            .round() as u64;
        bg_csv.push_str(&format!(
            "{:05}{:07},{},{},{},{},{},{},{},{}\n",
            city_num,
            idx,
            c.lon,
            c.lat,
            cell_area,
            pop_per_bg,
            pov.min(pop_per_bg),
            blk.min(pop_per_bg),
            wht.min(pop_per_bg),
            plan.city_id
        ));
    };

    for (k, c) in banked_centroids.iter().enumerate() {
        emit_bg(k, c, plan.nondesert_pov_rate, rng);
    }
    for (k, c) in desert_centroids.iter().enumerate() {
        emit_bg(n_banked + k, c, plan.desert_pov_rate, rng);
    }

    Ok(CityTruth {
        city_id: plan.city_id.clone(),
        n_bg: total_bg,
        n_desert_bg: plan.n_desert,
        expected_desert_share_pop: 100.0 * plan.n_desert as f64 / total_bg as f64,
        desert_pov_rate: (plan.n_desert > 0).then_some(plan.desert_pov_rate),
        labels_forced: ensure || config.bank_intensity == 0.0,
    })
}

/// Realized-count guarantee: every banked centroid must already be a
/// clear non-desert (>= 2 banks within 1 mile, >= 5 within 2 miles).
fn banked_ok(centroids: &[GeoPoint], banks: &[GeoPoint]) -> bool {
    centroids.iter().all(|c| {
        let mut within_1 = 0;
        let mut within_2 = 0;
        for b in banks {
            let d = haversine_miles(*c, *b);
            if d <= 1.0 {
                within_1 += 1;
            }
            if d <= 2.0 {
                within_2 += 1;
            }
            if within_1 >= 2 && within_2 >= 5 {
                return true;
            }
        }
        false
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    let mut f =
        std::fs::File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))
}
