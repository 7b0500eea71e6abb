//! Acceptance suite. Each test exercises one release criterion and
//! prints a single PASS line on success (run with --nocapture to see
//! them); failures panic with detail. Criterion 7 needs real FDIC/ACS
//! extracts and is skipped unless the data is supplied via env var.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use bankdesert::citystats::{build_city_profiles, Variable};
use bankdesert::classify::{classify_all, is_desert, label, BankCounts};
use bankdesert::geo::{haversine_miles, GeoPoint};
use bankdesert::grid::BankIndex;
use bankdesert::ingest::{
    assign_cities, filter_city_sample, load_banks, load_block_groups, load_cities, BankColumns,
    BlockGroupColumns, CityColumns,
};
use bankdesert::report::emit_report;
use bankdesert::stats::{midranks, pearson, quantile, rolling_quantiles, theil_sen_point};
use bankdesert::synth::{generate, PlantedRelation, SynthConfig};
use bankdesert::{DesertCriterion, DEFAULT_CELL_SIZE_DEG};

fn random_points(rng: &mut ChaCha8Rng, n: usize, lon: (f64, f64), lat: (f64, f64)) -> Vec<GeoPoint> {
    (0..n)
        .map(|_| GeoPoint::new(rng.gen_range(lon.0..lon.1), rng.gen_range(lat.0..lat.1)).unwrap())
        .collect()
}

/// Criterion 1: exact counts vs the brute-force oracle at scale, and
/// the indexed path under the runtime budget.
#[test]
fn acceptance_1_spatial_join_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    // Dense metro-sized window so 1- and 2-mile buffers are non-trivial.
    let lon = (-88.0, -87.4);
    let lat = (41.6, 42.1);
    let banks: Vec<(String, GeoPoint)> = random_points(&mut rng, 20_000, lon, lat)
        .into_iter()
        .enumerate()
        .map(|(i, p)| (format!("b{i}"), p))
        .collect();
    let centroids = random_points(&mut rng, 50_000, lon, lat);
    let index = BankIndex::build(&banks, DEFAULT_CELL_SIZE_DEG).unwrap();
    for (i, c) in centroids.iter().enumerate() {
        for r in [1.0, 2.0] {
            let got = index.count_within(*c, r).unwrap();
            let brute = banks
                .iter()
                .filter(|(_, p)| haversine_miles(*c, *p) <= r)
                .count();
            assert_eq!(got, brute, "centroid {i} radius {r}");
        }
    }

    // Timed run at full scale, indexed path only.
    let banks80: Vec<(String, GeoPoint)> = random_points(&mut rng, 80_000, lon, lat)
        .into_iter()
        .enumerate()
        .map(|(i, p)| (format!("c{i}"), p))
        .collect();
    let centroids200 = random_points(&mut rng, 200_000, lon, lat);
    let index80 = BankIndex::build(&banks80, DEFAULT_CELL_SIZE_DEG).unwrap();
    let start = Instant::now();
    let mut total = 0usize;
    for c in &centroids200 {
        total += index80.count_within(*c, 1.0).unwrap();
        total += index80.count_within(*c, 2.0).unwrap();
    }
    let elapsed = start.elapsed();
    assert!(total > 0);
    assert!(
        elapsed.as_secs_f64() <= 60.0,
        "indexed 80k x 200k took {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 1 (spatial-join exactness, 80k x 200k in {:.1}s): PASS",
        elapsed.as_secs_f64()
    );
}

/// Criterion 2: desert truth table on [0, 20]^2 and density agreement.
#[test]
fn acceptance_2_desert_truth_table() {
    let crit = DesertCriterion::default();
    let inv_pi = 1.0 / std::f64::consts::PI;
    assert!((inv_pi - 0.3183).abs() < 5e-5);
    for c1 in 0u32..=20 {
        for c2 in c1..=20 {
            let counts = BankCounts {
                geoid: "g".into(),
                count_1mi: c1,
                count_2mi: c2,
            };
            let expected = c1 <= 1 || c2 <= 4;
            assert_eq!(is_desert(&counts, &crit).unwrap(), expected, "({c1}, {c2})");
            let l = label(&counts, &crit).unwrap();
            let by_density = l.density_1mi <= inv_pi + 1e-12 || l.density_2mi <= inv_pi + 1e-12;
            assert_eq!(l.is_desert, by_density, "density ({c1}, {c2})");
        }
    }
    println!("ACCEPTANCE 2 (desert-criterion truth table): PASS");
}

/// Independent Theil-Sen oracle: direct double loop, no shared code
/// with the library's pairwise enumeration.
fn oracle_theil_sen(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut slopes = Vec::new();
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            if x[i] != x[j] {
                slopes.push((y[j] - y[i]) / (x[j] - x[i]));
            }
        }
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = slopes.len();
    let slope = if m % 2 == 1 {
        slopes[m / 2]
    } else {
        (slopes[m / 2 - 1] + slopes[m / 2]) / 2.0
    };
    let mut residuals: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi - slope * xi).collect();
    residuals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = residuals.len();
    let intercept = if k % 2 == 1 {
        residuals[k / 2]
    } else {
        (residuals[k / 2 - 1] + residuals[k / 2]) / 2.0
    };
    (slope, intercept)
}

/// Criterion 3: Theil-Sen equals the oracle on 100 random datasets, and
/// the full pipeline recovers a planted slope.
#[test]
fn acceptance_3_theil_sen_oracle_and_planted_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for case in 0..100 {
        let n = rng.gen_range(2..=500);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|xi| 0.7 * xi + rng.gen_range(-20.0..20.0))
            .collect();
        let (slope, intercept) = match theil_sen_point(&x, &y) {
            Ok(f) => f,
            Err(_) => continue, // degenerate draw (all x equal), oracle also undefined
        };
        let (oslope, ointercept) = oracle_theil_sen(&x, &y);
        assert_eq!(slope, oslope, "case {case} slope");
        assert_eq!(intercept, ointercept, "case {case} intercept");
    }

    // Planted-slope recovery through synth -> classify -> profiles -> fit.
    let dir = TempDir::new().unwrap();
    let config = SynthConfig {
        seed: 77,
        n_cities: 40,
        planted: Some(PlantedRelation {
            slope: 0.5,
            intercept: 10.0,
        }),
        ..SynthConfig::default()
    };
    let truth = generate(&config, dir.path()).unwrap();
    assert!(truth.cities.iter().all(|c| c.labels_forced));
    let profiles = pipeline_profiles(dir.path());
    let pairs: Vec<(f64, f64)> = profiles
        .iter()
        .filter_map(|p| Variable::PercPov.of(&p.desert).map(|x| (x, p.desert_share_pop)))
        .collect();
    let x: Vec<f64> = pairs.iter().map(|t| t.0).collect();
    let y: Vec<f64> = pairs.iter().map(|t| t.1).collect();
    let fit = theil_sen(&x, &y, 200, 1).unwrap();
    assert!(
        (fit.slope - 0.5).abs() <= 0.05,
        "recovered slope {} vs planted 0.5",
        fit.slope
    );
    println!("ACCEPTANCE 3 (Theil-Sen oracle + planted slope {:.3}): PASS", fit.slope);
}

use bankdesert::stats::theil_sen;

/// Run the full in-process pipeline on a synth output directory.
fn pipeline_profiles(dir: &std::path::Path) -> Vec<bankdesert::CityProfile> {
    let (banks, _) = load_banks(&dir.join("banks.csv"), &BankColumns::default()).unwrap();
    let (bgs, _) =
        load_block_groups(&dir.join("block_groups.csv"), &BlockGroupColumns::default()).unwrap();
    let cities = load_cities(&dir.join("cities.csv"), &CityColumns::default()).unwrap();
    let (sample, _) = filter_city_sample(cities, 100_000);
    let (dataset, _) = assign_cities(banks, bgs, sample, None).unwrap();
    let points: Vec<(String, GeoPoint)> = dataset
        .banks
        .iter()
        .map(|b| (b.branch_id.clone(), b.location))
        .collect();
    let index = BankIndex::build(&points, DEFAULT_CELL_SIZE_DEG).unwrap();
    let (counts, labels) =
        classify_all(&dataset.block_groups, &index, &DesertCriterion::default()).unwrap();
    let (profiles, _) = build_city_profiles(&dataset, &counts, &labels).unwrap();
    profiles
}

/// Criterion 4: concentration and share closure on synthetic cities.
#[test]
fn acceptance_4_concentration_closure() {
    let dir = TempDir::new().unwrap();
    let config = SynthConfig {
        seed: 40,
        n_cities: 25,
        ..SynthConfig::default()
    };
    generate(&config, dir.path()).unwrap();
    let profiles = pipeline_profiles(dir.path());
    assert!(!profiles.is_empty());
    for p in &profiles {
        for (d, n) in [
            (p.desert.perc_pov_c, p.nondesert.perc_pov_c),
            (p.desert.perc_blk_c, p.nondesert.perc_blk_c),
            (p.desert.perc_wht_c, p.nondesert.perc_wht_c),
        ] {
            if let (Some(d), Some(n)) = (d, n) {
                assert!(
                    (d + n - 100.0).abs() <= 1e-9,
                    "{}: concentrations sum to {}",
                    p.city_id,
                    d + n
                );
            }
        }
        // population and area closure are exact by construction
        let pop_sum = p.desert.population + p.nondesert.population;
        assert!(pop_sum > 0);
        let share_from_parts = 100.0 * p.desert.population as f64 / pop_sum as f64;
        assert_eq!(p.desert_share_pop, share_from_parts, "{}", p.city_id);
    }
    println!("ACCEPTANCE 4 (concentration closure): PASS");
}

/// Criterion 5: every rolling prefix equals a direct quantile over that
/// prefix, series length N - 9.
#[test]
fn acceptance_5_rolling_quantile_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let n = 25;
    let entries: Vec<(f64, Option<f64>)> = (0..n)
        .map(|i| {
            (
                1_000_000.0 - 10_000.0 * i as f64 + rng.gen_range(0.0..500.0),
                Some(rng.gen_range(0.0..40.0)),
            )
        })
        .collect();
    let series = rolling_quantiles(&entries, &[0.1, 0.5, 0.9]).unwrap();

    let mut sorted = entries.clone();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for s in &series {
        assert_eq!(s.points.len(), n - 9, "series length");
        for point in &s.points {
            let prefix: Vec<f64> = sorted[..point.n_cities]
                .iter()
                .filter_map(|e| e.1)
                .collect();
            let direct = quantile(&prefix, s.level).unwrap();
            assert_eq!(point.value, direct, "prefix {} level {}", point.n_cities, s.level);
        }
    }
    println!("ACCEPTANCE 5 (rolling-quantile consistency): PASS");
}

/// Criterion 6: byte-identical bundles for identical inputs and seed.
#[test]
fn acceptance_6_determinism() {
    let mut digests = Vec::new();
    for _ in 0..2 {
        let data = TempDir::new().unwrap();
        let out = TempDir::new().unwrap();
        let config = SynthConfig {
            seed: 60,
            n_cities: 15,
            ..SynthConfig::default()
        };
        generate(&config, data.path()).unwrap();
        let profiles = pipeline_profiles(data.path());
        let (banks, _) = load_banks(&data.path().join("banks.csv"), &BankColumns::default()).unwrap();
        let (bgs, _) = load_block_groups(
            &data.path().join("block_groups.csv"),
            &BlockGroupColumns::default(),
        )
        .unwrap();
        let points: Vec<(String, GeoPoint)> = banks
            .iter()
            .map(|b| (b.branch_id.clone(), b.location))
            .collect();
        let index = BankIndex::build(&points, DEFAULT_CELL_SIZE_DEG).unwrap();
        let (counts, labels) = classify_all(&bgs, &index, &DesertCriterion::default()).unwrap();
        let bundle =
            emit_report(&profiles, &counts, &labels, &bgs, out.path(), 60, 200).unwrap();
        let by_artifact: HashMap<String, String> = bundle
            .manifest
            .artifacts
            .iter()
            .map(|e| (e.artifact.clone(), e.sha256.clone()))
            .collect();
        digests.push(by_artifact);
    }
    assert_eq!(digests[0], digests[1], "manifest checksums differ between runs");
    println!("ACCEPTANCE 6 (determinism): PASS");
}

/// Criterion 7 (optional, data-dependent): reproduction against the real
/// FDIC/ACS extracts, which are not bundled. Point REAL_DATA_DIR at a
/// directory with banks.csv, block_groups.csv, cities.csv to enable.
#[test]
fn acceptance_7_real_data_reproduction() {
    let Some(dir) = std::env::var_os("REAL_DATA_DIR") else {
        println!("ACCEPTANCE 7 (real-data reproduction): SKIPPED (REAL_DATA_DIR not set)");
        return;
    };
    let dir = PathBuf::from(dir);
    let profiles = pipeline_profiles(&dir);
    assert_eq!(profiles.len(), 319, "sample size");
    let large = profiles
        .iter()
        .filter(|p| p.size_class == bankdesert::SizeClass::Large)
        .count();
    assert_eq!(large, 83, "large-city count");
    let shares: Vec<f64> = profiles.iter().map(|p| p.desert_share_pop).collect();
    let median_share = quantile(&shares, 0.5).unwrap();
    assert!((median_share - 20.0).abs() <= 3.0, "median desert share {median_share}");
    let m1: Vec<f64> = profiles.iter().map(|p| p.quantiles_1mi.q50).collect();
    let m2: Vec<f64> = profiles.iter().map(|p| p.quantiles_2mi.q50).collect();
    assert!((quantile(&m1, 0.5).unwrap() - 3.0).abs() <= 1.0);
    assert!((quantile(&m2, 0.5).unwrap() - 18.0).abs() <= 1.0);
    assert!((pearson(&m1, &m2).unwrap() - 0.902).abs() <= 0.02);
    println!("ACCEPTANCE 7 (real-data reproduction): PASS");
}

/// Null 95% band for |Spearman| at sample size n, from the permutation
/// distribution (seeded, 2000 draws).
fn spearman_null_q95(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let mut perm: Vec<f64> = base.clone();
    let mut magnitudes: Vec<f64> = (0..2000)
        .map(|_| {
            // Fisher-Yates
            for i in (1..perm.len()).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            let rx = midranks(&base);
            let ry = midranks(&perm);
            pearson(&rx, &ry).unwrap().abs()
        })
        .collect();
    magnitudes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile(&magnitudes, 0.95).unwrap()
}

/// Criterion 8: no manufactured association on null synthetic data.
#[test]
fn acceptance_8_null_result_property() {
    // No planted relation: desert poverty is drawn independently of
    // desert share, so the true correlation is zero.
    let dir = TempDir::new().unwrap();
    let config = SynthConfig {
        seed: 80,
        n_cities: 60,
        planted: None,
        ..SynthConfig::default()
    };
    generate(&config, dir.path()).unwrap();
    let profiles = pipeline_profiles(dir.path());
    let pairs: Vec<(f64, f64)> = profiles
        .iter()
        .filter_map(|p| Variable::PercPov.of(&p.desert).map(|x| (x, p.desert_share_pop)))
        .collect();
    let x: Vec<f64> = pairs.iter().map(|t| t.0).collect();
    let y: Vec<f64> = pairs.iter().map(|t| t.1).collect();
    let rho = bankdesert::stats::spearman(&x, &y).unwrap();
    let band = spearman_null_q95(pairs.len(), 808);
    assert!(
        rho.abs() < band,
        "spearman {rho} outside null 95% band {band} (n = {})",
        pairs.len()
    );
    println!("ACCEPTANCE 8 (null-result property, |rho| = {:.3} < {:.3}): PASS", rho.abs(), band);
}
