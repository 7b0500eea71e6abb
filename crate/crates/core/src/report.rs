//! Emission of every table/figure dataset as machine-readable files.
//!
//! All figure outputs are data files (CSV plus JSON summaries), never
//! rendered images; a manifest.json lists every emitted file with its
//! row count and SHA-256 checksum. Re-running with identical inputs and
//! seed yields byte-identical files. Rates and shares are written with
//! one decimal in CSVs and full precision in JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::citystats::{AreaType, CityProfile, Variable};
use crate::classify::{BankCounts, DesertLabel};
use crate::error::{Error, Result};
use crate::ingest::{BlockGroup, SizeClass};
use crate::region::Region;
use crate::stats::{self, histogram, pearson, quantile, rolling_quantiles, spearman, theil_sen};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub artifact: String,
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub bootstrap_reps: u32,
    pub artifacts: Vec<ManifestEntry>,
    pub notes: Vec<String>,
}

pub struct ReportBundle {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

struct Writer {
    out_dir: PathBuf,
    entries: Vec<ManifestEntry>,
    notes: Vec<String>,
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Writer {
    fn write_bytes(&mut self, artifact: &str, file: &str, rows: usize, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(file);
        std::fs::write(&path, bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
        let digest = Sha256::digest(bytes);
        self.entries.push(ManifestEntry {
            artifact: artifact.to_string(),
            file: file.to_string(),
            rows,
            sha256: format!("{digest:x}"),
        });
        Ok(())
    }

    fn write_csv(
        &mut self,
        artifact: &str,
        file: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<()> {
        let mut out = String::new();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in rows {
            let fields: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        self.write_bytes(artifact, file, rows.len(), out.as_bytes())
    }

    fn write_json(&mut self, artifact: &str, file: &str, value: &serde_json::Value) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| Error::internal(format!("{file}: {e}")))?;
        bytes.push(b'\n');
        self.write_bytes(artifact, file, 0, &bytes)
    }
}

fn fmt1(v: f64) -> String {
    format!("{v:.1}")
}

fn opt1(v: Option<f64>) -> String {
    v.map(fmt1).unwrap_or_default()
}

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

fn corr_or_null(r: Result<f64>) -> serde_json::Value {
    match r {
        Ok(v) => serde_json::json!(v),
        Err(_) => serde_json::Value::Null,
    }
}

/// Desert-side regressor value for the fit table (despercpov etc.).
fn desert_var(profile: &CityProfile, var: Variable) -> Option<f64> {
    var.of(&profile.desert)
}

fn area_var(profile: &CityProfile, var: Variable, area: AreaType) -> Option<f64> {
    match area {
        AreaType::Desert => var.of(&profile.desert),
        AreaType::NonDesert => var.of(&profile.nondesert),
    }
}

/// Emit the full report bundle into `out_dir`.
pub fn emit_report(
    profiles: &[CityProfile],
    counts: &[BankCounts],
    labels: &[DesertLabel],
    block_groups: &[BlockGroup],
    out_dir: &Path,
    seed: u64,
    bootstrap_reps: u32,
) -> Result<ReportBundle> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let mut w = Writer {
        out_dir: out_dir.to_path_buf(),
        entries: Vec::new(),
        notes: Vec::new(),
    };

    emit_blockgroups_classified(&mut w, counts, labels, block_groups)?;
    emit_city_profiles(&mut w, profiles)?;
    emit_fig1(&mut w, profiles)?;
    emit_fig2(&mut w, profiles)?;
    emit_fig3(&mut w, profiles)?;
    emit_fig5(&mut w, profiles)?;
    emit_fig6(&mut w, profiles)?;
    emit_fig7(&mut w, profiles)?;
    emit_fig8_9(&mut w, profiles)?;
    emit_table1(&mut w, profiles, seed, bootstrap_reps)?;
    emit_table2(&mut w, profiles)?;
    emit_table3(&mut w, profiles)?;

    let manifest = Manifest {
        seed,
        bootstrap_reps,
        artifacts: w.entries.clone(),
        notes: w.notes.clone(),
    };
    let manifest_json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::internal(format!("manifest: {e}")))?;
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, &manifest_json)
        .map_err(|e| Error::io(path.display().to_string(), e))?;

    Ok(ReportBundle {
        out_dir: out_dir.to_path_buf(),
        manifest,
    })
}

/// Per-block-group classification export: the GIS-join substitute for
/// choropleth maps.
fn emit_blockgroups_classified(
    w: &mut Writer,
    counts: &[BankCounts],
    labels: &[DesertLabel],
    block_groups: &[BlockGroup],
) -> Result<()> {
    let city_of: std::collections::HashMap<&str, &str> = block_groups
        .iter()
        .map(|bg| (bg.geoid.as_str(), bg.city_id.as_deref().unwrap_or("")))
        .collect();
    let label_of: std::collections::HashMap<&str, bool> =
        labels.iter().map(|l| (l.geoid.as_str(), l.is_desert)).collect();
    let mut rows: Vec<Vec<String>> = counts
        .iter()
        .map(|c| {
            vec![
                c.geoid.clone(),
                city_of.get(c.geoid.as_str()).unwrap_or(&"").to_string(),
                c.count_1mi.to_string(),
                c.count_2mi.to_string(),
                label_of
                    .get(c.geoid.as_str())
                    .map(|d| d.to_string())
                    .unwrap_or_default(),
            ]
        })
        .collect();
    rows.sort_by(|a, b| a[0].cmp(&b[0]));
    w.write_csv(
        "blockgroups_classified",
        "blockgroups_classified.csv",
        &["geoid", "city_id", "count_1mi", "count_2mi", "is_desert"],
        &rows,
    )
}

/// Full per-city profile table, one row per city, column names matching
/// the published variable names. Also written as full-precision JSON.
fn emit_city_profiles(w: &mut Writer, profiles: &[CityProfile]) -> Result<()> {
    let mut header: Vec<&str> = vec![
        "city_id",
        "name",
        "state",
        "population",
        "size_class",
        "region",
        "Q05_1mi",
        "Q10_1mi",
        "Median_1mi",
        "Q90_1mi",
        "Q05_2mi",
        "Q10_2mi",
        "Median_2mi",
        "Q90_2mi",
        "DesertSharePop",
        "DesertShareArea",
        "DesertShareBG",
    ];
    let var_cols: Vec<String> = [AreaType::Desert, AreaType::NonDesert]
        .iter()
        .flat_map(|area| {
            Variable::ALL
                .iter()
                .map(move |v| format!("{}{}", if *area == AreaType::Desert { "Des" } else { "Non" }, v.name()))
        })
        .collect();
    for c in &var_cols {
        header.push(c.as_str());
    }
    header.push("PovDiff");
    header.push("PovConcDiff");

    let rows: Vec<Vec<String>> = profiles
        .iter()
        .map(|p| {
            let mut row = vec![
                p.city_id.clone(),
                p.name.clone(),
                p.state.clone(),
                p.population.to_string(),
                p.size_class.name().to_string(),
                p.region.name().to_string(),
                fmt1(p.quantiles_1mi.q05),
                fmt1(p.quantiles_1mi.q10),
                fmt1(p.quantiles_1mi.q50),
                fmt1(p.quantiles_1mi.q90),
                fmt1(p.quantiles_2mi.q05),
                fmt1(p.quantiles_2mi.q10),
                fmt1(p.quantiles_2mi.q50),
                fmt1(p.quantiles_2mi.q90),
                fmt1(p.desert_share_pop),
                fmt1(p.desert_share_area),
                fmt1(p.desert_share_bg),
            ];
            for area in [AreaType::Desert, AreaType::NonDesert] {
                for v in Variable::ALL {
                    row.push(opt1(area_var(p, v, area)));
                }
            }
            row.push(opt1(p.pov_diff));
            row.push(opt1(p.pov_conc_diff));
            row
        })
        .collect();
    w.write_csv("city_profiles", "city_profiles.csv", &header, &rows)?;

    let json = serde_json::to_value(profiles)
        .map_err(|e| Error::internal(format!("city profiles: {e}")))?;
    w.write_json("city_profiles_json", "city_profiles.json", &json)
}

/// Median bank counts per city vs. city size, plus the correlations.
fn emit_fig1(w: &mut Writer, profiles: &[CityProfile]) -> Result<()> {
    let rows: Vec<Vec<String>> = profiles
        .iter()
        .map(|p| {
            vec![
                p.city_id.clone(),
                p.name.clone(),
                p.population.to_string(),
                fmt1(p.quantiles_1mi.q50),
                fmt1(p.quantiles_2mi.q50),
            ]
        })
        .collect();
    w.write_csv(
        "fig1",
        "fig1.csv",
        &["city_id", "name", "population", "median_1mi", "median_2mi"],
        &rows,
    )?;

    let pop: Vec<f64> = profiles.iter().map(|p| p.population as f64).collect();
    let m1: Vec<f64> = profiles.iter().map(|p| p.quantiles_1mi.q50).collect();
    let m2: Vec<f64> = profiles.iter().map(|p| p.quantiles_2mi.q50).collect();
    let summary = serde_json::json!({
        "pearson_pop_median_1mi": corr_or_null(pearson(&pop, &m1)),
        "pearson_pop_median_2mi": corr_or_null(pearson(&pop, &m2)),
        "spearman_pop_median_1mi": corr_or_null(spearman(&pop, &m1)),
        "spearman_pop_median_2mi": corr_or_null(spearman(&pop, &m2)),
        "pearson_median_1mi_2mi": corr_or_null(pearson(&m1, &m2)),
    });
    w.write_json("fig1_summary", "fig1_summary.json", &summary)
}

/// Distributions of the median counts and their link to city poverty.
fn emit_fig2(w: &mut Writer, profiles: &[CityProfile]) -> Result<()> {
    let m1: Vec<f64> = profiles.iter().map(|p| p.quantiles_1mi.q50).collect();
    let m2: Vec<f64> = profiles.iter().map(|p| p.quantiles_2mi.q50).collect();
    let mut rows = Vec::new();
    for (radius, values) in [("1mi", &m1), ("2mi", &m2)] {
        if values.is_empty() {
            continue;
        }
        for (left, right, count) in histogram(values, 10)? {
            rows.push(vec![
                radius.to_string(),
                fmt1(left),
                fmt1(right),
                count.to_string(),
            ]);
        }
    }
    w.write_csv(
        "fig2",
        "fig2.csv",
        &["radius", "bin_left", "bin_right", "count"],
        &rows,
    )?;

    let paired: Vec<(f64, f64, f64)> = profiles
        .iter()
        .filter_map(|p| {
            p.citywide_perc_pov()
                .map(|pov| (p.quantiles_1mi.q50, p.quantiles_2mi.q50, pov))
        })
        .collect();
    let pm1: Vec<f64> = paired.iter().map(|t| t.0).collect();
    let pm2: Vec<f64> = paired.iter().map(|t| t.1).collect();
    let pov: Vec<f64> = paired.iter().map(|t| t.2).collect();
    let q = |v: &[f64], level: f64| -> serde_json::Value {
        match quantile(v, level) {
            Ok(x) => serde_json::json!(x),
            Err(_) => serde_json::Value::Null,
        }
    };
    let summary = serde_json::json!({
        "median_1mi_quantiles": { "q10": q(&m1, 0.1), "q50": q(&m1, 0.5), "q90": q(&m1, 0.9) },
        "median_2mi_quantiles": { "q10": q(&m2, 0.1), "q50": q(&m2, 0.5), "q90": q(&m2, 0.9) },
        "pearson_median_1mi_pov": corr_or_null(pearson(&pm1, &pov)),
        "pearson_median_2mi_pov": corr_or_null(pearson(&pm2, &pov)),
        "spearman_median_1mi_pov": corr_or_null(spearman(&pm1, &pov)),
        "spearman_median_2mi_pov": corr_or_null(spearman(&pm2, &pov)),
    });
    w.write_json("fig2_summary", "fig2_summary.json", &summary)
}

/// Desert shares per city plus full-sample medians.
fn emit_fig3(w: &mut Writer, profiles: &[CityProfile]) -> Result<()> {
    let rows: Vec<Vec<String>> = profiles
        .iter()
        .map(|p| {
            vec![
                p.city_id.clone(),
                fmt1(p.desert_share_pop),
                fmt1(p.desert_share_area),
                fmt1(p.desert_share_bg),
            ]
        })
        .collect();
    w.write_csv(
        "fig3",
        "fig3.csv",
        &["city_id", "share_pop", "share_area", "share_bg"],
        &rows,
    )?;

    let med = |f: fn(&CityProfile) -> f64| -> serde_json::Value {
        let values: Vec<f64> = profiles.iter().map(f).collect();
        match quantile(&values, 0.5) {
            Ok(v) => serde_json::json!(v),
            Err(_) => serde_json::Value::Null,
        }
    };
    let summary = serde_json::json!({
        "median_share_pop": med(|p| p.desert_share_pop),
        "median_share_area": med(|p| p.desert_share_area),
        "median_share_bg": med(|p| p.desert_share_bg),
    });
    w.write_json("fig3_summary", "fig3_summary.json", &summary)
}

/// Scatter data: the six desert-side variables vs. desert size, with
/// Spearman correlations in the summary.
fn emit_fig5(w: &mut Writer, profiles: &[CityProfile]) -> Result<()> {
    let mut header = vec!["city_id", "population", "size_class", "DesertSharePop"];
    let labels: Vec<&str> = Variable::ALL.iter().map(|v| v.desert_label()).collect();
    header.extend(labels.iter());
    let rows: Vec<Vec<String>> = profiles
        .iter()
        .map(|p| {
            let mut row = vec![
                p.city_id.clone(),
                p.population.to_string(),
                p.size_class.name().to_string(),
                fmt1(p.desert_share_pop),
            ];
            for v in Variable::ALL {
                row.push(opt1(desert_var(p, v)));
            }
            row
        })
        .collect();
    w.write_csv("fig5", "fig5.csv", &header, &rows)?;

    let mut correlations = serde_json::Map::new();
    for v in Variable::ALL {
        let pairs: Vec<(f64, f64)> = profiles
            .iter()
            .filter_map(|p| desert_var(p, v).map(|x| (x, p.desert_share_pop)))
            .collect();
        let x: Vec<f64> = pairs.iter().map(|t| t.0).collect();
        let y: Vec<f64> = pairs.iter().map(|t| t.1).collect();
        correlations.insert(v.desert_label().to_string(), corr_or_null(spearman(&x, &y)));
    }
    w.write_json(
        "fig5_summary",
        "fig5_summary.json",
        &serde_json::json!({ "spearman_vs_desert_share_pop": correlations }),
    )
}

/// Rolling-quantile series: six variables x desert/nondesert x
/// {10, 50, 90}%, one file per variable-area pair.
fn emit_fig6(w: &mut Writer, profiles: &[CityProfile]) -> Result<()> {
    for v in Variable::ALL {
        for area in [AreaType::Desert, AreaType::NonDesert] {
            let entries: Vec<(f64, Option<f64>)> = profiles
                .iter()
                .map(|p| (p.population as f64, area_var(p, v, area)))
                .collect();
            let file = format!("fig6_{}_{}.csv", v.slug(), area.slug());
            match rolling_quantiles(&entries, &[0.1, 0.5, 0.9]) {
                Ok(series) => {
                    let n_points = series[0].points.len();
                    let rows: Vec<Vec<String>> = (0..n_points)
                        .map(|i| {
                            vec![
                                series[0].points[i].n_cities.to_string(),
                                format!("{}", series[0].points[i].population_threshold),
                                fmt1(series[0].points[i].value),
                                fmt1(series[1].points[i].value),
                                fmt1(series[2].points[i].value),
                            ]
                        })
                        .collect();
                    w.write_csv(
                        &format!("fig6_{}_{}", v.slug(), area.slug()),
                        &file,
                        &["n_cities", "population_threshold", "q10", "q50", "q90"],
                        &rows,
                    )?;
                }
                Err(e) => {
                    w.notes.push(format!("{file}: skipped: {e}"));
                }
            }
        }
    }
    Ok(())
}

/// Histogram data behind the desert vs. non-desert distribution plots,
/// one file per variable.
fn emit_fig7(w: &mut Writer, profiles: &[CityProfile]) -> Result<()> {
    for v in Variable::ALL {
        let mut rows = Vec::new();
        for area in [AreaType::Desert, AreaType::NonDesert] {
            let values: Vec<f64> = profiles
                .iter()
                .filter_map(|p| area_var(p, v, area))
                .collect();
            if values.is_empty() {
                w.notes
                    .push(format!("fig7_{}: no defined {} values", v.slug(), area.slug()));
                continue;
            }
            for (left, right, count) in histogram(&values, 20)? {
                rows.push(vec![
                    area.slug().to_string(),
                    fmt1(left),
                    fmt1(right),
                    count.to_string(),
                ]);
            }
        }
        w.write_csv(
            &format!("fig7_{}", v.slug()),
            &format!("fig7_{}.csv", v.slug()),
            &["area", "bin_left", "bin_right", "count"],
            &rows,
        )?;
    }
    Ok(())
}

/// Poverty differentials: per-city rows (fig8) and by region (fig9),
/// with distribution summaries.
fn emit_fig8_9(w: &mut Writer, profiles: &[CityProfile]) -> Result<()> {
    let defined: Vec<&CityProfile> = profiles.iter().filter(|p| p.pov_diff.is_some()).collect();

    let rows: Vec<Vec<String>> = defined
        .iter()
        .map(|p| {
            vec![
                p.city_id.clone(),
                p.population.to_string(),
                p.size_class.name().to_string(),
                opt1(p.pov_diff),
                opt1(p.pov_conc_diff),
            ]
        })
        .collect();
    w.write_csv(
        "fig8",
        "fig8.csv",
        &["city_id", "population", "size_class", "pov_diff", "pov_conc_diff"],
        &rows,
    )?;

    let rows9: Vec<Vec<String>> = defined
        .iter()
        .map(|p| {
            vec![
                p.region.name().to_string(),
                p.city_id.clone(),
                opt1(p.pov_diff),
            ]
        })
        .collect();
    w.write_csv("fig9", "fig9.csv", &["region", "city_id", "pov_diff"], &rows9)?;

    let median_of = |values: &[f64]| -> serde_json::Value {
        match quantile(values, 0.5) {
            Ok(v) => serde_json::json!(v),
            Err(_) => serde_json::Value::Null,
        }
    };
    let diffs: Vec<f64> = defined.iter().filter_map(|p| p.pov_diff).collect();
    let conc_diffs: Vec<f64> = defined.iter().filter_map(|p| p.pov_conc_diff).collect();
    let mut by_region = serde_json::Map::new();
    for region in [Region::Northeast, Region::Midwest, Region::South, Region::West] {
        let vals: Vec<f64> = defined
            .iter()
            .filter(|p| p.region == region)
            .filter_map(|p| p.pov_diff)
            .collect();
        by_region.insert(
            region.name().to_string(),
            serde_json::json!({ "n": vals.len(), "median_pov_diff": median_of(&vals) }),
        );
    }
    let mut by_size = serde_json::Map::new();
    for size in [SizeClass::Medium, SizeClass::Large] {
        let vals: Vec<f64> = defined
            .iter()
            .filter(|p| p.size_class == size)
            .filter_map(|p| p.pov_diff)
            .collect();
        by_size.insert(
            size.name().to_string(),
            serde_json::json!({ "n": vals.len(), "median_pov_diff": median_of(&vals) }),
        );
    }
    let summary = serde_json::json!({
        "n": defined.len(),
        "median_pov_diff": median_of(&diffs),
        "median_pov_conc_diff": median_of(&conc_diffs),
        "by_size": by_size,
        "by_region": by_region,
    });
    w.write_json("fig8_9_summary", "fig8_9_summary.json", &summary)
}

/// The 6-variable x {Full, Large, Small} Theil-Sen grid. DV = desert
/// population share; IVs are the desert-side variables. Degenerate
/// strata get a status note instead of failing the run.
fn emit_table1(
    w: &mut Writer,
    profiles: &[CityProfile],
    seed: u64,
    bootstrap_reps: u32,
) -> Result<()> {
    let strata: [(&str, Box<dyn Fn(&CityProfile) -> bool>); 3] = [
        ("Full", Box::new(|_| true)),
        ("Large", Box::new(|p| p.size_class == SizeClass::Large)),
        ("Small", Box::new(|p| p.size_class == SizeClass::Medium)),
    ];
    let mut rows = Vec::new();
    for (vi, v) in Variable::ALL.iter().enumerate() {
        for (si, (stratum, keep)) in strata.iter().enumerate() {
            let pairs: Vec<(f64, f64)> = profiles
                .iter()
                .filter(|p| keep(p))
                .filter_map(|p| desert_var(p, *v).map(|x| (x, p.desert_share_pop)))
                .collect();
            let x: Vec<f64> = pairs.iter().map(|t| t.0).collect();
            let y: Vec<f64> = pairs.iter().map(|t| t.1).collect();
            let fit_seed = seed
                .wrapping_mul(1_000_003)
                .wrapping_add((vi * 3 + si) as u64);
            let mut row = vec![
                v.desert_label().to_string(),
                stratum.to_string(),
                pairs.len().to_string(),
            ];
            match theil_sen(&x, &y, bootstrap_reps, fit_seed) {
                Ok(fit) => {
                    row.extend([
                        fmt3(fit.slope),
                        fmt3(fit.intercept),
                        fmt3(fit.p_slope),
                        fmt3(fit.p_intercept),
                        fit_seed.to_string(),
                        "ok".to_string(),
                    ]);
                }
                Err(e) => {
                    row.extend([
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        fit_seed.to_string(),
                        format!("degenerate: {e}"),
                    ]);
                    w.notes
                        .push(format!("table1 {}/{stratum}: {e}", v.desert_label()));
                }
            }
            rows.push(row);
        }
    }
    w.write_csv(
        "table1",
        "table1.csv",
        &[
            "variable",
            "stratum",
            "n",
            "slope",
            "intercept",
            "p_slope",
            "p_intercept",
            "seed",
            "status",
        ],
        &rows,
    )
}

/// 10/50/90% quantiles of the six variables, desert vs. non-desert.
fn emit_table2(w: &mut Writer, profiles: &[CityProfile]) -> Result<()> {
    let mut rows = Vec::new();
    for v in Variable::ALL {
        for area in [AreaType::NonDesert, AreaType::Desert] {
            let values: Vec<f64> = profiles
                .iter()
                .filter_map(|p| area_var(p, v, area))
                .collect();
            let mut row = vec![
                v.name().to_string(),
                area.name().to_string(),
                values.len().to_string(),
            ];
            if values.is_empty() {
                row.extend([String::new(), String::new(), String::new()]);
            } else {
                row.extend([
                    fmt1(quantile(&values, 0.1)?),
                    fmt1(quantile(&values, 0.5)?),
                    fmt1(quantile(&values, 0.9)?),
                ]);
            }
            rows.push(row);
        }
    }
    w.write_csv(
        "table2",
        "table2.csv",
        &["variable", "area", "n", "q10", "q50", "q90"],
        &rows,
    )
}

/// Top and bottom 10% of cities by poverty differential. Ties broken by
/// city_id ascending.
fn emit_table3(w: &mut Writer, profiles: &[CityProfile]) -> Result<()> {
    let mut ranked: Vec<&CityProfile> = profiles.iter().filter(|p| p.pov_diff.is_some()).collect();
    ranked.sort_by(|a, b| {
        b.pov_diff
            .partial_cmp(&a.pov_diff)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.city_id.cmp(&b.city_id))
    });
    let n_tail = ((ranked.len() as f64 * 0.10).round() as usize)
        .max(1)
        .min(ranked.len());

    let mut rows = Vec::new();
    let mut push_rows = |group: &str, cities: &[&CityProfile]| {
        for (i, p) in cities.iter().enumerate() {
            rows.push(vec![
                group.to_string(),
                (i + 1).to_string(),
                p.city_id.clone(),
                p.name.clone(),
                p.state.clone(),
                p.population.to_string(),
                opt1(p.desert.perc_pov),
                opt1(p.nondesert.perc_pov),
                opt1(p.pov_diff),
            ]);
        }
    };
    if !ranked.is_empty() {
        push_rows("top", &ranked[..n_tail]);
        let bottom: Vec<&CityProfile> = ranked[ranked.len() - n_tail..].to_vec();
        push_rows("bottom", &bottom);
    }
    w.write_csv(
        "table3",
        "table3.csv",
        &[
            "group",
            "rank",
            "city_id",
            "name",
            "state",
            "population",
            "perc_pov_desert",
            "perc_pov_nondesert",
            "pov_diff",
        ],
        &rows,
    )
}

fn standalone_writer(out_dir: &Path) -> Result<Writer> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    Ok(Writer {
        out_dir: out_dir.to_path_buf(),
        entries: Vec::new(),
        notes: Vec::new(),
    })
}

/// Write only blockgroups_classified.csv (the `classify` command output).
pub fn write_classification(
    counts: &[BankCounts],
    labels: &[DesertLabel],
    block_groups: &[BlockGroup],
    out_dir: &Path,
) -> Result<Vec<ManifestEntry>> {
    let mut w = standalone_writer(out_dir)?;
    emit_blockgroups_classified(&mut w, counts, labels, block_groups)?;
    Ok(w.entries)
}

/// Write only the per-city profile table (the `analyze` command output).
pub fn write_city_profiles(profiles: &[CityProfile], out_dir: &Path) -> Result<Vec<ManifestEntry>> {
    let mut w = standalone_writer(out_dir)?;
    emit_city_profiles(&mut w, profiles)?;
    Ok(w.entries)
}

/// Convenience for consumers needing a manifest lookup.
impl Manifest {
    pub fn entry(&self, artifact: &str) -> Option<&ManifestEntry> {
        self.artifacts.iter().find(|e| e.artifact == artifact)
    }
}

/// Theil-Sen fit used by external callers wanting the table1 numbers
/// without file output.
pub fn fit_share_on_variable(
    profiles: &[CityProfile],
    var: Variable,
    bootstrap_reps: u32,
    seed: u64,
) -> Result<stats::TheilSenFit> {
    let pairs: Vec<(f64, f64)> = profiles
        .iter()
        .filter_map(|p| desert_var(p, var).map(|x| (x, p.desert_share_pop)))
        .collect();
    let x: Vec<f64> = pairs.iter().map(|t| t.0).collect();
    let y: Vec<f64> = pairs.iter().map(|t| t.1).collect();
    theil_sen(&x, &y, bootstrap_reps, seed)
}
