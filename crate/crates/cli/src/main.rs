//! Command-line front end for the banking-desert pipeline.
//!
//! Settings come from an optional TOML config file plus flags; flags win
//! whenever both are present. Exit codes: 0 success, 1 I/O or schema
//! problem, 2 input validation failure, 3 internal invariant violation.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use bankdesert::classify::classify_all;
use bankdesert::ingest::{
    assign_cities, filter_city_sample, load_banks, load_block_groups, load_boundaries,
    load_cities, BankColumns, BlockGroupColumns, CityColumns,
};
use bankdesert::report::{emit_report, write_city_profiles, write_classification};
use bankdesert::stats::DEFAULT_BOOTSTRAP_REPS;
use bankdesert::synth::{generate, PlantedRelation, SynthConfig};
use bankdesert::{BankIndex, Dataset, DesertCriterion, Error, DEFAULT_CELL_SIZE_DEG};

const DEFAULT_MIN_CITY_POP: u64 = 100_000;

#[derive(Parser)]
#[command(name = "bankdesert", version, about = "Locate under-banked block groups and compare their socioeconomic profiles across cities")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic dataset with ground truth.
    Synth {
        #[command(flatten)]
        io: IoArgs,
        /// Number of cities to generate.
        #[arg(long)]
        n_cities: Option<usize>,
        /// Plant a linear desert-poverty/desert-share relation: slope.
        #[arg(long, requires = "planted_intercept")]
        planted_slope: Option<f64>,
        /// Planted relation intercept.
        #[arg(long, requires = "planted_slope")]
        planted_intercept: Option<f64>,
    },
    /// Count banks around each block group and label deserts.
    Classify {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Full pipeline through per-city profiles.
    Analyze {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Full pipeline plus every table/figure dataset and manifest.
    Report {
        #[command(flatten)]
        io: IoArgs,
    },
}

#[derive(Args)]
struct IoArgs {
    /// Bank branches CSV.
    #[arg(long)]
    banks: Option<PathBuf>,
    /// Block groups CSV.
    #[arg(long = "block-groups")]
    block_groups: Option<PathBuf>,
    /// Cities CSV.
    #[arg(long)]
    cities: Option<PathBuf>,
    /// City boundaries GeoJSON (optional; otherwise the block-group
    /// city_id column is used).
    #[arg(long)]
    boundaries: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed for synthesis and bootstrap resampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Bootstrap replicates for regression p-values.
    #[arg(long = "bootstrap-reps")]
    bootstrap_reps: Option<u32>,
    /// Spatial index cell size in degrees.
    #[arg(long = "cell-size-deg")]
    cell_size_deg: Option<f64>,
    /// Max banks within 1 mile for the desert condition.
    #[arg(long = "threshold-1mi")]
    threshold_1mi: Option<u32>,
    /// Max banks within 2 miles for the desert condition.
    #[arg(long = "threshold-2mi")]
    threshold_2mi: Option<u32>,
    /// Minimum city population for the sample.
    #[arg(long = "min-city-pop")]
    min_city_pop: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct Config {
    banks: Option<PathBuf>,
    block_groups: Option<PathBuf>,
    cities: Option<PathBuf>,
    boundaries: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    bootstrap_reps: Option<u32>,
    cell_size_deg: Option<f64>,
    threshold_1mi: Option<u32>,
    threshold_2mi: Option<u32>,
    min_city_pop: Option<u64>,
    columns: Columns,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct Columns {
    banks: BankColumns,
    block_groups: BlockGroupColumns,
    cities: CityColumns,
}

/// Flags merged over config over defaults.
struct Settings {
    banks: Option<PathBuf>,
    block_groups: Option<PathBuf>,
    cities: Option<PathBuf>,
    boundaries: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: u64,
    bootstrap_reps: u32,
    cell_size_deg: f64,
    criterion: DesertCriterion,
    min_city_pop: u64,
    columns: Columns,
}

impl Settings {
    fn merge(io: IoArgs, config: Config) -> Settings {
        let criterion = DesertCriterion {
            max_1mi: io
                .threshold_1mi
                .or(config.threshold_1mi)
                .unwrap_or(DesertCriterion::default().max_1mi),
            max_2mi: io
                .threshold_2mi
                .or(config.threshold_2mi)
                .unwrap_or(DesertCriterion::default().max_2mi),
            ..DesertCriterion::default()
        };
        Settings {
            banks: io.banks.or(config.banks),
            block_groups: io.block_groups.or(config.block_groups),
            cities: io.cities.or(config.cities),
            boundaries: io.boundaries.or(config.boundaries),
            out: io.out.or(config.out),
            seed: io.seed.or(config.seed).unwrap_or(1),
            bootstrap_reps: io
                .bootstrap_reps
                .or(config.bootstrap_reps)
                .unwrap_or(DEFAULT_BOOTSTRAP_REPS),
            cell_size_deg: io
                .cell_size_deg
                .or(config.cell_size_deg)
                .unwrap_or(DEFAULT_CELL_SIZE_DEG),
            criterion,
            min_city_pop: io
                .min_city_pop
                .or(config.min_city_pop)
                .unwrap_or(DEFAULT_MIN_CITY_POP),
            columns: config.columns,
        }
    }

    fn require<'a>(&self, value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Error> {
        value
            .as_deref()
            .ok_or_else(|| Error::invalid_input(format!("missing required path: --{flag}")))
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, Error> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    toml::from_str(&text).map_err(|e| Error::schema(format!("{}: {e}", path.display())))
}

/// Load everything, apply the sample filter, and resolve city
/// membership. Returns the dataset plus a JSON load report.
fn load_inputs(s: &Settings) -> Result<(Dataset, serde_json::Value), Error> {
    let banks_path = s.require(&s.banks, "banks")?;
    let bg_path = s.require(&s.block_groups, "block-groups")?;
    let cities_path = s.require(&s.cities, "cities")?;

    let (banks, banks_report) = load_banks(banks_path, &s.columns.banks)?;
    let (block_groups, bg_report) = load_block_groups(bg_path, &s.columns.block_groups)?;
    let cities = load_cities(cities_path, &s.columns.cities)?;
    let (sample, excluded) = filter_city_sample(cities, s.min_city_pop);

    let boundaries = match &s.boundaries {
        Some(path) => Some(load_boundaries(path)?),
        None => None,
    };
    let (dataset, notices) = assign_cities(banks, block_groups, sample, boundaries.as_ref())?;

    let report = serde_json::json!({
        "banks": banks_report,
        "block_groups": bg_report,
        "cities_in_sample": dataset.cities.len(),
        "cities_below_min_pop": excluded.len(),
        "min_city_pop": s.min_city_pop,
        "notices": notices,
    });
    Ok((dataset, report))
}

fn write_load_report(out: &Path, report: &serde_json::Value) -> Result<(), Error> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out.display().to_string(), e))?;
    let path = out.join("load_report.json");
    let mut bytes =
        serde_json::to_vec_pretty(report).map_err(|e| Error::internal(e.to_string()))?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Synth {
            io,
            n_cities,
            planted_slope,
            planted_intercept,
        } => {
            let s = Settings::merge(io, config);
            let out = s.require(&s.out, "out")?;
            let mut synth = SynthConfig {
                seed: s.seed,
                ..SynthConfig::default()
            };
            if let Some(n) = n_cities {
                synth.n_cities = n;
            }
            if let (Some(slope), Some(intercept)) = (planted_slope, planted_intercept) {
                synth.planted = Some(PlantedRelation { slope, intercept });
            }
            let truth = generate(&synth, out)?;
            let total_bg: usize = truth.cities.iter().map(|c| c.n_bg).sum();
            println!(
                "synth: {} cities, {} block groups -> {}",
                truth.cities.len(),
                total_bg,
                out.display()
            );
        }
        Command::Classify { io } => {
            let s = Settings::merge(io, config);
            let out = s.require(&s.out, "out")?.to_path_buf();
            let (dataset, load_report) = load_inputs(&s)?;
            let index = index_of(&dataset, s.cell_size_deg)?;
            let (counts, labels) = classify_all(&dataset.block_groups, &index, &s.criterion)?;
            write_load_report(&out, &load_report)?;
            write_classification(&counts, &labels, &dataset.block_groups, &out)?;
            let deserts = labels.iter().filter(|l| l.is_desert).count();
            println!(
                "classify: {} block groups, {} deserts -> {}",
                labels.len(),
                deserts,
                out.display()
            );
        }
        Command::Analyze { io } => {
            let s = Settings::merge(io, config);
            let out = s.require(&s.out, "out")?.to_path_buf();
            let (dataset, load_report) = load_inputs(&s)?;
            let index = index_of(&dataset, s.cell_size_deg)?;
            let (counts, labels) = classify_all(&dataset.block_groups, &index, &s.criterion)?;
            let (profiles, notices) =
                bankdesert::citystats::build_city_profiles(&dataset, &counts, &labels)?;
            write_load_report(&out, &load_report)?;
            write_city_profiles(&profiles, &out)?;
            for notice in &notices {
                eprintln!("note: {notice}");
            }
            println!("analyze: {} city profiles -> {}", profiles.len(), out.display());
        }
        Command::Report { io } => {
            let s = Settings::merge(io, config);
            let out = s.require(&s.out, "out")?.to_path_buf();
            let (dataset, load_report) = load_inputs(&s)?;
            let index = index_of(&dataset, s.cell_size_deg)?;
            let (counts, labels) = classify_all(&dataset.block_groups, &index, &s.criterion)?;
            let (profiles, notices) =
                bankdesert::citystats::build_city_profiles(&dataset, &counts, &labels)?;
            write_load_report(&out, &load_report)?;
            let bundle = emit_report(
                &profiles,
                &counts,
                &labels,
                &dataset.block_groups,
                &out,
                s.seed,
                s.bootstrap_reps,
            )?;
            for notice in notices.iter().chain(&bundle.manifest.notes) {
                eprintln!("note: {notice}");
            }
            println!(
                "report: {} artifacts -> {}",
                bundle.manifest.artifacts.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn index_of(dataset: &Dataset, cell_size_deg: f64) -> Result<BankIndex, Error> {
    let points: Vec<(String, bankdesert::GeoPoint)> = dataset
        .banks
        .iter()
        .map(|b| (b.branch_id.clone(), b.location))
        .collect();
    BankIndex::build(&points, cell_size_deg)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Schema(_) => 1,
        Error::Validation(_) | Error::InvalidInput(_) => 2,
        Error::Internal(_) => 3,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
