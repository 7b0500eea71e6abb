//! Loading, validation, and cross-linking of the three input datasets:
//! bank branches, census block groups, and cities.
//!
//! Column names are mapped through config rather than hard-coded, since
//! FDIC SOD and ACS exports vary by vintage. Banks are deliberately NOT
//! filtered to city boundaries: buffers crossing a city border must
//! still count outside banks, so the full national point set is kept.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::poly::point_in_polygon;
use crate::region::{assign_region, Region};

/// One bank office as a geographic point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BankBranch {
    pub branch_id: String,
    pub location: GeoPoint,
}

/// Census block group with centroid, land area, demographics, and city
/// membership. Zero-population block groups are retained: they still
/// contribute land to area shares.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockGroup {
    pub geoid: String,
    pub centroid: GeoPoint,
    pub land_area_sqmi: f64,
    pub city_id: Option<String>,
    pub population: u64,
    pub poverty_pop: u64,
    pub black_pop: u64,
    pub white_pop: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeClass {
    Medium,
    Large,
}

impl SizeClass {
    /// Large iff population > 250,000.
    pub fn of(population: u64) -> SizeClass {
        if population > 250_000 {
            SizeClass::Large
        } else {
            SizeClass::Medium
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SizeClass::Medium => "Medium",
            SizeClass::Large => "Large",
        }
    }
}

/// A census Place. Population is the official Places figure, not a sum
/// over block groups.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct City {
    pub city_id: String,
    pub name: String,
    pub state: String,
    pub population: u64,
    pub size_class: SizeClass,
    pub region: Region,
}

/// The three cross-linked input datasets.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub banks: Vec<BankBranch>,
    pub block_groups: Vec<BlockGroup>,
    pub cities: Vec<City>,
}

// ── column maps ─────────────────────────────────────────────────────

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct BankColumns {
    pub branch_id: String,
    pub lon: String,
    pub lat: String,
}

impl Default for BankColumns {
    fn default() -> Self {
        BankColumns {
            branch_id: "branch_id".into(),
            lon: "lon".into(),
            lat: "lat".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockGroupColumns {
    pub geoid: String,
    pub centroid_lon: String,
    pub centroid_lat: String,
    pub land_area_sqmi: String,
    pub population: String,
    pub poverty_pop: String,
    pub black_pop: String,
    pub white_pop: String,
    /// Optional column; block groups without it (or with an empty value)
    /// get `city_id = None` and can still be assigned via boundaries.
    pub city_id: String,
}

impl Default for BlockGroupColumns {
    fn default() -> Self {
        BlockGroupColumns {
            geoid: "geoid".into(),
            centroid_lon: "centroid_lon".into(),
            centroid_lat: "centroid_lat".into(),
            land_area_sqmi: "land_area_sqmi".into(),
            population: "population".into(),
            poverty_pop: "poverty_pop".into(),
            black_pop: "black_pop".into(),
            white_pop: "white_pop".into(),
            city_id: "city_id".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct CityColumns {
    pub city_id: String,
    pub name: String,
    pub state: String,
    pub population: String,
}

impl Default for CityColumns {
    fn default() -> Self {
        CityColumns {
            city_id: "city_id".into(),
            name: "name".into(),
            state: "state".into(),
            population: "population".into(),
        }
    }
}

// ── load report ─────────────────────────────────────────────────────

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based data row number (header not counted).
    pub row: usize,
    pub reason: String,
}

/// Accounting for one loaded file: accepted + dropped == rows_read.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub rows_dropped: usize,
    pub errors: Vec<RowError>,
}

impl LoadReport {
    fn drop_row(&mut self, row: usize, reason: impl Into<String>) {
        self.rows_dropped += 1;
        self.errors.push(RowError {
            row,
            reason: reason.into(),
        });
    }
}

// ── CSV plumbing ────────────────────────────────────────────────────

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

struct Header {
    index: HashMap<String, usize>,
    path: String,
}

impl Header {
    fn read(reader: &mut csv::Reader<std::fs::File>, path: &Path) -> Result<Header> {
        let headers = reader
            .headers()
            .map_err(|e| Error::schema(format!("{}: unreadable header: {e}", path.display())))?;
        let index = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        Ok(Header {
            index,
            path: path.display().to_string(),
        })
    }

    fn require(&self, column: &str) -> Result<usize> {
        self.index.get(column).copied().ok_or_else(|| {
            Error::schema(format!("{}: missing mapped column {column:?}", self.path))
        })
    }

    fn optional(&self, column: &str) -> Option<usize> {
        self.index.get(column).copied()
    }
}

fn field<'a>(record: &'a csv::StringRecord, idx: usize) -> &'a str {
    record.get(idx).unwrap_or("").trim()
}

// ── loaders ─────────────────────────────────────────────────────────

/// Load bank branches. Rows with missing or unparseable coordinates are
/// dropped and counted in the report; duplicate branch ids are fatal.
pub fn load_banks(path: &Path, columns: &BankColumns) -> Result<(Vec<BankBranch>, LoadReport)> {
    let mut reader = open_reader(path)?;
    let header = Header::read(&mut reader, path)?;
    let id_i = header.require(&columns.branch_id)?;
    let lon_i = header.require(&columns.lon)?;
    let lat_i = header.require(&columns.lat)?;

    let mut report = LoadReport::default();
    let mut branches = Vec::new();
    let mut seen = HashSet::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        report.rows_read += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                report.drop_row(row, format!("unreadable row: {e}"));
                continue;
            }
        };
        let id = field(&record, id_i);
        if id.is_empty() {
            report.drop_row(row, "empty branch_id");
            continue;
        }
        let lon = field(&record, lon_i).parse::<f64>();
        let lat = field(&record, lat_i).parse::<f64>();
        let (lon, lat) = match (lon, lat) {
            (Ok(lon), Ok(lat)) => (lon, lat),
            _ => {
                report.drop_row(row, "missing or unparseable coordinates");
                continue;
            }
        };
        let location = match GeoPoint::new(lon, lat) {
            Ok(p) => p,
            Err(e) => {
                report.drop_row(row, format!("invalid coordinates: {e}"));
                continue;
            }
        };
        if !seen.insert(id.to_string()) {
            return Err(Error::validation(format!(
                "{}: duplicate branch_id {id:?} at row {row}",
                path.display()
            )));
        }
        branches.push(BankBranch {
            branch_id: id.to_string(),
            location,
        });
        report.rows_accepted += 1;
    }
    Ok((branches, report))
}

/// Load block groups, enforcing the per-row invariants. Invalid rows
/// (non-positive land area, counts exceeding population, unparseable
/// fields) are rejected and recorded with their geoid in the report.
pub fn load_block_groups(
    path: &Path,
    columns: &BlockGroupColumns,
) -> Result<(Vec<BlockGroup>, LoadReport)> {
    let mut reader = open_reader(path)?;
    let header = Header::read(&mut reader, path)?;
    let geoid_i = header.require(&columns.geoid)?;
    let lon_i = header.require(&columns.centroid_lon)?;
    let lat_i = header.require(&columns.centroid_lat)?;
    let area_i = header.require(&columns.land_area_sqmi)?;
    let pop_i = header.require(&columns.population)?;
    let pov_i = header.require(&columns.poverty_pop)?;
    let blk_i = header.require(&columns.black_pop)?;
    let wht_i = header.require(&columns.white_pop)?;
    let city_i = header.optional(&columns.city_id);

    let mut report = LoadReport::default();
    let mut groups = Vec::new();
    let mut seen = HashSet::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        report.rows_read += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                report.drop_row(row, format!("unreadable row: {e}"));
                continue;
            }
        };
        let geoid = field(&record, geoid_i).to_string();
        if geoid.is_empty() {
            report.drop_row(row, "empty geoid");
            continue;
        }

        macro_rules! parse_or_drop {
            ($idx:expr, $ty:ty, $what:expr) => {
                match field(&record, $idx).parse::<$ty>() {
                    Ok(v) => v,
                    Err(_) => {
                        report.drop_row(row, format!("{geoid}: unparseable {}", $what));
                        continue;
                    }
                }
            };
        }

        let lon = parse_or_drop!(lon_i, f64, "centroid_lon");
        let lat = parse_or_drop!(lat_i, f64, "centroid_lat");
        let land_area = parse_or_drop!(area_i, f64, "land_area_sqmi");
        let population = parse_or_drop!(pop_i, u64, "population");
        let poverty_pop = parse_or_drop!(pov_i, u64, "poverty_pop");
        let black_pop = parse_or_drop!(blk_i, u64, "black_pop");
        let white_pop = parse_or_drop!(wht_i, u64, "white_pop");

        let centroid = match GeoPoint::new(lon, lat) {
            Ok(p) => p,
            Err(e) => {
                report.drop_row(row, format!("{geoid}: invalid centroid: {e}"));
                continue;
            }
        };
        if !(land_area > 0.0) || !land_area.is_finite() {
            report.drop_row(row, format!("{geoid}: land_area must be positive"));
            continue;
        }
        if poverty_pop > population || black_pop > population || white_pop > population {
            report.drop_row(row, format!("{geoid}: count exceeds population"));
            continue;
        }
        if !seen.insert(geoid.clone()) {
            return Err(Error::validation(format!(
                "{}: duplicate geoid {geoid:?} at row {row}",
                path.display()
            )));
        }
        let city_id = city_i
            .map(|i| field(&record, i))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        groups.push(BlockGroup {
            geoid,
            centroid,
            land_area_sqmi: land_area,
            city_id,
            population,
            poverty_pop,
            black_pop,
            white_pop,
        });
        report.rows_accepted += 1;
    }
    Ok((groups, report))
}

/// Load cities. Size class and census region are derived here; unknown
/// state codes and duplicate ids are fatal.
pub fn load_cities(path: &Path, columns: &CityColumns) -> Result<Vec<City>> {
    let mut reader = open_reader(path)?;
    let header = Header::read(&mut reader, path)?;
    let id_i = header.require(&columns.city_id)?;
    let name_i = header.require(&columns.name)?;
    let state_i = header.require(&columns.state)?;
    let pop_i = header.require(&columns.population)?;

    let mut cities = Vec::new();
    let mut seen = HashSet::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record = record
            .map_err(|e| Error::schema(format!("{}: row {row}: {e}", path.display())))?;
        let city_id = field(&record, id_i).to_string();
        if city_id.is_empty() {
            return Err(Error::validation(format!(
                "{}: empty city_id at row {row}",
                path.display()
            )));
        }
        if !seen.insert(city_id.clone()) {
            return Err(Error::validation(format!(
                "{}: duplicate city_id {city_id:?} at row {row}",
                path.display()
            )));
        }
        let state = field(&record, state_i).to_ascii_uppercase();
        let region = assign_region(&state)?;
        let population = field(&record, pop_i).parse::<u64>().map_err(|_| {
            Error::validation(format!(
                "{}: city {city_id}: unparseable population",
                path.display()
            ))
        })?;
        cities.push(City {
            city_id,
            name: field(&record, name_i).to_string(),
            state,
            population,
            size_class: SizeClass::of(population),
            region,
        });
    }
    Ok(cities)
}

/// Split cities into the analysis sample (population > `min_pop`) and
/// the excluded remainder.
pub fn filter_city_sample(cities: Vec<City>, min_pop: u64) -> (Vec<City>, Vec<City>) {
    cities.into_iter().partition(|c| c.population > min_pop)
}

// ── city boundaries (GeoJSON) ───────────────────────────────────────

/// City polygons parsed from a GeoJSON FeatureCollection. MultiPolygons
/// are flattened to one entry per polygon, all sharing the city_id.
pub struct CityBoundaries {
    pub polygons: Vec<(String, Vec<Vec<[f64; 2]>>)>,
}

pub fn load_boundaries(path: &Path) -> Result<CityBoundaries> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::schema(format!("{}: invalid JSON: {e}", path.display())))?;
    parse_boundaries(&value).map_err(|msg| Error::schema(format!("{}: {msg}", path.display())))
}

fn parse_boundaries(value: &serde_json::Value) -> std::result::Result<CityBoundaries, String> {
    if value.get("type").and_then(|t| t.as_str()) != Some("FeatureCollection") {
        return Err("expected a GeoJSON FeatureCollection".into());
    }
    let features = value
        .get("features")
        .and_then(|f| f.as_array())
        .ok_or("missing features array")?;
    let mut polygons = Vec::new();
    for (i, feature) in features.iter().enumerate() {
        let city_id = feature
            .pointer("/properties/city_id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| format!("feature {i}: missing city_id property"))?
            .to_string();
        let geometry = feature
            .get("geometry")
            .ok_or_else(|| format!("feature {i}: missing geometry"))?;
        let gtype = geometry.get("type").and_then(|t| t.as_str()).unwrap_or("");
        let coords = geometry
            .get("coordinates")
            .ok_or_else(|| format!("feature {i}: missing coordinates"))?;
        match gtype {
            "Polygon" => {
                polygons.push((city_id, parse_rings(coords, i)?));
            }
            "MultiPolygon" => {
                let polys = coords
                    .as_array()
                    .ok_or_else(|| format!("feature {i}: bad MultiPolygon"))?;
                for poly in polys {
                    polygons.push((city_id.clone(), parse_rings(poly, i)?));
                }
            }
            other => return Err(format!("feature {i}: unsupported geometry type {other:?}")),
        }
    }
    Ok(CityBoundaries { polygons })
}

fn parse_rings(
    coords: &serde_json::Value,
    feature: usize,
) -> std::result::Result<Vec<Vec<[f64; 2]>>, String> {
    let rings = coords
        .as_array()
        .ok_or_else(|| format!("feature {feature}: bad ring array"))?;
    let mut out = Vec::with_capacity(rings.len());
    for ring in rings {
        let positions = ring
            .as_array()
            .ok_or_else(|| format!("feature {feature}: bad ring"))?;
        let mut pts = Vec::with_capacity(positions.len());
        for pos in positions {
            let pair = pos
                .as_array()
                .filter(|p| p.len() >= 2)
                .ok_or_else(|| format!("feature {feature}: bad position"))?;
            let lon = pair[0].as_f64().ok_or_else(|| format!("feature {feature}: bad lon"))?;
            let lat = pair[1].as_f64().ok_or_else(|| format!("feature {feature}: bad lat"))?;
            pts.push([lon, lat]);
        }
        out.push(pts);
    }
    Ok(out)
}

// ── cross-linking ───────────────────────────────────────────────────

/// Assign block groups to cities and assemble the validated `Dataset`.
///
/// With boundaries, a block group belongs to the city whose polygon
/// contains its centroid (even-odd rule); containment in polygons of
/// two different cities is an error. Block groups in no city keep
/// `city_id = None`: they are excluded from city statistics but still
/// feed the national bank index context. Cities that end up with zero
/// block groups are dropped from the dataset and reported as notices.
pub fn assign_cities(
    banks: Vec<BankBranch>,
    mut block_groups: Vec<BlockGroup>,
    cities: Vec<City>,
    boundaries: Option<&CityBoundaries>,
) -> Result<(Dataset, Vec<String>)> {
    if let Some(bounds) = boundaries {
        for bg in &mut block_groups {
            let mut containing: BTreeSet<&str> = BTreeSet::new();
            for (city_id, rings) in &bounds.polygons {
                if point_in_polygon(bg.centroid, rings) {
                    containing.insert(city_id);
                }
            }
            match containing.len() {
                0 => bg.city_id = None,
                1 => bg.city_id = Some(containing.iter().next().unwrap().to_string()),
                _ => {
                    let ids: Vec<&str> = containing.into_iter().collect();
                    return Err(Error::validation(format!(
                        "block group {} centroid contained in overlapping city polygons: {}",
                        bg.geoid,
                        ids.join(", ")
                    )));
                }
            }
        }
    }

    let known: HashSet<&str> = cities.iter().map(|c| c.city_id.as_str()).collect();
    let mut bg_count: HashMap<&str, usize> = HashMap::new();
    for bg in &block_groups {
        if let Some(id) = &bg.city_id {
            if !known.contains(id.as_str()) {
                return Err(Error::validation(format!(
                    "block group {} references unknown city_id {id:?}",
                    bg.geoid
                )));
            }
            *bg_count.entry(id.as_str()).or_default() += 1;
        }
    }

    let mut notices = Vec::new();
    let cities: Vec<City> = cities
        .into_iter()
        .filter(|c| {
            let keep = bg_count.contains_key(c.city_id.as_str());
            if !keep {
                notices.push(format!(
                    "city {} ({}) has no block groups and was dropped",
                    c.city_id, c.name
                ));
            }
            keep
        })
        .collect();

    Ok((
        Dataset {
            banks,
            block_groups,
            cities,
        },
        notices,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn load_banks_well_formed() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "banks.csv",
            "branch_id,lon,lat\nb1,-87.6,41.9\nb2,-87.7,41.8\nb3,-87.8,41.7\n",
        );
        let (banks, report) = load_banks(&path, &BankColumns::default()).unwrap();
        assert_eq!(banks.len(), 3);
        assert_eq!(report.rows_read, 3);
        assert_eq!(report.rows_accepted, 3);
        assert_eq!(report.rows_dropped, 0);
    }

    #[test]
    fn load_banks_drops_empty_lat() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "banks.csv",
            "branch_id,lon,lat\nb1,-87.6,41.9\nb2,-87.7,\n",
        );
        let (banks, report) = load_banks(&path, &BankColumns::default()).unwrap();
        assert_eq!(banks.len(), 1);
        assert_eq!(report.rows_dropped, 1);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].row, 2);
    }

    #[test]
    fn load_banks_swapped_columns_via_map() {
        let dir = tempfile::tempdir().unwrap();
        let normal = write_file(
            &dir,
            "normal.csv",
            "branch_id,lon,lat\nb1,-87.6,41.9\nb2,-87.7,41.8\n",
        );
        let swapped = write_file(
            &dir,
            "swapped.csv",
            "branch_id,latitude,longitude\nb1,41.9,-87.6\nb2,41.8,-87.7\n",
        );
        let (a, _) = load_banks(&normal, &BankColumns::default()).unwrap();
        let map = BankColumns {
            branch_id: "branch_id".into(),
            lon: "longitude".into(),
            lat: "latitude".into(),
        };
        let (b, _) = load_banks(&swapped, &map).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.branch_id, y.branch_id);
            assert_eq!(x.location, y.location);
        }
    }

    #[test]
    fn load_banks_missing_file_is_io_error() {
        let err = load_banks(Path::new("/nonexistent/banks.csv"), &BankColumns::default())
            .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn load_banks_missing_column_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "banks.csv", "branch_id,lon\nb1,-87.6\n");
        let err = load_banks(&path, &BankColumns::default()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
        assert!(err.to_string().contains("lat"));
    }

    #[test]
    fn load_banks_duplicate_id_is_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "banks.csv",
            "branch_id,lon,lat\nb1,-87.6,41.9\nb1,-87.7,41.8\n",
        );
        let err = load_banks(&path, &BankColumns::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    const BG_HEADER: &str =
        "geoid,centroid_lon,centroid_lat,land_area_sqmi,population,poverty_pop,black_pop,white_pop,city_id\n";

    #[test]
    fn load_block_groups_accepts_valid_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "bg.csv",
            &format!("{BG_HEADER}170310001001,-87.6,41.9,0.25,1000,139,200,600,chi\n"),
        );
        let (groups, report) = load_block_groups(&path, &BlockGroupColumns::default()).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(report.rows_accepted, 1);
        assert_eq!(groups[0].poverty_pop, 139);
        assert_eq!(groups[0].city_id.as_deref(), Some("chi"));
    }

    #[test]
    fn load_block_groups_rejects_count_exceeding_population() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "bg.csv",
            &format!("{BG_HEADER}g1,-87.6,41.9,0.25,1000,1001,200,600,\n"),
        );
        let (groups, report) = load_block_groups(&path, &BlockGroupColumns::default()).unwrap();
        assert!(groups.is_empty());
        assert_eq!(report.rows_dropped, 1);
        assert!(report.errors[0].reason.contains("count exceeds population"));
    }

    #[test]
    fn load_block_groups_fixture_accounting() {
        // 12 rows, 2 invalid (bad land area, poverty > population).
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from(BG_HEADER);
        for i in 0..10 {
            body.push_str(&format!("g{i},-87.{i},41.9,0.25,1000,100,200,600,\n"));
        }
        body.push_str("bad_area,-88.0,41.9,0,1000,100,200,600,\n");
        body.push_str("bad_pov,-88.1,41.9,0.25,1000,2000,200,600,\n");
        let path = write_file(&dir, "bg.csv", &body);
        let (groups, report) = load_block_groups(&path, &BlockGroupColumns::default()).unwrap();
        assert_eq!(groups.len(), 10);
        assert_eq!(report.rows_read, 12);
        assert_eq!(report.rows_accepted + report.rows_dropped, report.rows_read);
        let geoids: Vec<&str> = report.errors.iter().map(|e| e.reason.split(':').next().unwrap()).collect();
        assert_eq!(geoids, vec!["bad_area", "bad_pov"]);
    }

    #[test]
    fn load_block_groups_keeps_zero_population() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "bg.csv",
            &format!("{BG_HEADER}g1,-87.6,41.9,0.5,0,0,0,0,\n"),
        );
        let (groups, _) = load_block_groups(&path, &BlockGroupColumns::default()).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].population, 0);
    }

    #[test]
    fn loading_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "banks.csv",
            "branch_id,lon,lat\nb1,-87.6,41.9\nb2,bad,41.8\n",
        );
        let (a, ra) = load_banks(&path, &BankColumns::default()).unwrap();
        let (b, rb) = load_banks(&path, &BankColumns::default()).unwrap();
        assert_eq!(a.len(), b.len());
        assert_eq!(ra.rows_dropped, rb.rows_dropped);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.branch_id, y.branch_id);
            assert_eq!(x.location, y.location);
        }
    }

    #[test]
    fn load_cities_derives_class_and_region() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "cities.csv",
            "city_id,name,state,population\nchi,Chicago,IL,2709534\npeo,Peoria,IL,113532\n",
        );
        let cities = load_cities(&path, &CityColumns::default()).unwrap();
        assert_eq!(cities[0].size_class, SizeClass::Large);
        assert_eq!(cities[1].size_class, SizeClass::Medium);
        assert_eq!(cities[0].region, Region::Midwest);
    }

    #[test]
    fn filter_city_sample_splits_on_min_pop() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "cities.csv",
            "city_id,name,state,population\na,A,IL,100000\nb,B,IL,100001\n",
        );
        let cities = load_cities(&path, &CityColumns::default()).unwrap();
        let (kept, excluded) = filter_city_sample(cities, 100_000);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].city_id, "b");
        assert_eq!(excluded.len(), 1);
    }

    fn square_feature(city_id: &str, x0: f64, y0: f64, side: f64) -> serde_json::Value {
        serde_json::json!({
            "type": "Feature",
            "properties": { "city_id": city_id },
            "geometry": {
                "type": "Polygon",
                "coordinates": [[
                    [x0, y0], [x0 + side, y0], [x0 + side, y0 + side], [x0, y0 + side], [x0, y0]
                ]]
            }
        })
    }

    fn bg(geoid: &str, lon: f64, lat: f64) -> BlockGroup {
        BlockGroup {
            geoid: geoid.into(),
            centroid: GeoPoint::new(lon, lat).unwrap(),
            land_area_sqmi: 0.25,
            city_id: None,
            population: 1000,
            poverty_pop: 100,
            black_pop: 200,
            white_pop: 600,
        }
    }

    fn city(id: &str) -> City {
        City {
            city_id: id.into(),
            name: id.to_uppercase(),
            state: "IL".into(),
            population: 150_000,
            size_class: SizeClass::Medium,
            region: Region::Midwest,
        }
    }

    fn boundaries(features: Vec<serde_json::Value>) -> CityBoundaries {
        let fc = serde_json::json!({ "type": "FeatureCollection", "features": features });
        parse_boundaries(&fc).unwrap()
    }

    #[test]
    fn assign_cities_by_centroid_containment() {
        let bounds = boundaries(vec![
            square_feature("a", 0.0, 0.0, 1.0),
            square_feature("b", 2.0, 0.0, 1.0),
        ]);
        let bgs = vec![bg("in_a", 0.5, 0.5), bg("outside", 1.5, 0.5)];
        let (dataset, notices) =
            assign_cities(vec![], bgs, vec![city("a"), city("b")], Some(&bounds)).unwrap();
        assert_eq!(dataset.block_groups[0].city_id.as_deref(), Some("a"));
        assert_eq!(dataset.block_groups[1].city_id, None);
        // city b gets no block groups and is dropped with a notice
        assert_eq!(dataset.cities.len(), 1);
        assert_eq!(notices.len(), 1);
        assert!(notices[0].contains("b"));
    }

    #[test]
    fn assign_cities_overlap_is_error() {
        let bounds = boundaries(vec![
            square_feature("a", 0.0, 0.0, 1.0),
            square_feature("b", 0.5, 0.0, 1.0),
        ]);
        let bgs = vec![bg("overlapped", 0.75, 0.5)];
        let err = assign_cities(vec![], bgs, vec![city("a"), city("b")], Some(&bounds))
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("overlapped"));
        assert!(msg.contains('a') && msg.contains('b'));
    }

    #[test]
    fn assign_cities_unknown_city_id_is_error() {
        let mut b = bg("g1", 0.0, 0.0);
        b.city_id = Some("ghost".into());
        let err = assign_cities(vec![], vec![b], vec![city("a")], None).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn multipolygon_boundaries_parse() {
        let fc = serde_json::json!({
            "type": "FeatureCollection",
            "features": [{
                "type": "Feature",
                "properties": { "city_id": "m" },
                "geometry": {
                    "type": "MultiPolygon",
                    "coordinates": [
                        [[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]],
                        [[[3.0, 0.0], [4.0, 0.0], [4.0, 1.0], [3.0, 1.0], [3.0, 0.0]]]
                    ]
                }
            }]
        });
        let bounds = parse_boundaries(&fc).unwrap();
        assert_eq!(bounds.polygons.len(), 2);
        let bgs = vec![bg("g1", 3.5, 0.5)];
        let (dataset, _) = assign_cities(vec![], bgs, vec![city("m")], Some(&bounds)).unwrap();
        assert_eq!(dataset.block_groups[0].city_id.as_deref(), Some("m"));
    }
}
