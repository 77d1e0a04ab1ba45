//! Reading sentence corpora, county centroid tables and yearly target files.
//!
//! Sentence files are JSON lines or headered CSV with columns `id`, `text` and
//! either `fips` or `lat`/`lon`. Target files are headered CSV `fips,value`,
//! one file per target and year.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{CommunityId, SentenceRecord, TargetTable};

/// How a sentence row is mapped to its community.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputMode {
    /// Rows carry a `fips` column.
    Fips,
    /// Rows carry `lat`/`lon`; the community is the nearest county centroid.
    Coords,
}

impl std::str::FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fips" => Ok(InputMode::Fips),
            "coords" => Ok(InputMode::Coords),
            other => Err(Error::InvalidArgument(format!("unknown input mode {other:?}"))),
        }
    }
}

/// One row of a sentence file before community assignment.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RawTweetRow {
    pub id: String,
    pub text: String,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub fips: Option<String>,
    #[serde(default)]
    pub lat: Option<f64>,
    #[serde(default)]
    pub lon: Option<f64>,
}

// CSV rows without a value produce an empty string rather than a missing field.
fn empty_as_none<'de, D>(de: D) -> std::result::Result<Option<String>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let raw: Option<String> = Option::deserialize(de)?;
    Ok(raw.filter(|s| !s.trim().is_empty()))
}

fn valid_coords(lat: f64, lon: f64) -> bool {
    lat.is_finite() && lon.is_finite() && (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon)
}

const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Great-circle distance in kilometres (haversine).
pub fn great_circle_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// County representative points, used in place of polygon containment.
#[derive(Debug, Clone, PartialEq)]
pub struct CountyCentroidTable {
    centroids: BTreeMap<CommunityId, (f64, f64)>,
}

#[derive(Deserialize)]
struct CentroidRow {
    fips: String,
    lat: f64,
    lon: f64,
}

impl CountyCentroidTable {
    pub fn new(centroids: BTreeMap<CommunityId, (f64, f64)>) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::Empty("county centroid table".into()));
        }
        if let Some((c, _)) = centroids.iter().find(|(_, (lat, lon))| !valid_coords(*lat, *lon)) {
            return Err(Error::InvalidArgument(format!("centroid of {c} out of range")));
        }
        Ok(CountyCentroidTable { centroids })
    }

    /// Reads a headered CSV `fips,lat,lon`.
    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut centroids = BTreeMap::new();
        for row in reader.deserialize::<CentroidRow>() {
            let row = row.map_err(|e| Error::format(format!("centroid file {}", path.display()), e))?;
            centroids.insert(CommunityId::parse_padded(&row.fips)?, (row.lat, row.lon));
        }
        Self::new(centroids)
    }

    pub fn contains(&self, community: &CommunityId) -> bool {
        self.centroids.contains_key(community)
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CommunityId, (f64, f64))> {
        self.centroids.iter().map(|(c, p)| (c, *p))
    }

    /// Closest centroid and its distance. Exact ties go to the smaller code.
    pub fn nearest(&self, lat: f64, lon: f64) -> (&CommunityId, f64) {
        let mut best: Option<(&CommunityId, f64)> = None;
        for (c, &(clat, clon)) in &self.centroids {
            let d = great_circle_km(lat, lon, clat, clon);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((c, d));
            }
        }
        best.expect("centroid table is never empty")
    }
}

/// Options for [`read_sentences_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    pub mode: InputMode,
    /// In coords mode, rows farther than this from every centroid are dropped.
    pub max_distance_km: Option<f64>,
}

impl IngestOptions {
    pub fn new(mode: InputMode) -> Self {
        IngestOptions {
            mode,
            max_distance_km: None,
        }
    }
}

/// Per-reason counts of rows that did not become records.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    /// Rows that failed to parse at all.
    pub unparseable: usize,
    /// Missing or malformed `fips`.
    pub bad_fips: usize,
    /// FIPS codes absent from the centroid table, when one was given.
    pub unknown_fips: usize,
    /// Missing or out-of-range coordinates.
    pub bad_coords: usize,
    /// Coordinates farther than the configured maximum from any centroid.
    pub outside: usize,
}

impl DropCounts {
    pub fn total(&self) -> usize {
        self.unparseable + self.bad_fips + self.unknown_fips + self.bad_coords + self.outside
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOutcome {
    pub records: Vec<SentenceRecord>,
    pub total_rows: usize,
    pub dropped: DropCounts,
}

enum RowResult {
    Kept(SentenceRecord),
    Dropped(fn(&mut DropCounts)),
}

fn assign(row: RawTweetRow, opts: IngestOptions, centroids: Option<&CountyCentroidTable>) -> RowResult {
    let community = match opts.mode {
        InputMode::Fips => {
            let Some(Ok(c)) = row.fips.as_deref().map(CommunityId::parse_padded) else {
                return RowResult::Dropped(|d| d.bad_fips += 1);
            };
            if centroids.is_some_and(|t| !t.contains(&c)) {
                return RowResult::Dropped(|d| d.unknown_fips += 1);
            }
            c
        }
        InputMode::Coords => {
            let (Some(lat), Some(lon)) = (row.lat, row.lon) else {
                return RowResult::Dropped(|d| d.bad_coords += 1);
            };
            if !valid_coords(lat, lon) {
                return RowResult::Dropped(|d| d.bad_coords += 1);
            }
            let table = centroids.expect("checked by caller");
            let (c, dist) = table.nearest(lat, lon);
            if opts.max_distance_km.is_some_and(|max| dist > max) {
                return RowResult::Dropped(|d| d.outside += 1);
            }
            c.clone()
        }
    };
    RowResult::Kept(SentenceRecord::new(row.id, row.text, community))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(format!("csv file {}", path.display()), format!("{other:?}")),
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn parse_rows(path: &Path) -> Result<Vec<Option<RawTweetRow>>> {
    if is_csv(path) {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let raw: Vec<csv::StringRecord> = reader
            .records()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        Ok(raw
            .par_iter()
            .map(|r| r.deserialize::<RawTweetRow>(Some(&headers)).ok())
            .collect())
    } else {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lines: Vec<&str> = content.lines().filter(|l| !l.trim().is_empty()).collect();
        Ok(lines
            .par_iter()
            .map(|l| serde_json::from_str::<RawTweetRow>(l).ok())
            .collect())
    }
}

/// Reads a sentence file with default options for `mode`.
pub fn read_sentences(
    path: &Path,
    mode: InputMode,
    centroids: Option<&CountyCentroidTable>,
) -> Result<IngestOutcome> {
    read_sentences_with(path, IngestOptions::new(mode), centroids)
}

/// Reads a sentence file (`.csv` as CSV, anything else as JSON lines).
///
/// Malformed rows are dropped and counted; more than half dropped is fatal.
/// Output order is file order regardless of the worker pool size.
pub fn read_sentences_with(
    path: &Path,
    opts: IngestOptions,
    centroids: Option<&CountyCentroidTable>,
) -> Result<IngestOutcome> {
    if opts.mode == InputMode::Coords && centroids.is_none() {
        return Err(Error::MissingCentroids);
    }
    let rows = parse_rows(path)?;
    let total_rows = rows.len();
    let results: Vec<RowResult> = rows
        .into_par_iter()
        .map(|row| match row {
            Some(row) => assign(row, opts, centroids),
            None => RowResult::Dropped(|d| d.unparseable += 1),
        })
        .collect();

    let mut dropped = DropCounts::default();
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        match r {
            RowResult::Kept(rec) => records.push(rec),
            RowResult::Dropped(bump) => bump(&mut dropped),
        }
    }
    if dropped.total() * 2 > total_rows {
        return Err(Error::InputMostlyInvalid {
            dropped: dropped.total(),
            total: total_rows,
        });
    }
    Ok(IngestOutcome {
        records,
        total_rows,
        dropped,
    })
}

/// Writes records as JSON lines with keys `id`, `text`, `fips`.
pub fn write_sentences_jsonl(path: &Path, records: &[SentenceRecord]) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::format("sentence record", e))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// One year of one target variable.
#[derive(Debug, Clone, PartialEq)]
pub struct YearlyTargetFile {
    pub target_name: String,
    pub unit: String,
    pub year: i32,
    pub rows: Vec<(CommunityId, f64)>,
}

#[derive(Deserialize)]
struct TargetRow {
    fips: String,
    value: f64,
}

impl YearlyTargetFile {
    pub fn new(
        target_name: impl Into<String>,
        unit: impl Into<String>,
        year: i32,
        rows: Vec<(CommunityId, f64)>,
    ) -> Result<Self> {
        let target_name = target_name.into();
        let mut seen = std::collections::HashSet::new();
        for (c, v) in &rows {
            if !seen.insert(c) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate community {c} in {target_name} {year}"
                )));
            }
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{target_name} {year}: value {v} for {c} must be finite and non-negative"
                )));
            }
        }
        Ok(YearlyTargetFile {
            target_name,
            unit: unit.into(),
            year,
            rows,
        })
    }

    /// Reads a headered `fips,value` CSV. Name and year default to the
    /// `<name>_<year>.csv` pattern of the file stem.
    pub fn load(path: &Path, name: Option<&str>, year: Option<i32>) -> Result<Self> {
        let (stem_name, stem_year) = split_target_stem(path);
        let target_name = name
            .map(str::to_owned)
            .or(stem_name)
            .ok_or_else(|| Error::InvalidArgument(format!("no target name for {}", path.display())))?;
        let year = year
            .or(stem_year)
            .ok_or_else(|| Error::InvalidArgument(format!("no year for {}", path.display())))?;
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut rows = Vec::new();
        for row in reader.deserialize::<TargetRow>() {
            let row = row.map_err(|e| Error::format(format!("target file {}", path.display()), e))?;
            rows.push((CommunityId::parse_padded(&row.fips)?, row.value));
        }
        Self::new(target_name, "", year, rows)
    }
}

/// `ahd_2014` → (`ahd`, 2014); `diabetes` → (`diabetes`, none).
pub fn split_target_stem(path: &Path) -> (Option<String>, Option<i32>) {
    let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
        return (None, None);
    };
    if let Some((name, year)) = stem.rsplit_once('_') {
        if year.len() == 4 && !name.is_empty() {
            if let Ok(y) = year.parse() {
                return (Some(name.to_string()), Some(y));
            }
        }
    }
    (Some(stem.to_string()), None)
}

/// Combines yearly files of one target: a community present in several years
/// gets the mean of its values, a community present in one year keeps that
/// value.
///
/// The result does not depend on the order of `files`.
pub fn union_average_targets(files: &[YearlyTargetFile]) -> Result<TargetTable> {
    let first = files
        .first()
        .ok_or_else(|| Error::InvalidArgument("no target files".into()))?;
    for f in files {
        if f.target_name != first.target_name {
            return Err(Error::MixedTargetName(first.target_name.clone(), f.target_name.clone()));
        }
    }
    let unit = files
        .iter()
        .map(|f| f.unit.as_str())
        .filter(|u| !u.is_empty())
        .min()
        .unwrap_or("")
        .to_string();

    let mut by_community: BTreeMap<CommunityId, Vec<(i32, f64)>> = BTreeMap::new();
    for f in files {
        for (c, v) in &f.rows {
            by_community.entry(c.clone()).or_default().push((f.year, *v));
        }
    }
    let entries = by_community
        .into_iter()
        .map(|(c, mut vals)| {
            vals.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let mean = vals.iter().map(|(_, v)| v).sum::<f64>() / vals.len() as f64;
            (c, mean)
        })
        .collect();
    let mut years: Vec<i32> = files.iter().map(|f| f.year).collect();
    years.sort_unstable();
    years.dedup();
    TargetTable::new(first.target_name.clone(), unit, entries, years)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn cid(s: &str) -> CommunityId {
        CommunityId::new(s).unwrap()
    }

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        std::fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
        path
    }

    fn centroids(pairs: &[(&str, f64, f64)]) -> CountyCentroidTable {
        CountyCentroidTable::new(pairs.iter().map(|(c, a, b)| (cid(c), (*a, *b))).collect()).unwrap()
    }

    #[test]
    fn fips_passthrough_jsonl_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let jsonl = write(dir.path(), "s.jsonl", "{\"id\":\"t1\",\"fips\":\"01001\",\"text\":\"hello\"}\n");
        let out = read_sentences(&jsonl, InputMode::Fips, None).unwrap();
        assert_eq!(out.records, vec![SentenceRecord::new("t1", "hello", cid("01001"))]);

        let csv = write(dir.path(), "s.csv", "id,text,fips\nt1,hello,1001\nt2,\"a, b\",06037\n");
        let out = read_sentences(&csv, InputMode::Fips, None).unwrap();
        assert_eq!(out.records[0], SentenceRecord::new("t1", "hello", cid("01001")));
        assert_eq!(out.records[1].text, "a, b");
    }

    #[test]
    fn coords_at_centroid_maps_to_it() {
        let dir = tempfile::tempdir().unwrap();
        let table = centroids(&[("06037", 34.3209, -118.2247), ("01001", 32.5349, -86.6427)]);
        let p = write(dir.path(), "s.jsonl", "{\"id\":\"t\",\"text\":\"x\",\"lat\":34.3209,\"lon\":-118.2247}\n");
        let out = read_sentences(&p, InputMode::Coords, Some(&table)).unwrap();
        assert_eq!(out.records[0].community, cid("06037"));
    }

    #[test]
    fn equidistant_goes_to_smaller_code() {
        // symmetric about the prime meridian, so the haversine distances are bit-equal
        let table = centroids(&[("20002", 10.0, 1.5), ("10001", 10.0, -1.5)]);
        let (c, _) = table.nearest(10.0, 0.0);
        assert_eq!(c, &cid("10001"));
        let d1 = great_circle_km(10.0, 0.0, 10.0, 1.5);
        let d2 = great_circle_km(10.0, 0.0, 10.0, -1.5);
        assert_eq!(d1, d2);
        let table = centroids(&[("10001", 10.0, 1.5), ("20002", 10.0, -1.5)]);
        assert_eq!(table.nearest(10.0, 0.0).0, &cid("10001"));
    }

    #[test]
    fn coords_mode_needs_centroids() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "s.jsonl", "");
        assert!(matches!(read_sentences(&p, InputMode::Coords, None), Err(Error::MissingCentroids)));
    }

    #[test]
    fn drops_are_counted_and_majority_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let body = "{\"id\":\"a\",\"text\":\"x\",\"fips\":\"01001\"}\n\
                    {\"id\":\"b\",\"text\":\"x\",\"fips\":\"1x001\"}\n\
                    not json\n\
                    {\"id\":\"c\",\"text\":\"x\",\"fips\":\"01003\"}\n\
                    {\"id\":\"d\",\"text\":\"x\",\"fips\":\"01003\"}\n";
        let p = write(dir.path(), "s.jsonl", body);
        let out = read_sentences(&p, InputMode::Fips, None).unwrap();
        assert_eq!(out.total_rows, 5);
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.dropped.bad_fips, 1);
        assert_eq!(out.dropped.unparseable, 1);

        let table = centroids(&[("01001", 0.0, 0.0)]);
        let err = read_sentences(&p, InputMode::Fips, Some(&table)).unwrap_err();
        assert!(matches!(err, Error::InputMostlyInvalid { dropped: 4, total: 5 }));
    }

    #[test]
    fn bad_coordinates_and_distance_cutoff() {
        let dir = tempfile::tempdir().unwrap();
        let body = "id,text,lat,lon\na,x,0.0,0.0\nb,x,95.0,0.0\nc,x,0.0,0.01\nd,x,0.0,50.0\n";
        let p = write(dir.path(), "s.csv", body);
        let table = centroids(&[("01001", 0.0, 0.0)]);
        let opts = IngestOptions {
            mode: InputMode::Coords,
            max_distance_km: Some(100.0),
        };
        let out = read_sentences_with(&p, opts, Some(&table)).unwrap();
        assert_eq!(out.records.iter().map(|r| r.sentence_id.as_str()).collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(out.dropped.bad_coords, 1);
        assert_eq!(out.dropped.outside, 1);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_sentences(Path::new("/nonexistent/s.jsonl"), InputMode::Fips, None).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/s.jsonl"));
    }

    fn yearly(year: i32, rows: &[(&str, f64)]) -> YearlyTargetFile {
        YearlyTargetFile::new("ahd", "", year, rows.iter().map(|(c, v)| (cid(c), *v)).collect()).unwrap()
    }

    #[test]
    fn union_average_rule() {
        let t = union_average_targets(&[
            yearly(2014, &[("01001", 40.0), ("01003", 50.0)]),
            yearly(2015, &[("01001", 46.0)]),
        ])
        .unwrap();
        assert_eq!(t.get(&cid("01001")), Some(43.0));
        assert_eq!(t.get(&cid("01003")), Some(50.0));
        assert_eq!(t.years, vec![2014, 2015]);
    }

    #[test]
    fn single_file_is_identity() {
        let f = yearly(2013, &[("01001", 9.5), ("01003", 0.1)]);
        let t = union_average_targets(std::slice::from_ref(&f)).unwrap();
        let expected: BTreeMap<_, _> = f.rows.iter().cloned().collect();
        assert_eq!(t.entries(), &expected);
    }

    #[test]
    fn mixed_names_are_fatal() {
        let mut other = yearly(2015, &[("01001", 1.0)]);
        other.target_name = "diabetes".into();
        let err = union_average_targets(&[yearly(2014, &[("01001", 1.0)]), other]).unwrap_err();
        assert!(matches!(err, Error::MixedTargetName(..)));
        assert!(union_average_targets(&[]).is_err());
    }

    #[test]
    fn yearly_file_validation() {
        assert!(YearlyTargetFile::new("t", "", 2014, vec![(cid("01001"), 1.0), (cid("01001"), 2.0)]).is_err());
        assert!(YearlyTargetFile::new("t", "", 2014, vec![(cid("01001"), -1.0)]).is_err());
        assert!(YearlyTargetFile::new("t", "", 2014, vec![(cid("01001"), f64::NAN)]).is_err());
    }

    #[test]
    fn target_file_name_and_padding() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "lung_2014.csv", "fips,value\n1001,52.5\n06037,40\n");
        let f = YearlyTargetFile::load(&p, None, None).unwrap();
        assert_eq!(f.target_name, "lung");
        assert_eq!(f.year, 2014);
        assert_eq!(f.rows[0], (cid("01001"), 52.5));
        let p = write(dir.path(), "lung.csv", "fips,value\n1001,52.5\n");
        assert!(YearlyTargetFile::load(&p, None, None).is_err());
        assert_eq!(YearlyTargetFile::load(&p, None, Some(2013)).unwrap().year, 2013);
    }

    #[test]
    fn centroid_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.csv", "fips,lat,lon\n1001,32.5,-86.6\n");
        let t = CountyCentroidTable::load(&p).unwrap();
        assert!(t.contains(&cid("01001")));
        let p = write(dir.path(), "bad.csv", "fips,lat,lon\n1001,132.5,-86.6\n");
        assert!(CountyCentroidTable::load(&p).is_err());
    }
}
