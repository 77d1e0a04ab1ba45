//! Shared domain types: community identifiers, sentence records, embedding
//! vectors and matrices, and per-community target tables.
//!
//! Everything here is immutable once constructed and validated, so values can
//! be shared freely across worker threads.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A community key: a 5-character, zero-padded decimal code (US county FIPS).
///
/// Kept as a string so leading zeros survive CSV round trips.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CommunityId(String);

impl CommunityId {
    /// Accepts exactly five ASCII digits.
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        if code.len() == 5 && code.bytes().all(|b| b.is_ascii_digit()) {
            Ok(CommunityId(code))
        } else {
            Err(Error::InvalidCommunityId(code))
        }
    }

    /// Like [`CommunityId::new`] but left-pads shorter digit strings with
    /// zeros, which is how spreadsheet exports usually mangle FIPS codes.
    pub fn parse_padded(raw: &str) -> Result<Self> {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.len() > 5 || !trimmed.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::InvalidCommunityId(raw.to_string()));
        }
        Self::new(format!("{trimmed:0>5}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CommunityId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        CommunityId::new(value)
    }
}

impl From<CommunityId> for String {
    fn from(value: CommunityId) -> Self {
        value.0
    }
}

impl fmt::Display for CommunityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for CommunityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CommunityId::new(s)
    }
}

/// One short text and the community it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    #[serde(rename = "id")]
    pub sentence_id: String,
    pub text: String,
    #[serde(rename = "fips")]
    pub community: CommunityId,
}

impl SentenceRecord {
    pub fn new(sentence_id: impl Into<String>, text: impl Into<String>, community: CommunityId) -> Self {
        SentenceRecord {
            sentence_id: sentence_id.into(),
            text: text.into(),
            community,
        }
    }
}

/// A single D-dimensional embedding with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding vector".into()));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        EmbeddingVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

const MATRIX_MAGIC: &[u8; 8] = b"LCMAT\0\0\x01";

/// Dense row-major matrix of `f64`.
///
/// Used for the sentence matrix (S×D), the community matrix (A×D) and the
/// centroid matrix (M×D).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        EmbeddingMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: rows * cols,
            });
        }
        Ok(EmbeddingMatrix { rows, cols, data })
    }

    /// Stacks equally sized rows. `cols` is needed for the empty case.
    pub fn from_rows<R: AsRef<[f64]>>(cols: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(EmbeddingMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> EmbeddingMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        EmbeddingMatrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Binary layout: 8-byte magic, `u32` rows, `u32` cols (16-byte header),
    /// then row-major little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let rows = u32::try_from(self.rows).map_err(std::io::Error::other)?;
        let cols = u32::try_from(self.cols).map_err(std::io::Error::other)?;
        out.write_all(MATRIX_MAGIC)?;
        out.write_all(&rows.to_le_bytes())?;
        out.write_all(&cols.to_le_bytes())?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 16];
        input
            .read_exact(&mut header)
            .map_err(|e| Error::format("matrix file", e))?;
        if &header[..8] != MATRIX_MAGIC {
            return Err(Error::format("matrix file", "bad magic"));
        }
        let rows = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
        let mut bytes = Vec::new();
        input
            .read_to_end(&mut bytes)
            .map_err(|e| Error::format("matrix file", e))?;
        if bytes.len() != rows * cols * 8 {
            return Err(Error::format(
                "matrix file",
                format!("expected {} payload bytes, found {}", rows * cols * 8, bytes.len()),
            ));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(EmbeddingMatrix { rows, cols, data })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_binary(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_binary(std::io::BufReader::new(file))
    }
}

/// Arithmetic mean and sample standard deviation (n − 1 denominator; 0 for a
/// single value).
pub(crate) fn mean_and_stddev(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Community → target value for one target variable, with summary stats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TargetTableRepr")]
pub struct TargetTable {
    pub target_name: String,
    pub unit: String,
    entries: BTreeMap<CommunityId, f64>,
    mean: f64,
    stddev: f64,
    pub years: Vec<i32>,
}

#[derive(Deserialize)]
struct TargetTableRepr {
    target_name: String,
    unit: String,
    entries: BTreeMap<CommunityId, f64>,
    mean: f64,
    stddev: f64,
    years: Vec<i32>,
}

impl TryFrom<TargetTableRepr> for TargetTable {
    type Error = Error;

    fn try_from(repr: TargetTableRepr) -> Result<Self> {
        let table = TargetTable::new(repr.target_name, repr.unit, repr.entries, repr.years)?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300);
        if !close(table.mean, repr.mean) || !close(table.stddev, repr.stddev) {
            return Err(Error::format(
                "target table",
                "stored mean/stddev disagree with entries",
            ));
        }
        Ok(table)
    }
}

impl TargetTable {
    pub fn new(
        target_name: impl Into<String>,
        unit: impl Into<String>,
        entries: BTreeMap<CommunityId, f64>,
        years: Vec<i32>,
    ) -> Result<Self> {
        let target_name = target_name.into();
        if entries.is_empty() {
            return Err(Error::Empty(format!("target table {target_name:?} has no entries")));
        }
        if entries.values().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("target table {target_name:?}")));
        }
        let (mean, stddev) = mean_and_stddev(entries.values().copied());
        Ok(TargetTable {
            target_name,
            unit: unit.into(),
            entries,
            mean,
            stddev,
            years,
        })
    }

    pub fn entries(&self) -> &BTreeMap<CommunityId, f64> {
        &self.entries
    }

    pub fn get(&self, community: &CommunityId) -> Option<f64> {
        self.entries.get(community).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn stddev(&self) -> f64 {
        self.stddev
    }

    /// A copy of this table with every value replaced by `f(community, value)`.
    pub fn map_values(&self, mut f: impl FnMut(&CommunityId, f64) -> f64) -> Result<Self> {
        let entries = self.entries.iter().map(|(c, v)| (c.clone(), f(c, *v))).collect();
        TargetTable::new(self.target_name.clone(), self.unit.clone(), entries, self.years.clone())
    }
}

/// Outcome of cross-checking sentence communities against a target table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Communities with sentences but no target value.
    pub missing_target: Vec<CommunityId>,
    /// Communities with a target value but no sentences.
    pub missing_sentences: Vec<CommunityId>,
    pub duplicate_sentence_ids: Vec<String>,
    /// Communities having both sentences and a target, ascending.
    pub trainable: Vec<CommunityId>,
}

impl ValidationReport {
    /// Builds the report from the set of communities that have sentences.
    pub fn from_communities<'a>(
        with_sentences: impl IntoIterator<Item = &'a CommunityId>,
        targets: &TargetTable,
    ) -> Result<Self> {
        let have: BTreeSet<&CommunityId> = with_sentences.into_iter().collect();
        let mut report = ValidationReport::default();
        for c in &have {
            if targets.entries.contains_key(*c) {
                report.trainable.push((*c).clone());
            } else {
                report.missing_target.push((*c).clone());
            }
        }
        report.missing_sentences = targets
            .entries
            .keys()
            .filter(|c| !have.contains(c))
            .cloned()
            .collect();
        if report.trainable.is_empty() {
            return Err(Error::NoTrainableCommunities);
        }
        Ok(report)
    }

    pub fn has_warnings(&self) -> bool {
        !(self.missing_target.is_empty()
            && self.missing_sentences.is_empty()
            && self.duplicate_sentence_ids.is_empty())
    }
}

/// Checks records against a target table before any numeric work.
pub fn validate_dataset(records: &[SentenceRecord], targets: &TargetTable) -> Result<ValidationReport> {
    let mut report = ValidationReport::from_communities(records.iter().map(|r| &r.community), targets)?;
    let mut seen = HashSet::with_capacity(records.len());
    let mut dups = BTreeSet::new();
    for r in records {
        if !seen.insert(r.sentence_id.as_str()) {
            dups.insert(r.sentence_id.clone());
        }
    }
    report.duplicate_sentence_ids = dups.into_iter().collect();
    Ok(report)
}
