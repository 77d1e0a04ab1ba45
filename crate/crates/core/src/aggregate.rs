//! Mean-pooling of sentence embeddings into one feature row per community.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::types::{CommunityId, EmbeddingMatrix, SentenceRecord};

/// Records per reduction chunk. Fixed so the summation order, and therefore
/// every bit of the result, does not depend on how many threads run.
pub const REDUCTION_CHUNK: usize = 4096;

pub const DEFAULT_MIN_SENTENCES: usize = 50;

/// The A×D community feature matrix with per-community sentence counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityFeatures {
    communities: Vec<CommunityId>,
    matrix: EmbeddingMatrix,
    counts: Vec<usize>,
}

impl CommunityFeatures {
    pub fn new(communities: Vec<CommunityId>, matrix: EmbeddingMatrix, counts: Vec<usize>) -> Result<Self> {
        if communities.len() != matrix.rows() || counts.len() != matrix.rows() {
            return Err(Error::LengthMismatch {
                left: communities.len(),
                right: matrix.rows(),
            });
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidArgument("community with zero sentences".into()));
        }
        if !matrix.all_finite() {
            return Err(Error::NonFinite("community features".into()));
        }
        if communities.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("communities must be strictly ascending".into()));
        }
        Ok(CommunityFeatures {
            communities,
            matrix,
            counts,
        })
    }

    pub fn communities(&self) -> &[CommunityId] {
        &self.communities
    }

    pub fn matrix(&self) -> &EmbeddingMatrix {
        &self.matrix
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn count(&self, community: &CommunityId) -> Option<usize> {
        self.index_of(community).map(|i| self.counts[i])
    }

    pub fn index_of(&self, community: &CommunityId) -> Option<usize> {
        self.communities.binary_search(community).ok()
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    /// Keeps only the listed communities (which must all be present), in
    /// ascending order.
    pub fn restrict_to(&self, keep: &[CommunityId]) -> Result<Self> {
        let mut idx = Vec::with_capacity(keep.len());
        for c in keep {
            idx.push(
                self.index_of(c)
                    .ok_or_else(|| Error::InvalidArgument(format!("community {c} has no features")))?,
            );
        }
        idx.sort_unstable();
        idx.dedup();
        Ok(CommunityFeatures {
            communities: idx.iter().map(|&i| self.communities[i].clone()).collect(),
            matrix: self.matrix.select_rows(&idx),
            counts: idx.iter().map(|&i| self.counts[i]).collect(),
        })
    }

    /// Writes `<stem>.bin` (binary matrix) and `<stem>.csv` (`fips,count`).
    pub fn save(&self, stem: &Path) -> Result<()> {
        let (bin, csv) = feature_paths(stem);
        self.matrix.save(&bin)?;
        let file = std::fs::File::create(&csv).map_err(|e| Error::io(&csv, e))?;
        let mut out = std::io::BufWriter::new(file);
        let io = |e| Error::io(&csv, e);
        writeln!(out, "fips,count").map_err(io)?;
        for (c, n) in self.communities.iter().zip(&self.counts) {
            writeln!(out, "{c},{n}").map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn load(stem: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            fips: String,
            count: usize,
        }
        let (bin, csv_path) = feature_paths(stem);
        let matrix = EmbeddingMatrix::load(&bin)?;
        let mut reader = csv::Reader::from_path(&csv_path)
            .map_err(|e| Error::format(format!("feature index {}", csv_path.display()), e))?;
        let mut communities = Vec::new();
        let mut counts = Vec::new();
        for row in reader.deserialize::<Row>() {
            let row = row.map_err(|e| Error::format(format!("feature index {}", csv_path.display()), e))?;
            communities.push(CommunityId::new(row.fips)?);
            counts.push(row.count);
        }
        Self::new(communities, matrix, counts)
    }
}

/// `<stem>.bin` and `<stem>.csv`.
pub fn feature_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("csv"))
}

type Partial = BTreeMap<CommunityId, (usize, Vec<f64>)>;

fn chunk_sums(records: &[SentenceRecord], rows: &EmbeddingMatrix, offset: usize) -> Partial {
    let mut sums: Partial = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let entry = sums
            .entry(r.community.clone())
            .or_insert_with(|| (0, vec![0.0; rows.cols()]));
        entry.0 += 1;
        for (a, x) in entry.1.iter_mut().zip(rows.row(offset + i)) {
            *a += x;
        }
    }
    sums
}

/// Averages `embeddings` rows per community; output is ordered by ascending
/// community code.
///
/// Runs on the current rayon pool. Partial sums are computed over fixed-size
/// chunks and merged in chunk order, so the result is bit-identical for any
/// pool size.
pub fn aggregate(records: &[SentenceRecord], embeddings: &EmbeddingMatrix) -> Result<CommunityFeatures> {
    if records.len() != embeddings.rows() {
        return Err(Error::LengthMismatch {
            left: records.len(),
            right: embeddings.rows(),
        });
    }
    let partials: Vec<Partial> = records
        .par_chunks(REDUCTION_CHUNK)
        .enumerate()
        .map(|(k, chunk)| chunk_sums(chunk, embeddings, k * REDUCTION_CHUNK))
        .collect();

    let mut total: Partial = BTreeMap::new();
    for partial in partials {
        for (c, (n, sum)) in partial {
            match total.get_mut(&c) {
                Some((tn, tsum)) => {
                    *tn += n;
                    tsum.iter_mut().zip(&sum).for_each(|(a, b)| *a += b);
                }
                None => {
                    total.insert(c, (n, sum));
                }
            }
        }
    }

    let dim = embeddings.cols();
    let mut communities = Vec::with_capacity(total.len());
    let mut counts = Vec::with_capacity(total.len());
    let mut data = Vec::with_capacity(total.len() * dim);
    for (c, (n, sum)) in total {
        let inv = 1.0 / n as f64;
        data.extend(sum.iter().map(|s| s * inv));
        communities.push(c);
        counts.push(n);
    }
    let matrix = EmbeddingMatrix::from_vec(communities.len(), dim, data)?;
    CommunityFeatures::new(communities, matrix, counts)
}

/// Drops communities with fewer than `min_sentences` sentences.
pub fn min_count_filter(features: &CommunityFeatures, min_sentences: usize) -> Result<CommunityFeatures> {
    if min_sentences == 0 {
        return Err(Error::InvalidArgument("min_sentences must be at least 1".into()));
    }
    let keep: Vec<CommunityId> = features
        .communities
        .iter()
        .zip(&features.counts)
        .filter(|(_, &n)| n >= min_sentences)
        .map(|(c, _)| c.clone())
        .collect();
    if keep.is_empty() {
        return Err(Error::Empty(format!(
            "no community has at least {min_sentences} sentences"
        )));
    }
    features.restrict_to(&keep)
}
