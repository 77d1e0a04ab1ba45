//! Tokenization and sentence-embedding composition.
//!
//! A sentence embedding is the arithmetic mean of the vectors of its unigrams
//! and adjacent-pair bigrams that the embedder knows. Two embedders are
//! provided: [`VectorLexicon`], loaded from a pretrained word2vec-style text
//! file, and [`HashingEmbedder`], which needs no model file.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{EmbeddingMatrix, EmbeddingVector, SentenceRecord};

/// Separator between the two halves of a bigram key in lexicon files.
pub const BIGRAM_SEPARATOR: char = '_';

/// Default OOV rate above which a corpus is rejected.
pub const MAX_OOV_RATE: f64 = 0.9;

/// Text → token sequence.
///
/// Tokens are whitespace-delimited. URLs and `@mentions` collapse to
/// placeholder tokens; surrounding punctuation (including `#`) is trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenizer {
    pub lowercase: bool,
    pub url_token: String,
    pub mention_token: String,
    pub strip_punctuation: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer {
            lowercase: true,
            url_token: "<url>".into(),
            mention_token: "<user>".into(),
            strip_punctuation: true,
        }
    }
}

fn is_strippable(c: char) -> bool {
    (c.is_ascii_punctuation() && c != '@')
        || matches!(c, '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2026}' | '\u{00AB}' | '\u{00BB}')
}

fn looks_like_url(token: &str) -> bool {
    let lower = token.to_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

impl Tokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split_whitespace().filter_map(|raw| self.normalize(raw)).collect()
    }

    fn normalize(&self, raw: &str) -> Option<String> {
        if raw == self.url_token || raw == self.mention_token {
            return Some(raw.to_string());
        }
        let token = if self.lowercase { raw.to_lowercase() } else { raw.to_string() };
        let trimmed = if self.strip_punctuation {
            token.trim_matches(is_strippable)
        } else {
            token.as_str()
        };
        if looks_like_url(trimmed) {
            return Some(self.url_token.clone());
        }
        if trimmed.len() > 1 && trimmed.starts_with('@') {
            return Some(self.mention_token.clone());
        }
        (!trimmed.is_empty()).then(|| trimmed.to_string())
    }

    pub fn is_placeholder(&self, token: &str) -> bool {
        token == self.url_token || token == self.mention_token
    }
}

/// Something that can turn a token sequence into a fixed-length vector by
/// averaging per-term vectors.
pub trait SentenceEmbedder: Sync {
    fn dim(&self) -> usize;

    /// Adds the vector of every known unigram and adjacent bigram in `tokens`
    /// into `acc` and returns how many were added.
    fn accumulate(&self, tokens: &[String], acc: &mut [f64]) -> usize;
}

/// Mean of the known unigram and bigram vectors; zero and `oov = true` when
/// nothing is known.
pub fn embed_sentence(tokens: &[String], embedder: &dyn SentenceEmbedder) -> (EmbeddingVector, bool) {
    let mut acc = vec![0.0; embedder.dim()];
    let n = embedder.accumulate(tokens, &mut acc);
    if n == 0 {
        return (EmbeddingVector::zeros(embedder.dim()), true);
    }
    let inv = 1.0 / n as f64;
    acc.iter_mut().for_each(|v| *v *= inv);
    (EmbeddingVector::new(acc).expect("lexicon vectors are finite"), false)
}

/// Pretrained unigram and bigram vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorLexicon {
    dim: usize,
    unigrams: HashMap<String, usize>,
    // bigram keys are `first\0second`
    bigrams: HashMap<String, usize>,
    vectors: Vec<f64>,
}

impl VectorLexicon {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("lexicon dimension must be positive".into()));
        }
        Ok(VectorLexicon {
            dim,
            unigrams: HashMap::new(),
            bigrams: HashMap::new(),
            vectors: Vec::new(),
        })
    }

    fn push(&mut self, vector: &[f64]) -> Result<usize> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("lexicon vector".into()));
        }
        let slot = self.vectors.len() / self.dim;
        self.vectors.extend_from_slice(vector);
        Ok(slot)
    }

    pub fn insert_unigram(&mut self, token: &str, vector: &[f64]) -> Result<()> {
        let slot = self.push(vector)?;
        self.unigrams.insert(token.to_string(), slot);
        Ok(())
    }

    pub fn insert_bigram(&mut self, first: &str, second: &str, vector: &[f64]) -> Result<()> {
        let slot = self.push(vector)?;
        self.bigrams.insert(bigram_key(first, second), slot);
        Ok(())
    }

    /// Routes a file key: exactly one interior separator makes a bigram.
    pub fn insert_key(&mut self, key: &str, vector: &[f64]) -> Result<()> {
        let mut parts = key.split(BIGRAM_SEPARATOR);
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => self.insert_bigram(a, b, vector),
            _ => self.insert_unigram(key, vector),
        }
    }

    fn slot(&self, slot: usize) -> &[f64] {
        &self.vectors[slot * self.dim..(slot + 1) * self.dim]
    }

    pub fn unigram(&self, token: &str) -> Option<&[f64]> {
        self.unigrams.get(token).map(|&s| self.slot(s))
    }

    pub fn bigram(&self, first: &str, second: &str) -> Option<&[f64]> {
        self.bigrams.get(&bigram_key(first, second)).map(|&s| self.slot(s))
    }

    pub fn len(&self) -> usize {
        self.unigrams.len() + self.bigrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parses word2vec text format: header `V D`, then `key v1 .. vD`.
    pub fn read_text<R: Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format("lexicon", "empty file"))?
            .map_err(|e| Error::format("lexicon", e))?;
        let mut fields = header.split_whitespace();
        let parse_usize = |f: Option<&str>| f.and_then(|s| s.parse::<usize>().ok());
        let (Some(count), Some(dim)) = (parse_usize(fields.next()), parse_usize(fields.next())) else {
            return Err(Error::format("lexicon", format!("bad header {header:?}")));
        };
        let mut lexicon = VectorLexicon::new(dim)?;
        let mut buf = Vec::with_capacity(dim);
        let mut seen = 0usize;
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::format("lexicon", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let key = fields.next().expect("non-empty line");
            buf.clear();
            for f in fields {
                buf.push(
                    f.parse::<f64>()
                        .map_err(|e| Error::format("lexicon", format!("line {}: {e}", lineno + 2)))?,
                );
            }
            lexicon
                .insert_key(key, &buf)
                .map_err(|e| Error::format("lexicon", format!("line {}: {e}", lineno + 2)))?;
            seen += 1;
        }
        if seen != count {
            return Err(Error::format("lexicon", format!("header says {count} entries, found {seen}")));
        }
        Ok(lexicon)
    }

    /// Loads a lexicon file; a `.gz` suffix means gzip-compressed.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "gz") {
            Self::read_text(flate2::read::MultiGzDecoder::new(file))
        } else {
            Self::read_text(file)
        }
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        let mut keyed: Vec<(String, usize)> = self
            .unigrams
            .iter()
            .map(|(k, &s)| (k.clone(), s))
            .chain(
                self.bigrams
                    .iter()
                    .map(|(k, &s)| (k.replacen('\0', &BIGRAM_SEPARATOR.to_string(), 1), s)),
            )
            .collect();
        keyed.sort_by_key(|(_, s)| *s);
        for (key, slot) in keyed {
            write!(out, "{key}")?;
            for v in self.slot(slot) {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }
}

fn bigram_key(first: &str, second: &str) -> String {
    format!("{first}\0{second}")
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
}

impl SentenceEmbedder for VectorLexicon {
    fn dim(&self) -> usize {
        self.dim
    }

    fn accumulate(&self, tokens: &[String], acc: &mut [f64]) -> usize {
        let mut n = 0;
        for t in tokens {
            if let Some(v) = self.unigram(t) {
                add_into(acc, v);
                n += 1;
            }
        }
        if !self.bigrams.is_empty() {
            let mut key = String::new();
            for pair in tokens.windows(2) {
                key.clear();
                key.push_str(&pair[0]);
                key.push('\0');
                key.push_str(&pair[1]);
                if let Some(&slot) = self.bigrams.get(key.as_str()) {
                    add_into(acc, self.slot(slot));
                    n += 1;
                }
            }
        }
        n
    }
}

/// Deterministic stand-in for a pretrained model: each unigram and bigram maps
/// to a pseudo-random unit vector derived from its text and a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashingEmbedder {
    pub dim: usize,
    pub seed: u64,
}

/// 64-bit FNV-1a; stable across platforms and releases, unlike `DefaultHasher`.
pub(crate) fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl HashingEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        Ok(HashingEmbedder { dim, seed })
    }

    fn term_seed(&self, first: &str, second: Option<&str>) -> u64 {
        let mut h = fnv1a(&self.seed.to_le_bytes(), 0xcbf2_9ce4_8422_2325);
        h = fnv1a(first.as_bytes(), h);
        if let Some(second) = second {
            h = fnv1a(&[0xff], h);
            h = fnv1a(second.as_bytes(), h);
        }
        h
    }

    fn add_term(&self, seed: u64, acc: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x / norm);
    }

    /// The unit vector assigned to a unigram.
    pub fn unigram_vector(&self, token: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.add_term(self.term_seed(token, None), &mut v);
        v
    }
}

impl SentenceEmbedder for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn accumulate(&self, tokens: &[String], acc: &mut [f64]) -> usize {
        for t in tokens {
            self.add_term(self.term_seed(t, None), acc);
        }
        for pair in tokens.windows(2) {
            self.add_term(self.term_seed(&pair[0], Some(&pair[1])), acc);
        }
        tokens.len() + tokens.len().saturating_sub(1)
    }
}

/// Sentence matrix plus OOV bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedCorpus {
    pub matrix: EmbeddingMatrix,
    pub oov_count: usize,
}

impl EmbeddedCorpus {
    pub fn oov_rate(&self) -> f64 {
        if self.matrix.rows() == 0 {
            0.0
        } else {
            self.oov_count as f64 / self.matrix.rows() as f64
        }
    }

    /// Rejects corpora where more than `limit` of the sentences are OOV.
    pub fn check_oov_rate(&self, limit: f64) -> Result<()> {
        let rate = self.oov_rate();
        if rate > limit {
            return Err(Error::OovRateTooHigh { rate, limit });
        }
        Ok(())
    }
}

/// Embeds every record; row `i` corresponds to `records[i]`.
pub fn embed_corpus(
    records: &[SentenceRecord],
    tokenizer: &Tokenizer,
    embedder: &dyn SentenceEmbedder,
) -> EmbeddedCorpus {
    let dim = embedder.dim();
    let rows: Vec<(EmbeddingVector, bool)> = records
        .par_iter()
        .map(|r| embed_sentence(&tokenizer.tokenize(&r.text), embedder))
        .collect();
    let oov_count = rows.iter().filter(|(_, oov)| *oov).count();
    let matrix = EmbeddingMatrix::from_rows(dim, &rows.iter().map(|(v, _)| v.as_slice()).collect::<Vec<_>>())
        .expect("embedder returns vectors of its own dimension");
    EmbeddedCorpus { matrix, oov_count }
}
