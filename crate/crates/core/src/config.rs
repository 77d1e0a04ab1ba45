//! Pipeline configuration.
//!
//! Files use one `key = value` pair per line; `#` starts a comment. Unknown
//! keys are rejected. Command-line values override file values, which override
//! the defaults.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::aggregate::DEFAULT_MIN_SENTENCES;
use crate::cluster::{DEFAULT_CLUSTERS, DEFAULT_MAX_ITER, DEFAULT_SUBSAMPLE, DEFAULT_TOL};
use crate::embed::MAX_OOV_RATE;
use crate::error::{Error, Result};
use crate::evaluate::DEFAULT_QUANTILES;
use crate::ingest::InputMode;
use crate::regression::{default_lambda_grid, DEFAULT_FOLDS, DEFAULT_INNER_FOLDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    /// Pretrained vectors from `lexicon`.
    Lexicon,
    /// Seeded hashing embedder of dimension `hash_dim`.
    Hashing,
}

impl std::str::FromStr for EmbedderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lexicon" => Ok(EmbedderKind::Lexicon),
            "hashing" => Ok(EmbedderKind::Hashing),
            other => Err(Error::Config(format!("unknown embedder {other:?} (expected lexicon or hashing)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub workdir: PathBuf,
    pub sentences: Option<PathBuf>,
    pub targets: Vec<PathBuf>,
    pub centroids: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub input_mode: InputMode,
    pub max_distance_km: Option<f64>,
    pub embedder: EmbedderKind,
    pub hash_dim: usize,
    pub hash_seed: u64,
    pub max_oov_rate: f64,
    pub min_sentences: usize,
    pub folds: usize,
    pub inner_folds: usize,
    pub lambda_grid: Vec<f64>,
    pub quantiles: usize,
    pub clusters: usize,
    pub subsample: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    /// Clusters reported per target, split evenly between top and bottom.
    pub rank_n: usize,
    pub top_terms: usize,
    /// Base seed; fold, subsample, k-means and synth seeds derive from it.
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub verbose: bool,
    pub synth_dir: Option<PathBuf>,
    pub synth_communities: usize,
    pub synth_sentences: usize,
    pub synth_vocab: usize,
    pub synth_topics: usize,
    pub synth_snr: Option<f64>,
    pub synth_coords: bool,
    pub synth_target: String,
    pub synth_year: i32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            workdir: PathBuf::from("work"),
            sentences: None,
            targets: Vec::new(),
            centroids: None,
            lexicon: None,
            stopwords: None,
            input_mode: InputMode::Fips,
            max_distance_km: None,
            embedder: EmbedderKind::Lexicon,
            hash_dim: 64,
            hash_seed: 7,
            max_oov_rate: MAX_OOV_RATE,
            min_sentences: DEFAULT_MIN_SENTENCES,
            folds: DEFAULT_FOLDS,
            inner_folds: DEFAULT_INNER_FOLDS,
            lambda_grid: default_lambda_grid(),
            quantiles: DEFAULT_QUANTILES,
            clusters: DEFAULT_CLUSTERS,
            subsample: DEFAULT_SUBSAMPLE,
            kmeans_max_iter: DEFAULT_MAX_ITER,
            kmeans_tol: DEFAULT_TOL,
            rank_n: 4,
            top_terms: 30,
            seed: 42,
            workers: 0,
            verbose: false,
            synth_dir: None,
            synth_communities: 300,
            synth_sentences: 200,
            synth_vocab: 2000,
            synth_topics: 24,
            synth_snr: Some(10.0),
            synth_coords: false,
            synth_target: "synthetic".into(),
            synth_year: 2014,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid value {value:?} for {key} (expected true or false)"))),
    }
}

fn optional_f64(key: &str, value: &str) -> Result<Option<f64>> {
    match value {
        "none" | "" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl PipelineConfig {
    /// Every accepted key.
    pub const KEYS: &'static [&'static str] = &[
        "workdir",
        "sentences",
        "targets",
        "centroids",
        "lexicon",
        "stopwords",
        "input_mode",
        "max_distance_km",
        "embedder",
        "hash_dim",
        "hash_seed",
        "max_oov_rate",
        "min_sentences",
        "folds",
        "inner_folds",
        "lambda_grid",
        "quantiles",
        "clusters",
        "subsample",
        "kmeans_max_iter",
        "kmeans_tol",
        "rank_n",
        "top_terms",
        "seed",
        "workers",
        "verbose",
        "synth_dir",
        "synth_communities",
        "synth_sentences",
        "synth_vocab",
        "synth_topics",
        "synth_snr",
        "synth_coords",
        "synth_target",
        "synth_year",
    ];

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "workdir" => self.workdir = PathBuf::from(v),
            "sentences" => self.sentences = optional_path(v),
            "targets" => self.targets = list(key, v)?,
            "centroids" => self.centroids = optional_path(v),
            "lexicon" => self.lexicon = optional_path(v),
            "stopwords" => self.stopwords = optional_path(v),
            "input_mode" => self.input_mode = v.parse().map_err(|_| Error::Config(format!("invalid input_mode {v:?}")))?,
            "max_distance_km" => self.max_distance_km = optional_f64(key, v)?,
            "embedder" => self.embedder = v.parse()?,
            "hash_dim" => self.hash_dim = parse(key, v)?,
            "hash_seed" => self.hash_seed = parse(key, v)?,
            "max_oov_rate" => self.max_oov_rate = parse(key, v)?,
            "min_sentences" => self.min_sentences = parse(key, v)?,
            "folds" => self.folds = parse(key, v)?,
            "inner_folds" => self.inner_folds = parse(key, v)?,
            "lambda_grid" => self.lambda_grid = list(key, v)?,
            "quantiles" => self.quantiles = parse(key, v)?,
            "clusters" => self.clusters = parse(key, v)?,
            "subsample" => self.subsample = parse(key, v)?,
            "kmeans_max_iter" => self.kmeans_max_iter = parse(key, v)?,
            "kmeans_tol" => self.kmeans_tol = parse(key, v)?,
            "rank_n" => self.rank_n = parse(key, v)?,
            "top_terms" => self.top_terms = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "workers" => self.workers = parse(key, v)?,
            "verbose" => self.verbose = parse_bool(key, v)?,
            "synth_dir" => self.synth_dir = optional_path(v),
            "synth_communities" => self.synth_communities = parse(key, v)?,
            "synth_sentences" => self.synth_sentences = parse(key, v)?,
            "synth_vocab" => self.synth_vocab = parse(key, v)?,
            "synth_topics" => self.synth_topics = parse(key, v)?,
            "synth_snr" => self.synth_snr = optional_f64(key, v)?,
            "synth_coords" => self.synth_coords = parse_bool(key, v)?,
            "synth_target" => self.synth_target = v.to_string(),
            "synth_year" => self.synth_year = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` text on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip_prefix(&e))))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PipelineConfig::from_text(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {assignment:?}")))?;
        self.set(key.trim(), value)
    }

    /// Range checks that don't need any files.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hash_dim == 0 {
            return bad("hash_dim must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.max_oov_rate) {
            return bad("max_oov_rate must lie in [0, 1]".into());
        }
        if self.min_sentences == 0 {
            return bad("min_sentences must be at least 1".into());
        }
        if self.folds < 2 {
            return bad("folds must be at least 2".into());
        }
        if self.inner_folds < 2 {
            return bad("inner_folds must be at least 2".into());
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return bad("lambda_grid must be a non-empty list of positive values".into());
        }
        if self.quantiles < 2 {
            return bad("quantiles must be at least 2".into());
        }
        if self.clusters == 0 || self.subsample == 0 {
            return bad("clusters and subsample must be positive".into());
        }
        if self.kmeans_max_iter == 0 || !(self.kmeans_tol >= 0.0) {
            return bad("kmeans_max_iter must be positive and kmeans_tol non-negative".into());
        }
        if self.max_distance_km.is_some_and(|d| !(d > 0.0)) {
            return bad("max_distance_km must be positive".into());
        }
        Ok(())
    }

    pub fn fold_seed(&self) -> u64 {
        self.seed
    }

    pub fn subsample_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    pub fn kmeans_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }

    pub fn synth_seed(&self) -> u64 {
        self.seed.wrapping_add(3)
    }

    pub fn synth_dir(&self) -> PathBuf {
        self.synth_dir.clone().unwrap_or_else(|| self.workdir.join("synth"))
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
