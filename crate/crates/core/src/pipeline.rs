//! Pipeline stages operating on a working directory.
//!
//! Layout under the workdir:
//!
//! ```text
//! sentences.jsonl                 normalized sentence store
//! ingest_report.json
//! targets/<name>.json             union-averaged target tables
//! features.bin, features.csv      community feature matrix and index
//! embed_report.json
//! validation_report.json
//! models/<name>.model.json
//! reports/<name>.evaluation.json
//! reports/<name>.confusion.csv
//! reports/<name>.predictions.csv
//! reports/<name>.validation.json
//! clusters/                       k-means cache shared by every target
//! rankings/<name>.ranking.json
//! rankings/<name>/{top,bottom}_<i>_cluster_<id>.csv
//! ```
//!
//! Every stage runs inside a rayon pool sized by `workers`. Outputs depend only
//! on inputs and configuration, never on the pool size.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate, feature_paths, min_count_filter, CommunityFeatures};
use crate::cluster::{kmeans_cosine, score_clusters, subsample, top_terms, write_terms_csv, ClusterModel, ClusterScore, KMeansSettings};
use crate::config::{EmbedderKind, PipelineConfig};
use crate::embed::{embed_corpus, fnv1a, HashingEmbedder, SentenceEmbedder, Tokenizer, VectorLexicon};
use crate::error::{Error, Result};
use crate::evaluate::EvaluationReport;
use crate::ingest::{
    read_sentences, read_sentences_with, union_average_targets, write_sentences_jsonl, CountyCentroidTable,
    DropCounts, IngestOptions, InputMode, YearlyTargetFile,
};
use crate::regression::{cross_validated_fit, make_folds, OutOfFoldPredictions, RidgeModel, RidgeSettings};
use crate::stopwords::StopwordSet;
use crate::synth::{SynthConfig, SynthFiles};
use crate::types::{validate_dataset, SentenceRecord, TargetTable, ValidationReport};

/// Paths inside a working directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workdir {
    root: PathBuf,
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workdir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn sentences(&self) -> PathBuf {
        self.root.join("sentences.jsonl")
    }

    pub fn ingest_report(&self) -> PathBuf {
        self.root.join("ingest_report.json")
    }

    pub fn targets_dir(&self) -> PathBuf {
        self.root.join("targets")
    }

    pub fn target(&self, name: &str) -> PathBuf {
        self.targets_dir().join(format!("{name}.json"))
    }

    pub fn features_stem(&self) -> PathBuf {
        self.root.join("features")
    }

    pub fn embed_report(&self) -> PathBuf {
        self.root.join("embed_report.json")
    }

    pub fn validation_report(&self) -> PathBuf {
        self.root.join("validation_report.json")
    }

    pub fn model(&self, name: &str) -> PathBuf {
        self.root.join("models").join(format!("{name}.model.json"))
    }

    fn report(&self, name: &str, suffix: &str) -> PathBuf {
        self.root.join("reports").join(format!("{name}.{suffix}"))
    }

    pub fn evaluation(&self, name: &str) -> PathBuf {
        self.report(name, "evaluation.json")
    }

    pub fn confusion(&self, name: &str) -> PathBuf {
        self.report(name, "confusion.csv")
    }

    pub fn predictions(&self, name: &str) -> PathBuf {
        self.report(name, "predictions.csv")
    }

    pub fn target_validation(&self, name: &str) -> PathBuf {
        self.report(name, "validation.json")
    }

    pub fn clusters_dir(&self) -> PathBuf {
        self.root.join("clusters")
    }

    pub fn ranking(&self, name: &str) -> PathBuf {
        self.root.join("rankings").join(format!("{name}.ranking.json"))
    }

    pub fn terms_dir(&self, name: &str) -> PathBuf {
        self.root.join("rankings").join(name)
    }

    /// Names of the ingested targets, sorted.
    pub fn target_names(&self) -> Result<Vec<String>> {
        let dir = self.targets_dir();
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut names = Vec::new();
        for entry in std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    names.push(stem.to_string());
                }
            }
        }
        names.sort();
        Ok(names)
    }

    pub fn load_target(&self, name: &str) -> Result<TargetTable> {
        let path = self.target(name);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(format!("target table {}", path.display()), e))
    }

    /// Records from the sentence store; an absent or empty store is an error.
    pub fn load_sentences(&self) -> Result<Vec<SentenceRecord>> {
        let path = self.sentences();
        if !path.is_file() {
            return Err(Error::Empty(format!(
                "no sentence store at {}; run ingest first",
                path.display()
            )));
        }
        let records = read_sentences(&path, InputMode::Fips, None)?.records;
        if records.is_empty() {
            return Err(Error::Empty(format!("sentence store {} is empty", path.display())));
        }
        Ok(records)
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let json = serde_json::to_string_pretty(value).map_err(|e| Error::format("json output", e))?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

/// Runs `f` on a rayon pool with `workers` threads (0 = one per core).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

fn note(cfg: &PipelineConfig, msg: impl fmt::Display) {
    if cfg.verbose {
        eprintln!("[langcorr] {msg}");
    }
}

/// Identifies the embedder so cached clusters are only reused with the same one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmbedderDescriptor {
    Hashing { dim: usize, seed: u64 },
    Lexicon { path: PathBuf, dim: usize, entries: usize },
}

/// Builds the configured embedder.
pub fn build_embedder(cfg: &PipelineConfig) -> Result<(Box<dyn SentenceEmbedder>, EmbedderDescriptor)> {
    match cfg.embedder {
        EmbedderKind::Hashing => {
            let e = HashingEmbedder::new(cfg.hash_dim, cfg.hash_seed)?;
            Ok((Box::new(e), EmbedderDescriptor::Hashing { dim: e.dim, seed: e.seed }))
        }
        EmbedderKind::Lexicon => {
            let path = cfg
                .lexicon
                .clone()
                .ok_or_else(|| Error::Config("embedder = lexicon needs a lexicon path".into()))?;
            let lex = VectorLexicon::load(&path)?;
            let desc = EmbedderDescriptor::Lexicon {
                path,
                dim: lex.dim(),
                entries: lex.len(),
            };
            Ok((Box::new(lex), desc))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub name: String,
    pub years: Vec<i32>,
    pub communities: usize,
    pub mean: f64,
    pub stddev: f64,
}

impl TargetSummary {
    fn of(t: &TargetTable) -> Self {
        TargetSummary {
            name: t.target_name.clone(),
            years: t.years.clone(),
            communities: t.len(),
            mean: t.mean(),
            stddev: t.stddev(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub source: PathBuf,
    pub total_rows: usize,
    pub kept: usize,
    pub dropped: DropCounts,
    pub communities: usize,
    pub targets: Vec<TargetSummary>,
}

impl fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "source       {}", self.source.display())?;
        writeln!(f, "rows         {}", self.total_rows)?;
        writeln!(f, "kept         {}", self.kept)?;
        let d = &self.dropped;
        writeln!(
            f,
            "dropped      {} (unparseable {}, bad fips {}, unknown fips {}, bad coords {}, outside {})",
            d.total(),
            d.unparseable,
            d.bad_fips,
            d.unknown_fips,
            d.bad_coords,
            d.outside
        )?;
        write!(f, "communities  {}", self.communities)?;
        for t in &self.targets {
            write!(
                f,
                "\ntarget       {} years {:?}: {} communities, mean {:.4}, sd {:.4}",
                t.name, t.years, t.communities, t.mean, t.stddev
            )?;
        }
        Ok(())
    }
}

fn target_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.extension().is_some_and(|e| e == "csv"))
                .collect();
            inner.sort();
            out.extend(inner);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Reads the raw sentences and target files into the workdir.
pub fn ingest(cfg: &PipelineConfig) -> Result<IngestSummary> {
    cfg.validate()?;
    let source = cfg
        .sentences
        .clone()
        .ok_or_else(|| Error::Config("no sentence file configured (set sentences)".into()))?;
    let centroids = cfg.centroids.as_deref().map(CountyCentroidTable::load).transpose()?;
    let wd = Workdir::new(&cfg.workdir);
    with_workers(cfg.workers, || {
        let opts = IngestOptions {
            mode: cfg.input_mode,
            max_distance_km: cfg.max_distance_km,
        };
        let outcome = read_sentences_with(&source, opts, centroids.as_ref())?;
        note(cfg, format!("read {} rows from {}", outcome.total_rows, source.display()));
        if outcome.records.is_empty() {
            return Err(Error::Empty(format!("no usable sentences in {}", source.display())));
        }
        ensure_dir(wd.root())?;
        write_sentences_jsonl(&wd.sentences(), &outcome.records)?;

        let mut grouped: BTreeMap<String, Vec<YearlyTargetFile>> = BTreeMap::new();
        for path in target_files(&cfg.targets)? {
            let file = YearlyTargetFile::load(&path, None, None)?;
            grouped.entry(file.target_name.clone()).or_default().push(file);
        }
        let mut targets = Vec::new();
        for files in grouped.values() {
            let table = union_average_targets(files)?;
            write_json(&wd.target(&table.target_name), &table)?;
            note(cfg, format!("target {} from {} files", table.target_name, files.len()));
            targets.push(TargetSummary::of(&table));
        }

        let communities: std::collections::BTreeSet<_> = outcome.records.iter().map(|r| &r.community).collect();
        let summary = IngestSummary {
            source: source.clone(),
            total_rows: outcome.total_rows,
            kept: outcome.records.len(),
            dropped: outcome.dropped,
            communities: communities.len(),
            targets,
        };
        write_json(&wd.ingest_report(), &summary)?;
        Ok(summary)
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedSummary {
    pub sentences: usize,
    pub oov_sentences: usize,
    pub oov_rate: f64,
    pub embedder: EmbedderDescriptor,
    pub dim: usize,
    pub communities_before_filter: usize,
    pub communities: usize,
    pub min_sentences: usize,
    pub features: PathBuf,
}

impl fmt::Display for EmbedSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sentences    {}", self.sentences)?;
        writeln!(f, "oov          {} ({:.2}%)", self.oov_sentences, 100.0 * self.oov_rate)?;
        writeln!(f, "dimension    {}", self.dim)?;
        writeln!(
            f,
            "communities  {} kept of {} (min {} sentences)",
            self.communities, self.communities_before_filter, self.min_sentences
        )?;
        write!(f, "features     {}", self.features.display())
    }
}

/// Embeds every stored sentence and writes the community feature matrix.
pub fn embed_aggregate(cfg: &PipelineConfig) -> Result<EmbedSummary> {
    cfg.validate()?;
    let wd = Workdir::new(&cfg.workdir);
    let records = wd.load_sentences()?;
    let (embedder, descriptor) = build_embedder(cfg)?;
    with_workers(cfg.workers, || {
        let corpus = embed_corpus(&records, &Tokenizer::default(), embedder.as_ref());
        note(cfg, format!("embedded {} sentences", records.len()));
        corpus.check_oov_rate(cfg.max_oov_rate)?;
        let all = aggregate(&records, &corpus.matrix)?;
        let kept = min_count_filter(&all, cfg.min_sentences)?;
        kept.save(&wd.features_stem())?;
        let summary = EmbedSummary {
            sentences: records.len(),
            oov_sentences: corpus.oov_count,
            oov_rate: corpus.oov_rate(),
            embedder: descriptor.clone(),
            dim: kept.dim(),
            communities_before_filter: all.len(),
            communities: kept.len(),
            min_sentences: cfg.min_sentences,
            features: feature_paths(&wd.features_stem()).0,
        };
        write_json(&wd.embed_report(), &summary)?;
        Ok(summary)
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub target: String,
    pub trainable: usize,
    pub missing_target: usize,
    pub missing_sentences: usize,
    pub folds: usize,
    pub lambdas: Vec<f64>,
    pub evaluation: EvaluationReport,
    pub model: PathBuf,
}

impl fmt::Display for FitSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "trainable    {} (no target {}, no sentences {})",
            self.trainable, self.missing_target, self.missing_sentences
        )?;
        let lambdas: Vec<String> = self.lambdas.iter().map(|l| format!("{l:.3e}")).collect();
        writeln!(f, "lambda/fold  {}", lambdas.join(" "))?;
        writeln!(f, "{}", self.evaluation)?;
        write!(f, "model        {}", self.model.display())
    }
}

/// Fits the cross-validated ridge model for one target and evaluates its
/// out-of-fold predictions.
pub fn fit(cfg: &PipelineConfig, target: &str) -> Result<FitSummary> {
    cfg.validate()?;
    let wd = Workdir::new(&cfg.workdir);
    let features = CommunityFeatures::load(&wd.features_stem())?;
    let targets = wd.load_target(target)?;
    with_workers(cfg.workers, || {
        let report = ValidationReport::from_communities(features.communities(), &targets)?;
        write_json(&wd.target_validation(target), &report)?;
        if report.has_warnings() {
            note(
                cfg,
                format!(
                    "{target}: {} communities without target, {} without sentences",
                    report.missing_target.len(),
                    report.missing_sentences.len()
                ),
            );
        }
        let x = features.restrict_to(&report.trainable)?;
        let entries = report
            .trainable
            .iter()
            .map(|c| (c.clone(), targets.get(c).expect("trainable communities have targets")))
            .collect();
        let y = TargetTable::new(target, targets.unit.clone(), entries, targets.years.clone())?;
        let plan = make_folds(&report.trainable, cfg.folds, cfg.fold_seed())?;
        let settings = RidgeSettings {
            lambda_grid: cfg.lambda_grid.clone(),
            inner_folds: cfg.inner_folds,
        };
        let (model, oof) = cross_validated_fit(&x, &y, &plan, &settings)?;
        let evaluation = EvaluationReport::compute(target, &oof.y_true, &oof.y_pred, cfg.quantiles)?;

        let model_path = wd.model(target);
        ensure_parent(&model_path)?;
        model.save_json(&model_path)?;
        ensure_parent(&wd.predictions(target))?;
        oof.save_csv(&wd.predictions(target))?;
        evaluation.save_json(&wd.evaluation(target))?;
        evaluation.save_confusion_csv(&wd.confusion(target))?;
        Ok(FitSummary {
            target: target.to_string(),
            trainable: report.trainable.len(),
            missing_target: report.missing_target.len(),
            missing_sentences: report.missing_sentences.len(),
            folds: cfg.folds,
            lambdas: model.lambdas(),
            evaluation,
            model: model_path,
        })
    })?
}

/// Recomputes the evaluation from stored out-of-fold predictions.
pub fn evaluate(cfg: &PipelineConfig, target: &str) -> Result<EvaluationReport> {
    cfg.validate()?;
    let wd = Workdir::new(&cfg.workdir);
    let oof = OutOfFoldPredictions::load_csv(&wd.predictions(target))?;
    let report = EvaluationReport::compute(target, &oof.y_true, &oof.y_pred, cfg.quantiles)?;
    report.save_json(&wd.evaluation(target))?;
    report.save_confusion_csv(&wd.confusion(target))?;
    Ok(report)
}

/// What a cluster cache was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ClusterCacheKey {
    corpus_size: usize,
    corpus_digest: String,
    q: usize,
    subsample_seed: u64,
    settings: KMeansSettings,
    embedder: EmbedderDescriptor,
}

fn digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:016x}", fnv1a(&bytes, 0xcbf2_9ce4_8422_2325)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub target: String,
    pub clusters: usize,
    pub subsample: usize,
    pub empty_clusters: usize,
    pub cache_reused: bool,
    pub top: Vec<ClusterScore>,
    pub bottom: Vec<ClusterScore>,
    pub ranking: PathBuf,
}

fn write_cluster_rows(f: &mut fmt::Formatter<'_>, rows: &[ClusterScore]) -> fmt::Result {
    for c in rows {
        let terms: Vec<&str> = c.top_terms.iter().take(8).map(|(t, _)| t.as_str()).collect();
        write!(f, "\n  cluster {:>5}  size {:>7}  score {:>10.4}  {}", c.cluster, c.size, c.score, terms.join(" "))?;
    }
    Ok(())
}

impl fmt::Display for RankSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "clusters     {} over {} sentences ({} empty, cache {})",
            self.clusters,
            self.subsample,
            self.empty_clusters,
            if self.cache_reused { "reused" } else { "rebuilt" }
        )?;
        write!(f, "highest")?;
        write_cluster_rows(f, &self.top)?;
        write!(f, "\nlowest")?;
        write_cluster_rows(f, &self.bottom)?;
        write!(f, "\nranking      {}", self.ranking.display())
    }
}

/// Clusters the sentence subsample (reusing a matching cache) and ranks the
/// clusters by the mean prediction of the model for `target`.
///
/// `model_path` overrides the workdir's model for `target`.
pub fn rank(cfg: &PipelineConfig, target: &str, model_path: Option<&Path>) -> Result<RankSummary> {
    cfg.validate()?;
    let wd = Workdir::new(&cfg.workdir);
    let model_path = model_path.map(Path::to_path_buf).unwrap_or_else(|| wd.model(target));
    let ridge = RidgeModel::load_json(&model_path)?;
    let records = wd.load_sentences()?;
    let (embedder, descriptor) = build_embedder(cfg)?;
    if embedder.dim() != ridge.dimension {
        return Err(Error::DimensionMismatch {
            expected: ridge.dimension,
            found: embedder.dim(),
        });
    }
    let stopwords = match &cfg.stopwords {
        Some(p) => StopwordSet::load(p)?,
        None => StopwordSet::default(),
    };
    let tokenizer = Tokenizer::default();

    with_workers(cfg.workers, || {
        let q = cfg.subsample.min(records.len());
        let key = ClusterCacheKey {
            corpus_size: records.len(),
            corpus_digest: digest(&wd.sentences())?,
            q,
            subsample_seed: cfg.subsample_seed(),
            settings: KMeansSettings {
                m: cfg.clusters,
                seed: cfg.kmeans_seed(),
                max_iter: cfg.kmeans_max_iter,
                tol: cfg.kmeans_tol,
            },
            embedder: descriptor.clone(),
        };
        let dir = wd.clusters_dir();
        let key_path = dir.join("cache_key.json");
        let cached = std::fs::read_to_string(&key_path)
            .ok()
            .and_then(|t| serde_json::from_str::<ClusterCacheKey>(&t).ok())
            .filter(|k| *k == key)
            .and_then(|_| ClusterModel::load(&dir).ok());

        let plan_rows = subsample(records.len(), q, key.subsample_seed)?.selected_rows;
        let sub: Vec<SentenceRecord> = plan_rows.iter().map(|&r| records[r].clone()).collect();
        let x_q = embed_corpus(&sub, &tokenizer, embedder.as_ref()).matrix;

        let (clusters, reused) = match cached {
            Some((model, rows)) if rows == plan_rows => {
                note(cfg, "reusing cached clusters");
                (model, true)
            }
            _ => {
                note(cfg, format!("clustering {} sentences into {} clusters", q, cfg.clusters));
                let model = kmeans_cosine(&x_q, key.settings)?;
                ensure_dir(&dir)?;
                model.save(&dir, &plan_rows)?;
                write_json(&key_path, &key)?;
                (model, false)
            }
        };

        let mut ranking = score_clusters(&clusters, &x_q, &ridge)?;
        let n_top = cfg.rank_n.div_ceil(2);
        let n_bottom = cfg.rank_n / 2;
        let len = ranking.ranked.len();
        let mut wanted: Vec<usize> = (0..n_top.min(len)).collect();
        wanted.extend((0..n_bottom.min(len)).map(|i| len - 1 - i));
        let terms_dir = wd.terms_dir(target);
        ensure_dir(&terms_dir)?;
        for &pos in &wanted {
            if ranking.ranked[pos].top_terms.is_empty() {
                let c = ranking.ranked[pos].cluster;
                ranking.ranked[pos].top_terms =
                    top_terms(c, &sub, &clusters.assignments, cfg.top_terms, &tokenizer, &stopwords);
            }
        }
        for (i, c) in ranking.top(n_top).iter().enumerate() {
            write_terms_csv(&terms_dir.join(format!("top_{}_cluster_{}.csv", i + 1, c.cluster)), &c.top_terms)?;
        }
        for (i, c) in ranking.bottom(n_bottom).iter().enumerate() {
            write_terms_csv(&terms_dir.join(format!("bottom_{}_cluster_{}.csv", i + 1, c.cluster)), &c.top_terms)?;
        }
        let ranking_path = wd.ranking(target);
        ensure_parent(&ranking_path)?;
        ranking.save_json(&ranking_path)?;
        Ok(RankSummary {
            target: target.to_string(),
            clusters: clusters.m(),
            subsample: q,
            empty_clusters: ranking.empty_clusters.len(),
            cache_reused: reused,
            top: ranking.top(n_top).to_vec(),
            bottom: ranking.bottom(n_bottom).into_iter().cloned().collect(),
            ranking: ranking_path,
        })
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSummary {
    pub dir: PathBuf,
    pub communities: usize,
    pub sentences: usize,
    pub snr: Option<f64>,
    pub files: SynthFiles,
    pub config: PathBuf,
}

impl fmt::Display for SynthSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "communities  {}", self.communities)?;
        writeln!(f, "sentences    {}", self.sentences)?;
        match self.snr {
            Some(r) => writeln!(f, "snr          {r}")?,
            None => writeln!(f, "snr          noiseless")?,
        }
        writeln!(f, "sentences    {}", self.files.sentences.display())?;
        for t in &self.files.targets {
            writeln!(f, "target file  {}", t.display())?;
        }
        writeln!(f, "centroids    {}", self.files.centroids.display())?;
        writeln!(f, "truth        {}", self.files.ground_truth.display())?;
        write!(f, "config       {}", self.config.display())
    }
}

/// Synthetic generator settings implied by `cfg`.
pub fn synth_config(cfg: &PipelineConfig) -> Result<SynthConfig> {
    Ok(SynthConfig {
        communities: cfg.synth_communities,
        sentences_per_community: cfg.synth_sentences,
        vocab_size: cfg.synth_vocab,
        topics: cfg.synth_topics,
        snr: cfg.synth_snr,
        target_name: cfg.synth_target.clone(),
        year: cfg.synth_year,
        coords: cfg.synth_coords,
        seed: cfg.synth_seed(),
        embedder: HashingEmbedder::new(cfg.hash_dim, cfg.hash_seed)?,
        ..SynthConfig::default()
    })
}

/// Writes a synthetic corpus plus a config file that points the pipeline at it.
pub fn synth(cfg: &PipelineConfig) -> Result<SynthSummary> {
    cfg.validate()?;
    let sc = synth_config(cfg)?;
    let dir = cfg.synth_dir();
    with_workers(cfg.workers, || {
        let corpus = sc.generate()?;
        let files = corpus.write(&dir, sc.coords)?;
        let config = dir.join("pipeline.conf");
        let mut text = String::new();
        text.push_str(&format!("sentences = {}\n", files.sentences.display()));
        text.push_str(&format!("targets = {}\n", files.targets.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")));
        text.push_str(&format!("centroids = {}\n", files.centroids.display()));
        text.push_str(&format!("input_mode = {}\n", if sc.coords { "coords" } else { "fips" }));
        text.push_str("embedder = hashing\n");
        text.push_str(&format!("hash_dim = {}\nhash_seed = {}\n", cfg.hash_dim, cfg.hash_seed));
        std::fs::write(&config, text).map_err(|e| Error::io(&config, e))?;
        Ok(SynthSummary {
            dir: dir.clone(),
            communities: sc.communities,
            sentences: corpus.records.len(),
            snr: sc.snr,
            files,
            config,
        })
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateSummary {
    pub sentences: usize,
    pub reports: BTreeMap<String, ValidationReport>,
}

impl fmt::Display for ValidateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sentences    {}", self.sentences)?;
        for (name, r) in &self.reports {
            write!(
                f,
                "\n{name}: trainable {}, no target {}, no sentences {}, duplicate ids {}",
                r.trainable.len(),
                r.missing_target.len(),
                r.missing_sentences.len(),
                r.duplicate_sentence_ids.len()
            )?;
        }
        Ok(())
    }
}

/// Cross-checks the sentence store against every ingested target.
pub fn validate(cfg: &PipelineConfig) -> Result<ValidateSummary> {
    cfg.validate()?;
    let wd = Workdir::new(&cfg.workdir);
    let records = wd.load_sentences()?;
    let names = wd.target_names()?;
    if names.is_empty() {
        return Err(Error::Empty(format!("no targets under {}", wd.targets_dir().display())));
    }
    let mut reports = BTreeMap::new();
    for name in names {
        let table = wd.load_target(&name)?;
        reports.insert(name, validate_dataset(&records, &table)?);
    }
    let summary = ValidateSummary {
        sentences: records.len(),
        reports,
    };
    write_json(&wd.validation_report(), &summary)?;
    Ok(summary)
}

/// Targets named on the command line, or every ingested target.
pub fn resolve_targets(cfg: &PipelineConfig, requested: &[String]) -> Result<Vec<String>> {
    if !requested.is_empty() {
        return Ok(requested.to_vec());
    }
    let names = Workdir::new(&cfg.workdir).target_names()?;
    if names.is_empty() {
        return Err(Error::Empty(format!(
            "no targets under {}; run ingest with targets first",
            Workdir::new(&cfg.workdir).targets_dir().display()
        )));
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(dir: &Path) -> PipelineConfig {
        let mut cfg = PipelineConfig {
            workdir: dir.join("work"),
            embedder: EmbedderKind::Hashing,
            hash_dim: 8,
            min_sentences: 5,
            folds: 3,
            inner_folds: 3,
            lambda_grid: vec![0.01, 1.0, 100.0],
            quantiles: 4,
            clusters: 4,
            subsample: 100,
            synth_communities: 24,
            synth_sentences: 10,
            synth_vocab: 100,
            synth_topics: 4,
            ..PipelineConfig::default()
        };
        cfg.synth_dir = Some(dir.join("synth"));
        cfg
    }

    #[test]
    fn stages_chain_through_the_workdir() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(tmp.path());
        let s = synth(&cfg).unwrap();
        cfg.apply_text(&std::fs::read_to_string(&s.config).unwrap()).unwrap();
        let i = ingest(&cfg).unwrap();
        assert_eq!(i.kept, 240);
        assert_eq!(i.targets.len(), 1);
        let e = embed_aggregate(&cfg).unwrap();
        assert_eq!(e.communities, 24);
        let f = fit(&cfg, "synthetic").unwrap();
        assert_eq!(f.evaluation.n, 24);
        let r = evaluate(&cfg, "synthetic").unwrap();
        assert_eq!(r, f.evaluation);
        let first = rank(&cfg, "synthetic", None).unwrap();
        assert!(!first.cache_reused);
        let second = rank(&cfg, "synthetic", None).unwrap();
        assert!(second.cache_reused);
        assert_eq!(first.top, second.top);
        assert_eq!(validate(&cfg).unwrap().reports["synthetic"].trainable.len(), 24);
    }

    #[test]
    fn missing_store_is_reported() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_cfg(tmp.path());
        assert!(matches!(embed_aggregate(&cfg), Err(Error::Empty(_))));
        assert!(matches!(resolve_targets(&cfg, &[]), Err(Error::Empty(_))));
    }
}
