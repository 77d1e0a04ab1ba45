//! Predicting community-level outcomes from the language of geolocated short
//! messages.
//!
//! The pipeline maps each message to a community, embeds it as the mean of
//! its unigram and adjacent-bigram vectors, averages sentence vectors per
//! community, fits a cross-validated ridge model against a per-community
//! target, and ranks spherical k-means clusters of sentences by the mean
//! model prediction of their members.
//!
//! Runnable examples live in `examples/`:
//!
//! * `tokenize_and_embed`
//! * `aggregate_communities`
//! * `union_average_targets`
//! * `coords_ingest`
//! * `ridge_cross_validation`
//! * `evaluate_predictions`
//! * `spherical_kmeans`
//! * `cluster_ranking`
//! * `end_to_end_synthetic`

pub mod aggregate;
pub mod cluster;
pub mod config;
pub mod embed;
pub mod error;
pub mod evaluate;
pub mod ingest;
mod linalg;
pub mod pipeline;
pub mod regression;
pub mod stopwords;
pub mod synth;
pub mod types;

pub use aggregate::{aggregate, min_count_filter, CommunityFeatures};
pub use cluster::{kmeans_cosine, score_clusters, ClusterModel, ClusterRanking, KMeansSettings};
pub use config::PipelineConfig;
pub use embed::{embed_corpus, HashingEmbedder, SentenceEmbedder, Tokenizer, VectorLexicon};
pub use error::{Error, Result};
pub use evaluate::{confusion, mae, pearson, quantile_bins, ConfusionMatrix, EvaluationReport};
pub use ingest::{read_sentences, union_average_targets, CountyCentroidTable, InputMode, YearlyTargetFile};
pub use regression::{cross_validated_fit, fit_ridge, make_folds, tune_lambda, FoldPlan, RidgeModel, RidgeSettings};
pub use synth::SynthConfig;
pub use types::{CommunityId, EmbeddingMatrix, EmbeddingVector, SentenceRecord, TargetTable, ValidationReport};
