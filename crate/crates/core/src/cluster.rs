//! Target-independent topic clustering of a sentence subsample and ranking of
//! the clusters against a fitted Ridge model.
//!
//! Clustering is spherical k-means: rows are L2-normalized, seeded k-means++
//! style on cosine distance, then refined with Lloyd iterations whose
//! centroids are the renormalized member means. Rows with zero norm (OOV
//! sentences) are left unclustered.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::Tokenizer;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::regression::RidgeModel;
use crate::stopwords::StopwordSet;
use crate::types::{EmbeddingMatrix, SentenceRecord};

pub const DEFAULT_CLUSTERS: usize = 2000;
pub const DEFAULT_SUBSAMPLE: usize = 1_000_000;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-4;

/// Slack allowed when checking that the objective never decreases.
const MONOTONE_SLACK: f64 = 1e-12;

/// Which corpus rows were drawn for clustering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsamplePlan {
    pub corpus_size: usize,
    pub q: usize,
    pub seed: u64,
    /// Distinct row indices, ascending.
    pub selected_rows: Vec<usize>,
}

/// Uniform sample of `q` of `corpus_size` rows without replacement.
pub fn subsample(corpus_size: usize, q: usize, seed: u64) -> Result<SubsamplePlan> {
    if q == 0 || q > corpus_size {
        return Err(Error::InvalidArgument(format!(
            "subsample size {q} must be in 1..={corpus_size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selected_rows = index::sample(&mut rng, corpus_size, q).into_vec();
    selected_rows.sort_unstable();
    Ok(SubsamplePlan {
        corpus_size,
        q,
        seed,
        selected_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansSettings {
    pub m: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the fraction of points changing cluster falls below this.
    pub tol: f64,
}

impl KMeansSettings {
    pub fn new(m: usize, seed: u64) -> Self {
        KMeansSettings {
            m,
            seed,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

/// Fitted spherical k-means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub settings: KMeansSettings,
    pub dim: usize,
    /// M×D, unit-norm rows except for clusters flagged in `empty`.
    #[serde(skip)]
    pub centroids: EmbeddingMatrix,
    /// Cluster per input row; `None` for zero-norm rows.
    #[serde(skip)]
    pub assignments: Vec<Option<usize>>,
    pub sizes: Vec<usize>,
    pub empty: Vec<bool>,
    /// Mean cosine to the assigned centroid after each iteration.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn normalized(x: &EmbeddingMatrix) -> (EmbeddingMatrix, Vec<usize>) {
    let mut out = x.clone();
    let mut usable = Vec::new();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let n = dot(row, row).sqrt();
        if n > 0.0 {
            row.iter_mut().for_each(|v| *v /= n);
            usable.push(i);
        }
    }
    (out, usable)
}

/// Best centroid by cosine; ties go to the smaller cluster id.
fn best_centroid(centroids: &EmbeddingMatrix, p: &[f64]) -> (usize, f64) {
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for c in 0..centroids.rows() {
        let s = dot(centroids.row(c), p);
        if s > best.1 {
            best = (c, s);
        }
    }
    best
}

fn assign_all(centroids: &EmbeddingMatrix, z: &EmbeddingMatrix, usable: &[usize]) -> Vec<(usize, f64)> {
    usable.par_iter().map(|&i| best_centroid(centroids, z.row(i))).collect()
}

/// Greedy k-means++: each step draws `2 + ln m` candidates with probability
/// proportional to `1 - cos` to the nearest chosen center and keeps the one
/// that lowers the total `1 - cos` the most.
fn seed_centroids(z: &EmbeddingMatrix, usable: &[usize], m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let trials = 2 + (m as f64).ln().floor() as usize;
    let mut chosen = Vec::with_capacity(m);
    let mut taken = vec![false; usable.len()];
    let first = rng.gen_range(0..usable.len());
    chosen.push(usable[first]);
    taken[first] = true;
    let mut best_sim: Vec<f64> = usable.par_iter().map(|&i| dot(z.row(i), z.row(usable[first]))).collect();
    while chosen.len() < m {
        let mut cumulative = Vec::with_capacity(usable.len());
        let mut total = 0.0;
        for (s, t) in best_sim.iter().zip(&taken) {
            if !*t {
                total += (1.0 - s).max(0.0);
            }
            cumulative.push(total);
        }
        let candidates: Vec<usize> = if total > 0.0 {
            (0..trials)
                .map(|_| {
                    let target = rng.gen::<f64>() * total;
                    // cumulative weight only rises at untaken points with positive weight
                    let j = cumulative.partition_point(|&c| c <= target);
                    if j < usable.len() {
                        j
                    } else {
                        cumulative.partition_point(|&c| c < total)
                    }
                })
                .collect()
        } else {
            // every remaining point duplicates a center
            let free: Vec<usize> = (0..usable.len()).filter(|&j| !taken[j]).collect();
            vec![free[rng.gen_range(0..free.len())]]
        };
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for pick in candidates {
            let c = usable[pick];
            let sims: Vec<f64> = best_sim
                .par_iter()
                .zip(usable.par_iter())
                .map(|(s, &i)| s.max(dot(z.row(i), z.row(c))))
                .collect();
            let potential: f64 = sims.iter().map(|s| 1.0 - s).sum();
            if best.as_ref().map_or(true, |b| potential < b.1) {
                best = Some((pick, potential, sims));
            }
        }
        let (pick, _, sims) = best.expect("at least one candidate");
        taken[pick] = true;
        chosen.push(usable[pick]);
        best_sim = sims;
    }
    chosen
}

/// Sum of member rows per cluster, each accumulated in ascending row order.
fn member_sums(z: &EmbeddingMatrix, usable: &[usize], assign: &[usize], m: usize) -> Vec<f64> {
    let d = z.cols();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (&i, &c) in usable.iter().zip(assign) {
        members[c].push(i);
    }
    let mut total = vec![0.0; m * d];
    total
        .par_chunks_mut(d.max(1))
        .zip(members.par_iter())
        .for_each(|(acc, rows)| {
            for &i in rows {
                acc.iter_mut().zip(z.row(i)).for_each(|(a, v)| *a += v);
            }
        });
    total
}

fn objective(z: &EmbeddingMatrix, usable: &[usize], assign: &[usize], centroids: &EmbeddingMatrix) -> f64 {
    let sims: Vec<f64> = usable
        .par_iter()
        .zip(assign.par_iter())
        .map(|(&i, &c)| dot(z.row(i), centroids.row(c)))
        .collect();
    sims.iter().sum::<f64>() / usable.len() as f64
}

/// Spherical k-means over the rows of `x`.
///
/// The objective (mean cosine to the assigned centroid) is recorded after
/// every iteration and never decreases. A final assignment pass makes every
/// point's cluster its most similar centroid.
pub fn kmeans_cosine(x: &EmbeddingMatrix, settings: KMeansSettings) -> Result<ClusterModel> {
    let m = settings.m;
    let (z, usable) = normalized(x);
    if m == 0 || m > usable.len() {
        return Err(Error::InvalidArgument(format!(
            "{m} clusters requested but only {} usable rows",
            usable.len()
        )));
    }
    let d = x.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let seeds = seed_centroids(&z, &usable, m, &mut rng);
    let mut centroids = z.select_rows(&seeds);

    let mut assign: Vec<usize> = vec![usize::MAX; usable.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < settings.max_iter {
        iterations += 1;
        let next = assign_all(&centroids, &z, &usable);
        let mut changes = 0;
        for (a, (c, _)) in assign.iter_mut().zip(&next) {
            if *a != *c {
                changes += 1;
                *a = *c;
            }
        }

        // Reseed empty clusters with the worst-fit point of a cluster that
        // can spare one; that point's similarity becomes 1, so the
        // objective cannot drop.
        let mut sizes = vec![0usize; m];
        assign.iter().for_each(|&c| sizes[c] += 1);
        let mut moved = vec![false; usable.len()];
        for c in 0..m {
            if sizes[c] > 0 {
                continue;
            }
            let worst = (0..usable.len())
                .filter(|&j| !moved[j] && sizes[assign[j]] > 1)
                .min_by(|&a, &b| next[a].1.total_cmp(&next[b].1).then(a.cmp(&b)));
            if let Some(j) = worst {
                sizes[assign[j]] -= 1;
                assign[j] = c;
                sizes[c] = 1;
                moved[j] = true;
                changes += 1;
            }
        }

        let sums = member_sums(&z, &usable, &assign, m);
        for c in 0..m {
            let s = &sums[c * d..(c + 1) * d];
            let n = dot(s, s).sqrt();
            if sizes[c] > 0 && n > 0.0 {
                centroids.row_mut(c).iter_mut().zip(s).for_each(|(o, v)| *o = v / n);
            }
        }

        let obj = objective(&z, &usable, &assign, &centroids);
        if let Some(&prev) = history.last() {
            assert!(
                obj >= prev - MONOTONE_SLACK,
                "spherical k-means objective decreased: {prev} -> {obj}"
            );
        }
        history.push(obj);
        if (changes as f64) / (usable.len() as f64) < settings.tol || changes == 0 {
            converged = true;
            break;
        }
    }

    let final_assign: Vec<usize> = assign_all(&centroids, &z, &usable).into_iter().map(|(c, _)| c).collect();
    if final_assign != assign {
        assign = final_assign;
        let obj = objective(&z, &usable, &assign, &centroids);
        if let Some(&prev) = history.last() {
            assert!(obj >= prev - MONOTONE_SLACK, "final assignment lowered the objective");
        }
        history.push(obj);
    }

    let mut sizes = vec![0usize; m];
    assign.iter().for_each(|&c| sizes[c] += 1);
    let mut assignments = vec![None; x.rows()];
    for (&i, &c) in usable.iter().zip(&assign) {
        assignments[i] = Some(c);
    }
    Ok(ClusterModel {
        settings,
        dim: d,
        centroids,
        assignments,
        empty: sizes.iter().map(|&s| s == 0).collect(),
        sizes,
        objective_history: history,
        iterations,
        converged,
    })
}

impl ClusterModel {
    pub fn m(&self) -> usize {
        self.settings.m
    }

    pub fn final_objective(&self) -> f64 {
        self.objective_history.last().copied().unwrap_or(f64::NAN)
    }

    /// Indices of rows assigned to `cluster`.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, a)| **a == Some(cluster))
            .map(|(i, _)| i)
            .collect()
    }

    /// Writes `centroids.bin`, `assignments.csv` (`index,row,cluster`, empty
    /// cluster for unclustered rows) and `cluster_model.json` into `dir`.
    /// `rows` maps subsample positions back to corpus rows.
    pub fn save(&self, dir: &Path, rows: &[usize]) -> Result<()> {
        if rows.len() != self.assignments.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: self.assignments.len(),
            });
        }
        self.centroids.save(&dir.join("centroids.bin"))?;
        let path = dir.join("assignments.csv");
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let io = |e| Error::io(&path, e);
        writeln!(out, "index,row,cluster").map_err(io)?;
        for (i, (a, r)) in self.assignments.iter().zip(rows).enumerate() {
            match a {
                Some(c) => writeln!(out, "{i},{r},{c}"),
                None => writeln!(out, "{i},{r},"),
            }
            .map_err(io)?;
        }
        out.flush().map_err(io)?;
        let meta = dir.join("cluster_model.json");
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::format("cluster model", e))?;
        std::fs::write(&meta, json).map_err(|e| Error::io(&meta, e))
    }

    /// Inverse of [`ClusterModel::save`]; also returns the corpus rows.
    pub fn load(dir: &Path) -> Result<(Self, Vec<usize>)> {
        #[derive(Deserialize)]
        struct Row {
            row: usize,
            cluster: Option<usize>,
        }
        let meta = dir.join("cluster_model.json");
        let text = std::fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
        let mut model: ClusterModel =
            serde_json::from_str(&text).map_err(|e| Error::format("cluster model", e))?;
        model.centroids = EmbeddingMatrix::load(&dir.join("centroids.bin"))?;
        let path = dir.join("assignments.csv");
        let mut reader = csv::Reader::from_path(&path).map_err(|e| Error::format("assignments", e))?;
        let mut rows = Vec::new();
        for r in reader.deserialize::<Row>() {
            let r = r.map_err(|e| Error::format("assignments", e))?;
            rows.push(r.row);
            model.assignments.push(r.cluster);
        }
        if model.centroids.rows() != model.m() || model.centroids.cols() != model.dim {
            return Err(Error::format("cluster model", "centroid matrix shape disagrees with metadata"));
        }
        Ok((model, rows))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterScore {
    pub cluster: usize,
    pub size: usize,
    /// Mean sentence-level prediction of the members.
    pub score: f64,
    #[serde(default)]
    pub top_terms: Vec<(String, u64)>,
}

/// Clusters ordered by descending score (ties: smaller id first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRanking {
    pub target_name: String,
    pub ranked: Vec<ClusterScore>,
    pub empty_clusters: Vec<usize>,
}

impl ClusterRanking {
    pub fn top(&self, n: usize) -> &[ClusterScore] {
        &self.ranked[..n.min(self.ranked.len())]
    }

    /// The `n` lowest-scoring clusters, lowest first.
    pub fn bottom(&self, n: usize) -> Vec<&ClusterScore> {
        self.ranked.iter().rev().take(n).collect()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::format("cluster ranking", e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(format!("cluster ranking {}", path.display()), e))
    }
}

/// Scores each cluster by the mean Ridge prediction of its members.
///
/// `x_q` holds the raw (unnormalized) subsample embeddings aligned with
/// `model.assignments`. Unclustered rows are ignored.
pub fn score_clusters(model: &ClusterModel, x_q: &EmbeddingMatrix, ridge: &RidgeModel) -> Result<ClusterRanking> {
    if x_q.cols() != ridge.dimension {
        return Err(Error::DimensionMismatch {
            expected: ridge.dimension,
            found: x_q.cols(),
        });
    }
    if x_q.rows() != model.assignments.len() {
        return Err(Error::LengthMismatch {
            left: x_q.rows(),
            right: model.assignments.len(),
        });
    }
    let preds: Vec<f64> = (0..x_q.rows())
        .into_par_iter()
        .map(|i| ridge.predict_sentence(x_q.row(i)))
        .collect::<Result<_>>()?;
    let m = model.m();
    let mut sums = vec![0.0; m];
    let mut sizes = vec![0usize; m];
    for (a, p) in model.assignments.iter().zip(&preds) {
        if let Some(c) = a {
            sums[*c] += p;
            sizes[*c] += 1;
        }
    }
    let mut ranked: Vec<ClusterScore> = (0..m)
        .filter(|&c| sizes[c] > 0)
        .map(|c| ClusterScore {
            cluster: c,
            size: sizes[c],
            score: sums[c] / sizes[c] as f64,
            top_terms: Vec::new(),
        })
        .collect();
    if ranked.is_empty() {
        return Err(Error::Empty("every cluster is empty".into()));
    }
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.cluster.cmp(&b.cluster)));
    Ok(ClusterRanking {
        target_name: ridge.target_name.clone(),
        ranked,
        empty_clusters: (0..m).filter(|&c| sizes[c] == 0).collect(),
    })
}

/// The `k` most frequent non-stopword tokens among the sentences assigned to
/// `cluster`; ties are broken alphabetically.
pub fn top_terms(
    cluster: usize,
    records: &[SentenceRecord],
    assignments: &[Option<usize>],
    k: usize,
    tokenizer: &Tokenizer,
    stopwords: &StopwordSet,
) -> Vec<(String, u64)> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for (r, a) in records.iter().zip(assignments) {
        if *a != Some(cluster) {
            continue;
        }
        for t in tokenizer.tokenize(&r.text) {
            if !stopwords.contains(&t) && !tokenizer.is_placeholder(&t) {
                *counts.entry(t).or_default() += 1;
            }
        }
    }
    let mut terms: Vec<(String, u64)> = counts.into_iter().collect();
    terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    terms.truncate(k);
    terms
}

/// Writes `term,count` rows for a word-cloud renderer.
pub fn write_terms_csv(path: &Path, terms: &[(String, u64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format("terms csv", e))?;
    w.write_record(["term", "count"]).map_err(|e| Error::format("terms csv", e))?;
    for (t, c) in terms {
        w.write_record([t.as_str(), &c.to_string()])
            .map_err(|e| Error::format("terms csv", e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::{FoldModel, Standardization};
    use crate::types::CommunityId;

    fn matrix(rows: &[&[f64]]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(rows[0].len(), rows).unwrap()
    }

    #[test]
    fn subsample_examples() {
        let all = subsample(10, 10, 3).unwrap();
        assert_eq!(all.selected_rows, (0..10).collect::<Vec<_>>());
        let one = subsample(10, 1, 99).unwrap();
        assert!(one.selected_rows[0] < 10);
        assert_eq!(subsample(1000, 37, 5).unwrap(), subsample(1000, 37, 5).unwrap());
        assert!(subsample(5, 6, 0).is_err());
        assert!(subsample(5, 0, 0).is_err());
    }

    #[test]
    fn single_cluster_is_mean_direction() {
        let x = matrix(&[&[1.0, 0.0], &[0.0, 2.0], &[3.0, 3.0]]);
        let model = kmeans_cosine(&x, KMeansSettings::new(1, 0)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mean = [(1.0 + s) / 3.0, (1.0 + s) / 3.0];
        let n = (mean[0] * mean[0] + mean[1] * mean[1]).sqrt();
        assert!((model.centroids.get(0, 0) - mean[0] / n).abs() < 1e-12);
        assert!((model.centroids.get(0, 1) - mean[1] / n).abs() < 1e-12);
    }

    #[test]
    fn antipodal_bundles_separate() {
        let mut rows = Vec::new();
        for i in 0..20 {
            let e = 0.01 * (i as f64 - 10.0);
            rows.push(vec![1.0, e, 0.0]);
            rows.push(vec![-1.0, 0.0, e]);
        }
        let x = EmbeddingMatrix::from_rows(3, &rows).unwrap();
        let model = kmeans_cosine(&x, KMeansSettings::new(2, 4)).unwrap();
        let a = model.assignments[0].unwrap();
        for (i, c) in model.assignments.iter().enumerate() {
            assert_eq!(*c == Some(a), i % 2 == 0);
        }
    }

    #[test]
    fn one_cluster_per_point() {
        let x = matrix(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        let model = kmeans_cosine(&x, KMeansSettings::new(4, 1)).unwrap();
        assert!((model.final_objective() - 1.0).abs() < 1e-12);
        assert!(model.sizes.iter().all(|&s| s == 1));
    }

    #[test]
    fn zero_rows_are_unclustered() {
        let x = matrix(&[&[1.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]]);
        let model = kmeans_cosine(&x, KMeansSettings::new(2, 0)).unwrap();
        assert_eq!(model.assignments[1], None);
        assert!(kmeans_cosine(&x, KMeansSettings::new(3, 0)).is_err());
    }

    #[test]
    fn duplicate_points_still_seed() {
        let x = matrix(&[&[1.0, 0.0], &[2.0, 0.0], &[3.0, 0.0]]);
        let model = kmeans_cosine(&x, KMeansSettings::new(2, 0)).unwrap();
        assert!((model.final_objective() - 1.0).abs() < 1e-12);
    }

    fn toy_ridge(w: Vec<f64>) -> RidgeModel {
        let d = w.len();
        let fold = FoldModel {
            lambda: 1.0,
            weights: w,
            intercept: 0.0,
            standardization: Standardization {
                mean: vec![0.0; d],
                scale: vec![1.0; d],
            },
            train_communities: vec![],
        };
        RidgeModel::from_folds("toy", 0, vec![fold]).unwrap()
    }

    #[test]
    fn scores_are_member_means() {
        let x = matrix(&[&[1.0, 0.0], &[3.0, 0.1], &[0.0, 5.0], &[0.0, 0.0]]);
        let model = ClusterModel {
            settings: KMeansSettings::new(3, 0),
            dim: 2,
            centroids: matrix(&[&[1.0, 0.0], &[0.0, 1.0], &[0.6, 0.8]]),
            assignments: vec![Some(0), Some(0), Some(1), None],
            sizes: vec![2, 1, 0],
            empty: vec![false, false, true],
            objective_history: vec![],
            iterations: 0,
            converged: true,
        };
        let ranking = score_clusters(&model, &x, &toy_ridge(vec![1.0, 0.0])).unwrap();
        assert_eq!(ranking.ranked[0].cluster, 0);
        assert_eq!(ranking.ranked[0].score, 2.0);
        assert_eq!(ranking.ranked[1].score, 0.0);
        assert_eq!(ranking.empty_clusters, vec![2]);
        assert!(score_clusters(&model, &x, &toy_ridge(vec![1.0])).is_err());
    }

    #[test]
    fn ranking_ties_prefer_smaller_id() {
        let x = matrix(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let model = ClusterModel {
            settings: KMeansSettings::new(2, 0),
            dim: 2,
            centroids: matrix(&[&[1.0, 0.0], &[0.0, 1.0]]),
            assignments: vec![Some(1), Some(0)],
            sizes: vec![1, 1],
            empty: vec![false, false],
            objective_history: vec![],
            iterations: 0,
            converged: true,
        };
        let ranking = score_clusters(&model, &x, &toy_ridge(vec![1.0, 1.0])).unwrap();
        assert_eq!(ranking.ranked.iter().map(|s| s.cluster).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn top_terms_examples() {
        let c = CommunityId::new("01001").unwrap();
        let recs = vec![
            SentenceRecord::new("1", "run trail run", c.clone()),
            SentenceRecord::new("2", "the and of", c.clone()),
            SentenceRecord::new("3", "sofa", c.clone()),
        ];
        let tok = Tokenizer::default();
        let sw = StopwordSet::default();
        let assign = [Some(0), Some(1), Some(2)];
        assert_eq!(
            top_terms(0, &recs, &assign, 10, &tok, &sw),
            vec![("run".to_string(), 2), ("trail".to_string(), 1)]
        );
        assert!(top_terms(1, &recs, &assign, 10, &tok, &sw).is_empty());
        assert_eq!(top_terms(0, &recs, &assign, 1, &tok, &sw), vec![("run".to_string(), 2)]);
        let tie = [Some(0), Some(0), Some(0)];
        let all = top_terms(0, &recs, &tie, 10, &tok, &sw);
        assert_eq!(all[1..], [("sofa".to_string(), 1), ("trail".to_string(), 1)]);
    }

    #[test]
    fn save_load_round_trip() {
        let x = matrix(&[&[1.0, 0.1], &[0.9, 0.0], &[0.0, 1.0], &[0.0, 0.0], &[0.1, 1.0]]);
        let model = kmeans_cosine(&x, KMeansSettings::new(2, 7)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![10, 11, 12, 13, 14];
        model.save(dir.path(), &rows).unwrap();
        let (back, back_rows) = ClusterModel::load(dir.path()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back_rows, rows);
    }
}
