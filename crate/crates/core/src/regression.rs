//! K-fold cross-validated Ridge regression over community features.
//!
//! Per outer fold the training columns are standardized, λ is chosen by an
//! inner cross-validation that maximizes Pearson correlation, and the
//! closed-form weights are fit on the centered target. Held-out predictions
//! from all folds are concatenated in fold order, and the per-fold weights
//! are averaged into a single model for sentence-level scoring.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::CommunityFeatures;
use crate::error::{Error, Result};
use crate::evaluate::pearson;
use crate::linalg;
use crate::types::{CommunityId, EmbeddingMatrix, TargetTable};

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_INNER_FOLDS: usize = 5;

/// 10 log-spaced values in [1e-4, 1e4].
pub fn default_lambda_grid() -> Vec<f64> {
    (0..10).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / 9.0)).collect()
}

/// Pearson scores closer than this are treated as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Fold index (0-based) for each of `n` items: shuffle `0..n` with `seed`,
/// then deal round-robin.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    folds
}

/// Assignment of communities to K disjoint, near-equal folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    seed: u64,
    assignments: BTreeMap<CommunityId, usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// 0-based fold of a community.
    pub fn fold_of(&self, community: &CommunityId) -> Option<usize> {
        self.assignments.get(community).copied()
    }

    pub fn assignments(&self) -> &BTreeMap<CommunityId, usize> {
        &self.assignments
    }

    /// Held-out communities of fold `k`, ascending.
    pub fn test_set(&self, fold: usize) -> Vec<CommunityId> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(c, _)| c.clone())
            .collect()
    }

    /// Training communities of fold `k`, ascending.
    pub fn train_set(&self, fold: usize) -> Vec<CommunityId> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f != fold)
            .map(|(c, _)| c.clone())
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        self.assignments.values().for_each(|&f| sizes[f] += 1);
        sizes
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// Splits communities into `k` folds. Input order does not matter: the
/// communities are sorted before the seeded shuffle.
pub fn make_folds(communities: &[CommunityId], k: usize, seed: u64) -> Result<FoldPlan> {
    let mut sorted = communities.to_vec();
    sorted.sort();
    sorted.dedup();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need K >= 2 folds, got {k}")));
    }
    if k > sorted.len() {
        return Err(Error::InvalidArgument(format!(
            "K = {k} exceeds the {} communities",
            sorted.len()
        )));
    }
    let folds = fold_indices(sorted.len(), k, seed);
    Ok(FoldPlan {
        k,
        seed,
        assignments: sorted.into_iter().zip(folds).collect(),
    })
}

/// Solves `(XᵀX + 2NλI) ω = Xᵀy`, the minimizer of
/// `(1/2N) Σ (yᵢ − xᵢᵀω)² + λ‖ω‖²`. No intercept: center beforehand.
pub fn fit_ridge(x: &EmbeddingMatrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if !x.all_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ridge inputs".into()));
    }
    let mut a = linalg::gram(x);
    add_ridge(&mut a, x.cols(), n, lambda);
    linalg::cholesky_solve(&mut a, &linalg::xt_y(x, y))
}

fn add_ridge(a: &mut [f64], d: usize, n: usize, lambda: f64) {
    let shift = 2.0 * n as f64 * lambda;
    for i in 0..d {
        a[i * d + i] += shift;
    }
}

/// Per-column affine map applied before the dot product with the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Column means and population standard deviations; a zero-variance
    /// column gets scale 1.
    pub fn fit(x: &EmbeddingMatrix) -> Self {
        let (n, d) = (x.rows() as f64, x.cols());
        let mut mean = vec![0.0; d];
        for row in x.iter_rows() {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = (s / n).sqrt();
                // spread at rounding level of the mean counts as constant
                if sd > 1e-12 * m.abs().max(f64::MIN_POSITIVE) && sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardization { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(row).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }

    pub fn apply(&self, x: &EmbeddingMatrix) -> EmbeddingMatrix {
        let mut out = EmbeddingMatrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            self.apply_row(x.row(i), out.row_mut(i));
        }
        out
    }
}

/// Settings for [`cross_validated_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSettings {
    pub lambda_grid: Vec<f64>,
    pub inner_folds: usize,
}

impl Default for RidgeSettings {
    fn default() -> Self {
        RidgeSettings {
            lambda_grid: default_lambda_grid(),
            inner_folds: DEFAULT_INNER_FOLDS,
        }
    }
}

impl RidgeSettings {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(Error::InvalidArgument("empty lambda grid".into()));
        }
        if self.lambda_grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidArgument("lambda grid values must be positive".into()));
        }
        if self.inner_folds < 2 {
            return Err(Error::InvalidArgument("inner_folds must be at least 2".into()));
        }
        Ok(())
    }
}

fn column_means(x: &EmbeddingMatrix, rows: &[usize]) -> Vec<f64> {
    let mut m = vec![0.0; x.cols()];
    for &i in rows {
        m.iter_mut().zip(x.row(i)).for_each(|(a, v)| *a += v);
    }
    let inv = 1.0 / rows.len() as f64;
    m.iter_mut().for_each(|a| *a *= inv);
    m
}

/// Ridge with intercept on a row subset: the subset's columns and target are
/// centered, the gram matrix is built once and reused for every λ.
struct CenteredSubset {
    x_mean: Vec<f64>,
    y_mean: f64,
    gram: Vec<f64>,
    xty: Vec<f64>,
    n: usize,
}

impl CenteredSubset {
    fn new(x: &EmbeddingMatrix, y: &[f64], rows: &[usize]) -> Self {
        let x_mean = column_means(x, rows);
        let y_mean = rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64;
        let mut centered = EmbeddingMatrix::zeros(rows.len(), x.cols());
        let mut yc = Vec::with_capacity(rows.len());
        for (r, &i) in rows.iter().enumerate() {
            centered
                .row_mut(r)
                .iter_mut()
                .zip(x.row(i))
                .zip(&x_mean)
                .for_each(|((o, v), m)| *o = v - m);
            yc.push(y[i] - y_mean);
        }
        CenteredSubset {
            gram: linalg::gram(&centered),
            xty: linalg::xt_y(&centered, &yc),
            x_mean,
            y_mean,
            n: rows.len(),
        }
    }

    fn solve(&self, lambda: f64) -> Result<Vec<f64>> {
        let d = self.x_mean.len();
        let mut a = self.gram.clone();
        add_ridge(&mut a, d, self.n, lambda);
        linalg::cholesky_solve(&mut a, &self.xty)
    }

    fn predict(&self, w: &[f64], row: &[f64]) -> f64 {
        self.y_mean
            + row
                .iter()
                .zip(&self.x_mean)
                .zip(w)
                .map(|((v, m), wi)| (v - m) * wi)
                .sum::<f64>()
    }
}

/// Inner-CV Pearson score for every grid value, in grid order.
///
/// A λ whose inner predictions have no variance scores `-inf`.
pub fn inner_cv_scores(
    x: &EmbeddingMatrix,
    y: &[f64],
    grid: &[f64],
    inner_folds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = x.rows();
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    let k = inner_folds.min(n);
    if k < 2 {
        return Err(Error::TooFewValues { needed: 2, got: n });
    }
    let folds = fold_indices(n, k, seed);
    let mut preds = vec![vec![0.0; n]; grid.len()];
    for fold in 0..k {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != fold).collect();
        let test: Vec<usize> = (0..n).filter(|&i| folds[i] == fold).collect();
        let subset = CenteredSubset::new(x, y, &train);
        for (g, &lambda) in grid.iter().enumerate() {
            let w = subset.solve(lambda)?;
            for &i in &test {
                preds[g][i] = subset.predict(&w, x.row(i));
            }
        }
    }
    Ok(preds
        .iter()
        .map(|p| pearson(y, p).unwrap_or(f64::NEG_INFINITY))
        .collect())
}

/// Picks the best score; scores within the tie tolerance of the best go to
/// the larger λ.
pub fn select_lambda(grid: &[f64], scores: &[f64]) -> f64 {
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    grid.iter()
        .zip(scores)
        .filter(|(_, &s)| s == top || s >= top - TIE_TOLERANCE)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Grid value with the best inner cross-validated Pearson correlation.
pub fn tune_lambda(
    x: &EmbeddingMatrix,
    y: &[f64],
    grid: &[f64],
    inner_folds: usize,
    seed: u64,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    if inner_folds < 2 {
        return Err(Error::InvalidArgument("inner_folds must be at least 2".into()));
    }
    if is_constant(y) {
        return Err(Error::ConstantTarget);
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let scores = inner_cv_scores(x, y, grid, inner_folds, seed)?;
    Ok(select_lambda(grid, &scores))
}

fn is_constant(y: &[f64]) -> bool {
    y.windows(2).all(|w| w[0] == w[1])
}

/// One outer fold's fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldModel {
    pub lambda: f64,
    pub weights: Vec<f64>,
    /// Mean training target; the prediction at the standardized origin.
    pub intercept: f64,
    pub standardization: Standardization,
    pub train_communities: Vec<CommunityId>,
}

impl FoldModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        affine_predict(&self.standardization, &self.weights, self.intercept, x)
    }
}

fn affine_predict(st: &Standardization, w: &[f64], intercept: f64, x: &[f64]) -> Result<f64> {
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: x.len(),
        });
    }
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += (x[i] - st.mean[i]) / st.scale[i] * w[i];
    }
    Ok(intercept + acc)
}

/// Cross-validated Ridge model: every fold model plus their average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub target_name: String,
    pub dimension: usize,
    pub k: usize,
    pub seed: u64,
    pub per_fold: Vec<FoldModel>,
    /// Entrywise mean of the fold weights (standardized space).
    pub averaged_weights: Vec<f64>,
    /// Mean of the fold intercepts.
    pub intercept: f64,
    /// Fold standardizations averaged column by column.
    pub standardization: Standardization,
}

impl RidgeModel {
    /// Assembles the averaged model from fitted folds.
    pub fn from_folds(target_name: &str, seed: u64, per_fold: Vec<FoldModel>) -> Result<Self> {
        let k = per_fold.len();
        let Some(first) = per_fold.first() else {
            return Err(Error::Empty("no fold models".into()));
        };
        let d = first.weights.len();
        let mut w = vec![0.0; d];
        let mut mean = vec![0.0; d];
        let mut scale = vec![0.0; d];
        let mut intercept = 0.0;
        for f in &per_fold {
            if f.weights.len() != d || f.standardization.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: f.weights.len(),
                });
            }
            for i in 0..d {
                w[i] += f.weights[i];
                mean[i] += f.standardization.mean[i];
                scale[i] += f.standardization.scale[i];
            }
            intercept += f.intercept;
        }
        for v in w.iter_mut().chain(mean.iter_mut()).chain(scale.iter_mut()) {
            *v /= k as f64;
        }
        Ok(RidgeModel {
            target_name: target_name.to_string(),
            dimension: d,
            k,
            seed,
            per_fold,
            averaged_weights: w,
            intercept: intercept / k as f64,
            standardization: Standardization { mean, scale },
        })
    }

    /// Sentence-level score: standardize with the averaged statistics, then
    /// dot with the averaged weights.
    pub fn predict_sentence(&self, x: &[f64]) -> Result<f64> {
        affine_predict(&self.standardization, &self.averaged_weights, self.intercept, x)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.per_fold.iter().map(|f| f.lambda).collect()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::format("ridge model", e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: RidgeModel =
            serde_json::from_str(&text).map_err(|e| Error::format(format!("ridge model {}", path.display()), e))?;
        if model.averaged_weights.len() != model.dimension || model.standardization.dim() != model.dimension {
            return Err(Error::format("ridge model", "dimension disagrees with weight length"));
        }
        Ok(model)
    }
}

/// Held-out predictions concatenated in fold order (ascending community code
/// within a fold).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfFoldPredictions {
    pub communities: Vec<CommunityId>,
    pub folds: Vec<usize>,
    pub y_true: Vec<f64>,
    pub y_pred: Vec<f64>,
}

impl OutOfFoldPredictions {
    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    /// Prediction for one community, if present.
    pub fn get(&self, community: &CommunityId) -> Option<(f64, f64)> {
        self.communities
            .iter()
            .position(|c| c == community)
            .map(|i| (self.y_true[i], self.y_pred[i]))
    }

    /// CSV `fips,fold,y_true,y_pred`; floats use the shortest exact form.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "fips,fold,y_true,y_pred").map_err(io)?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{}",
                self.communities[i], self.folds[i], self.y_true[i], self.y_pred[i]
            )
            .map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            fips: String,
            fold: usize,
            y_true: f64,
            y_pred: f64,
        }
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::format(format!("{}", path.display()), e))?;
        let mut out = OutOfFoldPredictions {
            communities: Vec::new(),
            folds: Vec::new(),
            y_true: Vec::new(),
            y_pred: Vec::new(),
        };
        for row in reader.deserialize::<Row>() {
            let row = row.map_err(|e| Error::format(format!("{}", path.display()), e))?;
            out.communities.push(CommunityId::new(row.fips)?);
            out.folds.push(row.fold);
            out.y_true.push(row.y_true);
            out.y_pred.push(row.y_pred);
        }
        Ok(out)
    }
}

struct FoldResult {
    model: FoldModel,
    test: Vec<CommunityId>,
    y_true: Vec<f64>,
    y_pred: Vec<f64>,
}

fn inner_seed(plan_seed: u64, fold: usize) -> u64 {
    plan_seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(fold as u64 + 1))
}

fn fit_fold(
    features: &CommunityFeatures,
    targets: &TargetTable,
    plan: &FoldPlan,
    settings: &RidgeSettings,
    fold: usize,
) -> Result<FoldResult> {
    let train = plan.train_set(fold);
    let test = plan.test_set(fold);
    let train_idx: Vec<usize> = train.iter().map(|c| features.index_of(c).expect("checked")).collect();
    let x_train = features.matrix().select_rows(&train_idx);
    let y_train: Vec<f64> = train.iter().map(|c| targets.get(c).expect("checked")).collect();
    if is_constant(&y_train) {
        return Err(Error::ConstantTarget);
    }

    let standardization = Standardization::fit(&x_train);
    let z = standardization.apply(&x_train);
    let y_mean = y_train.iter().sum::<f64>() / y_train.len() as f64;
    let yc: Vec<f64> = y_train.iter().map(|v| v - y_mean).collect();

    let lambda = tune_lambda(&z, &y_train, &settings.lambda_grid, settings.inner_folds, inner_seed(plan.seed(), fold))?;
    let weights = fit_ridge(&z, &yc, lambda)?;
    let model = FoldModel {
        lambda,
        weights,
        intercept: y_mean,
        standardization,
        train_communities: train,
    };

    let mut y_true = Vec::with_capacity(test.len());
    let mut y_pred = Vec::with_capacity(test.len());
    for c in &test {
        let row = features.matrix().row(features.index_of(c).expect("checked"));
        y_pred.push(model.predict(row)?);
        y_true.push(targets.get(c).expect("checked"));
    }
    Ok(FoldResult {
        model,
        test,
        y_true,
        y_pred,
    })
}

/// Runs the full K-fold procedure. Folds run in parallel on the current
/// rayon pool and are merged in fold order.
pub fn cross_validated_fit(
    features: &CommunityFeatures,
    targets: &TargetTable,
    plan: &FoldPlan,
    settings: &RidgeSettings,
) -> Result<(RidgeModel, OutOfFoldPredictions)> {
    settings.validate()?;
    let same = features.len() == targets.len()
        && features.len() == plan.len()
        && features
            .communities()
            .iter()
            .all(|c| targets.get(c).is_some() && plan.fold_of(c).is_some());
    if !same {
        return Err(Error::InvalidArgument(
            "features, targets and fold plan must cover the same communities".into(),
        ));
    }
    if is_constant(&targets.entries().values().copied().collect::<Vec<_>>()) {
        return Err(Error::ConstantTarget);
    }

    let results: Vec<FoldResult> = (0..plan.k())
        .into_par_iter()
        .map(|fold| fit_fold(features, targets, plan, settings, fold))
        .collect::<Result<_>>()?;

    let mut oof = OutOfFoldPredictions {
        communities: Vec::with_capacity(features.len()),
        folds: Vec::with_capacity(features.len()),
        y_true: Vec::with_capacity(features.len()),
        y_pred: Vec::with_capacity(features.len()),
    };
    let mut per_fold = Vec::with_capacity(plan.k());
    for (fold, r) in results.into_iter().enumerate() {
        oof.folds.extend(std::iter::repeat(fold).take(r.test.len()));
        oof.communities.extend(r.test);
        oof.y_true.extend(r.y_true);
        oof.y_pred.extend(r.y_pred);
        per_fold.push(r.model);
    }
    let model = RidgeModel::from_folds(&targets.target_name, plan.seed(), per_fold)?;
    Ok((model, oof))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cids(n: usize) -> Vec<CommunityId> {
        (0..n).map(|i| CommunityId::new(format!("{:05}", 1000 + i)).unwrap()).collect()
    }

    #[test]
    fn folds_divisible_and_ragged() {
        let p = make_folds(&cids(10), 5, 1).unwrap();
        assert_eq!(p.fold_sizes(), vec![2; 5]);
        let p = make_folds(&cids(11), 5, 1).unwrap();
        let mut sizes = p.fold_sizes();
        sizes.sort();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
        assert_eq!(make_folds(&cids(11), 5, 1).unwrap(), p);
        assert!(make_folds(&cids(3), 4, 1).is_err());
        assert!(make_folds(&cids(3), 1, 1).is_err());
    }

    #[test]
    fn folds_ignore_input_order() {
        let mut c = cids(23);
        let a = make_folds(&c, 4, 9).unwrap();
        c.reverse();
        assert_eq!(make_folds(&c, 4, 9).unwrap(), a);
    }

    #[test]
    fn fit_ridge_examples() {
        let eye = EmbeddingMatrix::from_rows(2, &[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let w = fit_ridge(&eye, &[1.0, 1.0], 1e-12).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-9 && (w[1] - 1.0).abs() < 1e-9);

        let ones = EmbeddingMatrix::from_rows(1, &[[1.0], [1.0]]).unwrap();
        let w = fit_ridge(&ones, &[2.0, 2.0], 0.25).unwrap();
        assert!((w[0] - 4.0 / 3.0).abs() < 1e-15);

        let x = EmbeddingMatrix::from_rows(2, &[[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]]).unwrap();
        let y = [1.0, 2.0, 3.0];
        let w = fit_ridge(&x, &y, 1e9).unwrap();
        let xty = linalg::xt_y(&x, &y);
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(norm(&w) <= 1e-6 * norm(&xty));
    }

    #[test]
    fn fit_ridge_errors() {
        let x = EmbeddingMatrix::from_rows(1, &[[1.0]]).unwrap();
        assert!(fit_ridge(&x, &[1.0], 0.0).is_err());
        assert!(fit_ridge(&x, &[1.0], -1.0).is_err());
        assert!(fit_ridge(&x, &[f64::NAN], 1.0).is_err());
        assert!(fit_ridge(&x, &[1.0, 2.0], 1.0).is_err());
        assert!(fit_ridge(&EmbeddingMatrix::zeros(0, 1), &[], 1.0).is_err());
    }

    #[test]
    fn residual_of_normal_equations_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let x = EmbeddingMatrix::from_rows(8, &rows).unwrap();
        let y: Vec<f64> = (0..30).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let lambda = 0.01;
        let w = fit_ridge(&x, &y, lambda).unwrap();
        let mut a = linalg::gram(&x);
        add_ridge(&mut a, 8, 30, lambda);
        let b = linalg::xt_y(&x, &y);
        let resid: f64 = (0..8)
            .map(|i| (linalg::dot(&a[i * 8..(i + 1) * 8], &w) - b[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(resid <= 1e-8 * bn);
    }

    #[test]
    fn tune_lambda_edge_cases() {
        let x = EmbeddingMatrix::from_rows(1, &[[1.0], [2.0], [3.0], [4.0]]).unwrap();
        assert_eq!(tune_lambda(&x, &[1.0, 2.0, 2.0, 3.0], &[0.5], 2, 0).unwrap(), 0.5);
        assert!(matches!(
            tune_lambda(&x, &[2.0; 4], &[0.5, 1.0], 2, 0),
            Err(Error::ConstantTarget)
        ));
        assert!(tune_lambda(&x, &[1.0, 2.0, 2.0, 3.0], &[], 2, 0).is_err());
        assert!(tune_lambda(&x, &[1.0, 2.0, 2.0, 3.0], &[1.0], 1, 0).is_err());
    }

    #[test]
    fn select_lambda_tie_rule() {
        let grid = [0.1, 1.0, 10.0];
        assert_eq!(select_lambda(&grid, &[0.5, 0.9, 0.2]), 1.0);
        assert_eq!(select_lambda(&grid, &[0.9, 0.9, 0.2]), 1.0);
        assert_eq!(select_lambda(&grid, &[0.3, 0.3, 0.3]), 10.0);
        assert_eq!(select_lambda(&grid, &[f64::NEG_INFINITY; 3]), 10.0);
    }

    #[test]
    fn standardization_handles_constant_columns() {
        let x = EmbeddingMatrix::from_rows(2, &[[1.0, 5.0], [3.0, 5.0]]).unwrap();
        let s = Standardization::fit(&x);
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.scale, vec![1.0, 1.0]);
        let z = s.apply(&x);
        assert_eq!(z.row(0), &[-1.0, 0.0]);
    }

    #[test]
    fn averaged_model_of_identical_folds() {
        let fm = FoldModel {
            lambda: 1.0,
            weights: vec![0.5, -1.0],
            intercept: 3.0,
            standardization: Standardization {
                mean: vec![1.0, 2.0],
                scale: vec![2.0, 4.0],
            },
            train_communities: vec![],
        };
        let m = RidgeModel::from_folds("t", 0, vec![fm.clone(), fm.clone(), fm.clone()]).unwrap();
        assert_eq!(m.averaged_weights, fm.weights);
        assert_eq!(m.intercept, 3.0);
        assert_eq!(m.predict_sentence(&[1.0, 2.0]).unwrap(), 3.0);
        assert!(m.predict_sentence(&[1.0]).is_err());
    }
}
