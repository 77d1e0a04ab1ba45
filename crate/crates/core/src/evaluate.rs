//! Prediction quality metrics: Pearson correlation, mean absolute error and
//! quantile-bin classification accuracy with its confusion matrix.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_QUANTILES: usize = 10;

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric input".into()));
    }
    Ok(())
}

/// Sample Pearson correlation coefficient (two-pass, centered).
pub fn pearson(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_lengths(y_true, y_pred)?;
    let n = y_true.len();
    if n < 3 {
        return Err(Error::TooFewValues { needed: 3, got: n });
    }
    let mt = y_true.iter().sum::<f64>() / n as f64;
    let mp = y_pred.iter().sum::<f64>() / n as f64;
    let (mut stt, mut spp, mut stp) = (0.0, 0.0, 0.0);
    for (t, p) in y_true.iter().zip(y_pred) {
        let (dt, dp) = (t - mt, p - mp);
        stt += dt * dt;
        spp += dp * dp;
        stp += dt * dp;
    }
    if stt == 0.0 || spp == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    Ok((stp / (stt.sqrt() * spp.sqrt())).clamp(-1.0, 1.0))
}

/// Mean absolute error.
pub fn mae(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_lengths(y_true, y_pred)?;
    if y_true.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    Ok(y_true.iter().zip(y_pred).map(|(t, p)| (t - p).abs()).sum::<f64>() / y_true.len() as f64)
}

/// Rank-based quantile bins: sort by value (ties by index); the element of
/// rank `r` goes to bin `floor(r * c / n)`.
pub fn quantile_bins(values: &[f64], c: usize) -> Result<Vec<usize>> {
    if c < 2 {
        return Err(Error::InvalidArgument("need at least 2 quantiles".into()));
    }
    if values.len() < c {
        return Err(Error::TooFewValues {
            needed: c,
            got: values.len(),
        });
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("quantile input".into()));
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut bins = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        bins[i] = rank * c / n;
    }
    Ok(bins)
}

/// C×C counts with true bins as rows and predicted bins as columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub c: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn n(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.c).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.n() as f64
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.c).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    /// Headered CSV: `true_bin,pred_0,..,pred_{C-1}`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "true_bin")?;
        for j in 0..self.c {
            write!(out, ",pred_{j}")?;
        }
        writeln!(out)?;
        for (i, row) in self.counts.iter().enumerate() {
            write!(out, "{i}")?;
            for v in row {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }
}

/// Bins both series independently and cross-tabulates them.
pub fn confusion(y_true: &[f64], y_pred: &[f64], c: usize) -> Result<(ConfusionMatrix, f64)> {
    check_lengths(y_true, y_pred)?;
    let tb = quantile_bins(y_true, c)?;
    let pb = quantile_bins(y_pred, c)?;
    let mut counts = vec![vec![0u64; c]; c];
    for (i, j) in tb.into_iter().zip(pb) {
        counts[i][j] += 1;
    }
    let m = ConfusionMatrix { c, counts };
    let acc = m.accuracy();
    Ok((m, acc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub target_name: String,
    pub n: usize,
    pub pearson: f64,
    pub mae: f64,
    pub quantiles: usize,
    pub bin_accuracy: f64,
    pub confusion: ConfusionMatrix,
}

impl EvaluationReport {
    pub fn compute(target_name: &str, y_true: &[f64], y_pred: &[f64], quantiles: usize) -> Result<Self> {
        let (confusion, bin_accuracy) = confusion(y_true, y_pred, quantiles)?;
        Ok(EvaluationReport {
            target_name: target_name.to_string(),
            n: y_true.len(),
            pearson: pearson(y_true, y_pred)?,
            mae: mae(y_true, y_pred)?,
            quantiles,
            bin_accuracy,
            confusion,
        })
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::format("evaluation report", e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(format!("evaluation report {}", path.display()), e))
    }

    pub fn save_confusion_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.confusion
            .write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

impl std::fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "target          {}", self.target_name)?;
        writeln!(f, "communities     {}", self.n)?;
        writeln!(f, "pearson rho     {:.4}", self.pearson)?;
        writeln!(f, "MAE             {:.4}", self.mae)?;
        write!(
            f,
            "{}-bin accuracy  {:.4} (chance {:.4})",
            self.quantiles,
            self.bin_accuracy,
            1.0 / self.quantiles as f64
        )
    }
}
