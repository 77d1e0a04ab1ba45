//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Row-major random N×D matrix.
pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| gaussian(rng, d)).collect()
}

/// Conjugate gradient on `(XᵀX + 2NλI) w = Xᵀy`, never forming XᵀX.
pub fn cg_ridge(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Vec<f64> {
    let n = x.len();
    let d = x[0].len();
    let shift = 2.0 * n as f64 * lambda;
    let apply = |v: &[f64]| -> Vec<f64> {
        let xv: Vec<f64> = x.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect();
        (0..d)
            .map(|j| x.iter().zip(&xv).map(|(r, s)| r[j] * s).sum::<f64>() + shift * v[j])
            .collect()
    };
    let b: Vec<f64> = (0..d).map(|j| x.iter().zip(y).map(|(r, t)| r[j] * t).sum()).collect();
    let mut w = vec![0.0; d];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let b_norm = rr.sqrt();
    for _ in 0..20 * d {
        if rr.sqrt() <= 1e-15 * b_norm {
            break;
        }
        let ap = apply(&p);
        let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        w.iter_mut().zip(&p).for_each(|(wi, pi)| *wi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        let next: f64 = r.iter().map(|v| v * v).sum();
        let beta = next / rr;
        rr = next;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
    }
    w
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / norm.max(f64::MIN_POSITIVE)
}

/// Textbook sample correlation via the one-pass sums formula.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

pub fn mae_oracle(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / x.len() as f64
}

/// Quantile bin per value: stable sort by value, bin = floor(rank * c / n).
pub fn bins_oracle(v: &[f64], c: usize) -> Vec<usize> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut bins = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        bins[i] = rank * c / n;
    }
    bins
}

pub fn confusion_oracle(t: &[f64], p: &[f64], c: usize) -> (Vec<Vec<u64>>, f64) {
    let (bt, bp) = (bins_oracle(t, c), bins_oracle(p, c));
    let mut m = vec![vec![0u64; c]; c];
    for (a, b) in bt.iter().zip(&bp) {
        m[*a][*b] += 1;
    }
    let hits = bt.iter().zip(&bp).filter(|(a, b)| a == b).count();
    (m, hits as f64 / t.len() as f64)
}

/// Both-years mean; single-year passthrough.
pub fn union_oracle(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (k, v) in a {
        out.insert(k.clone(), b.get(k).map_or(*v, |w| (v + w) / 2.0));
    }
    for (k, v) in b {
        out.entry(k.clone()).or_insert(*v);
    }
    out
}

/// Best one-to-one matching agreement between two labelings with `m` labels,
/// by exhaustive search over permutations (small `m` only).
pub fn best_matching_agreement(a: &[usize], b: &[usize], m: usize) -> f64 {
    let mut table = vec![vec![0usize; m]; m];
    for (x, y) in a.iter().zip(b) {
        table[*x][*y] += 1;
    }
    fn search(row: usize, used: &mut Vec<bool>, table: &[Vec<usize>]) -> usize {
        if row == table.len() {
            return 0;
        }
        let mut best = 0;
        for col in 0..table.len() {
            if !used[col] {
                used[col] = true;
                best = best.max(table[row][col] + search(row + 1, used, table));
                used[col] = false;
            }
        }
        best
    }
    search(0, &mut vec![false; m], &table) as f64 / a.len() as f64
}

/// Ridge with intercept on explicit rows, by Gaussian elimination on the
/// centered normal equations.
pub fn centered_ridge(x: &[Vec<f64>], y: &[f64], lambda: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let n = x.len();
    let d = x[0].len();
    let xm: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let ym = y.iter().sum::<f64>() / n as f64;
    let mut a = vec![vec![0.0; d + 1]; d];
    for j in 0..d {
        for k in 0..d {
            a[j][k] = x.iter().map(|r| (r[j] - xm[j]) * (r[k] - xm[k])).sum();
        }
        a[j][j] += 2.0 * n as f64 * lambda;
        a[j][d] = x.iter().zip(y).map(|(r, t)| (r[j] - xm[j]) * (t - ym)).sum();
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap()).unwrap();
        a.swap(col, piv);
        for r in 0..d {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..=d {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
    }
    let w = (0..d).map(|j| a[j][d] / a[j][j]).collect();
    (w, xm, ym)
}

pub fn random_fips(rng: &mut ChaCha8Rng) -> String {
    format!("{:05}", rng.gen_range(1000..57000))
}
