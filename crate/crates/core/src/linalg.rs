//! Small dense kernels for the regression solver.

use crate::error::{Error, Result};
use crate::types::EmbeddingMatrix;

/// Dot product with four independent accumulators so the loop vectorizes.
/// The summation order is fixed, so results do not depend on the caller.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// XᵀX as a dense row-major D×D buffer.
pub(crate) fn gram(x: &EmbeddingMatrix) -> Vec<f64> {
    let d = x.cols();
    let mut g = vec![0.0; d * d];
    for row in x.iter_rows() {
        for i in 0..d {
            let xi = row[i];
            if xi == 0.0 {
                continue;
            }
            let gi = &mut g[i * d..(i + 1) * d];
            for j in i..d {
                gi[j] += xi * row[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            g[i * d + j] = g[j * d + i];
        }
    }
    g
}

/// Xᵀy.
pub(crate) fn xt_y(x: &EmbeddingMatrix, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.cols()];
    for (row, &yi) in x.iter_rows().zip(y) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v * yi;
        }
    }
    out
}

/// Solves `A w = b` for symmetric positive-definite `A` (row-major n×n) by
/// Cholesky factorization. `a` is overwritten with the factor.
pub(crate) fn cholesky_solve(a: &mut [f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "matrix is not positive definite (pivot {j})"
            )));
        }
        let ljj = diag.sqrt();
        a[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
    }
    // forward: L z = b
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= a[i * n + k] * z[k];
        }
        z[i] = s / a[i * n + i];
    }
    // backward: Lᵀ w = z
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= a[k * n + i] * z[k];
        }
        z[i] = s / a[i * n + i];
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_small_system() {
        // [[4,2],[2,3]] w = [2,1] → w = [0.5, 0]
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let w = cholesky_solve(&mut a, &[2.0, 1.0]).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-15 && w[1].abs() < 1e-15);
        let mut singular = vec![1.0, 1.0, 1.0, 1.0];
        assert!(cholesky_solve(&mut singular, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn gram_is_symmetric() {
        let x = EmbeddingMatrix::from_rows(3, &[[1.0, 2.0, 0.0], [0.5, -1.0, 3.0]]).unwrap();
        let g = gram(&x);
        assert_eq!(g, vec![1.25, 1.5, 1.5, 1.5, 5.0, -3.0, 1.5, -3.0, 9.0]);
        assert_eq!(xt_y(&x, &[1.0, 2.0]), vec![2.0, 0.0, 6.0]);
    }
}
