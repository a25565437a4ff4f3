use nalgebra::{DMatrix, DVector};

use super::AffineCoeffs;
use crate::error::{invalid, ParcError, Result};

/// Normal-equation matrix `Z'Z + alpha I` for `Z = [X 1]`; the intercept is
/// regularized like every other coefficient.
fn gram(x: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let (nr, n) = x.shape();
    let mut g = DMatrix::zeros(n + 1, n + 1);
    let xtx = x.tr_mul(x);
    g.view_mut((0, 0), (n, n)).copy_from(&xtx);
    for c in 0..n {
        let s: f64 = x.column(c).sum();
        g[(c, n)] = s;
        g[(n, c)] = s;
    }
    g[(n, n)] = nr as f64;
    for i in 0..=n {
        g[(i, i)] += alpha;
    }
    g
}

fn check_inputs(x: &DMatrix<f64>, y_rows: usize, alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return invalid(format!("ridge regularization must be positive, got {alpha}"));
    }
    if x.nrows() != y_rows {
        return Err(ParcError::Dimension(format!(
            "{} feature rows vs {} target rows",
            x.nrows(),
            y_rows
        )));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(ParcError::NonFinite("ridge features".into()));
    }
    Ok(())
}

/// Minimizes `alpha (||A||_F^2 + ||b||^2) + sum_k ||y_k - A x_k - b||^2`
/// jointly for all columns of `y` (each column is independent).
pub fn ridge_fit_multi(x: &DMatrix<f64>, y: &DMatrix<f64>, alpha: f64) -> Result<AffineCoeffs> {
    check_inputs(x, y.nrows(), alpha)?;
    if !y.iter().all(|v| v.is_finite()) {
        return Err(ParcError::NonFinite("ridge targets".into()));
    }
    let n = x.ncols();
    let m = y.ncols();
    let g = gram(x, alpha);
    let mut rhs = DMatrix::zeros(n + 1, m);
    rhs.view_mut((0, 0), (n, m)).copy_from(&x.tr_mul(y));
    for t in 0..m {
        rhs[(n, t)] = y.column(t).sum();
    }
    let w = match g.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => g
            .lu()
            .solve(&rhs)
            .ok_or_else(|| ParcError::Numerical("singular ridge system".into()))?,
    };
    let a = w.view((0, 0), (n, m)).transpose();
    let b = w.row(n).transpose();
    Ok(AffineCoeffs { a, b })
}

/// Single-target ridge regression; returns `(a, b)`.
pub fn ridge_fit(x: &DMatrix<f64>, y: &[f64], alpha: f64) -> Result<(DVector<f64>, f64)> {
    let ym = DMatrix::from_column_slice(y.len(), 1, y);
    let c = ridge_fit_multi(x, &ym, alpha)?;
    Ok((c.a.row(0).transpose(), c.b[0]))
}

pub fn ridge_objective(x: &DMatrix<f64>, y: &[f64], alpha: f64, a: &DVector<f64>, b: f64) -> f64 {
    let r = x * a;
    let loss: f64 = r
        .iter()
        .zip(y)
        .map(|(p, yk)| (yk - p - b).powi(2))
        .sum();
    alpha * (a.norm_squared() + b * b) + loss
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_line() {
        let x = DMatrix::from_fn(10, 1, |i, _| i as f64 / 3.0);
        let y: Vec<f64> = (0..10).map(|i| 2.0 * (i as f64 / 3.0) + 1.0).collect();
        let (a, b) = ridge_fit(&x, &y, 1e-8).unwrap();
        assert!((a[0] - 2.0).abs() < 1e-4 && (b - 1.0).abs() < 1e-4);
    }

    #[test]
    fn heavy_regularization_shrinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(20, 3, |_, _| rng.gen_range(-1.0..1.0));
        let y: Vec<f64> = (0..20).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let ymax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (a, b) = ridge_fit(&x, &y, 1e8).unwrap();
        assert!(a.norm() <= 1e-4 * ymax && b.abs() <= 1e-4 * ymax);
    }

    /// Oracle: Z = [X 1] built explicitly, solved with a QR factorization of
    /// the stacked system [Z; sqrt(alpha) I] w = [y; 0].
    #[test]
    fn matches_stacked_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DMatrix::from_fn(5, 2, |_, _| rng.gen_range(-2.0..2.0));
        let y: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let alpha: f64 = 0.1;
        let mut stacked = DMatrix::zeros(8, 3);
        let mut rhs = DVector::zeros(8);
        for k in 0..5 {
            stacked[(k, 0)] = x[(k, 0)];
            stacked[(k, 1)] = x[(k, 1)];
            stacked[(k, 2)] = 1.0;
            rhs[k] = y[k];
        }
        for i in 0..3 {
            stacked[(5 + i, i)] = alpha.sqrt();
        }
        let qr = stacked.qr();
        let qtb = qr.q().transpose() * rhs;
        let w = qr.r().solve_upper_triangular(&qtb).unwrap();
        let (a, b) = ridge_fit(&x, &y, alpha).unwrap();
        assert!((a[0] - w[0]).abs() < 1e-9);
        assert!((a[1] - w[1]).abs() < 1e-9);
        assert!((b - w[2]).abs() < 1e-9);
    }

    #[test]
    fn normal_equation_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = DMatrix::from_fn(30, 4, |_, _| rng.gen_range(-3.0..3.0));
        let y: Vec<f64> = (0..30).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let alpha = 0.5;
        let (a, b) = ridge_fit(&x, &y, alpha).unwrap();
        // gradient of the objective
        let mut grad = [0.0; 5];
        for k in 0..30 {
            let r = y[k] - (x.row(k) * &a)[0] - b;
            for c in 0..4 {
                grad[c] -= 2.0 * r * x[(k, c)];
            }
            grad[4] -= 2.0 * r;
        }
        for c in 0..4 {
            grad[c] += 2.0 * alpha * a[c];
        }
        grad[4] += 2.0 * alpha * b;
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let gnorm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(gnorm <= 1e-8 * (1.0 + ynorm), "{gnorm}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = DMatrix::from_element(2, 1, 1.0);
        assert!(ridge_fit(&x, &[1.0, 2.0], 0.0).is_err());
        assert!(ridge_fit(&x, &[1.0, f64::NAN], 1.0).is_err());
        assert!(ridge_fit(&x, &[1.0], 1.0).is_err());
    }

    #[test]
    fn empty_rows_give_zero() {
        let x = DMatrix::<f64>::zeros(0, 2);
        let (a, b) = ridge_fit(&x, &[], 1.0).unwrap();
        assert_eq!(a.norm(), 0.0);
        assert_eq!(b, 0.0);
    }
}
