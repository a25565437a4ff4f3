//! Numerical building blocks: log-sum-exp, ridge regression with a
//! regularized intercept, and l2-regularized softmax/logistic regression.

pub mod lbfgs;
mod ridge;
mod softmax;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{row_dot, serde_rows, serde_vector};

pub use ridge::{ridge_fit, ridge_fit_multi, ridge_objective};
pub use softmax::{
    binary_equivalence_check, logistic_fit, softmax_fit, softmax_objective, SoftmaxFit,
    SoftmaxProblem,
};

/// Stable `log(sum(exp(v)))`.
pub fn logsumexp(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return invalid("logsumexp of an empty vector");
    }
    Ok(lse(v))
}

/// `logsumexp` for callers that guarantee a nonempty slice.
#[inline]
pub(crate) fn lse(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Affine maps `x -> a x + b` for all target rows of one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineCoeffs {
    #[serde(with = "serde_rows")]
    pub a: DMatrix<f64>,
    #[serde(with = "serde_vector")]
    pub b: DVector<f64>,
}

impl AffineCoeffs {
    pub fn zeros(rows: usize, n: usize) -> Self {
        Self {
            a: DMatrix::zeros(rows, n),
            b: DVector::zeros(rows),
        }
    }

    pub fn rows(&self) -> usize {
        self.b.len()
    }

    pub fn n_features(&self) -> usize {
        self.a.ncols()
    }

    #[inline]
    pub fn eval_row(&self, row: usize, x: &[f64]) -> f64 {
        row_dot(&self.a, row, x) + self.b[row]
    }

    /// `||a||_F^2 + ||b||^2`.
    pub fn sq_norm(&self) -> f64 {
        self.a.norm_squared() + self.b.norm_squared()
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().chain(self.b.iter()).all(|v| v.is_finite())
    }

    /// Rows `range` as a standalone block.
    pub fn block(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            a: self.a.rows(range.start, range.len()).into_owned(),
            b: self.b.rows(range.start, range.len()).into_owned(),
        }
    }

    pub fn set_block(&mut self, start: usize, block: &Self) {
        self.a.rows_mut(start, block.rows()).copy_from(&block.a);
        self.b.rows_mut(start, block.rows()).copy_from(&block.b);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizerSettings {
    /// Stop once the gradient infinity norm drops below this.
    pub gradient_tolerance: f64,
    pub max_evaluations: usize,
    /// Number of stored curvature pairs.
    pub memory_depth: usize,
}

impl MinimizerSettings {
    /// Tolerance used for the last fits of a training run.
    pub fn final_default() -> Self {
        Self {
            gradient_tolerance: 1e-6,
            max_evaluations: 2000,
            memory_depth: 10,
        }
    }

    /// Looser tolerance for intermediate block-descent iterations.
    pub fn intermediate_default() -> Self {
        Self {
            gradient_tolerance: 1e-4,
            max_evaluations: 1000,
            memory_depth: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0) {
            return invalid("gradient_tolerance must be positive");
        }
        if self.max_evaluations == 0 {
            return invalid("max_evaluations must be at least 1");
        }
        Ok(())
    }
}

impl Default for MinimizerSettings {
    fn default() -> Self {
        Self::final_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lse_examples() {
        assert_eq!(logsumexp(&[0.0]).unwrap(), 0.0);
        let c = 1000.0;
        let v = logsumexp(&[c, c]).unwrap();
        assert!((v - (c + std::f64::consts::LN_2)).abs() < 1e-12);
        assert!(logsumexp(&[]).is_err());
        let v = logsumexp(&[-1000.0, -1000.0]).unwrap();
        assert!((v - (-1000.0 + std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn lse_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let direct = v.iter().map(|x| x.exp()).sum::<f64>().ln();
            assert!((logsumexp(&v).unwrap() - direct).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn lse_bounds(v in prop::collection::vec(-700.0f64..700.0, 1..16)) {
                let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let l = logsumexp(&v).unwrap();
                prop_assert!(l >= m);
                prop_assert!(l <= m + (v.len() as f64).ln() + 1e-12);
            }
        }
    }
}
