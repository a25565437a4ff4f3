use nalgebra::{DMatrix, DVector};

use super::lbfgs::{self, Minimum};
use super::{lse, AffineCoeffs, MinimizerSettings};
use crate::error::{invalid, ParcError, Result};

const MAX_NEWTON_PARAMS: usize = 400;
const NEWTON_STEPS: usize = 8;

/// Regularized multinomial logistic loss
///
/// `reg * sum_c (||a_c||^2 + b_c^2) + weight * sum_k [lse_c(a_c x_k + b_c) - (a_{y_k} x_k + b_{y_k})]`
///
/// With `pin_last` the last class is fixed at `a = 0, b = 0` and only the
/// other classes are optimized (the reduced parameterization).
#[derive(Debug, Clone, Copy)]
pub struct SoftmaxProblem<'a> {
    pub x: &'a DMatrix<f64>,
    pub labels: &'a [usize],
    pub n_classes: usize,
    pub reg: f64,
    pub loss_weight: f64,
    pub pin_last: bool,
}

impl SoftmaxProblem<'_> {
    pub fn free_classes(&self) -> usize {
        if self.pin_last {
            self.n_classes.saturating_sub(1)
        } else {
            self.n_classes
        }
    }

    pub fn n_params(&self) -> usize {
        self.free_classes() * (self.x.ncols() + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 {
            return invalid("softmax needs at least one class");
        }
        if self.labels.len() != self.x.nrows() {
            return Err(ParcError::Dimension(format!(
                "{} labels for {} samples",
                self.labels.len(),
                self.x.nrows()
            )));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.n_classes) {
            return invalid(format!("label {l} out of range for {} classes", self.n_classes));
        }
        if !self.x.iter().all(|v| v.is_finite()) {
            return Err(ParcError::NonFinite("softmax features".into()));
        }
        Ok(())
    }

    /// Objective value; writes the gradient into `grad`.
    pub fn value_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.x.ncols();
        let stride = n + 1;
        let free = self.free_classes();
        let mut val = 0.0;
        for (g, p) in grad.iter_mut().zip(params) {
            val += self.reg * p * p;
            *g = 2.0 * self.reg * p;
        }
        let mut scores = vec![0.0; self.n_classes];
        let w = self.loss_weight;
        for (k, &yk) in self.labels.iter().enumerate() {
            for (c, s) in scores.iter_mut().enumerate().take(free) {
                let base = c * stride;
                let mut v = params[base + n];
                for i in 0..n {
                    v += params[base + i] * self.x[(k, i)];
                }
                *s = v;
            }
            let l = lse(&scores);
            val += w * (l - scores[yk]);
            for (c, &s) in scores.iter().enumerate().take(free) {
                let coef = w * ((s - l).exp() - if c == yk { 1.0 } else { 0.0 });
                let base = c * stride;
                for i in 0..n {
                    grad[base + i] += coef * self.x[(k, i)];
                }
                grad[base + n] += coef;
            }
        }
        val
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let mut g = vec![0.0; params.len()];
        self.value_grad(params, &mut g)
    }

    pub fn params_from(&self, coeffs: &AffineCoeffs) -> Result<Vec<f64>> {
        let n = self.x.ncols();
        if coeffs.rows() != self.n_classes || coeffs.n_features() != n {
            return Err(ParcError::Dimension(format!(
                "warm start is {}x{}, expected {}x{}",
                coeffs.rows(),
                coeffs.n_features(),
                self.n_classes,
                n
            )));
        }
        let mut p = Vec::with_capacity(self.n_params());
        let shift = if self.pin_last {
            // move to the gauge where the last class is zero
            Some(self.n_classes - 1)
        } else {
            None
        };
        for c in 0..self.free_classes() {
            for i in 0..n {
                p.push(coeffs.a[(c, i)] - shift.map_or(0.0, |l| coeffs.a[(l, i)]));
            }
            p.push(coeffs.b[c] - shift.map_or(0.0, |l| coeffs.b[l]));
        }
        Ok(p)
    }

    pub fn coeffs_from(&self, params: &[f64]) -> AffineCoeffs {
        let n = self.x.ncols();
        let mut c = AffineCoeffs::zeros(self.n_classes, n);
        for k in 0..self.free_classes() {
            for i in 0..n {
                c.a[(k, i)] = params[k * (n + 1) + i];
            }
            c.b[k] = params[k * (n + 1) + n];
        }
        c
    }

    /// Minimizes from `warm` (zeros when absent).
    pub fn solve(&self, warm: Option<&AffineCoeffs>, settings: &MinimizerSettings) -> Result<SoftmaxFit> {
        self.validate()?;
        settings.validate()?;
        let x0 = match warm {
            Some(w) => self.params_from(w)?,
            None => vec![0.0; self.n_params()],
        };
        if !x0.iter().all(|v| v.is_finite()) {
            return Err(ParcError::NonFinite("softmax warm start".into()));
        }
        let mut m: Minimum = lbfgs::minimize(|p, g| self.value_grad(p, g), x0, settings);
        if !m.converged && self.n_params() <= MAX_NEWTON_PARAMS {
            self.newton_polish(&mut m, settings);
        }
        Ok(SoftmaxFit {
            coeffs: self.coeffs_from(&m.x),
            objective: m.value,
            start_objective: m.trace[0],
            gradient_norm: m.gradient_norm,
            evaluations: m.evaluations,
            converged: m.converged,
            trace: m.trace,
        })
    }

    /// Hessian of the objective at `params`.
    pub fn hessian(&self, params: &[f64]) -> DMatrix<f64> {
        let n = self.x.ncols();
        let stride = n + 1;
        let free = self.free_classes();
        let dim = self.n_params();
        let mut h = DMatrix::from_diagonal_element(dim, dim, 2.0 * self.reg);
        let mut scores = vec![0.0; self.n_classes];
        let mut z = vec![1.0; stride];
        for k in 0..self.labels.len() {
            for i in 0..n {
                z[i] = self.x[(k, i)];
            }
            for (c, s) in scores.iter_mut().enumerate().take(free) {
                *s = (0..stride).map(|i| params[c * stride + i] * z[i]).sum();
            }
            let l = lse(&scores);
            let prob: Vec<f64> = scores.iter().map(|s| (s - l).exp()).collect();
            for c in 0..free {
                for e in 0..free {
                    let w = self.loss_weight * (if c == e { prob[c] } else { 0.0 } - prob[c] * prob[e]);
                    if w == 0.0 {
                        continue;
                    }
                    for i in 0..stride {
                        for j in 0..stride {
                            h[(c * stride + i, e * stride + j)] += w * z[i] * z[j];
                        }
                    }
                }
            }
        }
        h
    }

    /// Newton steps from where L-BFGS stalled. Close to the optimum the
    /// objective is flat to rounding, so a step is judged by the gradient.
    fn newton_polish(&self, m: &mut Minimum, settings: &MinimizerSettings) {
        let dim = m.x.len();
        let mut g = vec![0.0; dim];
        let mut fx = self.value_grad(&m.x, &mut g);
        let mut gnorm = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let ceiling = m.trace[0].min(fx + 16.0 * f64::EPSILON * (fx.abs() + 1.0));
        for _ in 0..NEWTON_STEPS {
            if gnorm <= settings.gradient_tolerance {
                break;
            }
            let Some(chol) = self.hessian(&m.x).cholesky() else {
                break;
            };
            let step = chol.solve(&DVector::from_column_slice(&g));
            let x_new: Vec<f64> = m.x.iter().zip(step.iter()).map(|(x, d)| x - d).collect();
            let mut g_new = vec![0.0; dim];
            let f_new = self.value_grad(&x_new, &mut g_new);
            m.evaluations += 1;
            let gnorm_new = g_new.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if !(gnorm_new < gnorm && f_new <= ceiling) {
                break;
            }
            if f_new <= *m.trace.last().expect("nonempty") {
                m.trace.push(f_new);
            }
            (m.x, g, fx, gnorm) = (x_new, g_new, f_new, gnorm_new);
        }
        m.value = fx;
        m.gradient_norm = gnorm;
        m.converged = gnorm <= settings.gradient_tolerance;
    }
}

#[derive(Debug, Clone)]
pub struct SoftmaxFit {
    /// One row per class.
    pub coeffs: AffineCoeffs,
    pub objective: f64,
    /// Objective at the warm start.
    pub start_objective: f64,
    pub gradient_norm: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Objective after every accepted minimizer step (non-increasing).
    pub trace: Vec<f64>,
}

/// Full-parameterization softmax regression with regularized intercepts.
/// Classes that never occur still get finite coefficients.
pub fn softmax_fit(
    x: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    alpha: f64,
    warm_start: Option<&AffineCoeffs>,
    settings: &MinimizerSettings,
) -> Result<SoftmaxFit> {
    if !(alpha > 0.0) {
        return invalid(format!("softmax regularization must be positive, got {alpha}"));
    }
    SoftmaxProblem {
        x,
        labels,
        n_classes,
        reg: alpha,
        loss_weight: 1.0,
        pin_last: false,
    }
    .solve(warm_start, settings)
}

pub fn softmax_objective(x: &DMatrix<f64>, labels: &[usize], alpha: f64, coeffs: &AffineCoeffs) -> f64 {
    let p = SoftmaxProblem {
        x,
        labels,
        n_classes: coeffs.rows(),
        reg: alpha,
        loss_weight: 1.0,
        pin_last: false,
    };
    let params = p.params_from(coeffs).expect("dimensions checked by caller");
    p.value(&params)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary logistic regression
/// `alpha (||a||^2 + b^2) + sum_k log(1 + exp((1 - 2 y_k)(a x_k + b)))`,
/// labels in {0, 1}; `a x + b > 0` predicts class 1.
pub fn logistic_fit(
    x: &DMatrix<f64>,
    labels: &[usize],
    alpha: f64,
    settings: &MinimizerSettings,
) -> Result<(DVector<f64>, f64)> {
    if labels.len() != x.nrows() {
        return Err(ParcError::Dimension("labels vs samples".into()));
    }
    if labels.iter().any(|&l| l > 1) {
        return invalid("logistic labels must be 0 or 1");
    }
    let n = x.ncols();
    let f = |p: &[f64], g: &mut [f64]| {
        let mut val = 0.0;
        for i in 0..=n {
            val += alpha * p[i] * p[i];
            g[i] = 2.0 * alpha * p[i];
        }
        for (k, &y) in labels.iter().enumerate() {
            let mut z = p[n];
            for i in 0..n {
                z += p[i] * x[(k, i)];
            }
            let s = 1.0 - 2.0 * y as f64;
            val += softplus(s * z);
            let coef = s * sigmoid(s * z);
            for i in 0..n {
                g[i] += coef * x[(k, i)];
            }
            g[n] += coef;
        }
        val
    };
    let m = lbfgs::minimize(f, vec![0.0; n + 1], settings);
    Ok((DVector::from_column_slice(&m.x[..n]), m.x[n]))
}

/// Fits a 2-class softmax and a logistic regression on the same data and
/// checks that they predict the same class on every training point.
///
/// With the full (two-row) softmax parameterization the regularizer splits
/// evenly across the two rows at the optimum, so the matching logistic
/// problem carries half the regularization weight.
pub fn binary_equivalence_check(x: &DMatrix<f64>, labels: &[usize], alpha: f64) -> Result<bool> {
    let settings = MinimizerSettings {
        gradient_tolerance: 1e-10,
        max_evaluations: 20_000,
        memory_depth: 10,
    };
    let sm = softmax_fit(x, labels, 2, alpha, None, &settings)?;
    let (a, b) = logistic_fit(x, labels, 0.5 * alpha, &settings)?;
    for k in 0..x.nrows() {
        let row: Vec<f64> = x.row(k).iter().copied().collect();
        let s0 = sm.coeffs.eval_row(0, &row);
        let s1 = sm.coeffs.eval_row(1, &row);
        let softmax_class = usize::from(s1 > s0);
        let z: f64 = row.iter().zip(a.iter()).map(|(u, v)| u * v).sum::<f64>() + b;
        let logistic_class = usize::from(z > 0.0);
        if softmax_class != logistic_class {
            return Ok(false);
        }
    }
    Ok(true)
}
