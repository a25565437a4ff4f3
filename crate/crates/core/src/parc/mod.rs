//! The PARC training loop: alternate per-cluster fits, the PWL separation
//! and point reassignment until the assignment settles.

mod kmeans;
mod loss;
mod select;

use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{ColumnSpec, EncodedDataset, Scaler, TargetLayout};
use crate::error::{invalid, ParcError, Result};
use crate::solvers::{ridge_fit_multi, AffineCoeffs, MinimizerSettings, SoftmaxProblem};

pub use kmeans::kmeanspp_init;
pub(crate) use loss::{argmax, argmin};
pub use loss::{
    assign_all, objective, separation_loss, target_loss, LossWeights, Separation, SeparationMode,
};
pub use select::{select_k, KSelection};

pub const FORMAT_VERSION: u32 = 1;

/// What happens to the samples of clusters that are too small.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscardPolicy {
    /// Treat them as outliers and leave them out of the final fits.
    Drop,
    /// Move them to the cheapest remaining cluster.
    Reassign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParcConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    /// Weights of the numeric targets; empty means all ones.
    pub mu_c: Vec<f64>,
    /// Weights of the categorical targets; empty means all ones.
    pub mu_d: Vec<f64>,
    pub separation: SeparationMode,
    pub epsilon: f64,
    /// Compare the decrease of V against `epsilon * |V|` instead of `epsilon`.
    pub relative_epsilon: bool,
    pub max_iters: usize,
    pub c_min_fraction: f64,
    pub discard: DiscardPolicy,
    /// Standardize numeric features and numeric targets before training.
    pub standardize: bool,
    pub intermediate_solver: MinimizerSettings,
    pub final_solver: MinimizerSettings,
    pub seed: u64,
}

impl Default for ParcConfig {
    fn default() -> Self {
        Self {
            k: 5,
            alpha: 0.1,
            beta: 1e-3,
            sigma: 1.0,
            mu_c: Vec::new(),
            mu_d: Vec::new(),
            separation: SeparationMode::Softmax,
            epsilon: 1e-4,
            relative_epsilon: false,
            max_iters: 100,
            c_min_fraction: 0.01,
            discard: DiscardPolicy::Drop,
            standardize: true,
            intermediate_solver: MinimizerSettings::intermediate_default(),
            final_solver: MinimizerSettings::final_default(),
            seed: 0,
        }
    }
}

impl ParcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return invalid("K must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return invalid("alpha must be positive");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return invalid("beta must be nonnegative");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return invalid("sigma must be nonnegative");
        }
        if !(self.epsilon > 0.0) {
            return invalid("epsilon must be positive");
        }
        if self.max_iters == 0 {
            return invalid("max_iters must be at least 1");
        }
        if !(0.0..1.0).contains(&self.c_min_fraction) {
            return invalid("c_min_fraction must be in [0, 1)");
        }
        if self.mu_c.iter().chain(&self.mu_d).any(|m| !(*m >= 0.0 && m.is_finite())) {
            return invalid("target weights must be nonnegative");
        }
        self.intermediate_solver.validate()?;
        self.final_solver.validate()
    }

    pub fn weights(&self, layout: &TargetLayout, n_total: usize) -> Result<LossWeights> {
        let expand = |mu: &[f64], len: usize, what: &str| -> Result<Vec<f64>> {
            match mu.len() {
                0 => Ok(vec![1.0; len]),
                l if l == len => Ok(mu.to_vec()),
                l => Err(ParcError::Dimension(format!("{l} {what} weights for {len} targets"))),
            }
        };
        Ok(LossWeights {
            sigma: self.sigma,
            alpha: self.alpha,
            beta: self.beta,
            mu_c: expand(&self.mu_c, layout.numeric, "numeric")?,
            mu_d: expand(&self.mu_d, layout.classes.len(), "categorical")?,
            n_total,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    AssignmentUnchanged,
    ObjectiveStalled,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// V after the reassignment of every iteration.
    pub objective_per_iter: Vec<f64>,
    pub iterations: usize,
    pub cluster_sizes_per_iter: Vec<Vec<usize>>,
    pub stop_reason: StopReason,
    /// Clusters (indices into `0..K`) removed after the loop.
    pub discarded_clusters: Vec<usize>,
    /// Samples left out of the final fits.
    pub dropped_samples: Vec<usize>,
    /// Every warm-started separation fit ended below its starting objective.
    pub separation_decreased: bool,
    /// Cluster of each sample when the loop stopped.
    pub labels: Vec<usize>,
    /// Final region of each sample (`None` if dropped).
    pub regions: Vec<Option<usize>>,
    pub wall_time_secs: f64,
}

/// Fitted piecewise-affine predictor. Coefficients and separation act on
/// standardized features; `raw_form` re-expresses them in input units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParcModel {
    pub format_version: u32,
    pub config: ParcConfig,
    pub feature_specs: Vec<ColumnSpec>,
    pub target_specs: Vec<ColumnSpec>,
    pub layout: TargetLayout,
    pub x_scaler: Scaler,
    pub y_scaler: Scaler,
    pub separation: Separation,
    /// One block of coefficient rows per region.
    pub coeffs: Vec<AffineCoeffs>,
    /// Per-column range of the training features (input units).
    pub feature_min: Vec<f64>,
    pub feature_max: Vec<f64>,
}

/// Separation scores and target rows as affine maps of unscaled features.
#[derive(Debug, Clone, PartialEq)]
pub struct RawForm {
    pub omega: DMatrix<f64>,
    pub gamma: DVector<f64>,
    /// Regression rows produce outputs in target units.
    pub coeffs: Vec<AffineCoeffs>,
}

impl ParcModel {
    pub fn n_regions(&self) -> usize {
        self.coeffs.len()
    }

    pub fn n_features(&self) -> usize {
        self.x_scaler.dim()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let version = v.get("format_version").and_then(|x| x.as_u64()).unwrap_or(0) as u32;
        if version != FORMAT_VERSION {
            return Err(ParcError::FormatVersion(version));
        }
        let m: Self = serde_json::from_value(v)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_features();
        let k = self.n_regions();
        if k == 0 || self.separation.n_regions() != k {
            return Err(ParcError::Dimension("region count mismatch".into()));
        }
        let rows = self.layout.rows();
        if self.coeffs.iter().any(|c| c.rows() != rows || c.n_features() != n)
            || self.y_scaler.dim() != self.layout.numeric
            || self.feature_min.len() != n
            || self.feature_max.len() != n
            || self.separation.omega().ncols() != n
        {
            return Err(ParcError::Dimension("model parts disagree in size".into()));
        }
        if !self.separation.is_finite() || !self.coeffs.iter().all(AffineCoeffs::is_finite) {
            return Err(ParcError::NonFinite("model parameters".into()));
        }
        Ok(())
    }

    /// Model on unscaled data from explicit parameters, with default column
    /// names (`x1..`, `y1..`, `c1..`) and category labels `0..m_i`.
    pub fn from_parts(
        separation: Separation,
        coeffs: Vec<AffineCoeffs>,
        layout: TargetLayout,
        feature_min: Vec<f64>,
        feature_max: Vec<f64>,
    ) -> Result<Self> {
        let n = feature_min.len();
        let mut target_specs: Vec<ColumnSpec> = (0..layout.numeric)
            .map(|i| ColumnSpec::numeric(format!("y{}", i + 1)))
            .collect();
        for (i, &m) in layout.classes.iter().enumerate() {
            target_specs.push(ColumnSpec::categorical(format!("c{}", i + 1), (0..m).map(|h| h.to_string()))?);
        }
        let model = Self {
            format_version: FORMAT_VERSION,
            config: ParcConfig {
                k: coeffs.len().max(1),
                separation: separation.mode(),
                standardize: false,
                ..ParcConfig::default()
            },
            feature_specs: (0..n).map(|i| ColumnSpec::numeric(format!("x{}", i + 1))).collect(),
            target_specs,
            x_scaler: Scaler::identity(n),
            y_scaler: Scaler::identity(layout.numeric),
            layout,
            separation,
            coeffs,
            feature_min,
            feature_max,
        };
        model.validate()?;
        Ok(model)
    }

    /// Rewrites `w (x - m) / s + c` as `(w / s) x + (c - sum w m / s)` and
    /// undoes the target scaling on the regression rows.
    pub fn raw_form(&self) -> RawForm {
        let sx = &self.x_scaler;
        let unscale = |a: &DMatrix<f64>, b: &DVector<f64>| {
            let mut ar = a.clone();
            let mut br = b.clone();
            for r in 0..a.nrows() {
                for i in 0..a.ncols() {
                    ar[(r, i)] = a[(r, i)] / sx.std[i];
                    br[r] -= a[(r, i)] * sx.mean[i] / sx.std[i];
                }
            }
            (ar, br)
        };
        let (omega, gamma) = unscale(&self.separation.omega(), &self.separation.gamma());
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let (mut a, mut b) = unscale(&c.a, &c.b);
                for i in 0..self.layout.numeric {
                    let (m, s) = (self.y_scaler.mean[i], self.y_scaler.std[i]);
                    a.row_mut(i).scale_mut(s);
                    b[i] = m + s * b[i];
                }
                AffineCoeffs { a, b }
            })
            .collect();
        RawForm { omega, gamma, coeffs }
    }
}

fn cluster_sizes(labels: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    labels.iter().for_each(|&l| c[l] += 1);
    c
}

fn members(labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut m = vec![Vec::new(); k];
    for (p, &l) in labels.iter().enumerate() {
        m[l].push(p);
    }
    m
}

/// Steps 2.1: ridge and softmax fits of every nonempty cluster. Empty
/// clusters keep their previous coefficients.
fn fit_predictors(
    data: &EncodedDataset,
    labels: &[usize],
    coeffs: &mut [AffineCoeffs],
    w: &LossWeights,
    settings: &MinimizerSettings,
) -> Result<()> {
    let layout = data.layout();
    let n = data.n_features();
    for (j, idx) in members(labels, coeffs.len()).into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let alpha_j = idx.len() as f64 / w.n_total as f64 * w.alpha;
        let x = data.x.select_rows(&idx);
        if layout.numeric > 0 {
            let y = data.yc.select_rows(&idx);
            let uniform = w.mu_c.iter().all(|&m| m == w.mu_c[0]) && w.mu_c[0] > 0.0;
            if uniform {
                let c = ridge_fit_multi(&x, &y, alpha_j / w.mu_c[0])?;
                coeffs[j].set_block(0, &c);
            } else {
                for (i, &mu) in w.mu_c.iter().enumerate() {
                    let c = if mu > 0.0 {
                        ridge_fit_multi(&x, &y.columns(i, 1).into_owned(), alpha_j / mu)?
                    } else {
                        AffineCoeffs::zeros(1, n)
                    };
                    coeffs[j].set_block(i, &c);
                }
            }
        }
        for (i, &m) in layout.classes.iter().enumerate() {
            let block = layout.block(i);
            let c = if w.mu_d[i] > 0.0 {
                let lab: Vec<usize> = idx.iter().map(|&p| data.yd[i][p]).collect();
                let warm = coeffs[j].block(block.clone());
                SoftmaxProblem {
                    x: &x,
                    labels: &lab,
                    n_classes: m,
                    reg: alpha_j,
                    loss_weight: w.mu_d[i],
                    pin_last: false,
                }
                .solve(Some(&warm), settings)?
                .coeffs
            } else {
                AffineCoeffs::zeros(m, n)
            };
            coeffs[j].set_block(block.start, &c);
        }
    }
    Ok(())
}

/// Step 2.2. Returns whether the warm-started objective did not increase.
fn fit_separation(
    data: &EncodedDataset,
    labels: &[usize],
    separation: &mut Separation,
    beta: f64,
    settings: &MinimizerSettings,
) -> Result<bool> {
    let k = separation.n_regions();
    match separation {
        Separation::Softmax { omega, gamma } => {
            let warm = AffineCoeffs {
                a: omega.clone(),
                b: gamma.clone(),
            };
            let fit = SoftmaxProblem {
                x: &data.x,
                labels,
                n_classes: k,
                reg: beta,
                loss_weight: 1.0,
                pin_last: true,
            }
            .solve(Some(&warm), settings)?;
            *omega = fit.coeffs.a;
            *gamma = fit.coeffs.b;
            Ok(fit.objective <= fit.start_objective)
        }
        Separation::Voronoi { centroids } => {
            for (j, idx) in members(labels, k).into_iter().enumerate() {
                if idx.is_empty() {
                    continue;
                }
                for i in 0..data.n_features() {
                    centroids[(j, i)] = idx.iter().map(|&p| data.x[(p, i)]).sum::<f64>() / idx.len() as f64;
                }
            }
            Ok(true)
        }
    }
}

fn column_range(x: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    x.column_iter()
        .map(|c| (c.min(), c.max()))
        .unzip()
}

/// Trains a PARC model. Features and numeric targets are standardized
/// internally when `config.standardize` is set.
pub fn fit(dataset: &EncodedDataset, config: &ParcConfig) -> Result<(ParcModel, FitReport)> {
    let start = Instant::now();
    config.validate()?;
    dataset.validate()?;
    let n_samples = dataset.n_samples();
    let n = dataset.n_features();
    let k = config.k;
    if k > n_samples {
        return Err(ParcError::TooFewSamples { k, n: n_samples });
    }
    let (x_scaler, y_scaler) = if config.standardize {
        (
            Scaler::fit(&dataset.x, &dataset.onehot_mask())?,
            Scaler::fit(&dataset.yc, &[])?,
        )
    } else {
        (Scaler::identity(n), Scaler::identity(dataset.yc.ncols()))
    };
    let mut data = dataset.clone();
    data.x = x_scaler.apply(&dataset.x);
    data.yc = y_scaler.apply(&dataset.yc);
    let layout = data.layout();
    let w = config.weights(&layout, n_samples)?;

    let mut labels = kmeanspp_init(&data.x, k, config.seed)?;
    let mut coeffs = vec![AffineCoeffs::zeros(layout.rows(), n); k];
    let mut separation = match config.separation {
        SeparationMode::Softmax => Separation::Softmax {
            omega: DMatrix::zeros(k, n),
            gamma: DVector::zeros(k),
        },
        SeparationMode::Voronoi => Separation::Voronoi {
            centroids: DMatrix::zeros(k, n),
        },
    };

    let mut history: Vec<f64> = Vec::new();
    let mut sizes = Vec::new();
    let mut stop = StopReason::MaxIters;
    let mut separation_decreased = true;
    for _ in 0..config.max_iters {
        fit_predictors(&data, &labels, &mut coeffs, &w, &config.intermediate_solver)?;
        separation_decreased &=
            fit_separation(&data, &labels, &mut separation, config.beta, &config.intermediate_solver)?;
        let new_labels = assign_all(&data, &coeffs, &separation, &w);
        let v = objective(&data, &coeffs, &separation, &new_labels, &w);
        sizes.push(cluster_sizes(&new_labels, k));
        let unchanged = new_labels == labels;
        labels = new_labels;
        let prev = history.last().copied();
        history.push(v);
        if unchanged {
            stop = StopReason::AssignmentUnchanged;
            break;
        }
        if let Some(p) = prev {
            let tol = if config.relative_epsilon {
                config.epsilon * p.abs()
            } else {
                config.epsilon
            };
            if p - v <= tol {
                stop = StopReason::ObjectiveStalled;
                break;
            }
        }
    }
    if stop != StopReason::AssignmentUnchanged {
        // the last reassignment moved points: bring a, b up to date
        fit_predictors(&data, &labels, &mut coeffs, &w, &config.intermediate_solver)?;
    }

    // Drop clusters that are empty or smaller than c_min.
    let final_sizes = cluster_sizes(&labels, k);
    let c_min = config.c_min_fraction * n_samples as f64;
    let kept: Vec<usize> = (0..k)
        .filter(|&j| final_sizes[j] > 0 && final_sizes[j] as f64 >= c_min)
        .collect();
    if kept.is_empty() {
        return Err(ParcError::AllClustersDiscarded);
    }
    let discarded: Vec<usize> = (0..k).filter(|j| !kept.contains(j)).collect();
    let mut remap = vec![None; k];
    for (new, &old) in kept.iter().enumerate() {
        remap[old] = Some(new);
    }
    let mut kept_idx = Vec::with_capacity(n_samples);
    let mut kept_labels = Vec::with_capacity(n_samples);
    let mut dropped = Vec::new();
    let kept_coeffs: Vec<AffineCoeffs> = kept.iter().map(|&j| coeffs[j].clone()).collect();
    let penalties: Vec<f64> = kept_coeffs.iter().map(|c| w.point_penalty(c)).collect();
    let kept_separation = restrict_separation(&separation, &kept);
    for (p, &l) in labels.iter().enumerate() {
        match (remap[l], config.discard) {
            (Some(r), _) => {
                kept_idx.push(p);
                kept_labels.push(r);
            }
            (None, DiscardPolicy::Reassign) => {
                let costs = loss::point_costs(&data, p, &kept_coeffs, &penalties, &kept_separation, &w, &layout);
                kept_idx.push(p);
                kept_labels.push(argmin(&costs));
            }
            (None, DiscardPolicy::Drop) => dropped.push(p),
        }
    }
    let sub = data.subset(&kept_idx);
    let k_f = kept.len();

    // Final separation on the surviving clusters, then the induced clusters.
    let mut final_separation = kept_separation;
    fit_separation(&sub, &kept_labels, &mut final_separation, config.beta, &config.final_solver)?;
    let induced: Vec<usize> = (0..sub.n_samples())
        .map(|p| final_separation.region(&sub.feature_row(p)))
        .collect();
    let mut final_coeffs = kept_coeffs;
    let w_sub = LossWeights {
        n_total: sub.n_samples(),
        ..w
    };
    fit_predictors(&sub, &induced, &mut final_coeffs, &w_sub, &config.final_solver)?;

    let mut regions = vec![None; n_samples];
    for (&p, &r) in kept_idx.iter().zip(&induced) {
        regions[p] = Some(r);
    }
    let (feature_min, feature_max) = column_range(&dataset.x);
    let model = ParcModel {
        format_version: FORMAT_VERSION,
        config: config.clone(),
        feature_specs: dataset.feature_specs.clone(),
        target_specs: dataset.target_specs.clone(),
        layout,
        x_scaler,
        y_scaler,
        separation: final_separation,
        coeffs: final_coeffs,
        feature_min,
        feature_max,
    };
    debug_assert_eq!(model.n_regions(), k_f);
    model.validate()?;
    let report = FitReport {
        iterations: history.len(),
        objective_per_iter: history,
        cluster_sizes_per_iter: sizes,
        stop_reason: stop,
        discarded_clusters: discarded,
        dropped_samples: dropped,
        separation_decreased,
        labels,
        regions,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}

/// Keeps the rows `kept`. In softmax mode the last kept row becomes the gauge.
fn restrict_separation(separation: &Separation, kept: &[usize]) -> Separation {
    match separation {
        Separation::Softmax { omega, gamma } => {
            let last = *kept.last().expect("nonempty");
            let omega_k = DMatrix::from_fn(kept.len(), omega.ncols(), |r, i| {
                omega[(kept[r], i)] - omega[(last, i)]
            });
            let gamma_k = DVector::from_fn(kept.len(), |r, _| gamma[kept[r]] - gamma[last]);
            Separation::Softmax {
                omega: omega_k,
                gamma: gamma_k,
            }
        }
        Separation::Voronoi { centroids } => Separation::Voronoi {
            centroids: centroids.select_rows(kept),
        },
    }
}

#[cfg(test)]
mod tests;
