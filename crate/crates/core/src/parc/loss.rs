//! Per-point losses, the assignment step and the training objective.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{EncodedDataset, TargetLayout};
use crate::linalg::{row_dot, serde_rows, serde_vector};
use crate::solvers::{lse, AffineCoeffs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparationMode {
    Softmax,
    Voronoi,
}

impl std::str::FromStr for SeparationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "softmax" => Ok(Self::Softmax),
            "voronoi" => Ok(Self::Voronoi),
            other => Err(format!("unknown separation mode {other:?}")),
        }
    }
}

impl std::fmt::Display for SeparationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Softmax => "softmax",
            Self::Voronoi => "voronoi",
        })
    }
}

/// PWL separation function `max_j omega^j x + gamma^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Separation {
    /// Softmax scores; the last row is the gauge `omega = 0, gamma = 0`.
    Softmax {
        #[serde(with = "serde_rows")]
        omega: DMatrix<f64>,
        #[serde(with = "serde_vector")]
        gamma: DVector<f64>,
    },
    Voronoi {
        #[serde(with = "serde_rows")]
        centroids: DMatrix<f64>,
    },
}

impl Separation {
    pub fn mode(&self) -> SeparationMode {
        match self {
            Self::Softmax { .. } => SeparationMode::Softmax,
            Self::Voronoi { .. } => SeparationMode::Voronoi,
        }
    }

    pub fn n_regions(&self) -> usize {
        match self {
            Self::Softmax { gamma, .. } => gamma.len(),
            Self::Voronoi { centroids } => centroids.nrows(),
        }
    }

    pub fn omega(&self) -> DMatrix<f64> {
        match self {
            Self::Softmax { omega, .. } => omega.clone(),
            Self::Voronoi { centroids } => centroids.clone(),
        }
    }

    /// For Voronoi, `gamma^j = -||c_j||^2 / 2`.
    pub fn gamma(&self) -> DVector<f64> {
        match self {
            Self::Softmax { gamma, .. } => gamma.clone(),
            Self::Voronoi { centroids } => {
                DVector::from_fn(centroids.nrows(), |j, _| -0.5 * centroids.row(j).norm_squared())
            }
        }
    }

    /// `omega^j x + gamma^j` for every region.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Softmax { omega, gamma } => (0..gamma.len())
                .map(|j| row_dot(omega, j, x) + gamma[j])
                .collect(),
            Self::Voronoi { centroids } => (0..centroids.nrows())
                .map(|j| row_dot(centroids, j, x) - 0.5 * centroids.row(j).norm_squared())
                .collect(),
        }
    }

    /// Region index; smallest index on ties.
    pub fn region(&self, x: &[f64]) -> usize {
        match self {
            Self::Softmax { .. } => argmax(&self.scores(x)),
            Self::Voronoi { centroids } => {
                let d: Vec<f64> = (0..centroids.nrows()).map(|j| sq_dist(centroids, j, x)).collect();
                argmin(&d)
            }
        }
    }

    /// `V^x(j, x)`: softmax cross-entropy of region `j`, or squared distance
    /// to centroid `j`.
    pub fn loss(&self, j: usize, x: &[f64]) -> f64 {
        match self {
            Self::Softmax { .. } => {
                let s = self.scores(x);
                lse(&s) - s[j]
            }
            Self::Voronoi { centroids } => sq_dist(centroids, j, x),
        }
    }

    /// `||omega||_F^2 + ||gamma||^2`; zero in Voronoi mode.
    pub fn penalty(&self) -> f64 {
        match self {
            Self::Softmax { omega, gamma } => omega.norm_squared() + gamma.norm_squared(),
            Self::Voronoi { .. } => 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Self::Softmax { omega, gamma } => omega.iter().chain(gamma.iter()).all(|v| v.is_finite()),
            Self::Voronoi { centroids } => centroids.iter().all(|v| v.is_finite()),
        }
    }
}

fn sq_dist(m: &DMatrix<f64>, j: usize, x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(i, v)| (v - m[(j, i)]).powi(2)).sum()
}

/// First index of the maximum.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// First index of the minimum.
pub(crate) fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Weights entering the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu_c: Vec<f64>,
    pub mu_d: Vec<f64>,
    /// Number of training samples `N` in `alpha / N`.
    pub n_total: usize,
}

impl LossWeights {
    /// Per-point share `(alpha / N) ||theta_j||^2` of the coefficient penalty.
    pub fn point_penalty(&self, coeffs: &AffineCoeffs) -> f64 {
        self.alpha / self.n_total as f64 * coeffs.sq_norm()
    }
}

/// `V^y`: weighted squared residuals plus weighted cross-entropies.
pub fn target_loss(
    coeffs: &AffineCoeffs,
    layout: &TargetLayout,
    x: &[f64],
    yc: &[f64],
    yd: &[usize],
    mu_c: &[f64],
    mu_d: &[f64],
) -> f64 {
    let mut v = 0.0;
    for i in 0..layout.numeric {
        let r = yc[i] - coeffs.eval_row(i, x);
        v += mu_c[i] * r * r;
    }
    let mut scores = Vec::new();
    for (i, &m) in layout.classes.iter().enumerate() {
        if mu_d[i] == 0.0 {
            continue;
        }
        let o = layout.offset(i);
        scores.clear();
        scores.extend((0..m).map(|h| coeffs.eval_row(o + h, x)));
        v += mu_d[i] * (lse(&scores) - scores[yd[i]]);
    }
    v
}

pub fn separation_loss(separation: &Separation, j: usize, x: &[f64]) -> f64 {
    separation.loss(j, x)
}

/// Full per-point costs `(alpha/N)||theta_j||^2 + V^y + sigma V^x` for all `j`.
pub(crate) fn point_costs(
    data: &EncodedDataset,
    k: usize,
    coeffs: &[AffineCoeffs],
    penalties: &[f64],
    separation: &Separation,
    w: &LossWeights,
    layout: &TargetLayout,
) -> Vec<f64> {
    let x = data.feature_row(k);
    let yc = data.numeric_target_row(k);
    let yd = data.categorical_target_row(k);
    let sep_scores = if w.sigma != 0.0 && separation.mode() == SeparationMode::Softmax {
        let s = separation.scores(&x);
        Some((lse(&s), s))
    } else {
        None
    };
    (0..coeffs.len())
        .map(|j| {
            let mut c = penalties[j] + target_loss(&coeffs[j], layout, &x, &yc, &yd, &w.mu_c, &w.mu_d);
            if w.sigma != 0.0 {
                let vx = match &sep_scores {
                    Some((l, s)) => l - s[j],
                    None => separation.loss(j, &x),
                };
                c += w.sigma * vx;
            }
            c
        })
        .collect()
}

/// Assignment step: each point goes to the cluster of least cost, smallest
/// index on ties.
pub fn assign_all(
    data: &EncodedDataset,
    coeffs: &[AffineCoeffs],
    separation: &Separation,
    w: &LossWeights,
) -> Vec<usize> {
    let layout = data.layout();
    let penalties: Vec<f64> = coeffs.iter().map(|c| w.point_penalty(c)).collect();
    (0..data.n_samples())
        .map(|k| argmin(&point_costs(data, k, coeffs, &penalties, separation, w, &layout)))
        .collect()
}

/// Objective `V` of the mixed-integer training problem.
pub fn objective(
    data: &EncodedDataset,
    coeffs: &[AffineCoeffs],
    separation: &Separation,
    labels: &[usize],
    w: &LossWeights,
) -> f64 {
    let layout = data.layout();
    let mut v = w.sigma * w.beta * separation.penalty();
    for (k, &j) in labels.iter().enumerate() {
        let x = data.feature_row(k);
        let yc = data.numeric_target_row(k);
        let yd = data.categorical_target_row(k);
        v += w.point_penalty(&coeffs[j]) + target_loss(&coeffs[j], &layout, &x, &yc, &yd, &w.mu_c, &w.mu_d);
        if w.sigma != 0.0 {
            v += w.sigma * separation.loss(j, &x);
        }
    }
    v
}
