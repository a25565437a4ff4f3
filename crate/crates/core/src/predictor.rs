//! Evaluation of a fitted model: region selection, numeric outputs and
//! categorical argmax outputs.

use nalgebra::DMatrix;

use crate::data::EncodedDataset;
use crate::error::{ParcError, Result};
use crate::linalg::row_vec;
use crate::parc::{argmax, ParcModel};

/// Polyhedron `P_j = { x : (omega^h - omega^j) x <= gamma^j - gamma^h, h != j }`
/// in input units.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub index: usize,
    pub halfspaces: Vec<(Vec<f64>, f64)>,
}

impl Region {
    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        self.halfspaces
            .iter()
            .all(|(row, rhs)| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() <= rhs + slack)
    }
}

pub fn regions(model: &ParcModel) -> Vec<Region> {
    let raw = model.raw_form();
    let k = raw.gamma.len();
    (0..k)
        .map(|j| Region {
            index: j,
            halfspaces: (0..k)
                .filter(|&h| h != j)
                .map(|h| {
                    let row = (raw.omega.row(h) - raw.omega.row(j)).iter().copied().collect();
                    (row, raw.gamma[j] - raw.gamma[h])
                })
                .collect(),
        })
        .collect()
}

/// Separation scores `omega^j x + gamma^j` of an input-unit feature vector
/// (one per region).
pub fn region_scores(model: &ParcModel, x: &[f64]) -> Vec<f64> {
    model.separation.scores(&model.x_scaler.apply_row(x))
}

/// Region of an input-unit feature vector, smallest index on ties.
pub fn region_of(model: &ParcModel, x: &[f64]) -> usize {
    model.separation.region(&model.x_scaler.apply_row(x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub region: usize,
    /// Numeric targets in their original units.
    pub numeric: Vec<f64>,
    /// Category index per categorical target.
    pub categorical: Vec<usize>,
}

impl Prediction {
    /// Category names of the categorical outputs.
    pub fn category_values<'a>(&self, model: &'a ParcModel) -> Vec<&'a str> {
        model
            .target_specs
            .iter()
            .filter(|s| s.is_categorical())
            .zip(&self.categorical)
            .map(|(s, &h)| s.categories[h].as_str())
            .collect()
    }
}

pub fn predict(model: &ParcModel, x: &[f64]) -> Prediction {
    let xs = model.x_scaler.apply_row(x);
    let j = model.separation.region(&xs);
    let c = &model.coeffs[j];
    let scaled: Vec<f64> = (0..model.layout.numeric).map(|i| c.eval_row(i, &xs)).collect();
    let numeric = model.y_scaler.inverse_row(&scaled);
    let categorical = (0..model.layout.classes.len())
        .map(|i| {
            let scores: Vec<f64> = model.layout.block(i).map(|r| c.eval_row(r, &xs)).collect();
            argmax(&scores)
        })
        .collect();
    Prediction {
        region: j,
        numeric,
        categorical,
    }
}

pub fn predict_rows(model: &ParcModel, x: &DMatrix<f64>) -> Vec<Prediction> {
    (0..x.nrows()).map(|k| predict(model, &row_vec(x, k))).collect()
}

/// `1 - SSE / SST`; `None` when the target has zero variance.
pub fn r2_score(y: &[f64], y_hat: &[f64]) -> Option<f64> {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let sse: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    if sst == 0.0 {
        None
    } else {
        Some(1.0 - sse / sst)
    }
}

pub fn accuracy(y: &[usize], y_hat: &[usize]) -> f64 {
    let hits = y.iter().zip(y_hat).filter(|(a, b)| a == b).count();
    hits as f64 / y.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub n_samples: usize,
    /// Per numeric target; `None` for a constant target.
    pub r2: Vec<Option<f64>>,
    /// Per numeric target, sum of squared errors.
    pub sse: Vec<f64>,
    pub accuracy: Vec<f64>,
}

impl Metrics {
    /// Mean of all R^2 and accuracy values. An undefined R^2 counts as 1 if
    /// the target is reproduced exactly and as 0 otherwise.
    pub fn score(&self) -> f64 {
        let r2 = self.r2.iter().zip(&self.sse).map(|(r, &sse)| match r {
            Some(v) => *v,
            None if sse <= 1e-20 * self.n_samples as f64 => 1.0,
            None => 0.0,
        });
        let all: Vec<f64> = r2.chain(self.accuracy.iter().copied()).collect();
        all.iter().sum::<f64>() / all.len().max(1) as f64
    }
}

/// Metrics of `model` on a dataset encoded like the training data.
pub fn evaluate(model: &ParcModel, dataset: &EncodedDataset) -> Result<Metrics> {
    let n = dataset.n_samples();
    if n == 0 {
        return Err(ParcError::InvalidArgument("empty dataset".into()));
    }
    if dataset.n_features() != model.n_features() || dataset.layout() != model.layout {
        return Err(ParcError::Dimension("dataset does not match the model".into()));
    }
    let preds = predict_rows(model, &dataset.x);
    let mut r2 = Vec::new();
    let mut sse = Vec::new();
    for i in 0..model.layout.numeric {
        let y: Vec<f64> = dataset.yc.column(i).iter().copied().collect();
        let y_hat: Vec<f64> = preds.iter().map(|p| p.numeric[i]).collect();
        r2.push(r2_score(&y, &y_hat));
        sse.push(y.iter().zip(&y_hat).map(|(a, b)| (a - b).powi(2)).sum());
    }
    let acc = (0..model.layout.classes.len())
        .map(|i| {
            let y_hat: Vec<usize> = preds.iter().map(|p| p.categorical[i]).collect();
            accuracy(&dataset.yd[i], &y_hat)
        })
        .collect();
    Ok(Metrics {
        n_samples: n,
        r2,
        sse,
        accuracy: acc,
    })
}
