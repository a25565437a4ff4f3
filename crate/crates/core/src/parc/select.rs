//! Choice of K by cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{fit, ParcConfig};
use crate::data::EncodedDataset;
use crate::error::{invalid, Result};
use crate::predictor::evaluate;

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub best_k: usize,
    /// Mean validation score per candidate, in the order given.
    pub scores: Vec<(usize, f64)>,
}

/// Folds are contiguous slices of a seeded permutation.
pub fn fold_indices(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..folds)
        .map(|f| idx[f * n / folds..(f + 1) * n / folds].to_vec())
        .collect()
}

/// K-fold cross-validation over `k_range`. The score is the mean of the
/// validation R^2 and accuracy values; ties go to the smallest K.
pub fn select_k(
    dataset: &EncodedDataset,
    k_range: &[usize],
    folds: usize,
    config: &ParcConfig,
) -> Result<KSelection> {
    if k_range.is_empty() {
        return invalid("empty K range");
    }
    if folds < 2 {
        return invalid("at least 2 folds are needed");
    }
    let n = dataset.n_samples();
    if folds > n {
        return invalid(format!("{folds} folds leave some fold empty with {n} samples"));
    }
    let parts = fold_indices(n, folds, config.seed);
    let mut candidates: Vec<usize> = k_range.to_vec();
    candidates.sort_unstable();
    candidates.dedup();
    let mut scores = Vec::with_capacity(candidates.len());
    for &k in &candidates {
        let cfg = ParcConfig {
            k,
            ..config.clone()
        };
        let mut total = 0.0;
        for f in 0..folds {
            let train: Vec<usize> = (0..folds)
                .filter(|&g| g != f)
                .flat_map(|g| parts[g].iter().copied())
                .collect();
            if k > train.len() {
                total = f64::NEG_INFINITY;
                break;
            }
            let (model, _) = fit(&dataset.subset(&train), &cfg)?;
            total += evaluate(&model, &dataset.subset(&parts[f]))?.score();
        }
        scores.push((k, total / folds as f64));
    }
    let mut best = scores[0];
    for &s in &scores[1..] {
        if s.1 > best.1 + 1e-12 {
            best = s;
        }
    }
    Ok(KSelection {
        best_k: best.0,
        scores,
    })
}
