//! K-means++ seeding followed by Lloyd iterations.

use nalgebra::DMatrix;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, ParcError, Result};

const MAX_LLOYD_ITERS: usize = 300;

fn sq_dist(x: &DMatrix<f64>, k: usize, c: &DMatrix<f64>, j: usize) -> f64 {
    (0..x.ncols()).map(|i| (x[(k, i)] - c[(j, i)]).powi(2)).sum()
}

/// Index of the nearest center, smallest index on ties.
fn nearest(x: &DMatrix<f64>, k: usize, centers: &DMatrix<f64>) -> (usize, f64) {
    let mut best = (0, sq_dist(x, k, centers, 0));
    for j in 1..centers.nrows() {
        let d = sq_dist(x, k, centers, j);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Returns cluster labels in `0..k`.
pub fn kmeanspp_init(x: &DMatrix<f64>, k: usize, seed: u64) -> Result<Vec<usize>> {
    let (n_samples, n) = x.shape();
    if k == 0 {
        return invalid("K must be at least 1");
    }
    if k > n_samples {
        return Err(ParcError::TooFewSamples { k, n: n_samples });
    }
    if k == 1 {
        return Ok(vec![0; n_samples]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = DMatrix::zeros(k, n);
    let first = rng.gen_range(0..n_samples);
    centers.row_mut(0).copy_from(&x.row(first));
    let mut d2: Vec<f64> = (0..n_samples).map(|p| sq_dist(x, p, &centers, 0)).collect();
    for j in 1..k {
        let pick = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(&mut rng),
            // every point coincides with a center already
            Err(_) => rng.gen_range(0..n_samples),
        };
        centers.row_mut(j).copy_from(&x.row(pick));
        for (p, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x, p, &centers, j));
        }
    }

    let mut labels: Vec<usize> = (0..n_samples).map(|p| nearest(x, p, &centers).0).collect();
    for _ in 0..MAX_LLOYD_ITERS {
        let mut sums = DMatrix::<f64>::zeros(k, n);
        let mut counts = vec![0usize; k];
        for (p, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for i in 0..n {
                sums[(l, i)] += x[(p, i)];
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                for i in 0..n {
                    centers[(j, i)] = sums[(j, i)] / counts[j] as f64;
                }
            }
        }
        let mut new_labels: Vec<usize> = (0..n_samples).map(|p| nearest(x, p, &centers).0).collect();
        refill_empty(x, &mut new_labels, &mut centers);
        if new_labels == labels {
            break;
        }
        labels = new_labels;
    }
    Ok(labels)
}

/// Moves the point farthest from its center into each empty cluster, as long
/// as that point does not leave its own cluster empty.
fn refill_empty(x: &DMatrix<f64>, labels: &mut [usize], centers: &mut DMatrix<f64>) {
    let k = centers.nrows();
    loop {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far: Option<(usize, f64)> = None;
        for (p, &l) in labels.iter().enumerate() {
            if counts[l] < 2 {
                continue;
            }
            let d = sq_dist(x, p, centers, l);
            if d > 0.0 && far.map_or(true, |(_, fd)| d > fd) {
                far = Some((p, d));
            }
        }
        let Some((p, _)) = far else {
            // fewer distinct points than clusters
            return;
        };
        labels[p] = empty;
        centers.row_mut(empty).copy_from(&x.row(p));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sse(x: &DMatrix<f64>, labels: &[usize], k: usize) -> f64 {
        let n = x.ncols();
        let mut total = 0.0;
        for j in 0..k {
            let members: Vec<usize> = (0..x.nrows()).filter(|&p| labels[p] == j).collect();
            if members.is_empty() {
                continue;
            }
            for i in 0..n {
                let m = members.iter().map(|&p| x[(p, i)]).sum::<f64>() / members.len() as f64;
                total += members.iter().map(|&p| (x[(p, i)] - m).powi(2)).sum::<f64>();
            }
        }
        total
    }

    #[test]
    fn single_cluster() {
        let x = DMatrix::from_fn(7, 2, |i, j| (i * j) as f64);
        assert_eq!(kmeanspp_init(&x, 1, 0).unwrap(), vec![0; 7]);
    }

    #[test]
    fn too_many_clusters() {
        let x = DMatrix::from_element(3, 1, 1.0);
        assert!(matches!(kmeanspp_init(&x, 4, 0), Err(ParcError::TooFewSamples { .. })));
    }

    #[test]
    fn singletons_when_k_equals_n() {
        let x = DMatrix::from_row_slice(5, 1, &[0.0, 1.0, 3.0, 7.0, 15.0]);
        let mut labels = kmeanspp_init(&x, 5, 3).unwrap();
        labels.sort_unstable();
        assert_eq!(labels, vec![0, 1, 2, 3, 4]);
    }

    /// Oracle: exhaustive search over all 2-partitions of a small blob pair.
    #[test]
    fn separates_blobs_like_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x = DMatrix::from_fn(16, 2, |p, _| {
            let c = if p < 8 { -5.0 } else { 5.0 };
            c + rng.gen_range(-1.0..1.0)
        });
        let labels = kmeanspp_init(&x, 2, 1).unwrap();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << 15) {
            let l: Vec<usize> = (0..16).map(|p| ((mask >> p) & 1) as usize).collect();
            best = best.min(sse(&x, &l, 2));
        }
        assert!((sse(&x, &labels, 2) - best).abs() < 1e-9);
        assert!(labels[..8].iter().all(|&l| l == labels[0]));
        assert!(labels[8..].iter().all(|&l| l == labels[8]) && labels[0] != labels[8]);
    }

    #[test]
    fn forty_point_blobs_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DMatrix::from_fn(40, 2, |p, _| if p < 20 { 0.0 } else { 10.0 } + rng.gen_range(-1.0..1.0));
        let a = kmeanspp_init(&x, 2, 9).unwrap();
        let b = kmeanspp_init(&x, 2, 9).unwrap();
        assert_eq!(a, b);
        assert!(a[..20].iter().all(|&l| l == a[0]) && a[20..].iter().all(|&l| l != a[0]));
    }

    #[test]
    fn clusters_nonempty_with_distinct_rows() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = DMatrix::from_fn(30, 2, |_, _| rng.gen_range(0.0..1.0));
            let labels = kmeanspp_init(&x, 6, seed).unwrap();
            for j in 0..6 {
                assert!(labels.contains(&j));
            }
        }
    }
}
