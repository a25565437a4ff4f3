use super::*;
use crate::predictor::{evaluate, predict};
use crate::solvers::{ridge_fit_multi, softmax_fit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mixed_dataset(seed: u64, n_samples: usize, n: usize) -> EncodedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n_samples, n, |_, _| rng.gen_range(-1.0f64..1.0));
    let yc = DMatrix::from_fn(n_samples, 1, |k, _| x[(k, 0)].abs() + 0.1 * rng.gen_range(-1.0..1.0));
    let yd = vec![(0..n_samples)
        .map(|k| usize::from(x[(k, n - 1)] > 0.2) + usize::from(x[(k, 0)] > 0.5))
        .collect()];
    EncodedDataset::new(x, yc, yd, vec![3]).unwrap()
}

fn tight() -> MinimizerSettings {
    MinimizerSettings {
        gradient_tolerance: 1e-11,
        max_evaluations: 50_000,
        memory_depth: 10,
    }
}

#[test]
fn k1_matches_whole_dataset_solvers() {
    let ds = mixed_dataset(1, 40, 2);
    let cfg = ParcConfig {
        k: 1,
        standardize: false,
        final_solver: tight(),
        ..ParcConfig::default()
    };
    let (model, report) = fit(&ds, &cfg).unwrap();
    assert_eq!(report.stop_reason, StopReason::AssignmentUnchanged);
    assert_eq!(model.n_regions(), 1);
    let ridge = ridge_fit_multi(&ds.x, &ds.yc, cfg.alpha).unwrap();
    let soft = softmax_fit(&ds.x, &ds.yd[0], 3, cfg.alpha, None, &tight()).unwrap();
    let c = &model.coeffs[0];
    for i in 0..2 {
        assert!((c.a[(0, i)] - ridge.a[(0, i)]).abs() < 1e-8);
    }
    assert!((c.b[0] - ridge.b[0]).abs() < 1e-8);
    for h in 0..3 {
        for i in 0..2 {
            assert!((c.a[(1 + h, i)] - soft.coeffs.a[(h, i)]).abs() < 1e-8);
        }
        assert!((c.b[1 + h] - soft.coeffs.b[h]).abs() < 1e-8);
    }
}

#[test]
fn objective_is_monotone_on_small_runs() {
    for seed in 0..8 {
        let ds = mixed_dataset(seed, 50, 2);
        for mode in [SeparationMode::Softmax, SeparationMode::Voronoi] {
            let cfg = ParcConfig {
                k: 3,
                separation: mode,
                epsilon: 1e-12,
                seed,
                ..ParcConfig::default()
            };
            let (_, r) = fit(&ds, &cfg).unwrap();
            for w in r.objective_per_iter.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}", r.objective_per_iter);
            }
            assert!(r.separation_decreased);
            assert!(r.iterations <= cfg.max_iters);
        }
    }
}

#[test]
fn large_sigma_voronoi_stops_after_one_iteration() {
    let ds = mixed_dataset(3, 60, 2);
    let cfg = ParcConfig {
        k: 4,
        sigma: 1e4,
        separation: SeparationMode::Voronoi,
        ..ParcConfig::default()
    };
    let (_, r) = fit(&ds, &cfg).unwrap();
    assert_eq!(r.iterations, 1);
    assert_eq!(r.stop_reason, StopReason::AssignmentUnchanged);
}

#[test]
fn assignment_has_no_improving_single_move() {
    let ds = mixed_dataset(9, 40, 2);
    let cfg = ParcConfig {
        k: 3,
        ..ParcConfig::default()
    };
    let w = cfg.weights(&ds.layout(), ds.n_samples()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let coeffs: Vec<AffineCoeffs> = (0..3)
        .map(|_| AffineCoeffs {
            a: DMatrix::from_fn(4, 2, |_, _| rng.gen_range(-1.0..1.0)),
            b: DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0)),
        })
        .collect();
    let mut omega = DMatrix::from_fn(3, 2, |_, _| rng.gen_range(-1.0..1.0));
    omega.row_mut(2).fill(0.0);
    let sep = Separation::Softmax {
        omega,
        gamma: DVector::from_vec(vec![0.3, -0.2, 0.0]),
    };
    let labels = assign_all(&ds, &coeffs, &sep, &w);
    let v = objective(&ds, &coeffs, &sep, &labels, &w);
    for k in 0..ds.n_samples() {
        for j in 0..3 {
            let mut alt = labels.clone();
            alt[k] = j;
            assert!(objective(&ds, &coeffs, &sep, &alt, &w) >= v - 1e-12);
        }
    }
}

#[test]
fn model_json_round_trip_is_byte_stable() {
    let ds = mixed_dataset(4, 40, 2);
    let (model, _) = fit(&ds, &ParcConfig { k: 2, ..ParcConfig::default() }).unwrap();
    let s1 = model.to_json().unwrap();
    let back = ParcModel::from_json(&s1).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.to_json().unwrap(), s1);
}

#[test]
fn wrong_format_version_is_rejected() {
    let ds = mixed_dataset(4, 30, 2);
    let (model, _) = fit(&ds, &ParcConfig { k: 1, ..ParcConfig::default() }).unwrap();
    let text = model.to_json().unwrap().replacen("\"format_version\": 1", "\"format_version\": 99", 1);
    assert!(matches!(ParcModel::from_json(&text), Err(ParcError::FormatVersion(99))));
}

#[test]
fn fit_is_deterministic() {
    let ds = mixed_dataset(5, 50, 2);
    let cfg = ParcConfig {
        k: 3,
        seed: 11,
        ..ParcConfig::default()
    };
    let (m1, r1) = fit(&ds, &cfg).unwrap();
    let (m2, r2) = fit(&ds, &cfg).unwrap();
    assert_eq!(m1.to_json().unwrap(), m2.to_json().unwrap());
    assert_eq!(r1.objective_per_iter, r2.objective_per_iter);
}

#[test]
fn too_many_clusters_rejected() {
    let ds = mixed_dataset(6, 5, 2);
    assert!(matches!(
        fit(&ds, &ParcConfig { k: 6, ..ParcConfig::default() }),
        Err(ParcError::TooFewSamples { .. })
    ));
}

#[test]
fn raw_form_reproduces_predictions() {
    let ds = mixed_dataset(7, 60, 2);
    let (model, _) = fit(&ds, &ParcConfig { k: 3, ..ParcConfig::default() }).unwrap();
    let raw = model.raw_form();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let p = predict(&model, &x);
        let scores: Vec<f64> = (0..raw.gamma.len())
            .map(|j| raw.omega[(j, 0)] * x[0] + raw.omega[(j, 1)] * x[1] + raw.gamma[j])
            .collect();
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(scores[p.region] >= best - 1e-9);
        let c = &raw.coeffs[p.region];
        let y = c.a[(0, 0)] * x[0] + c.a[(0, 1)] * x[1] + c.b[0];
        assert!((y - p.numeric[0]).abs() < 1e-9);
    }
}

#[test]
fn small_clusters_are_dropped_or_reassigned() {
    let ds = mixed_dataset(8, 60, 2);
    let base = ParcConfig {
        k: 6,
        c_min_fraction: 0.25,
        ..ParcConfig::default()
    };
    let (m, r) = fit(&ds, &base).unwrap();
    assert_eq!(m.n_regions() + r.discarded_clusters.len(), 6);
    let n_dropped = r.regions.iter().filter(|x| x.is_none()).count();
    assert_eq!(n_dropped, r.dropped_samples.len());
    let (m2, r2) = fit(
        &ds,
        &ParcConfig {
            discard: DiscardPolicy::Reassign,
            ..base
        },
    )
    .unwrap();
    assert!(r2.dropped_samples.is_empty());
    assert!(r2.regions.iter().all(|x| x.is_some_and(|j| j < m2.n_regions())));
}

#[test]
fn fits_on_training_data() {
    let ds = mixed_dataset(10, 200, 2);
    let (model, _) = fit(&ds, &ParcConfig { k: 4, ..ParcConfig::default() }).unwrap();
    let m = evaluate(&model, &ds).unwrap();
    assert!(m.r2[0].unwrap() > 0.8, "{m:?}");
    assert!(m.accuracy[0] > 0.8, "{m:?}");
}

fn two_piece(seed: u64, n_samples: usize) -> EncodedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n_samples, 1, |_, _| rng.gen_range(-1.0..1.0));
    let y = DMatrix::from_fn(n_samples, 1, |k, _| if x[(k, 0)] < 0.0 { -2.0 * x[(k, 0)] } else { 2.0 * x[(k, 0)] });
    EncodedDataset::from_numeric(x, y).unwrap()
}

#[test]
fn select_k_prefers_two_pieces() {
    let ds = two_piece(1, 120);
    let (linear, _) = fit(&ds, &ParcConfig { k: 1, ..ParcConfig::default() }).unwrap();
    let (pieces, _) = fit(&ds, &ParcConfig { k: 2, ..ParcConfig::default() }).unwrap();
    assert!(evaluate(&linear, &ds).unwrap().r2[0].unwrap() < 0.7);
    assert!(evaluate(&pieces, &ds).unwrap().r2[0].unwrap() > 0.95);
    let sel = select_k(&ds, &[1, 2, 3], 5, &ParcConfig::default()).unwrap();
    assert!(sel.best_k >= 2, "{sel:?}");
    let s1 = sel.scores[0].1;
    assert!(sel.scores[1..].iter().all(|&(_, s)| s > s1));
}

#[test]
fn select_k_singleton_and_constant() {
    let ds = two_piece(2, 30);
    assert_eq!(select_k(&ds, &[1], 3, &ParcConfig::default()).unwrap().best_k, 1);
    let mut c = ds.clone();
    c.yc.fill(3.5);
    let sel = select_k(&c, &[1, 2, 3], 3, &ParcConfig::default()).unwrap();
    assert_eq!(sel.best_k, 1, "{sel:?}");
    assert!(select_k(&ds, &[], 3, &ParcConfig::default()).is_err());
    assert!(select_k(&ds, &[1], 1, &ParcConfig::default()).is_err());
}

#[test]
fn config_validation() {
    let bad = [
        ParcConfig { k: 0, ..ParcConfig::default() },
        ParcConfig { alpha: 0.0, ..ParcConfig::default() },
        ParcConfig { sigma: -1.0, ..ParcConfig::default() },
        ParcConfig { c_min_fraction: 1.0, ..ParcConfig::default() },
        ParcConfig { epsilon: 0.0, ..ParcConfig::default() },
    ];
    for c in bad {
        assert!(c.validate().is_err(), "{c:?}");
    }
    let ds = mixed_dataset(1, 10, 2);
    let c = ParcConfig {
        mu_c: vec![1.0, 2.0],
        ..ParcConfig::default()
    };
    assert!(c.weights(&ds.layout(), 10).is_err());
}

#[test]
fn zero_weight_target_gets_zero_coefficients() {
    let ds = mixed_dataset(12, 40, 2);
    let cfg = ParcConfig {
        k: 2,
        mu_d: vec![0.0],
        ..ParcConfig::default()
    };
    let (m, _) = fit(&ds, &cfg).unwrap();
    for c in &m.coeffs {
        assert_eq!(c.block(1..4).sq_norm(), 0.0);
    }
}
