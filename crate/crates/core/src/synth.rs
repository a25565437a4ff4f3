//! Synthetic datasets and the repeated-run benchmark over them.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{split, EncodedDataset};
use crate::error::{invalid, ParcError, Result};
use crate::parc::{fit, ParcConfig, SeparationMode};
use crate::predictor::evaluate;

/// `[w1, w2, c]` of the six affine pieces of the PWA test function.
pub const PWA_PIECES: [[f64; 3]; 6] = [
    [0.8031, 0.0219, -0.3227],
    [0.2458, -0.5823, -0.1997],
    [0.0942, -0.5617, -0.1622],
    [0.9462, -0.7299, -0.7141],
    [-0.4799, 0.1084, -0.1210],
    [0.5770, 0.1574, -0.1788],
];

pub fn pwa_function(x1: f64, x2: f64) -> f64 {
    PWA_PIECES
        .iter()
        .map(|p| p[0] * x1 + p[1] * x2 + p[2])
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn nonlinear_function(x1: f64, x2: f64) -> f64 {
    (4.0 * x1 - 5.0 * (x2 - 0.5).powi(2)).sin() + 2.0 * x2
}

/// Axis-aligned sampling box in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleBox {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl SampleBox {
    pub const UNIT: Self = Self {
        lo: [0.0, 0.0],
        hi: [1.0, 1.0],
    };
    pub const SYMMETRIC: Self = Self {
        lo: [-1.0, -1.0],
        hi: [1.0, 1.0],
    };

    fn validate(&self) -> Result<()> {
        if (0..2).all(|i| self.lo[i] < self.hi[i] && self.lo[i].is_finite() && self.hi[i].is_finite()) {
            Ok(())
        } else {
            invalid("sampling box needs lo < hi")
        }
    }
}

fn sample(n_samples: usize, seed: u64, bx: SampleBox, f: fn(f64, f64) -> f64) -> Result<EncodedDataset> {
    if n_samples == 0 {
        return invalid("n_samples must be at least 1");
    }
    bx.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(n_samples, 2);
    for k in 0..n_samples {
        for i in 0..2 {
            x[(k, i)] = rng.gen_range(bx.lo[i]..bx.hi[i]);
        }
    }
    let y = DMatrix::from_fn(n_samples, 1, |k, _| f(x[(k, 0)], x[(k, 1)]));
    let mut ds = EncodedDataset::from_numeric(x, y)?;
    ds.target_specs[0].name = "y".into();
    Ok(ds)
}

/// Noiseless samples of the six-piece PWA function, `x` uniform on `[-1, 1]^2`.
pub fn gen_pwa_dataset(n_samples: usize, seed: u64) -> Result<EncodedDataset> {
    gen_pwa_dataset_in(n_samples, seed, SampleBox::SYMMETRIC)
}

pub fn gen_pwa_dataset_in(n_samples: usize, seed: u64, bx: SampleBox) -> Result<EncodedDataset> {
    sample(n_samples, seed, bx, pwa_function)
}

/// Samples of `sin(4 x1 - 5 (x2 - 1/2)^2) + 2 x2` on `[0, 1]^2`.
pub fn gen_nl_dataset(n_samples: usize, seed: u64) -> Result<EncodedDataset> {
    gen_nl_dataset_in(n_samples, seed, SampleBox::UNIT)
}

pub fn gen_nl_dataset_in(n_samples: usize, seed: u64, bx: SampleBox) -> Result<EncodedDataset> {
    sample(n_samples, seed, bx, nonlinear_function)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Pwa,
    Nonlinear,
}

impl Experiment {
    pub fn default_box(self) -> SampleBox {
        match self {
            Self::Pwa => SampleBox::SYMMETRIC,
            Self::Nonlinear => SampleBox::UNIT,
        }
    }

    pub fn generate(self, n_samples: usize, seed: u64, bx: SampleBox) -> Result<EncodedDataset> {
        match self {
            Self::Pwa => gen_pwa_dataset_in(n_samples, seed, bx),
            Self::Nonlinear => gen_nl_dataset_in(n_samples, seed, bx),
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = ParcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pwa" => Ok(Self::Pwa),
            "nonlinear" | "nl" => Ok(Self::Nonlinear),
            other => Err(ParcError::InvalidArgument(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkSpec {
    pub experiment: Experiment,
    pub repetitions: usize,
    pub ks: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub modes: Vec<SeparationMode>,
    pub n_samples: usize,
    pub test_fraction: f64,
    /// Repetition `r` uses seed `base_seed + r` for data, split and fit.
    pub base_seed: u64,
    pub sample_box: SampleBox,
    /// Settings shared by every run; `k`, `sigma`, `separation` and `seed`
    /// are overwritten per cell.
    pub config: ParcConfig,
}

impl BenchmarkSpec {
    /// The grid used for each experiment (all K, sigma and separation modes).
    pub fn new(experiment: Experiment, repetitions: usize) -> Self {
        let (ks, sigmas, modes, sample_box) = match experiment {
            Experiment::Pwa => (vec![6], vec![0.0], vec![SeparationMode::Softmax], SampleBox::SYMMETRIC),
            Experiment::Nonlinear => (
                vec![1, 3, 5, 8, 12, 30],
                vec![0.0, 0.01, 1.0, 100.0, 10000.0],
                vec![SeparationMode::Softmax, SeparationMode::Voronoi],
                SampleBox::UNIT,
            ),
        };
        Self {
            experiment,
            repetitions,
            ks,
            sigmas,
            modes,
            n_samples: 1000,
            test_fraction: 0.2,
            base_seed: 0,
            sample_box,
            config: ParcConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub sigma: f64,
    pub k: usize,
    pub mode: SeparationMode,
    pub train_r2_mean: f64,
    pub train_r2_std: f64,
    pub test_r2_mean: f64,
    pub test_r2_std: f64,
    pub iterations_mean: f64,
    pub regions_mean: f64,
    pub wall_time_mean: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Runs every (sigma, K, mode) cell `repetitions` times. Rows come out
/// ordered by sigma, then mode, then K.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<Vec<BenchmarkRow>> {
    if spec.repetitions == 0 {
        return invalid("repetitions must be at least 1");
    }
    let data: Vec<(EncodedDataset, EncodedDataset)> = (0..spec.repetitions as u64)
        .map(|r| {
            let seed = spec.base_seed + r;
            let ds = spec.experiment.generate(spec.n_samples, seed, spec.sample_box)?;
            split(&ds, spec.test_fraction, seed)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &sigma in &spec.sigmas {
        for &mode in &spec.modes {
            for &k in &spec.ks {
                let mut train = Vec::new();
                let mut test = Vec::new();
                let mut iters = Vec::new();
                let mut regions = Vec::new();
                let mut times = Vec::new();
                for (r, (tr, te)) in data.iter().enumerate() {
                    let cfg = ParcConfig {
                        k,
                        sigma,
                        separation: mode,
                        seed: spec.base_seed + r as u64,
                        ..spec.config.clone()
                    };
                    let (model, report) = fit(tr, &cfg)?;
                    train.push(evaluate(&model, tr)?.r2[0].unwrap_or(0.0));
                    test.push(evaluate(&model, te)?.r2[0].unwrap_or(0.0));
                    iters.push(report.iterations as f64);
                    regions.push(model.n_regions() as f64);
                    times.push(report.wall_time_secs);
                }
                let (train_r2_mean, train_r2_std) = mean_std(&train);
                let (test_r2_mean, test_r2_std) = mean_std(&test);
                rows.push(BenchmarkRow {
                    sigma,
                    k,
                    mode,
                    train_r2_mean,
                    train_r2_std,
                    test_r2_mean,
                    test_r2_std,
                    iterations_mean: mean_std(&iters).0,
                    regions_mean: mean_std(&regions).0,
                    wall_time_mean: mean_std(&times).0,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_benchmark_csv<W: Write>(rows: &[BenchmarkRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text table with `mean (std)` cells.
pub fn format_benchmark_table(rows: &[BenchmarkRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>8} {:>8} {:>4} {:>18} {:>18} {:>7} {:>9}",
        "sigma", "mode", "K", "train R2", "test R2", "iters", "time [s]"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>8} {:>8} {:>4} {:>18} {:>18} {:>7.1} {:>9.3}",
            r.sigma,
            r.mode.to_string(),
            r.k,
            format!("{:.3} ({:.3})", r.train_r2_mean, r.train_r2_std),
            format!("{:.3} ({:.3})", r.test_r2_mean, r.test_r2_std),
            r.iterations_mean,
            r.wall_time_mean
        );
    }
    s
}
