//! Run configuration shared by the CLI subcommands, and the manifest every
//! run leaves behind.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{ColumnSpec, DEFAULT_CATEGORICAL_THRESHOLD};
use crate::error::{ParcError, Result};
use crate::mip::BnbSettings;
use crate::parc::{ParcConfig, SeparationMode, FORMAT_VERSION};

/// Seed used when neither the config file nor the command line gives one.
pub const DEFAULT_SEED: u64 = 0;

/// Generator behind every random draw (sampling, splits, folds, k-means++).
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3) seeded with seed_from_u64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataOptions {
    /// Target column names.
    pub targets: Vec<String>,
    pub categorical_threshold: usize,
    /// Replace the inferred spec of the column with the same name.
    pub columns: Vec<ColumnSpec>,
    /// Hold out this fraction for testing in `fit`.
    pub test_fraction: Option<f64>,
}

impl Default for DataOptions {
    fn default() -> Self {
        Self {
            targets: Vec::new(),
            categorical_threshold: DEFAULT_CATEGORICAL_THRESHOLD,
            columns: Vec::new(),
            test_fraction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MipOptions {
    pub y_ref: Vec<f64>,
    /// Per-side expansion of the training box, relative to its width.
    pub box_expand: f64,
    pub gap: f64,
    pub node_limit: usize,
}

impl Default for MipOptions {
    fn default() -> Self {
        let bnb = BnbSettings::default();
        Self {
            y_ref: Vec::new(),
            box_expand: 0.05,
            gap: bnb.gap,
            node_limit: bnb.node_limit,
        }
    }
}

impl MipOptions {
    pub fn bnb(&self) -> BnbSettings {
        BnbSettings {
            gap: self.gap,
            node_limit: self.node_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthOptions {
    pub experiment: String,
    pub n_samples: usize,
    /// `[x1_min, x2_min]`; the experiment's default box when absent.
    pub box_lo: Option<[f64; 2]>,
    pub box_hi: Option<[f64; 2]>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            experiment: "nonlinear".into(),
            n_samples: 1000,
            box_lo: None,
            box_hi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectOptions {
    pub k_min: usize,
    pub k_max: usize,
    pub folds: usize,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            k_min: 1,
            k_max: 10,
            folds: 5,
        }
    }
}

/// Grid overrides; absent fields keep the experiment's own grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkOptions {
    pub experiment: String,
    pub repetitions: usize,
    pub ks: Option<Vec<usize>>,
    pub sigmas: Option<Vec<f64>>,
    pub modes: Option<Vec<SeparationMode>>,
    pub n_samples: usize,
    pub test_fraction: f64,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            experiment: "nonlinear".into(),
            repetitions: 20,
            ks: None,
            sigmas: None,
            modes: None,
            n_samples: 1000,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides `parc.seed` and seeds sampling, splits and folds.
    pub seed: Option<u64>,
    pub data: DataOptions,
    pub parc: ParcConfig,
    pub mip: MipOptions,
    pub synth: SynthOptions,
    pub select: SelectOptions,
    pub benchmark: BenchmarkOptions,
}

impl RunConfig {
    /// Reads TOML, or JSON when the extension is `.json`. A run manifest is
    /// accepted too and yields the configuration it recorded.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            let value: serde_json::Value = serde_json::from_str(&text)?;
            let value = match value.get("config") {
                Some(c) if value.get("tool").is_some() => c.clone(),
                _ => value,
            };
            serde_json::from_value(value).map_err(|e| ParcError::Config(e.to_string()))
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ParcError::Config(e.to_string().replace('\n', " ")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ParcError::Config(e.to_string()))
    }

    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(self.parc.seed)
    }

    /// Copies the effective seed into `parc` and checks every section.
    pub fn resolve(mut self) -> Result<Self> {
        let seed = self.effective_seed();
        self.seed = Some(seed);
        self.parc.seed = seed;
        self.parc.validate()?;
        if let Some(f) = self.data.test_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(ParcError::Config(format!("data.test_fraction {f} not in (0, 1)")));
            }
        }
        for c in &self.data.columns {
            c.validate()?;
        }
        if !(self.mip.box_expand >= 0.0 && self.mip.box_expand.is_finite()) {
            return Err(ParcError::Config("mip.box_expand must be nonnegative".into()));
        }
        Ok(self)
    }

    /// Applies the `data.columns` overrides to inferred specs.
    pub fn override_specs(&self, specs: &mut [ColumnSpec]) {
        for s in specs.iter_mut() {
            if let Some(o) = self.data.columns.iter().find(|o| o.name == s.name) {
                *s = o.clone();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            bytes: content.len() as u64,
            sha256: format!("{:x}", Sha256::digest(&content)),
        })
    }
}

/// Everything needed to rerun a command and compare its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub model_format_version: u32,
    pub rng: String,
    pub command: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub config: RunConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(command: &str, argv: Vec<String>, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            model_format_version: FORMAT_VERSION,
            rng: RNG_NAME.into(),
            command: command.into(),
            argv,
            seed: config.effective_seed(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
