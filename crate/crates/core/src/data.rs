//! Tabular ingestion: column specs, one-hot encoding, standardization and
//! train/test splitting.
//!
//! Categorical features with `n_i` levels are encoded with `n_i - 1`
//! indicator columns; the first level (in first-appearance order) is the
//! reference and maps to the all-zeros code. Categorical targets are stored
//! as 0-based category indices.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, ParcError, Result};
use crate::linalg::serde_rows;

/// Columns with at most this many distinct values are treated as categorical.
pub const DEFAULT_CATEGORICAL_THRESHOLD: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Distinct raw values in encoding order (categorical only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl ColumnSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
            categories: Vec::new(),
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories: categories.into_iter().map(Into::into).collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ColumnKind::Numeric => Ok(()),
            ColumnKind::Categorical => {
                if self.categories.len() < 2 {
                    return invalid(format!(
                        "categorical column {:?} needs at least 2 categories",
                        self.name
                    ));
                }
                let mut seen = HashSet::new();
                for c in &self.categories {
                    if !seen.insert(c.as_str()) {
                        return invalid(format!(
                            "duplicate category {c:?} in column {:?}",
                            self.name
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == ColumnKind::Categorical
    }

    /// Number of encoded feature columns this spec expands to.
    pub fn encoded_width(&self) -> usize {
        match self.kind {
            ColumnKind::Numeric => 1,
            ColumnKind::Categorical => self.categories.len() - 1,
        }
    }

    pub fn category_index(&self, value: &str) -> Result<usize> {
        self.categories
            .iter()
            .position(|c| c == value)
            .ok_or_else(|| ParcError::UnknownCategory {
                column: self.name.clone(),
                value: value.to_string(),
            })
    }
}

/// A header plus string cells, as read from CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ParcError::UnknownColumn(name.to_string()))
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(f))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Detects column kinds: a column is categorical when it has a non-numeric
/// cell or at most `threshold` distinct values. Targets are only treated as
/// categorical when non-numeric; use explicit specs to override either rule.
pub fn infer_specs(
    table: &RawTable,
    target_names: &[String],
    threshold: usize,
) -> Result<(Vec<ColumnSpec>, Vec<ColumnSpec>)> {
    for t in target_names {
        table.column_index(t)?;
    }
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (c, name) in table.headers.iter().enumerate() {
        let is_target = target_names.contains(name);
        let mut distinct: Vec<&str> = Vec::new();
        let mut numeric = true;
        for (r, row) in table.rows.iter().enumerate() {
            let cell = row.get(c).map(String::as_str).unwrap_or("");
            if cell.is_empty() {
                return Err(ParcError::MissingValue {
                    column: name.clone(),
                    row: r,
                });
            }
            numeric &= cell.parse::<f64>().is_ok();
            if !distinct.contains(&cell) {
                distinct.push(cell);
            }
        }
        let categorical = if is_target {
            !numeric
        } else {
            !numeric || (distinct.len() <= threshold && distinct.len() >= 2)
        };
        let spec = if categorical {
            ColumnSpec::categorical(name.clone(), distinct)?
        } else {
            ColumnSpec::numeric(name.clone())
        };
        if is_target {
            targets.push(spec);
        } else {
            features.push(spec);
        }
    }
    Ok((features, targets))
}

/// Layout of the coefficient rows of one region: `numeric` regression rows
/// followed by one block of `classes[i]` score rows per categorical target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetLayout {
    pub numeric: usize,
    pub classes: Vec<usize>,
}

impl TargetLayout {
    pub fn rows(&self) -> usize {
        self.numeric + self.classes.iter().sum::<usize>()
    }

    /// First row of categorical target `i`'s block.
    pub fn offset(&self, i: usize) -> usize {
        self.numeric + self.classes[..i].iter().sum::<usize>()
    }

    pub fn block(&self, i: usize) -> std::ops::Range<usize> {
        let o = self.offset(i);
        o..o + self.classes[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedDataset {
    /// N × n encoded features.
    #[serde(with = "serde_rows")]
    pub x: DMatrix<f64>,
    /// N × m_c numeric targets.
    #[serde(with = "serde_rows")]
    pub yc: DMatrix<f64>,
    /// `yd[i][k]`: category index of categorical target `i` for sample `k`.
    pub yd: Vec<Vec<usize>>,
    pub feature_specs: Vec<ColumnSpec>,
    /// Numeric targets first, then categorical targets.
    pub target_specs: Vec<ColumnSpec>,
}

impl EncodedDataset {
    /// Builds a dataset with numeric features and numeric targets only.
    pub fn from_numeric(x: DMatrix<f64>, yc: DMatrix<f64>) -> Result<Self> {
        Self::new(x, yc, Vec::new(), Vec::new())
    }

    /// Builds a dataset with default names (`x1..`, `y1..`, `c1..`) and
    /// category labels `0..m_i` for the categorical targets.
    pub fn new(
        x: DMatrix<f64>,
        yc: DMatrix<f64>,
        yd: Vec<Vec<usize>>,
        class_counts: Vec<usize>,
    ) -> Result<Self> {
        let feature_specs = (0..x.ncols())
            .map(|i| ColumnSpec::numeric(format!("x{}", i + 1)))
            .collect();
        let mut target_specs: Vec<ColumnSpec> = (0..yc.ncols())
            .map(|i| ColumnSpec::numeric(format!("y{}", i + 1)))
            .collect();
        for (i, &m) in class_counts.iter().enumerate() {
            target_specs.push(ColumnSpec::categorical(
                format!("c{}", i + 1),
                (0..m).map(|h| h.to_string()),
            )?);
        }
        let ds = Self {
            x,
            yc,
            yd,
            feature_specs,
            target_specs,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.nrows();
        if n == 0 {
            return invalid("dataset has no samples");
        }
        if self.yc.nrows() != n {
            return Err(ParcError::Dimension(format!(
                "{} feature rows but {} numeric target rows",
                n,
                self.yc.nrows()
            )));
        }
        let width: usize = self.feature_specs.iter().map(ColumnSpec::encoded_width).sum();
        if width != self.x.ncols() {
            return Err(ParcError::Dimension(format!(
                "feature specs expand to {width} columns, matrix has {}",
                self.x.ncols()
            )));
        }
        let layout = self.layout();
        if layout.numeric != self.yc.ncols() || layout.classes.len() != self.yd.len() {
            return Err(ParcError::Dimension(
                "target specs do not match target matrices".into(),
            ));
        }
        for (i, col) in self.yd.iter().enumerate() {
            if col.len() != n {
                return Err(ParcError::Dimension(format!(
                    "categorical target {i} has {} entries, expected {n}",
                    col.len()
                )));
            }
            if let Some(&bad) = col.iter().find(|&&v| v >= layout.classes[i]) {
                return invalid(format!("category index {bad} out of range for target {i}"));
            }
        }
        if !self.x.iter().chain(self.yc.iter()).all(|v| v.is_finite()) {
            return Err(ParcError::NonFinite("dataset contains NaN or infinity".into()));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn layout(&self) -> TargetLayout {
        TargetLayout {
            numeric: self
                .target_specs
                .iter()
                .filter(|s| !s.is_categorical())
                .count(),
            classes: self
                .target_specs
                .iter()
                .filter(|s| s.is_categorical())
                .map(|s| s.categories.len())
                .collect(),
        }
    }

    pub fn categorical_targets(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.target_specs.iter().filter(|s| s.is_categorical())
    }

    /// `true` for encoded columns that are one-hot indicators.
    pub fn onehot_mask(&self) -> Vec<bool> {
        onehot_mask(&self.feature_specs)
    }

    pub fn feature_row(&self, k: usize) -> Vec<f64> {
        self.x.row(k).iter().copied().collect()
    }

    pub fn numeric_target_row(&self, k: usize) -> Vec<f64> {
        self.yc.row(k).iter().copied().collect()
    }

    pub fn categorical_target_row(&self, k: usize) -> Vec<usize> {
        self.yd.iter().map(|col| col[k]).collect()
    }

    /// Rows `idx` (in that order).
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            yc: self.yc.select_rows(idx),
            yd: self
                .yd
                .iter()
                .map(|col| idx.iter().map(|&k| col[k]).collect())
                .collect(),
            feature_specs: self.feature_specs.clone(),
            target_specs: self.target_specs.clone(),
        }
    }

    /// Inverse of the feature encoding for one row.
    pub fn decode_features(&self, k: usize) -> Vec<String> {
        decode_features(&self.feature_specs, &self.feature_row(k))
    }

    /// Raw table with features then targets; `encode` with the same specs
    /// reproduces `self` exactly.
    pub fn to_table(&self) -> RawTable {
        let headers = self
            .feature_specs
            .iter()
            .chain(&self.target_specs)
            .map(|s| s.name.clone())
            .collect();
        let categorical: Vec<&ColumnSpec> = self.categorical_targets().collect();
        let rows = (0..self.n_samples())
            .map(|k| {
                let mut row = self.decode_features(k);
                row.extend(self.yc.row(k).iter().map(|v| format!("{v}")));
                row.extend(categorical.iter().zip(&self.yd).map(|(s, y)| s.categories[y[k]].clone()));
                row
            })
            .collect();
        RawTable { headers, rows }
    }
}

pub fn onehot_mask(specs: &[ColumnSpec]) -> Vec<bool> {
    specs
        .iter()
        .flat_map(|s| std::iter::repeat(s.is_categorical()).take(s.encoded_width()))
        .collect()
}

/// Maps encoded feature values back to raw cells. Indicator blocks decode to
/// the first category whose indicator is set (or the reference level).
pub fn decode_features(specs: &[ColumnSpec], row: &[f64]) -> Vec<String> {
    let mut out = Vec::with_capacity(specs.len());
    let mut c = 0;
    for s in specs {
        match s.kind {
            ColumnKind::Numeric => {
                out.push(format!("{}", row[c]));
                c += 1;
            }
            ColumnKind::Categorical => {
                let w = s.encoded_width();
                let h = row[c..c + w]
                    .iter()
                    .position(|&v| v > 0.5)
                    .map_or(0, |p| p + 1);
                out.push(s.categories[h].clone());
                c += w;
            }
        }
    }
    out
}

fn parse_numeric(spec: &ColumnSpec, row: usize, cell: &str) -> Result<f64> {
    if cell.is_empty() {
        return Err(ParcError::MissingValue {
            column: spec.name.clone(),
            row,
        });
    }
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ParcError::NonNumeric {
            column: spec.name.clone(),
            row,
            value: cell.to_string(),
        })
}

/// Encodes features of raw rows whose cells are in `feature_specs` order.
pub fn encode_feature_rows(feature_specs: &[ColumnSpec], rows: &[Vec<String>]) -> Result<DMatrix<f64>> {
    let width: usize = feature_specs.iter().map(ColumnSpec::encoded_width).sum();
    let mut x = DMatrix::zeros(rows.len(), width);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != feature_specs.len() {
            return Err(ParcError::Dimension(format!(
                "row {r} has {} cells, expected {}",
                row.len(),
                feature_specs.len()
            )));
        }
        let mut c = 0;
        for (spec, cell) in feature_specs.iter().zip(row) {
            match spec.kind {
                ColumnKind::Numeric => {
                    x[(r, c)] = parse_numeric(spec, r, cell)?;
                    c += 1;
                }
                ColumnKind::Categorical => {
                    if cell.is_empty() {
                        return Err(ParcError::MissingValue {
                            column: spec.name.clone(),
                            row: r,
                        });
                    }
                    let h = spec.category_index(cell)?;
                    if h > 0 {
                        x[(r, c + h - 1)] = 1.0;
                    }
                    c += spec.encoded_width();
                }
            }
        }
    }
    Ok(x)
}

/// Encodes a raw table. Specs name the columns to use; feature columns keep
/// their spec order, numeric targets precede categorical targets.
pub fn encode(
    table: &RawTable,
    feature_specs: &[ColumnSpec],
    target_specs: &[ColumnSpec],
) -> Result<EncodedDataset> {
    for s in feature_specs.iter().chain(target_specs) {
        s.validate()?;
    }
    let pick = |specs: &[ColumnSpec]| -> Result<Vec<usize>> {
        specs.iter().map(|s| table.column_index(&s.name)).collect()
    };
    let fcols = pick(feature_specs)?;
    let feature_rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|row| fcols.iter().map(|&c| row.get(c).cloned().unwrap_or_default()).collect())
        .collect();
    let x = encode_feature_rows(feature_specs, &feature_rows)?;

    let ordered: Vec<ColumnSpec> = target_specs
        .iter()
        .filter(|s| !s.is_categorical())
        .chain(target_specs.iter().filter(|s| s.is_categorical()))
        .cloned()
        .collect();
    let tcols = pick(&ordered)?;
    let n = table.rows.len();
    let m_c = ordered.iter().filter(|s| !s.is_categorical()).count();
    let mut yc = DMatrix::zeros(n, m_c);
    let mut yd = vec![Vec::with_capacity(n); ordered.len() - m_c];
    for (r, row) in table.rows.iter().enumerate() {
        for (t, (spec, &c)) in ordered.iter().zip(&tcols).enumerate() {
            let cell = row.get(c).map(String::as_str).unwrap_or("");
            if t < m_c {
                yc[(r, t)] = parse_numeric(spec, r, cell)?;
            } else {
                if cell.is_empty() {
                    return Err(ParcError::MissingValue {
                        column: spec.name.clone(),
                        row: r,
                    });
                }
                yd[t - m_c].push(spec.category_index(cell)?);
            }
        }
    }
    let ds = EncodedDataset {
        x,
        yc,
        yd,
        feature_specs: feature_specs.to_vec(),
        target_specs: ordered,
    };
    ds.validate()?;
    Ok(ds)
}

/// Per-column standardization. Exempt columns (one-hot indicators) keep
/// mean 0 / std 1, i.e. pass through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn identity(n: usize) -> Self {
        Self {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    /// Population (ddof = 0) statistics; constant columns get std 1.
    pub fn fit(x: &DMatrix<f64>, exempt: &[bool]) -> Result<Self> {
        if x.nrows() == 0 {
            return invalid("cannot fit a scaler on an empty matrix");
        }
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for (c, col) in x.column_iter().enumerate() {
            if exempt.get(c).copied().unwrap_or(false) {
                mean.push(0.0);
                std.push(1.0);
                continue;
            }
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            mean.push(m);
            std.push(if s > f64::EPSILON * m.abs().max(1.0) { s } else { 1.0 });
        }
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.mean[j]) / self.std[j])
    }

    pub fn inverse(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * self.std[j] + self.mean[j])
    }

    pub fn apply_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, v)| (v - self.mean[j]) / self.std[j])
            .collect()
    }

    pub fn inverse_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, v)| v * self.std[j] + self.mean[j])
            .collect()
    }
}

/// Seeded random split; the test part has `max(1, floor(N * fraction))` rows.
pub fn split(
    dataset: &EncodedDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(EncodedDataset, EncodedDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return invalid(format!("test fraction {test_fraction} not in (0, 1)"));
    }
    let n = dataset.n_samples();
    let n_test = ((n as f64 * test_fraction).floor() as usize).max(1);
    if n_test >= n {
        return invalid(format!("cannot split {n} samples with test fraction {test_fraction}"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (test, train) = idx.split_at(n_test);
    Ok((dataset.subset(train), dataset.subset(test)))
}
