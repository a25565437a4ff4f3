//! Mixed-integer linear encoding of a fitted model, the tracking MILP and
//! a small branch-and-bound solver for it.

mod bnb;
mod lp_format;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::data::onehot_mask;
use crate::error::{invalid, ParcError, Result};
use crate::parc::{ParcModel, RawForm};
use crate::predictor::predict;

pub use bnb::{solve_branch_and_bound, BnbSettings};
pub use lp_format::{export_lp, parse_lp};

/// Axis-aligned box `x_min <= x <= x_max` of feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBox {
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
}

impl FeatureBox {
    pub fn new(x_min: Vec<f64>, x_max: Vec<f64>) -> Result<Self> {
        if x_min.len() != x_max.len() {
            return Err(ParcError::Dimension(format!(
                "box bounds of length {} and {}",
                x_min.len(),
                x_max.len()
            )));
        }
        for (lo, hi) in x_min.iter().zip(&x_max) {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(ParcError::NonFinite("box bound".into()));
            }
            if lo > hi {
                return invalid(format!("box lower bound {lo} exceeds upper bound {hi}"));
            }
        }
        Ok(Self { x_min, x_max })
    }

    pub fn dim(&self) -> usize {
        self.x_min.len()
    }

    /// The training-feature bounding box of `model`, widened by `expand`
    /// times its width on each side. One-hot columns stay within `[0, 1]`.
    pub fn from_model(model: &ParcModel, expand: f64) -> Result<Self> {
        if !(expand >= 0.0 && expand.is_finite()) {
            return invalid(format!("box expansion {expand} must be nonnegative"));
        }
        let mask = onehot_mask(&model.feature_specs);
        let mut lo = model.feature_min.clone();
        let mut hi = model.feature_max.clone();
        for i in 0..lo.len() {
            if mask[i] {
                lo[i] = 0.0;
                hi[i] = 1.0;
            } else {
                let w = expand * (hi[i] - lo[i]);
                lo[i] -= w;
                hi[i] += w;
            }
        }
        Self::new(lo, hi)
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.x_min.iter().zip(&self.x_max))
                .all(|(v, (lo, hi))| *v >= lo - slack && *v <= hi + slack)
    }
}

/// Upper bound of `v . x + gamma_diff` over the box; exact for boxes.
pub fn bigm_bound(v: &[f64], gamma_diff: f64, bx: &FeatureBox) -> f64 {
    gamma_diff
        + v.iter()
            .zip(bx.x_min.iter().zip(&bx.x_max))
            .map(|(&vh, (lo, hi))| vh.max(0.0) * hi - (-vh).max(0.0) * lo)
            .sum::<f64>()
}

/// Lower bound of `v . x + c` over the box; exact for boxes.
pub fn lower_bound(v: &[f64], c: f64, bx: &FeatureBox) -> f64 {
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    -bigm_bound(&neg, -c, bx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// Sparse row as `(variable index, coefficient)`.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v]).sum()
    }

    /// Amount by which `values` violates the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A minimization MILP.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Sparse objective, always minimized.
    pub objective: Vec<(usize, f64)>,
}

impl MilpModel {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Adds a variable or returns the index of an identical existing one.
    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> Result<usize> {
        let name = name.into();
        if let Some(i) = self.var_index(&name) {
            let v = &self.variables[i];
            if v.kind != kind || v.lower != lower || v.upper != upper {
                return invalid(format!("variable {name} redeclared with different kind or bounds"));
            }
            return Ok(i);
        }
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        Ok(self.variables.len() - 1)
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
    }

    /// Appends `other`'s variables (matched by name) and constraints.
    pub fn merge(&mut self, other: &MilpModel) -> Result<()> {
        let map: Vec<usize> = other
            .variables
            .iter()
            .map(|v| self.add_var(v.name.clone(), v.kind, v.lower, v.upper))
            .collect::<Result<_>>()?;
        for c in &other.constraints {
            self.add_constraint(
                c.name.clone(),
                c.terms.iter().map(|&(v, a)| (map[v], a)).collect(),
                c.sense,
                c.rhs,
            );
        }
        for &(v, a) in &other.objective {
            self.objective.push((map[v], a));
        }
        Ok(())
    }

    pub fn binaries(&self) -> Vec<usize> {
        (0..self.variables.len())
            .filter(|&i| self.variables[i].kind == VarKind::Binary)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        for (i, v) in self.variables.iter().enumerate() {
            if self.variables[..i].iter().any(|w| w.name == v.name) {
                return invalid(format!("duplicate variable {}", v.name));
            }
            if v.lower > v.upper || v.lower.is_nan() || v.upper.is_nan() {
                return invalid(format!("variable {} has empty bounds", v.name));
            }
        }
        let terms_ok = |t: &[(usize, f64)]| t.iter().all(|&(v, a)| v < n && a.is_finite());
        if !terms_ok(&self.objective) {
            return invalid("objective references an undeclared variable");
        }
        for c in &self.constraints {
            if !terms_ok(&c.terms) || !c.rhs.is_finite() {
                return invalid(format!("constraint {} is malformed", c.name));
            }
        }
        Ok(())
    }

    /// Largest bound or row violation of a full assignment.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, x)| (v.lower - x).max(x - v.upper).max(0.0));
        let integrality = self
            .variables
            .iter()
            .zip(values)
            .filter(|(v, _)| v.kind == VarKind::Binary)
            .map(|(_, x)| (x - x.round()).abs());
        bounds
            .chain(integrality)
            .chain(self.constraints.iter().map(|c| c.violation(values)))
            .fold(0.0, f64::max)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, a)| a * values[v]).sum()
    }

    /// Values of the variables whose name starts with `prefix_`, in
    /// declaration order.
    pub fn values_with_prefix(&self, values: &[f64], prefix: &str) -> Vec<f64> {
        let p = format!("{prefix}_");
        self.variables
            .iter()
            .zip(values)
            .filter(|(v, _)| v.name.strip_prefix(&p).is_some_and(|rest| rest.parse::<usize>().is_ok()))
            .map(|(_, x)| *x)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Incumbent objective; `+inf` when no integer-feasible point was found.
    pub objective_value: f64,
    /// Incumbent values of every variable (empty without an incumbent).
    pub values: Vec<f64>,
    /// Feature variables `x_1..x_n` of the incumbent.
    pub x_star: Vec<f64>,
    /// Region indicators `d_1..d_K` of the incumbent.
    pub delta: Vec<bool>,
    pub nodes: usize,
    /// `(node, objective)` each time the incumbent improved.
    pub incumbent_trace: Vec<(usize, f64)>,
}

fn var_x(i: usize) -> String {
    format!("x_{}", i + 1)
}

fn var_d(j: usize) -> String {
    format!("d_{}", j + 1)
}

fn check_box(model: &ParcModel, bx: &FeatureBox) -> Result<()> {
    if bx.dim() != model.n_features() {
        return Err(ParcError::Dimension(format!(
            "box has {} features, model has {}",
            bx.dim(),
            model.n_features()
        )));
    }
    Ok(())
}

fn declare_xd(m: &mut MilpModel, bx: &FeatureBox, k: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let x = (0..bx.dim())
        .map(|i| m.add_var(var_x(i), VarKind::Continuous, bx.x_min[i], bx.x_max[i]))
        .collect::<Result<_>>()?;
    let d = (0..k)
        .map(|j| m.add_var(var_d(j), VarKind::Binary, 0.0, 1.0))
        .collect::<Result<_>>()?;
    Ok((x, d))
}

/// Terms of `a . x` without zero coefficients.
fn linear(x: &[usize], a: impl IntoIterator<Item = f64>) -> Vec<(usize, f64)> {
    x.iter().zip(a).filter(|(_, a)| *a != 0.0).map(|(&v, a)| (v, a)).collect()
}

/// Region indicators `d_j` with `d_j = 1 -> x in P_j` and `sum d_j = 1`.
/// Rows `sep_j_i`: `(omega^i - omega^j) x + M_ji d_j <= gamma^j - gamma^i + M_ji`.
pub fn encode_partition(model: &ParcModel, bx: &FeatureBox) -> Result<MilpModel> {
    check_box(model, bx)?;
    encode_partition_raw(&model.raw_form(), bx)
}

fn encode_partition_raw(raw: &RawForm, bx: &FeatureBox) -> Result<MilpModel> {
    let k = raw.gamma.len();
    let mut m = MilpModel::default();
    let (x, d) = declare_xd(&mut m, bx, k)?;
    for j in 0..k {
        for i in 0..k {
            if i == j {
                continue;
            }
            let v: Vec<f64> = (0..bx.dim()).map(|h| raw.omega[(i, h)] - raw.omega[(j, h)]).collect();
            let gd = raw.gamma[i] - raw.gamma[j];
            let big_m = bigm_bound(&v, gd, bx);
            let mut terms = linear(&x, v);
            terms.push((d[j], big_m));
            m.add_constraint(format!("sep_{}_{}", j + 1, i + 1), terms, Sense::Le, -gd + big_m);
        }
    }
    m.add_constraint("xor", d.iter().map(|&v| (v, 1.0)).collect(), Sense::Eq, 1.0);
    Ok(m)
}

/// Variables `p_i_j = d_j (a^j_i x + b^j_i)` for every numeric target `i`
/// and region `j`, with four rows each.
pub fn encode_regression(model: &ParcModel, bx: &FeatureBox) -> Result<MilpModel> {
    check_box(model, bx)?;
    if model.layout.numeric == 0 {
        return invalid("model has no numeric target to encode");
    }
    encode_regression_raw(&model.raw_form(), model.layout.numeric, bx)
}

fn encode_regression_raw(raw: &RawForm, numeric: usize, bx: &FeatureBox) -> Result<MilpModel> {
    let k = raw.gamma.len();
    let mut m = MilpModel::default();
    let (x, d) = declare_xd(&mut m, bx, k)?;
    for i in 0..numeric {
        for j in 0..k {
            let c = &raw.coeffs[j];
            let a: Vec<f64> = c.a.row(i).iter().copied().collect();
            let b = c.b[i];
            let (lo, hi) = (lower_bound(&a, b, bx), bigm_bound(&a, b, bx));
            let tag = format!("{}_{}", i + 1, j + 1);
            let p = m.add_var(format!("p_{tag}"), VarKind::Continuous, lo.min(0.0), hi.max(0.0))?;
            let neg_a = || a.iter().map(|v| -v);
            // p - a x - M- d <= b - M-
            let mut t = vec![(p, 1.0)];
            t.extend(linear(&x, neg_a()));
            t.push((d[j], -lo));
            m.add_constraint(format!("pu_{tag}"), t, Sense::Le, b - lo);
            // p - a x - M+ d >= b - M+
            let mut t = vec![(p, 1.0)];
            t.extend(linear(&x, neg_a()));
            t.push((d[j], -hi));
            m.add_constraint(format!("pl_{tag}"), t, Sense::Ge, b - hi);
            m.add_constraint(format!("pmax_{tag}"), vec![(p, 1.0), (d[j], -hi)], Sense::Le, 0.0);
            m.add_constraint(format!("pmin_{tag}"), vec![(p, 1.0), (d[j], -lo)], Sense::Ge, 0.0);
        }
    }
    Ok(m)
}

/// `M^d_ht` for categorical target block `rows`: the largest interval bound of
/// `(a^j_t - a^j_h) x + b^j_t - b^j_h` over regions, floored at 0.
pub fn classifier_bigm(raw: &RawForm, rows: std::ops::Range<usize>, h: usize, t: usize, bx: &FeatureBox) -> f64 {
    raw.coeffs
        .iter()
        .map(|c| {
            let (rh, rt) = (rows.start + h, rows.start + t);
            let v: Vec<f64> = (0..bx.dim()).map(|q| c.a[(rt, q)] - c.a[(rh, q)]).collect();
            bigm_bound(&v, c.b[rt] - c.b[rh], bx)
        })
        .fold(0.0, f64::max)
}

/// Binaries `nu_i_h` selecting the argmax category of each categorical
/// target. Rows `cls_i_j_h_t`:
/// `(a^j_h - a^j_t) x - M^d nu_ih - M^d d_j >= b^j_t - b^j_h - 2 M^d`.
pub fn encode_classifier(model: &ParcModel, bx: &FeatureBox) -> Result<MilpModel> {
    check_box(model, bx)?;
    if model.layout.classes.is_empty() {
        return invalid("model has no categorical target to encode");
    }
    let raw = model.raw_form();
    let k = raw.gamma.len();
    let mut m = MilpModel::default();
    let (x, d) = declare_xd(&mut m, bx, k)?;
    for (i, &mi) in model.layout.classes.iter().enumerate() {
        let rows = model.layout.block(i);
        let nu: Vec<usize> = (0..mi)
            .map(|h| m.add_var(format!("nu_{}_{}", i + 1, h + 1), VarKind::Binary, 0.0, 1.0))
            .collect::<Result<_>>()?;
        for j in 0..k {
            let c = &raw.coeffs[j];
            for h in 0..mi {
                for t in 0..mi {
                    if h == t {
                        continue;
                    }
                    let big_m = classifier_bigm(&raw, rows.clone(), h, t, bx);
                    let (rh, rt) = (rows.start + h, rows.start + t);
                    let mut terms = linear(&x, (0..bx.dim()).map(|q| c.a[(rh, q)] - c.a[(rt, q)]));
                    terms.push((nu[h], -big_m));
                    terms.push((d[j], -big_m));
                    m.add_constraint(
                        format!("cls_{}_{}_{}_{}", i + 1, j + 1, h + 1, t + 1),
                        terms,
                        Sense::Ge,
                        c.b[rt] - c.b[rh] - 2.0 * big_m,
                    );
                }
            }
        }
        m.add_constraint(format!("nuxor_{}", i + 1), nu.iter().map(|&v| (v, 1.0)).collect(), Sense::Eq, 1.0);
    }
    Ok(m)
}

/// `min eps` subject to `eps >= +-(sum_j p_i_j - y_ref_i)` plus the
/// partition and regression encodings.
pub fn build_tracking_milp(model: &ParcModel, y_ref: &[f64], bx: &FeatureBox) -> Result<MilpModel> {
    check_box(model, bx)?;
    let numeric = model.layout.numeric;
    if numeric == 0 {
        return invalid("model has no numeric target to track");
    }
    if y_ref.len() != numeric {
        return Err(ParcError::Dimension(format!(
            "reference has {} entries, model has {numeric} numeric targets",
            y_ref.len()
        )));
    }
    if y_ref.iter().any(|v| !v.is_finite()) {
        return Err(ParcError::NonFinite("reference".into()));
    }
    let raw = model.raw_form();
    let k = raw.gamma.len();
    let mut m = encode_partition_raw(&raw, bx)?;
    m.merge(&encode_regression_raw(&raw, numeric, bx)?)?;
    let eps = m.add_var("eps", VarKind::Continuous, 0.0, f64::INFINITY)?;
    for (i, &yr) in y_ref.iter().enumerate() {
        let p: Vec<usize> = (0..k)
            .map(|j| m.var_index(&format!("p_{}_{}", i + 1, j + 1)).expect("declared above"))
            .collect();
        let mut t = vec![(eps, 1.0)];
        t.extend(p.iter().map(|&v| (v, -1.0)));
        m.add_constraint(format!("tu_{}", i + 1), t, Sense::Ge, -yr);
        let mut t = vec![(eps, 1.0)];
        t.extend(p.iter().map(|&v| (v, 1.0)));
        m.add_constraint(format!("tl_{}", i + 1), t, Sense::Ge, yr);
    }
    m.objective = vec![(eps, 1.0)];
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackingResult {
    pub solution: MilpSolution,
    /// Feature vector, moved away from region boundaries when possible.
    pub x_star: Vec<f64>,
    /// Optimal infinity-norm tracking error.
    pub epsilon: f64,
    pub region: usize,
    /// Model output at `x_star`.
    pub y_hat: Vec<f64>,
}

/// Solves the tracking MILP, then re-solves the LP of the optimal region to
/// push `x*` into the region's interior without worsening `eps` beyond
/// `1e-10` (relative above 1), so that `predict(x*)` selects the same region.
pub fn optimize_tracking(
    model: &ParcModel,
    y_ref: &[f64],
    bx: &FeatureBox,
    settings: &BnbSettings,
) -> Result<TrackingResult> {
    let milp = build_tracking_milp(model, y_ref, bx)?;
    let solution = solve_branch_and_bound(&milp, settings)?;
    if solution.values.is_empty() {
        return Err(ParcError::Numerical(format!(
            "tracking MILP ended with status {:?} and no incumbent",
            solution.status
        )));
    }
    let active = solution.delta.iter().position(|&b| b).unwrap_or(0);
    let x_star = if solution.delta.len() > 1 {
        polish(&milp, &solution, active).unwrap_or_else(|| solution.x_star.clone())
    } else {
        solution.x_star.clone()
    };
    let p = predict(model, &x_star);
    Ok(TrackingResult {
        epsilon: solution.objective_value,
        region: p.region,
        y_hat: p.numeric,
        x_star,
        solution,
    })
}

fn polish(milp: &MilpModel, sol: &MilpSolution, active: usize) -> Option<Vec<f64>> {
    let mut m = milp.clone();
    for (v, var) in m.variables.iter_mut().enumerate() {
        if var.kind == VarKind::Binary {
            var.lower = sol.values[v].round();
            var.upper = var.lower;
        }
    }
    let eps = m.var_index("eps")?;
    m.variables[eps].upper = sol.objective_value + 1e-10 * sol.objective_value.abs().max(1.0);
    let margin = m.add_var("margin", VarKind::Continuous, 0.0, 1.0).ok()?;
    let prefix = format!("sep_{}_", active + 1);
    for c in &mut m.constraints {
        if c.name.starts_with(&prefix) {
            c.terms.push((margin, 1.0));
        }
    }
    m.objective = vec![(margin, -1.0)];
    let out = bnb::solve_relaxation(&m).ok()?;
    let (values, _) = out?;
    let x = m.values_with_prefix(&values, "x");
    (values[margin] > 0.0).then_some(x)
}
