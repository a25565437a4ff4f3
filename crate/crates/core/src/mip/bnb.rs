//! Best-first branch and bound over the binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::simplex::{solve_lp, DenseRow, LpOutcome};
use super::{MilpModel, MilpSolution, MilpStatus};
use crate::error::{invalid, ParcError, Result};

const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BnbSettings {
    /// Nodes whose bound is within `gap * max(1, |incumbent|)` of the
    /// incumbent are pruned.
    pub gap: f64,
    /// Maximum number of LP relaxations solved.
    pub node_limit: usize,
}

impl Default for BnbSettings {
    fn default() -> Self {
        Self {
            gap: 1e-9,
            node_limit: 100_000,
        }
    }
}

struct Relaxation {
    objective: Vec<f64>,
    rows: Vec<DenseRow>,
}

impl Relaxation {
    fn new(milp: &MilpModel) -> Self {
        let n = milp.variables.len();
        let mut objective = vec![0.0; n];
        for &(v, a) in &milp.objective {
            objective[v] += a;
        }
        let rows = milp
            .constraints
            .iter()
            .map(|c| {
                let mut coeffs = vec![0.0; n];
                for &(v, a) in &c.terms {
                    coeffs[v] += a;
                }
                DenseRow {
                    coeffs,
                    sense: c.sense,
                    rhs: c.rhs,
                }
            })
            .collect();
        Self { objective, rows }
    }

    fn solve(&self, lower: &[f64], upper: &[f64]) -> Result<Option<(Vec<f64>, f64)>> {
        match solve_lp(&self.objective, &self.rows, lower, upper)? {
            LpOutcome::Optimal { x, objective } => Ok(Some((x, objective))),
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(ParcError::Numerical("LP relaxation is unbounded".into())),
        }
    }
}

/// LP relaxation of `milp` (binaries relaxed to their bounds).
pub(crate) fn solve_relaxation(milp: &MilpModel) -> Result<Option<(Vec<f64>, f64)>> {
    let lower: Vec<f64> = milp.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = milp.variables.iter().map(|v| v.upper).collect();
    Relaxation::new(milp).solve(&lower, &upper)
}

struct Node {
    bound: f64,
    id: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    values: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Reversed so the max-heap pops the smallest bound, then the oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Binary with the most fractional value, smallest index on ties.
fn branching_variable(binaries: &[usize], values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &b in binaries {
        let frac = (values[b] - values[b].floor()).min(values[b].ceil() - values[b]);
        if frac > INTEGRALITY_TOL && best.map_or(true, |(_, f)| frac > f + 1e-12) {
            best = Some((b, frac));
        }
    }
    best.map(|b| b.0)
}

/// Solves `milp` to within the gap. Nodes are explored best-bound first
/// with ties broken by creation order, so results are deterministic.
pub fn solve_branch_and_bound(milp: &MilpModel, settings: &BnbSettings) -> Result<MilpSolution> {
    milp.validate()?;
    if !(settings.gap >= 0.0) {
        return invalid("gap must be nonnegative");
    }
    if settings.node_limit == 0 {
        return invalid("node limit must be at least 1");
    }
    let relax = Relaxation::new(milp);
    let binaries = milp.binaries();
    let mut lower: Vec<f64> = milp.variables.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = milp.variables.iter().map(|v| v.upper).collect();
    for &b in &binaries {
        lower[b] = lower[b].max(0.0).ceil();
        upper[b] = upper[b].min(1.0).floor();
    }

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut trace = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut nodes = 0;
    let mut next_id = 0;
    let prune = |bound: f64, inc: &Option<(Vec<f64>, f64)>| {
        inc.as_ref()
            .is_some_and(|(_, v)| bound >= v - settings.gap * v.abs().max(1.0))
    };

    let mut pending = vec![(lower, upper)];
    let mut hit_limit = false;
    loop {
        for (lo, up) in pending.drain(..) {
            if nodes >= settings.node_limit {
                hit_limit = true;
                break;
            }
            nodes += 1;
            let Some((values, bound)) = relax.solve(&lo, &up)? else {
                continue;
            };
            if prune(bound, &incumbent) {
                continue;
            }
            if branching_variable(&binaries, &values).is_none() {
                let mut values = values;
                for &b in &binaries {
                    values[b] = values[b].round();
                }
                trace.push((nodes, bound));
                incumbent = Some((values, bound));
                continue;
            }
            heap.push(Node {
                bound,
                id: next_id,
                lower: lo,
                upper: up,
                values,
            });
            next_id += 1;
        }
        if hit_limit {
            break;
        }
        let Some(node) = heap.pop() else {
            break;
        };
        if prune(node.bound, &incumbent) {
            // every remaining node has a bound at least as large
            heap.clear();
            break;
        }
        let b = branching_variable(&binaries, &node.values).expect("only fractional nodes are queued");
        let (mut lo1, up1) = (node.lower.clone(), node.upper.clone());
        lo1[b] = 1.0;
        let (lo0, mut up0) = (node.lower, node.upper);
        up0[b] = 0.0;
        pending.push((lo1, up1));
        pending.push((lo0, up0));
    }

    let status = if hit_limit {
        MilpStatus::IterationLimit
    } else if incumbent.is_some() {
        MilpStatus::Optimal
    } else {
        MilpStatus::Infeasible
    };
    let (values, objective_value) = incumbent.unwrap_or((Vec::new(), f64::INFINITY));
    let x_star = milp.values_with_prefix(&values, "x");
    let delta = milp
        .values_with_prefix(&values, "d")
        .iter()
        .map(|&v| v > 0.5)
        .collect();
    Ok(MilpSolution {
        status,
        objective_value,
        x_star,
        delta,
        values,
        nodes,
        incumbent_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mip::{Sense, VarKind};

    /// max 5a + 4b + 3c, 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
    fn knapsack() -> MilpModel {
        let mut m = MilpModel::default();
        let v: Vec<usize> = ["a", "b", "c"]
            .iter()
            .map(|n| m.add_var(*n, VarKind::Binary, 0.0, 1.0).unwrap())
            .collect();
        let rows = [([2.0, 3.0, 1.0], 5.0), ([4.0, 1.0, 2.0], 11.0), ([3.0, 4.0, 2.0], 8.0)];
        for (r, (a, b)) in rows.iter().enumerate() {
            m.add_constraint(format!("r{r}"), v.iter().zip(a).map(|(&i, &c)| (i, c)).collect(), Sense::Le, *b);
        }
        m.objective = vec![(v[0], -5.0), (v[1], -4.0), (v[2], -3.0)];
        m
    }

    #[test]
    fn small_binary_program_matches_enumeration() {
        let m = knapsack();
        let sol = solve_branch_and_bound(&m, &BnbSettings::default()).unwrap();
        let mut best = f64::INFINITY;
        for mask in 0..8u32 {
            let vals: Vec<f64> = (0..3).map(|i| ((mask >> i) & 1) as f64).collect();
            if m.max_violation(&vals) == 0.0 {
                best = best.min(m.objective_value(&vals));
            }
        }
        assert_eq!(sol.status, MilpStatus::Optimal);
        assert!((sol.objective_value - best).abs() < 1e-9);
        assert!(m.max_violation(&sol.values) < 1e-9);
        for w in sol.incumbent_trace.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn fixed_binaries_solve_a_single_lp() {
        let mut m = MilpModel::default();
        let d = m.add_var("d_1", VarKind::Binary, 0.0, 1.0).unwrap();
        let x = m.add_var("x_1", VarKind::Continuous, 0.0, 4.0).unwrap();
        m.add_constraint("xor", vec![(d, 1.0)], Sense::Eq, 1.0);
        m.add_constraint("c", vec![(x, 1.0), (d, 1.0)], Sense::Ge, 3.0);
        m.objective = vec![(x, 1.0)];
        let sol = solve_branch_and_bound(&m, &BnbSettings::default()).unwrap();
        assert_eq!(sol.nodes, 1);
        assert_eq!(sol.delta, vec![true]);
        assert!((sol.x_star[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_node_limit() {
        let mut m = MilpModel::default();
        let a = m.add_var("a", VarKind::Binary, 0.0, 1.0).unwrap();
        let b = m.add_var("b", VarKind::Binary, 0.0, 1.0).unwrap();
        m.add_constraint("half", vec![(a, 2.0), (b, 2.0)], Sense::Eq, 1.0);
        let sol = solve_branch_and_bound(&m, &BnbSettings::default()).unwrap();
        assert_eq!(sol.status, MilpStatus::Infeasible);
        assert!(sol.values.is_empty() && sol.objective_value.is_infinite());

        let sol = solve_branch_and_bound(
            &knapsack(),
            &BnbSettings {
                node_limit: 1,
                ..BnbSettings::default()
            },
        )
        .unwrap();
        assert_eq!(sol.status, MilpStatus::IterationLimit);
        assert_eq!(sol.nodes, 1);
    }
}
