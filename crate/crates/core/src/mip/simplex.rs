//! Dense two-phase primal simplex for the small LP relaxations met in
//! branch and bound.

use crate::error::{ParcError, Result};

use super::Sense;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone)]
pub(crate) struct DenseRow {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// How an original variable maps to nonnegative tableau columns:
/// `x = offset + sign * y_col` (or `y_pos - y_neg` for free variables).
#[derive(Debug, Clone, Copy)]
enum Column {
    Fixed(f64),
    Shifted { col: usize, offset: f64, sign: f64 },
    Free { pos: usize, neg: usize },
}

struct Tableau {
    m: usize,
    width: usize,
    /// Row-major, `m × (width + 1)`; the last entry of a row is its rhs.
    t: Vec<f64>,
    /// Reduced costs plus the negated objective in the last slot.
    d: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.width + 1) + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.t[r * (self.width + 1) + self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width + 1;
        let p = self.t[r * w + c];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                    if v.abs() < 1e-13 {
                        *v = 0.0;
                    }
                }
                row[c] = 0.0;
            }
        }
        let f = self.d[c];
        if f != 0.0 {
            for (v, pv) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.d[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.d = cost.to_vec();
        self.d.push(0.0);
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for c in 0..=self.width {
                    self.d[c] -= cb * self.at(r, c);
                }
            }
        }
    }

    /// Runs primal simplex on the current costs. Returns `false` when unbounded.
    fn optimize(&mut self, allowed: &[bool], max_iters: usize) -> Result<bool> {
        let mut bland = false;
        let mut degenerate = 0;
        for _ in 0..max_iters {
            let entering = if bland {
                (0..self.width).find(|&c| allowed[c] && self.d[c] < -COST_TOL)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for c in 0..self.width {
                    if allowed[c] && self.d[c] < -COST_TOL && best.map_or(true, |(_, v)| self.d[c] < v) {
                        best = Some((c, self.d[c]));
                    }
                }
                best.map(|b| b.0)
            };
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.at(r, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lv)) => {
                            ratio < lv - 1e-12 || (ratio <= lv + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_SWITCH {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
        Err(ParcError::Numerical("simplex iteration limit reached".into()))
    }
}

/// Minimizes `objective . x` subject to `rows` and `lower <= x <= upper`.
/// Infinite bounds are allowed.
pub(crate) fn solve_lp(
    objective: &[f64],
    rows: &[DenseRow],
    lower: &[f64],
    upper: &[f64],
) -> Result<LpOutcome> {
    let n = objective.len();
    let mut columns = Vec::with_capacity(n);
    let mut ny = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for v in 0..n {
        let (l, u) = (lower[v], upper[v]);
        if l > u + 1e-12 {
            return Ok(LpOutcome::Infeasible);
        }
        let col = if l.is_finite() && u.is_finite() && u - l <= 1e-12 {
            Column::Fixed(l)
        } else if l.is_finite() {
            if u.is_finite() {
                bound_rows.push((ny, u - l));
            }
            Column::Shifted { col: ny, offset: l, sign: 1.0 }
        } else if u.is_finite() {
            Column::Shifted { col: ny, offset: u, sign: -1.0 }
        } else {
            ny += 1;
            Column::Free { pos: ny - 1, neg: ny }
        };
        if !matches!(col, Column::Fixed(_)) {
            ny += 1;
        }
        columns.push(col);
    }

    // Rows in terms of y, with nonnegative right-hand sides.
    struct Std {
        coeffs: Vec<f64>,
        sense: Sense,
        rhs: f64,
    }
    let mut std_rows: Vec<Std> = Vec::with_capacity(rows.len() + bound_rows.len());
    for row in rows {
        let mut coeffs = vec![0.0; ny];
        let mut rhs = row.rhs;
        for (v, &a) in row.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match columns[v] {
                Column::Fixed(val) => rhs -= a * val,
                Column::Shifted { col, offset, sign } => {
                    coeffs[col] += a * sign;
                    rhs -= a * offset;
                }
                Column::Free { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        if coeffs.iter().all(|&a| a == 0.0) {
            let ok = match row.sense {
                Sense::Le => rhs >= -1e-9,
                Sense::Ge => rhs <= 1e-9,
                Sense::Eq => rhs.abs() <= 1e-9,
            };
            if !ok {
                return Ok(LpOutcome::Infeasible);
            }
            continue;
        }
        std_rows.push(Std {
            coeffs,
            sense: row.sense,
            rhs,
        });
    }
    for &(col, cap) in &bound_rows {
        let mut coeffs = vec![0.0; ny];
        coeffs[col] = 1.0;
        std_rows.push(Std {
            coeffs,
            sense: Sense::Le,
            rhs: cap,
        });
    }
    for r in &mut std_rows {
        if r.rhs < 0.0 {
            r.rhs = -r.rhs;
            r.coeffs.iter_mut().for_each(|a| *a = -*a);
            r.sense = match r.sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let m = std_rows.len();
    let n_slack = std_rows.iter().filter(|r| r.sense != Sense::Eq).count();
    let n_art = std_rows.iter().filter(|r| r.sense != Sense::Le).count();
    let width = ny + n_slack + n_art;
    let mut t = vec![0.0; m * (width + 1)];
    let mut basis = vec![0; m];
    let (mut s, mut a) = (ny, ny + n_slack);
    for (r, row) in std_rows.iter().enumerate() {
        let base = r * (width + 1);
        t[base..base + ny].copy_from_slice(&row.coeffs);
        t[base + width] = row.rhs;
        match row.sense {
            Sense::Le => {
                t[base + s] = 1.0;
                basis[r] = s;
                s += 1;
            }
            Sense::Ge => {
                t[base + s] = -1.0;
                s += 1;
                t[base + a] = 1.0;
                basis[r] = a;
                a += 1;
            }
            Sense::Eq => {
                t[base + a] = 1.0;
                basis[r] = a;
                a += 1;
            }
        }
    }
    let mut tab = Tableau {
        m,
        width,
        t,
        d: Vec::new(),
        basis,
    };
    let max_iters = 200 * (m + width) + 1000;
    let art_start = ny + n_slack;

    if n_art > 0 {
        let mut cost = vec![0.0; width];
        cost[art_start..].iter_mut().for_each(|c| *c = 1.0);
        tab.set_costs(&cost);
        tab.optimize(&vec![true; width], max_iters)?;
        let scale = 1.0 + std_rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if -tab.d[width] > 1e-9 * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // drive remaining artificials out of the basis where possible
        for r in 0..m {
            if tab.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&c| tab.at(r, c).abs() > PIVOT_TOL) {
                    tab.pivot(r, c);
                }
            }
        }
    }

    let mut cost = vec![0.0; width];
    let mut constant = 0.0;
    for (v, &cv) in objective.iter().enumerate() {
        match columns[v] {
            Column::Fixed(val) => constant += cv * val,
            Column::Shifted { col, offset, sign } => {
                cost[col] += cv * sign;
                constant += cv * offset;
            }
            Column::Free { pos, neg } => {
                cost[pos] += cv;
                cost[neg] -= cv;
            }
        }
    }
    tab.set_costs(&cost);
    let allowed: Vec<bool> = (0..width).map(|c| c < art_start).collect();
    if !tab.optimize(&allowed, max_iters)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut y = vec![0.0; width];
    for r in 0..m {
        y[tab.basis[r]] = tab.rhs(r).max(0.0);
    }
    let x: Vec<f64> = columns
        .iter()
        .enumerate()
        .map(|(v, col)| {
            let val = match *col {
                Column::Fixed(val) => val,
                Column::Shifted { col, offset, sign } => offset + sign * y[col],
                Column::Free { pos, neg } => y[pos] - y[neg],
            };
            val.clamp(lower[v], upper[v])
        })
        .collect();
    let objective_value = objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
    debug_assert!((objective_value - (constant - tab.d[width])).abs() < 1e-6 * (1.0 + objective_value.abs()));
    Ok(LpOutcome::Optimal {
        x,
        objective: objective_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[f64], sense: Sense, rhs: f64) -> DenseRow {
        DenseRow {
            coeffs: coeffs.to_vec(),
            sense,
            rhs,
        }
    }

    fn optimum(out: LpOutcome) -> (Vec<f64>, f64) {
        match out {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let rows = [
            row(&[1.0, 0.0], Sense::Le, 4.0),
            row(&[0.0, 2.0], Sense::Le, 12.0),
            row(&[3.0, 2.0], Sense::Le, 18.0),
        ];
        let (x, obj) = optimum(solve_lp(&[-3.0, -5.0], &rows, &[0.0; 2], &[f64::INFINITY; 2]).unwrap());
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
        assert!((obj + 36.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows_need_phase_one() {
        // min x + y, x + y >= 2, x - y = 1 -> x = 1.5, y = 0.5
        let rows = [row(&[1.0, 1.0], Sense::Ge, 2.0), row(&[1.0, -1.0], Sense::Eq, 1.0)];
        let (x, obj) = optimum(solve_lp(&[1.0, 1.0], &rows, &[0.0; 2], &[f64::INFINITY; 2]).unwrap());
        assert!((x[0] - 1.5).abs() < 1e-9 && (x[1] - 0.5).abs() < 1e-9);
        assert!((obj - 2.0).abs() < 1e-9);
    }

    #[test]
    fn free_and_upper_bounded_variables() {
        // min |t| style: min e, e >= x - 3, e >= 3 - x, x in [-inf, 1], e free
        let rows = [row(&[-1.0, 1.0], Sense::Ge, -3.0), row(&[1.0, 1.0], Sense::Ge, 3.0)];
        let (x, obj) = optimum(
            solve_lp(&[0.0, 1.0], &rows, &[f64::NEG_INFINITY; 2], &[1.0, f64::INFINITY]).unwrap(),
        );
        assert!((x[0] - 1.0).abs() < 1e-9);
        assert!((obj - 2.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let rows = [row(&[1.0], Sense::Ge, 2.0)];
        assert_eq!(solve_lp(&[1.0], &rows, &[0.0], &[1.0]).unwrap(), LpOutcome::Infeasible);
        assert_eq!(
            solve_lp(&[-1.0], &rows, &[0.0], &[f64::INFINITY]).unwrap(),
            LpOutcome::Unbounded
        );
        assert_eq!(solve_lp(&[1.0], &[], &[2.0], &[1.0]).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn fixed_variables_are_substituted() {
        let rows = [row(&[1.0, 1.0], Sense::Le, 3.0)];
        let (x, obj) = optimum(solve_lp(&[0.0, -1.0], &rows, &[2.0, 0.0], &[2.0, 10.0]).unwrap());
        assert_eq!(x[0], 2.0);
        assert!((x[1] - 1.0).abs() < 1e-9 && (obj + 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, cycles under the textbook rule without anti-cycling
        let rows = [
            row(&[0.25, -60.0, -0.04, 9.0], Sense::Le, 0.0),
            row(&[0.5, -90.0, -0.02, 3.0], Sense::Le, 0.0),
            row(&[0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0),
        ];
        let (_, obj) = optimum(
            solve_lp(&[-0.75, 150.0, -0.02, 6.0], &rows, &[0.0; 4], &[f64::INFINITY; 4]).unwrap(),
        );
        assert!((obj + 0.05).abs() < 1e-9);
    }

    /// Oracle: brute-force vertex enumeration of a 2-variable LP.
    #[test]
    fn random_2d_lps_match_vertex_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let mut lines: Vec<([f64; 2], f64)> = (0..5)
                .map(|_| ([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)], rng.gen_range(0.1..1.0)))
                .collect();
            let rows: Vec<DenseRow> = lines.iter().map(|(a, b)| row(a, Sense::Le, *b)).collect();
            let c = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let lo = [-2.0, -2.0];
            let hi = [2.0, 2.0];
            let (_, obj) = optimum(solve_lp(&c, &rows, &lo, &hi).unwrap());
            lines.extend([([1.0, 0.0], 2.0), ([-1.0, 0.0], 2.0), ([0.0, 1.0], 2.0), ([0.0, -1.0], 2.0)]);
            let mut best = f64::INFINITY;
            for i in 0..lines.len() {
                for j in i + 1..lines.len() {
                    let (a, b) = (lines[i], lines[j]);
                    let det = a.0[0] * b.0[1] - a.0[1] * b.0[0];
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let p = [(a.1 * b.0[1] - a.0[1] * b.1) / det, (a.0[0] * b.1 - a.1 * b.0[0]) / det];
                    if lines.iter().all(|(r, s)| r[0] * p[0] + r[1] * p[1] <= s + 1e-9) {
                        best = best.min(c[0] * p[0] + c[1] * p[1]);
                    }
                }
            }
            assert!((obj - best).abs() < 1e-8, "{obj} vs {best}");
        }
    }
}
