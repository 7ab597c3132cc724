//! Dense two-phase simplex with a Harris ratio test and Bland's rule as the
//! anti-cycling fallback.
//!
//! Sized for the problems this crate produces: a few dozen variables and
//! constraints. Variables are free unless bounds are given; bounded variables
//! are shifted or mirrored onto `y ≥ 0`, free ones are split into a
//! nonnegative pair, and finite upper bounds become extra rows.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::LpError;

/// Absolute residual tolerance for the phase-one objective, scaled by
/// `1 + ‖b‖∞`.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Smallest tableau entry accepted as a pivot.
pub const PIVOT_TOL: f64 = 1e-10;
/// Reduced costs above `-COST_TOL` count as nonnegative.
const COST_TOL: f64 = 1e-10;
/// Primal slack allowed by the ratio test, scaled by `1 + ‖b‖∞`.
const HARRIS_TOL: f64 = 1e-11;
/// Rows whose largest coefficient is below this fraction of the overall
/// largest are left unscaled.
const EQUILIBRATE_FLOOR: f64 = 1e-13;
/// Relative relaxation of inequality rows in the degenerate fallback.
const DEGENERACY_RELAX: f64 = 1e-9;
/// Artificials left at zero are only pivoted out on entries at least this
/// large; smaller rows are treated as redundant.
const DRIVE_OUT_REL_TOL: f64 = 1e-7;
/// Degenerate pivots tolerated before falling back to Bland's rule.
const STALL_LIMIT: usize = 50;

/// Dual cleanup pivots allowed per row in one optimize call.
const DUAL_REPAIR_LIMIT: usize = 4;
/// Post-solve check on `A·x` against `b`, scaled by `1 + ‖b‖∞`.
const VERIFY_TOL: f64 = 1e-8;
/// Pivots between rebuilds of the tableau from the original rows.
const REFACTOR_EVERY: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `a·x ≥ b`
    Ge,
    /// `a·x ≤ b`
    Le,
    /// `a·x = b`
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    coeffs: Vec<f64>,
    sense: Sense,
    rhs: f64,
}

/// `minimize cᵀx` subject to row constraints and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Row>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearProgram {
    /// All variables start free.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) -> &mut Self {
        self.rows.push(Row { coeffs, sense, rhs });
        self
    }

    pub fn with_constraint(mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) -> Self {
        self.add_constraint(coeffs, sense, rhs);
        self
    }

    /// Infinite values mean "unbounded on that side".
    ///
    /// # Panics
    /// If `var` is out of range.
    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn with_bounds(mut self, var: usize, lower: f64, upper: f64) -> Self {
        self.set_bounds(var, lower, upper);
        self
    }

    /// Sets `x ≥ 0` on every variable.
    pub fn nonnegative(mut self) -> Self {
        self.lower.iter_mut().for_each(|l| *l = 0.0);
        self
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::MalformedProgram("non-finite objective coefficient".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::MalformedProgram(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(LpError::MalformedProgram(format!("constraint {i} has non-finite data")));
            }
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(LpError::MalformedProgram(format!("variable {j} has a NaN bound")));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(LpError::MalformedProgram(format!("variable {j} has an empty bound range")));
            }
        }
        Ok(())
    }

    /// `max_i violation` of the row constraints and bounds at `x`.
    fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let ax: f64 = row.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match row.sense {
                Sense::Ge => row.rhs - ax,
                Sense::Le => ax - row.rhs,
                Sense::Eq => (ax - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }

    fn rhs_scale(&self) -> f64 {
        let b = self.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        let bounds = self
            .lower
            .iter()
            .chain(&self.upper)
            .filter(|v| v.is_finite())
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        1.0 + b.max(bounds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpSolution::Optimal { .. })
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = offset + y
    Shift { col: usize, offset: f64 },
    /// x = offset − y
    Mirror { col: usize, offset: f64 },
    /// x = y⁺ − y⁻
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    /// The tableau as first assembled, used for refactorization.
    original: Vec<f64>,
    /// Reduced costs, last entry is minus the objective value.
    cost: Vec<f64>,
    /// Costs of the current phase before reduction.
    phase_costs: Vec<f64>,
    basis: Vec<usize>,
    can_enter: Vec<bool>,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        self.data[r * w + c] = 1.0;
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for other in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = other[c];
            if f != 0.0 {
                for (o, pv) in other.iter_mut().zip(prow.iter()) {
                    *o -= f * pv;
                }
                other[c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (o, pv) in self.cost.iter_mut().zip(prow.iter()) {
                *o -= f * pv;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Recomputes `B⁻¹·[A | b]` for the current basis from the original
    /// rows, discarding rounding accumulated by pivoting. Leaves the tableau
    /// untouched if the basis matrix is numerically singular.
    fn refactor(&mut self) {
        let (m, w) = (self.rows, self.width);
        let b = DMatrix::from_fn(m, m, |r, k| self.original[r * w + self.basis[k]]);
        let Some(inverse) = b.lu().try_inverse() else {
            return;
        };
        if inverse.iter().any(|v| !v.is_finite()) {
            return;
        }
        let original = DMatrix::from_row_slice(m, w, &self.original);
        let fresh = inverse * original;
        for r in 0..m {
            for c in 0..w {
                self.data[r * w + c] = fresh[(r, c)];
            }
        }
        for (r, &c) in self.basis.iter().enumerate() {
            for k in 0..m {
                self.data[k * w + c] = if k == r { 1.0 } else { 0.0 };
            }
        }
        let costs = core::mem::take(&mut self.phase_costs);
        self.load_costs(&costs);
    }

    fn load_costs(&mut self, costs: &[f64]) {
        let w = self.width;
        self.phase_costs.clear();
        self.phase_costs.extend_from_slice(costs);
        self.cost.clear();
        self.cost.extend_from_slice(costs);
        self.cost.push(0.0);
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                for (o, v) in self.cost.iter_mut().zip(&self.data[r * w..(r + 1) * w]) {
                    *o -= cb * v;
                }
            }
        }
    }

    /// Bland's rule: exact minimum ratio, smallest basis index on ties.
    fn bland_leaving(&self, enter: usize) -> Option<usize> {
        let rhs = self.rhs_col();
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, enter);
            if a > PIVOT_TOL {
                let ratio = self.at(r, rhs).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        if ratio < lratio && !tie || tie && self.basis[r] < self.basis[lr] {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        leave.map(|(r, _)| r)
    }

    /// Harris two-pass ratio test: allow basic values to dip by at most
    /// `slack`, and among the rows that qualify take the largest pivot relative to its
    /// row.
    fn harris_leaving(&self, enter: usize, slack: f64) -> Option<usize> {
        let rhs = self.rhs_col();
        let mut bound = f64::INFINITY;
        for r in 0..self.rows {
            let a = self.at(r, enter);
            if a > PIVOT_TOL {
                bound = bound.min((self.at(r, rhs) + slack) / a);
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, enter);
            if a > PIVOT_TOL && self.at(r, rhs) / a <= bound {
                // Pivot size relative to its row: large entries in a row that
                // is itself large do not make for a stable pivot.
                let row = &self.data[r * self.width..r * self.width + rhs];
                let score = a / row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let better = match best {
                    None => true,
                    Some((br, bs)) => score > bs || score == bs && self.basis[r] < self.basis[br],
                };
                if better {
                    best = Some((r, score));
                }
            }
        }
        best.map(|(r, _)| r)
    }

    /// One dual simplex pivot on the most negative basic value below
    /// `-slack`. `None` when there is nothing to repair or no column can
    /// repair it.
    fn dual_pivot(&mut self, slack: f64) -> Option<()> {
        let rhs = self.rhs_col();
        let r = (0..self.rows)
            .filter(|&r| self.at(r, rhs) < -slack)
            .min_by(|&a, &b| self.at(a, rhs).total_cmp(&self.at(b, rhs)))?;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..rhs {
            let a = self.at(r, j);
            if self.can_enter[j] && a < -PIVOT_TOL {
                let ratio = self.cost[j].max(0.0) / -a;
                let better = match best {
                    None => true,
                    Some((_, br, ba)) => ratio < br || ratio == br && -a > ba,
                };
                if better {
                    best = Some((j, ratio, -a));
                }
            }
        }
        let (j, _, _) = best?;
        self.pivot(r, j);
        Some(())
    }

    /// Runs the simplex to optimality. `Ok(false)` means unbounded.
    ///
    /// Pivots use the Harris ratio test for stability; after `STALL_LIMIT`
    /// pivots without objective progress the phase switches to Bland's rule,
    /// which cannot cycle.
    fn optimize(&mut self, max_iter: usize, slack: f64) -> Result<bool, LpError> {
        let rhs = self.rhs_col();
        let mut since_refactor = 0;
        let mut clean = true;
        let mut stalled = 0;
        let mut bland = false;
        let mut best_objective = f64::INFINITY;
        let mut repairs = 0;
        for _ in 0..max_iter {
            if since_refactor >= REFACTOR_EVERY {
                self.refactor();
                since_refactor = 0;
                clean = true;
            }
            let Some(enter) = (0..rhs).find(|&j| self.can_enter[j] && self.cost[j] < -COST_TOL) else {
                if !clean {
                    // Confirm optimality on a freshly factored tableau.
                    self.refactor();
                    since_refactor = 0;
                    clean = true;
                    continue;
                }
                // The exact basic values may sit below zero by more than the
                // ratio-test slack; dual simplex pivots restore them while
                // keeping the reduced costs nonnegative.
                // Degenerate dual pivots can cycle; past the cap the answer
                // is left to the verification against the original rows.
                if repairs >= DUAL_REPAIR_LIMIT * self.rows {
                    return Ok(true);
                }
                match self.dual_pivot(slack) {
                    Some(()) => {
                        repairs += 1;
                        since_refactor += 1;
                        clean = false;
                        continue;
                    }
                    None => return Ok(true),
                }
            };
            let leave = if bland { self.bland_leaving(enter) } else { self.harris_leaving(enter, slack) };
            let Some(r) = leave else {
                return Ok(false);
            };
            // A leaving value inside the Harris slack is taken as exactly
            // zero so the step never moves backwards.
            let at_rhs = r * self.width + rhs;
            self.data[at_rhs] = self.data[at_rhs].max(0.0);
            self.pivot(r, enter);
            since_refactor += 1;
            clean = false;

            let objective = -self.cost[rhs];
            if objective < best_objective - COST_TOL * (1.0 + best_objective.abs()) {
                best_objective = objective;
                stalled = 0;
            } else {
                stalled += 1;
                bland |= stalled >= STALL_LIMIT;
            }
        }
        Err(LpError::NumericalFailure("iteration limit reached"))
    }
}

/// Solves `lp`. An `Optimal` answer is always re-verified against the
/// original constraints; a solution that fails the check is reported as
/// [`LpError::NumericalFailure`] rather than returned.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    match solve_relaxed(lp, 0.0) {
        // Heavily degenerate programs with nearly parallel rows can drive the
        // tableau into ill-conditioned bases. Relaxing every inequality by a
        // distinct tiny amount breaks the ties; the answer is still checked
        // against the original rows.
        Err(LpError::NumericalFailure(_)) => solve_relaxed(lp, DEGENERACY_RELAX),
        other => other,
    }
}

fn solve_relaxed(lp: &LinearProgram, relax: f64) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    if (0..n).any(|j| lp.lower[j] > lp.upper[j]) {
        return Ok(LpSolution::Infeasible);
    }

    // Map each variable onto nonnegative columns.
    let mut maps = Vec::with_capacity(n);
    let mut ny = 0;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let m = if l.is_finite() {
            if u.is_finite() {
                upper_rows.push((ny, u - l));
            }
            VarMap::Shift { col: ny, offset: l }
        } else if u.is_finite() {
            VarMap::Mirror { col: ny, offset: u }
        } else {
            ny += 1;
            VarMap::Split { pos: ny - 1, neg: ny }
        };
        ny += 1;
        maps.push(m);
    }

    // Rows over y with constant terms folded into the right-hand side.
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(lp.rows.len() + upper_rows.len());
    for row in &lp.rows {
        let mut a = vec![0.0; ny];
        let mut b = row.rhs;
        for (j, &c) in row.coeffs.iter().enumerate() {
            match maps[j] {
                VarMap::Shift { col, offset } => {
                    a[col] += c;
                    b -= c * offset;
                }
                VarMap::Mirror { col, offset } => {
                    a[col] -= c;
                    b -= c * offset;
                }
                VarMap::Split { pos, neg } => {
                    a[pos] += c;
                    a[neg] -= c;
                }
            }
        }
        rows.push((a, row.sense, b));
    }
    for &(col, cap) in &upper_rows {
        let mut a = vec![0.0; ny];
        a[col] = 1.0;
        rows.push((a, Sense::Le, cap));
    }
    let mut cost_y = vec![0.0; ny];
    for (j, &c) in lp.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shift { col, .. } => cost_y[col] += c,
            VarMap::Mirror { col, .. } => cost_y[col] -= c,
            VarMap::Split { pos, neg } => {
                cost_y[pos] += c;
                cost_y[neg] -= c;
            }
        }
    }

    // Equilibrate: every row gets unit largest coefficient, except rows that
    // are indistinguishable from rounding next to the largest one.
    let largest = rows.iter().flat_map(|r| r.0.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, _, b) in &mut rows {
        let row_max = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if row_max > EQUILIBRATE_FLOOR * largest && row_max != 1.0 {
            a.iter_mut().for_each(|v| *v /= row_max);
            *b /= row_max;
        }
    }
    let inner_scale = 1.0 + rows.iter().fold(0.0f64, |m, r| m.max(r.2.abs()));
    if relax > 0.0 {
        for (i, (_, sense, b)) in rows.iter_mut().take(lp.rows.len()).enumerate() {
            // Golden-ratio sequence: distinct, deterministic, in [0.5, 1).
            let x = i as f64 * 0.618_033_988_749_895;
            let u = 0.5 + 0.5 * (x - libm::trunc(x));
            match sense {
                Sense::Ge => *b -= relax * inner_scale * u,
                Sense::Le => *b += relax * inner_scale * u,
                Sense::Eq => {}
            }
        }
    }

    // Normalize to b ≥ 0.
    for (a, sense, b) in &mut rows {
        if *b < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            *b = -*b;
            *sense = match *sense {
                Sense::Ge => Sense::Le,
                Sense::Le => Sense::Ge,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let first_art = ny + n_slack;
    let width = first_art + n_art + 1;
    let mut data = vec![0.0; m * width];
    let mut basis = vec![0; m];
    let (mut next_slack, mut next_art) = (ny, first_art);
    for (r, (a, sense, b)) in rows.iter().enumerate() {
        let line = &mut data[r * width..(r + 1) * width];
        line[..ny].copy_from_slice(a);
        line[width - 1] = *b;
        match sense {
            Sense::Le => {
                line[next_slack] = 1.0;
                basis[r] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                line[next_slack] = -1.0;
                next_slack += 1;
                line[next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                line[next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
        }
    }

    let mut tab = Tableau {
        rows: m,
        width,
        original: data.clone(),
        data,
        cost: Vec::new(),
        phase_costs: Vec::new(),
        basis,
        can_enter: vec![true; width - 1],
    };
    let max_iter = 10_000 + 50 * (m + width);
    let scale = inner_scale;

    if n_art > 0 {
        let mut phase1 = vec![0.0; width - 1];
        phase1[first_art..].iter_mut().for_each(|c| *c = 1.0);
        tab.load_costs(&phase1);
        tab.optimize(max_iter, HARRIS_TOL * scale)?;
        let infeasibility = -tab.cost[width - 1];
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(LpSolution::Infeasible);
        }
        // Drive zero-level artificials out of the basis; rows where that is
        // impossible are redundant and stay inert.
        for r in 0..m {
            if tab.basis[r] >= first_art {
                let row_max = (0..first_art).map(|j| tab.at(r, j).abs()).fold(0.0, f64::max);
                let best = (0..first_art)
                    .map(|j| (j, tab.at(r, j).abs()))
                    .filter(|&(_, v)| v > PIVOT_TOL && v >= DRIVE_OUT_REL_TOL * row_max.max(1.0))
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                if let Some((j, _)) = best {
                    tab.pivot(r, j);
                }
            }
        }
        tab.can_enter[first_art..].iter_mut().for_each(|e| *e = false);
    }

    let mut phase2 = vec![0.0; width - 1];
    phase2[..ny].copy_from_slice(&cost_y);
    tab.load_costs(&phase2);
    if !tab.optimize(max_iter, HARRIS_TOL * scale)? {
        return Ok(LpSolution::Unbounded);
    }

    let mut y = vec![0.0; ny];
    for r in 0..m {
        let b = tab.basis[r];
        if b < ny {
            y[b] = tab.at(r, width - 1).max(0.0);
        }
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, offset } => offset + y[col],
            VarMap::Mirror { col, offset } => offset - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    if lp.max_violation(&x) > VERIFY_TOL * lp.rhs_scale() {
        return Err(LpError::NumericalFailure("solution violates constraints beyond tolerance"));
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution::Optimal { x, objective })
}
