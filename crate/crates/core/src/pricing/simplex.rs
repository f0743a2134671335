//! Dense bounded-variable revised simplex.
//!
//! Rows are `aᵀx = b` or `aᵀx ≥ b`; every `≥` row gets a slack `s ≥ 0`
//! with `aᵀx − s = b`. Phase 1 minimizes the sum of artificials. The
//! basis inverse is kept explicitly (the row count is small) and rebuilt
//! by Gauss-Jordan every `refactor_every` pivots.
//!
//! The engine can run on a subset of the structural columns with the rest
//! held at fixed bound values, which is what the sifting strategy needs.

use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Eq,
    Ge,
}

/// `min objectiveᵀx` subject to rows and `lower ≤ x ≤ upper`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    rows: Vec<Vec<f64>>,
    kinds: Vec<RowKind>,
    rhs: Vec<f64>,
    row_ids: Vec<u64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(objective.len(), lower.len());
        assert_eq!(objective.len(), upper.len());
        LpProblem {
            objective,
            lower,
            upper,
            rows: Vec::new(),
            kinds: Vec::new(),
            rhs: Vec::new(),
            row_ids: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.objective.len()
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn push_row(&mut self, a: Vec<f64>, kind: RowKind, b: f64) {
        let id = self.rows.len() as u64;
        self.push_row_with_id(a, kind, b, id);
    }

    /// Rows carry an id so a basis can be carried over to a problem whose
    /// row set changed (cuts added or removed).
    pub fn push_row_with_id(&mut self, a: Vec<f64>, kind: RowKind, b: f64, id: u64) {
        assert_eq!(a.len(), self.n());
        self.rows.push(a);
        self.kinds.push(kind);
        self.rhs.push(b);
        self.row_ids.push(id);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn row_kind(&self, i: usize) -> RowKind {
        self.kinds[i]
    }

    pub fn rhs(&self, i: usize) -> f64 {
        self.rhs[i]
    }

    pub fn row_id(&self, i: usize) -> u64 {
        self.row_ids[i]
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of rows and bounds.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.m() {
            let act = dot(&self.rows[i], x);
            let v = match self.kinds[i] {
                RowKind::Eq => (act - self.rhs[i]).abs(),
                RowKind::Ge => self.rhs[i] - act,
            };
            worst = worst.max(v);
        }
        for j in 0..self.n() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    pub fn solve(&self, opts: &SimplexOptions) -> Result<LpSolution> {
        let cols: Vec<usize> = (0..self.n()).collect();
        let mut engine = Engine::new(self, cols, &[], opts);
        engine.solve(opts)?;
        Ok(engine.solution())
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Halt phase 2 at the first vertex whose objective is at most this.
    pub stop_below: Option<f64>,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub max_pivots: usize,
    pub opt_tol: f64,
    pub feas_tol: f64,
    pub pivot_tol: f64,
    pub warm_start: Option<Basis>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            stop_below: None,
            refactor_every: 50,
            bland_after: 200,
            max_pivots: 1_000_000,
            opt_tol: 1e-9,
            feas_tol: 1e-9,
            pivot_tol: 1e-9,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    EarlyStopped,
}

/// Variable identity that survives row insertions and deletions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarId {
    Structural(usize),
    Slack(u64),
}

/// Basis description for warm starts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Basis {
    pub basic: Vec<VarId>,
    pub at_upper: Vec<VarId>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers `y` with `objective − Aᵀy` the reduced costs.
    pub duals: Vec<f64>,
    /// Reduced costs of the structural columns in the engine.
    pub reduced_costs: Vec<f64>,
    pub status: LpStatus,
    pub pivots: usize,
    pub phase1_pivots: usize,
    pub basis: Basis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable sitting at zero.
    Free,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

/// Working state of one simplex solve.
///
/// Variable layout: `[0, m)` artificials, `[m, m + ns)` slacks, then the
/// structural columns in activation order.
pub(crate) struct Engine<'a> {
    lp: &'a LpProblem,
    m: usize,
    ns: usize,
    slack_row: Vec<usize>,
    row_slack: Vec<Option<usize>>,
    art_sign: Vec<f64>,
    cols: Vec<usize>,
    col_var: Vec<Option<usize>>,
    /// Values of structural columns that are not active.
    fixed: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    b_eff: Vec<f64>,
    since_refactor: usize,
    pub(crate) pivots: usize,
    phase1_pivots: usize,
    status: LpStatus,
    degenerate_run: usize,
}

impl<'a> Engine<'a> {
    /// `cols` are the active structural columns; every other column is held
    /// at `fixed[j]` (ignored when all columns are active).
    pub(crate) fn new(lp: &'a LpProblem, cols: Vec<usize>, fixed: &[f64], opts: &SimplexOptions) -> Self {
        let m = lp.m();
        let n = lp.n();
        let mut slack_row = Vec::new();
        let mut row_slack = vec![None; m];
        for i in 0..m {
            if lp.kinds[i] == RowKind::Ge {
                row_slack[i] = Some(slack_row.len());
                slack_row.push(i);
            }
        }
        let ns = slack_row.len();
        let fixed = if fixed.len() == n {
            fixed.to_vec()
        } else {
            vec![0.0; n]
        };
        let mut engine = Engine {
            lp,
            m,
            ns,
            slack_row,
            row_slack,
            art_sign: vec![1.0; m],
            cols: Vec::new(),
            col_var: vec![None; n],
            fixed,
            lo: Vec::new(),
            up: Vec::new(),
            x: Vec::new(),
            state: Vec::new(),
            basis: vec![usize::MAX; m],
            binv: vec![0.0; m * m],
            b_eff: lp.rhs.clone(),
            since_refactor: 0,
            pivots: 0,
            phase1_pivots: 0,
            status: LpStatus::Optimal,
            degenerate_run: 0,
        };
        // artificials and slacks
        for _ in 0..m {
            engine.push_var(0.0, 0.0, VarState::AtLower, 0.0);
        }
        for _ in 0..ns {
            engine.push_var(0.0, f64::INFINITY, VarState::AtLower, 0.0);
        }
        // every column starts out fixed; activation moves it into the engine
        for j in 0..n {
            let v = engine.fixed[j];
            if v != 0.0 {
                for i in 0..m {
                    engine.b_eff[i] -= lp.rows[i][j] * v;
                }
            }
        }
        let warm = opts.warm_start.as_ref();
        let at_upper: std::collections::HashSet<VarId> = warm
            .map(|w| w.at_upper.iter().copied().collect())
            .unwrap_or_default();
        for j in cols {
            let (l, u) = (lp.lower[j], lp.upper[j]);
            let (state, value) = if l.is_finite() && u.is_finite() {
                let upper = if warm.is_some() {
                    at_upper.contains(&VarId::Structural(j))
                } else {
                    lp.objective[j] < 0.0
                };
                if upper {
                    (VarState::AtUpper, u)
                } else {
                    (VarState::AtLower, l)
                }
            } else if l.is_finite() {
                (VarState::AtLower, l)
            } else if u.is_finite() {
                (VarState::AtUpper, u)
            } else {
                (VarState::Free, 0.0)
            };
            engine.activate(j, state, value);
        }
        engine
    }

    fn push_var(&mut self, lo: f64, up: f64, state: VarState, value: f64) -> usize {
        self.lo.push(lo);
        self.up.push(up);
        self.state.push(state);
        self.x.push(value);
        self.x.len() - 1
    }

    /// Moves column `j` from the fixed set into the engine as a nonbasic
    /// variable with the given value.
    fn activate(&mut self, j: usize, state: VarState, value: f64) {
        debug_assert!(self.col_var[j].is_none());
        let old = self.fixed[j];
        let v = self.push_var(self.lp.lower[j], self.lp.upper[j], state, value);
        self.cols.push(j);
        self.col_var[j] = Some(v);
        // b_eff excludes fixed columns only
        for i in 0..self.m {
            self.b_eff[i] += self.lp.rows[i][j] * old;
        }
    }

    /// Activates further columns at their fixed values; the current basis
    /// stays primal feasible.
    pub(crate) fn add_columns(&mut self, new_cols: &[usize]) {
        for &j in new_cols {
            if self.col_var[j].is_some() {
                continue;
            }
            let v = self.fixed[j];
            let state = if v == self.lp.lower[j] {
                VarState::AtLower
            } else if v == self.lp.upper[j] {
                VarState::AtUpper
            } else {
                VarState::Free
            };
            self.activate(j, state, v);
        }
    }

    pub(crate) fn is_active(&self, j: usize) -> bool {
        self.col_var[j].is_some()
    }

    fn nvars(&self) -> usize {
        self.x.len()
    }

    fn is_artificial(&self, v: usize) -> bool {
        v < self.m
    }

    /// Writes column `v` densely into `out`.
    fn column(&self, v: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        if v < self.m {
            out[v] = self.art_sign[v];
        } else if v < self.m + self.ns {
            out[self.slack_row[v - self.m]] = -1.0;
        } else {
            let j = self.cols[v - self.m - self.ns];
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.lp.rows[i][j];
            }
        }
    }

    fn cost(&self, v: usize, phase: Phase) -> f64 {
        match phase {
            Phase::One => {
                if self.is_artificial(v) {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => {
                if v >= self.m + self.ns {
                    self.lp.objective[self.cols[v - self.m - self.ns]]
                } else {
                    0.0
                }
            }
        }
    }

    fn var_id(&self, v: usize) -> Option<VarId> {
        if v < self.m {
            None
        } else if v < self.m + self.ns {
            Some(VarId::Slack(self.lp.row_ids[self.slack_row[v - self.m]]))
        } else {
            Some(VarId::Structural(self.cols[v - self.m - self.ns]))
        }
    }

    /// Inverts the current basis matrix by Gauss-Jordan with partial pivoting.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (p, &v) in self.basis.iter().enumerate() {
            self.column(v, &mut col);
            for i in 0..m {
                a[i * m + p] = col[i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for k in 0..m {
            let (piv, best) = (k..m)
                .map(|i| (i, a[i * m + k].abs()))
                .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if best < 1e-12 {
                return Err(Error::SingularBasis);
            }
            if piv != k {
                for c in 0..m {
                    a.swap(k * m + c, piv * m + c);
                    inv.swap(k * m + c, piv * m + c);
                }
            }
            let d = a[k * m + k];
            for c in 0..m {
                a[k * m + c] /= d;
                inv[k * m + c] /= d;
            }
            for i in 0..m {
                if i != k {
                    let f = a[i * m + k];
                    if f != 0.0 {
                        for c in 0..m {
                            a[i * m + c] -= f * a[k * m + c];
                            inv[i * m + c] -= f * inv[k * m + c];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.since_refactor = 0;
        self.recompute_basic_values();
        Ok(())
    }

    /// `x_B = B⁻¹ (b_eff − N x_N)`.
    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut r = self.b_eff.clone();
        let mut col = vec![0.0; m];
        for v in 0..self.nvars() {
            if matches!(self.state[v], VarState::Basic(_)) || self.x[v] == 0.0 {
                continue;
            }
            self.column(v, &mut col);
            for i in 0..m {
                r[i] -= col[i] * self.x[v];
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let v = self.basis[p];
            self.x[v] = dot(row, &r);
        }
    }

    fn ftran(&self, v: usize) -> Vec<f64> {
        let m = self.m;
        let mut col = vec![0.0; m];
        self.column(v, &mut col);
        (0..m)
            .map(|p| dot(&self.binv[p * m..(p + 1) * m], &col))
            .collect()
    }

    /// Row multipliers `y = c_Bᵀ B⁻¹`.
    fn btran(&self, phase: Phase) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for p in 0..m {
            let cb = self.cost(self.basis[p], phase);
            if cb != 0.0 {
                let row = &self.binv[p * m..(p + 1) * m];
                for i in 0..m {
                    y[i] += cb * row[i];
                }
            }
        }
        y
    }

    /// Reduced costs of all variables (basic ones are zero).
    fn reduced_costs(&self, y: &[f64], phase: Phase) -> Vec<f64> {
        let m = self.m;
        let mut d = vec![0.0; self.nvars()];
        for i in 0..m {
            d[i] = self.cost(i, phase) - y[i] * self.art_sign[i];
        }
        for k in 0..self.ns {
            d[m + k] = y[self.slack_row[k]];
        }
        let base = m + self.ns;
        for (t, &j) in self.cols.iter().enumerate() {
            d[base + t] = self.cost(base + t, phase);
            let _ = j;
        }
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            let row = &self.lp.rows[i];
            for (t, &j) in self.cols.iter().enumerate() {
                d[base + t] -= yi * row[j];
            }
        }
        for (p, &v) in self.basis.iter().enumerate() {
            let _ = p;
            d[v] = 0.0;
        }
        d
    }

    fn cold_start(&mut self) {
        let m = self.m;
        // residual with all slacks at zero
        let mut r = self.b_eff.clone();
        let base = m + self.ns;
        for t in 0..self.cols.len() {
            let v = base + t;
            let val = self.x[v];
            if val != 0.0 {
                let j = self.cols[t];
                for i in 0..m {
                    r[i] -= self.lp.rows[i][j] * val;
                }
            }
        }
        for i in 0..m {
            self.x[i] = 0.0;
            self.lo[i] = 0.0;
            self.up[i] = 0.0;
            self.state[i] = VarState::AtLower;
        }
        for k in 0..self.ns {
            self.x[m + k] = 0.0;
            self.state[m + k] = VarState::AtLower;
        }
        for i in 0..m {
            let slack = self.row_slack[i];
            match slack {
                Some(k) if r[i] <= 0.0 => {
                    let v = m + k;
                    self.state[v] = VarState::Basic(i);
                    self.x[v] = -r[i];
                    self.basis[i] = v;
                }
                _ => {
                    self.art_sign[i] = if r[i] >= 0.0 { 1.0 } else { -1.0 };
                    self.up[i] = f64::INFINITY;
                    self.state[i] = VarState::Basic(i);
                    self.x[i] = r[i].abs();
                    self.basis[i] = i;
                }
            }
        }
        // the initial basis is diagonal with entries ±1
        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let v = self.basis[i];
            let d = if v < m { self.art_sign[i] } else { -1.0 };
            self.binv[i * m + i] = 1.0 / d;
        }
        self.since_refactor = 0;
    }

    /// Installs a warm basis; returns false if it is unusable.
    fn try_warm_start(&mut self, warm: &Basis) -> bool {
        let m = self.m;
        let mut lookup = std::collections::HashMap::new();
        for v in m..self.nvars() {
            if let Some(id) = self.var_id(v) {
                lookup.insert(id, v);
            }
        }
        let mut basic: Vec<usize> = warm
            .basic
            .iter()
            .filter_map(|id| lookup.get(id).copied())
            .collect();
        // rows the old basis knew nothing about get their slack
        let known: std::collections::HashSet<u64> = warm
            .basic
            .iter()
            .chain(&warm.at_upper)
            .filter_map(|id| match id {
                VarId::Slack(r) => Some(*r),
                _ => None,
            })
            .collect();
        for k in 0..self.ns {
            let rid = self.lp.row_ids[self.slack_row[k]];
            if !known.contains(&rid) && !basic.contains(&(m + k)) {
                basic.push(m + k);
            }
        }
        if basic.len() != m {
            return false;
        }
        for i in 0..m {
            self.lo[i] = 0.0;
            self.up[i] = 0.0;
            self.x[i] = 0.0;
            self.state[i] = VarState::AtLower;
        }
        for k in 0..self.ns {
            let v = m + k;
            let id = self.var_id(v).unwrap();
            self.state[v] = VarState::AtLower;
            self.x[v] = 0.0;
            if warm.at_upper.contains(&id) {
                // slacks have no finite upper bound
                return false;
            }
        }
        for (p, &v) in basic.iter().enumerate() {
            self.basis[p] = v;
            self.state[v] = VarState::Basic(p);
        }
        if self.refactor().is_err() {
            return false;
        }
        let tol = 1e-9;
        basic
            .iter()
            .all(|&v| self.x[v] >= self.lo[v] - tol && self.x[v] <= self.up[v] + tol)
    }

    fn objective_value(&self) -> f64 {
        let base = self.m + self.ns;
        let mut obj = 0.0;
        for (t, &j) in self.cols.iter().enumerate() {
            obj += self.lp.objective[j] * self.x[base + t];
        }
        for j in 0..self.lp.n() {
            if self.col_var[j].is_none() {
                obj += self.lp.objective[j] * self.fixed[j];
            }
        }
        obj
    }

    fn has_free_nonbasic(&self) -> bool {
        self.state
            .iter()
            .enumerate()
            .any(|(v, s)| *s == VarState::Free && self.x[v] == 0.0 && !self.is_artificial(v))
    }

    /// Runs the two phases from scratch or from the warm basis.
    pub(crate) fn solve(&mut self, opts: &SimplexOptions) -> Result<()> {
        let warmed = match &opts.warm_start {
            Some(w) => self.try_warm_start(w),
            None => false,
        };
        if !warmed {
            // restore nonbasic structurals to bounds if a failed warm start
            // left them elsewhere
            self.reset_nonbasic_to_bounds();
            self.cold_start();
            self.run(Phase::One, opts)?;
            self.phase1_pivots = self.pivots;
            let infeas: f64 = (0..self.m).map(|i| self.x[i]).sum();
            let scale = 1.0 + self.b_eff.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if infeas > opts.feas_tol * scale * 10.0 {
                return Err(Error::Infeasible);
            }
            for i in 0..self.m {
                self.up[i] = 0.0;
                if !matches!(self.state[i], VarState::Basic(_)) {
                    self.x[i] = 0.0;
                }
            }
            self.expel_artificials(opts);
        }
        self.run(Phase::Two, opts)?;
        self.refactor()?;
        Ok(())
    }

    /// Continues phase 2 from the current (primal feasible) basis, e.g.
    /// after new columns were activated.
    pub(crate) fn resume(&mut self, opts: &SimplexOptions) -> Result<()> {
        self.run(Phase::Two, opts)?;
        self.refactor()?;
        Ok(())
    }

    fn reset_nonbasic_to_bounds(&mut self) {
        for v in self.m..self.nvars() {
            match self.state[v] {
                VarState::Basic(_) => {
                    self.state[v] = VarState::AtLower;
                    if self.lo[v].is_finite() {
                        self.x[v] = self.lo[v];
                    } else if self.up[v].is_finite() {
                        self.state[v] = VarState::AtUpper;
                        self.x[v] = self.up[v];
                    } else {
                        self.state[v] = VarState::Free;
                        self.x[v] = 0.0;
                    }
                }
                VarState::AtLower => self.x[v] = self.lo[v],
                VarState::AtUpper => self.x[v] = self.up[v],
                VarState::Free => self.x[v] = 0.0,
            }
        }
    }

    /// Pivots zero-valued basic artificials out where a replacement exists.
    fn expel_artificials(&mut self, opts: &SimplexOptions) {
        for p in 0..self.m {
            let v = self.basis[p];
            if !self.is_artificial(v) {
                continue;
            }
            let m = self.m;
            let row: Vec<f64> = self.binv[p * m..(p + 1) * m].to_vec();
            let mut col = vec![0.0; m];
            let mut best: Option<(usize, f64)> = None;
            for q in m..self.nvars() {
                if matches!(self.state[q], VarState::Basic(_)) {
                    continue;
                }
                self.column(q, &mut col);
                let a = dot(&row, &col).abs();
                if a > 1e-7 && best.is_none_or(|(_, b)| a > b) {
                    best = Some((q, a));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.ftran(q);
                self.pivot(q, p, &alpha, 0.0, 1.0, true);
                let _ = opts;
            }
        }
    }

    /// Basis change: `q` enters at position `p`, moving by `theta` in
    /// direction `dir`; the leaving variable lands on the bound it hit.
    fn pivot(&mut self, q: usize, p: usize, alpha: &[f64], theta: f64, dir: f64, leave_at_lower: bool) {
        let m = self.m;
        for i in 0..m {
            let v = self.basis[i];
            self.x[v] -= theta * dir * alpha[i];
        }
        self.x[q] += theta * dir;
        let leaving = self.basis[p];
        if leave_at_lower {
            self.x[leaving] = self.lo[leaving];
            self.state[leaving] = if self.lo[leaving].is_finite() {
                VarState::AtLower
            } else {
                VarState::Free
            };
        } else {
            self.x[leaving] = self.up[leaving];
            self.state[leaving] = VarState::AtUpper;
        }
        if self.is_artificial(leaving) {
            self.x[leaving] = 0.0;
            self.state[leaving] = VarState::AtLower;
        }
        self.basis[p] = q;
        self.state[q] = VarState::Basic(p);

        let piv = alpha[p];
        let prow: Vec<f64> = self.binv[p * m..(p + 1) * m].iter().map(|v| v / piv).collect();
        for i in 0..m {
            if i == p {
                continue;
            }
            let f = alpha[i];
            if f != 0.0 {
                let row = &mut self.binv[i * m..(i + 1) * m];
                for c in 0..m {
                    row[c] -= f * prow[c];
                }
            }
        }
        self.binv[p * m..(p + 1) * m].copy_from_slice(&prow);
        self.since_refactor += 1;
        self.pivots += 1;
    }

    fn run(&mut self, phase: Phase, opts: &SimplexOptions) -> Result<()> {
        let m = self.m;
        self.degenerate_run = 0;
        loop {
            if phase == Phase::Two {
                if let Some(limit) = opts.stop_below {
                    if self.objective_value() <= limit && !self.has_free_nonbasic() {
                        self.status = LpStatus::EarlyStopped;
                        return Ok(());
                    }
                }
            }
            if self.pivots >= opts.max_pivots {
                return Err(Error::IterationLimit(self.pivots));
            }
            if self.since_refactor >= opts.refactor_every {
                self.refactor()?;
            }
            let bland = self.degenerate_run > opts.bland_after;
            let y = self.btran(phase);
            let d = self.reduced_costs(&y, phase);

            // entering variable
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for v in 0..self.nvars() {
                if phase == Phase::Two && self.is_artificial(v) {
                    continue;
                }
                if self.lo[v] == self.up[v] {
                    continue;
                }
                let dir = match self.state[v] {
                    VarState::Basic(_) => continue,
                    VarState::AtLower if d[v] < -opts.opt_tol => 1.0,
                    VarState::AtUpper if d[v] > opts.opt_tol => -1.0,
                    VarState::Free if d[v].abs() > opts.opt_tol => -d[v].signum(),
                    _ => continue,
                };
                if bland {
                    enter = Some((v, dir));
                    break;
                }
                if d[v].abs() > best {
                    best = d[v].abs();
                    enter = Some((v, dir));
                }
            }
            let Some((q, dir)) = enter else {
                self.status = LpStatus::Optimal;
                return Ok(());
            };

            let alpha = self.ftran(q);
            let mut theta = self.up[q] - self.lo[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_mag = 0.0;
            for (i, &a) in alpha.iter().enumerate() {
                let rate = -dir * a;
                let v = self.basis[i];
                let (t, at_lower) = if rate < -opts.pivot_tol {
                    if !self.lo[v].is_finite() {
                        continue;
                    }
                    (((self.x[v] - self.lo[v]) / -rate).max(0.0), true)
                } else if rate > opts.pivot_tol {
                    if !self.up[v].is_finite() {
                        continue;
                    }
                    (((self.up[v] - self.x[v]) / rate).max(0.0), false)
                } else {
                    continue;
                };
                let better = match leave {
                    None => t < theta || (t == theta && !theta.is_finite()),
                    Some((p, _)) => {
                        if t < theta - 1e-12 {
                            true
                        } else if t <= theta + 1e-12 {
                            if bland {
                                v < self.basis[p]
                            } else {
                                a.abs() > leave_mag
                            }
                        } else {
                            false
                        }
                    }
                };
                if better && t <= theta + 1e-12 {
                    theta = t.min(theta);
                    leave = Some((i, at_lower));
                    leave_mag = a.abs();
                }
            }
            if !theta.is_finite() {
                return Err(Error::Unbounded);
            }
            if theta <= 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            match leave {
                None => {
                    // bound flip
                    for i in 0..m {
                        let v = self.basis[i];
                        self.x[v] -= theta * dir * alpha[i];
                    }
                    if dir > 0.0 {
                        self.x[q] = self.up[q];
                        self.state[q] = VarState::AtUpper;
                    } else {
                        self.x[q] = self.lo[q];
                        self.state[q] = VarState::AtLower;
                    }
                    self.pivots += 1;
                }
                Some((p, at_lower)) => self.pivot(q, p, &alpha, theta, dir, at_lower),
            }
        }
    }

    pub(crate) fn duals(&self) -> Vec<f64> {
        self.btran(Phase::Two)
    }

    /// Reduced cost of structural column `j` under multipliers `y`, whether
    /// or not the column is active.
    pub(crate) fn column_reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.lp.objective[j];
        for (i, yi) in y.iter().enumerate() {
            d -= yi * self.lp.rows[i][j];
        }
        d
    }

    pub(crate) fn fixed_value(&self, j: usize) -> f64 {
        self.fixed[j]
    }

    pub(crate) fn status(&self) -> LpStatus {
        self.status
    }

    pub(crate) fn solution(&self) -> LpSolution {
        let n = self.lp.n();
        let mut x = self.fixed.clone();
        let base = self.m + self.ns;
        for (t, &j) in self.cols.iter().enumerate() {
            x[j] = self.x[base + t];
        }
        // snap nonbasic values and clip tiny bound violations
        for j in 0..n {
            x[j] = x[j].max(self.lp.lower[j]).min(self.lp.upper[j]);
        }
        let y = self.duals();
        let d = self.reduced_costs(&y, Phase::Two);
        let reduced_costs = self
            .cols
            .iter()
            .enumerate()
            .map(|(t, _)| d[base + t])
            .collect();
        let mut basis = Basis::default();
        for v in self.m..self.nvars() {
            match self.state[v] {
                VarState::Basic(_) => basis.basic.push(self.var_id(v).unwrap()),
                VarState::AtUpper => basis.at_upper.push(self.var_id(v).unwrap()),
                _ => {}
            }
        }
        LpSolution {
            objective: self.lp.value(&x),
            x,
            duals: y,
            reduced_costs,
            status: self.status,
            pivots: self.pivots,
            phase1_pivots: self.phase1_pivots,
            basis,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex_lp(g: Vec<f64>) -> LpProblem {
        let n = g.len();
        let mut lp = LpProblem::new(g, vec![0.0; n], vec![1.0; n]);
        lp.push_row(vec![1.0; n], RowKind::Eq, 1.0);
        lp
    }

    #[test]
    fn unit_simplex_picks_cheapest_vertex() {
        let sol = simplex_lp(vec![1.0, 0.0]).solve(&SimplexOptions::default()).unwrap();
        assert_eq!(sol.x, vec![0.0, 1.0]);
        assert_eq!(sol.objective, 0.0);
        let sol = simplex_lp(vec![3.0, 2.0, -1.0, 5.0])
            .solve(&SimplexOptions::default())
            .unwrap();
        assert_eq!(sol.x, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn box_is_separable() {
        let g = vec![1.0, -2.0, 0.5, -0.1, 3.0];
        let lp = LpProblem::new(g.clone(), vec![0.0; 5], vec![1.0; 5]);
        let sol = lp.solve(&SimplexOptions::default()).unwrap();
        for (xi, gi) in sol.x.iter().zip(&g) {
            assert_eq!(*xi, if *gi > 0.0 { 0.0 } else { 1.0 });
        }
    }

    #[test]
    fn infeasible_and_unbounded_are_reported() {
        let mut lp = simplex_lp(vec![1.0, 1.0]);
        lp.push_row(vec![1.0, 1.0], RowKind::Ge, 3.0);
        assert!(matches!(lp.solve(&SimplexOptions::default()), Err(Error::Infeasible)));

        let mut lp = LpProblem::new(vec![-1.0, 0.0], vec![0.0, 0.0], vec![f64::INFINITY; 2]);
        lp.push_row(vec![1.0, -1.0], RowKind::Ge, 0.0);
        assert!(matches!(lp.solve(&SimplexOptions::default()), Err(Error::Unbounded)));
    }

    #[test]
    fn free_variables_and_ge_rows() {
        // min x + y s.t. x ≥ 1, y ≥ 2, x + y ≥ 4, x, y free
        let inf = f64::INFINITY;
        let mut lp = LpProblem::new(vec![1.0, 2.0], vec![-inf; 2], vec![inf; 2]);
        lp.push_row(vec![1.0, 0.0], RowKind::Ge, 1.0);
        lp.push_row(vec![0.0, 1.0], RowKind::Ge, 2.0);
        lp.push_row(vec![1.0, 1.0], RowKind::Ge, 4.0);
        let sol = lp.solve(&SimplexOptions::default()).unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 2.0).abs() < 1e-12);
        assert!((sol.objective - 6.0).abs() < 1e-12);
        // duals: y = (0, 1, 1)
        assert!((sol.duals[2] - 1.0).abs() < 1e-12);
        assert!((sol.duals[1] - 1.0).abs() < 1e-12);
        assert!(sol.duals[0].abs() < 1e-12);
    }

    #[test]
    fn warm_start_reuses_basis() {
        let lp = simplex_lp(vec![0.3, 0.1, 0.7, 0.2]);
        let first = lp.solve(&SimplexOptions::default()).unwrap();
        let mut lp2 = lp.clone();
        lp2.objective = vec![0.3, 0.4, 0.7, 0.2];
        let opts = SimplexOptions {
            warm_start: Some(first.basis.clone()),
            ..Default::default()
        };
        let second = lp2.solve(&opts).unwrap();
        assert_eq!(second.x, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(second.phase1_pivots, 0);
    }

    #[test]
    fn early_stop_halts_at_a_vertex_below_threshold() {
        let g: Vec<f64> = (0..20).map(|i| -(i as f64)).collect();
        let lp = simplex_lp(g);
        let opts = SimplexOptions {
            stop_below: Some(-5.0),
            ..Default::default()
        };
        let sol = lp.solve(&opts).unwrap();
        assert!(sol.objective <= -5.0);
        // still a vertex of the simplex
        assert_eq!(sol.x.iter().filter(|v| **v == 1.0).count(), 1);
    }
}
