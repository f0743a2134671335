//! Slow reference solvers for small instances.
//!
//! * [`enumerate_active_sets`] tries every candidate active set, solves the
//!   equality-constrained KKT system of each and keeps the best KKT point.
//! * [`active_set_qp`] is a primal active-set method for desk-size
//!   problems whose candidate count is out of reach for enumeration.
//! * [`oracle_solve_qp`] picks one of the two and certifies the answer
//!   against the KKT conditions.
//! * [`oracle_simplex_qp`] enumerates the faces of a small simplex.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::pricing::simplex::SimplexOptions;
use crate::problem::QpInstance;

/// Default limit on enumerated candidate sets.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

/// Which constraint a multiplier belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintRef {
    Eq(usize),
    Ineq(usize),
    Lower(usize),
    Upper(usize),
}

#[derive(Debug, Clone)]
pub struct KktSolution {
    pub x: Vec<f64>,
    pub f: f64,
    pub mult_eq: Vec<f64>,
    pub mult_ineq: Vec<f64>,
    pub mult_lower: Vec<f64>,
    pub mult_upper: Vec<f64>,
    /// Inequality-type constraints in the final working set.
    pub active: Vec<ConstraintRef>,
    pub residuals: KktResiduals,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

/// Constraints as `aᵀx ≥ b` (or `= b` for equalities).
struct Rows {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    refs: Vec<ConstraintRef>,
    n_eq: usize,
}

impl Rows {
    fn of(inst: &QpInstance) -> Rows {
        let n = inst.n();
        let mut rows = Rows {
            a: Vec::new(),
            b: Vec::new(),
            refs: Vec::new(),
            n_eq: inst.eq.len(),
        };
        for (i, r) in inst.eq.iter().enumerate() {
            rows.a.push(r.a.clone());
            rows.b.push(r.b);
            rows.refs.push(ConstraintRef::Eq(i));
        }
        for (i, r) in inst.ineq.iter().enumerate() {
            rows.a.push(r.a.clone());
            rows.b.push(r.b);
            rows.refs.push(ConstraintRef::Ineq(i));
        }
        if let Some(bd) = &inst.bounds {
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                rows.a.push(e.clone());
                rows.b.push(bd.lower[j]);
                rows.refs.push(ConstraintRef::Lower(j));
                e[j] = -1.0;
                rows.a.push(e);
                rows.b.push(-bd.upper[j]);
                rows.refs.push(ConstraintRef::Upper(j));
            }
        }
        rows
    }

    fn len(&self) -> usize {
        self.a.len()
    }

    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        dot(&self.a[i], x) - self.b[i]
    }
}

fn hessian(inst: &QpInstance) -> DMatrix<f64> {
    inst.q().to_nalgebra() * 2.0
}

/// Multipliers `μ` with `Σ μᵢ aᵢ = g` over `set`, least squares.
fn multipliers(rows: &Rows, set: &[usize], g: &[f64]) -> Vec<f64> {
    if set.is_empty() {
        return Vec::new();
    }
    let n = g.len();
    let at = DMatrix::from_fn(n, set.len(), |r, c| rows.a[set[c]][r]);
    let svd = at.svd(true, true);
    let sol = svd
        .solve(&DVector::from_column_slice(g), 1e-12)
        .expect("svd has both factors");
    sol.iter().copied().collect()
}

/// Checks the KKT conditions of `x` with the working set `set`.
fn certify(inst: &QpInstance, rows: &Rows, x: Vec<f64>, set: &[usize]) -> KktSolution {
    let n = inst.n();
    let g = inst.eval_gradient(&x).expect("dimension checked");
    let mu = multipliers(rows, set, &g);
    let mut r = g.clone();
    for (k, &i) in set.iter().enumerate() {
        for j in 0..n {
            r[j] -= mu[k] * rows.a[i][j];
        }
    }
    let gscale = 1.0 + g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut res = KktResiduals {
        stationarity: r.iter().fold(0.0f64, |m, v| m.max(v.abs())) / gscale,
        primal: inst.max_violation(&x),
        ..Default::default()
    };
    let mut sol = KktSolution {
        f: inst.eval_objective(&x).expect("dimension checked"),
        mult_eq: vec![0.0; inst.eq.len()],
        mult_ineq: vec![0.0; inst.ineq.len()],
        mult_lower: vec![0.0; if inst.bounds.is_some() { n } else { 0 }],
        mult_upper: vec![0.0; if inst.bounds.is_some() { n } else { 0 }],
        active: Vec::new(),
        residuals: res,
        x,
    };
    for (k, &i) in set.iter().enumerate() {
        let m = mu[k];
        match rows.refs[i] {
            ConstraintRef::Eq(e) => sol.mult_eq[e] = m,
            other => {
                res.dual = res.dual.max(-m);
                res.complementarity = res
                    .complementarity
                    .max((m * rows.residual(i, &sol.x)).abs());
                sol.active.push(other);
                match other {
                    ConstraintRef::Ineq(e) => sol.mult_ineq[e] = m,
                    ConstraintRef::Lower(j) => sol.mult_lower[j] = m,
                    ConstraintRef::Upper(j) => sol.mult_upper[j] = m,
                    ConstraintRef::Eq(_) => unreachable!(),
                }
            }
        }
    }
    sol.residuals = res;
    sol
}

/// Orthonormal basis of `{p : aᵢᵀp = 0, i ∈ set}` as columns.
fn nullspace(rows: &Rows, set: &[usize], n: usize) -> DMatrix<f64> {
    if set.is_empty() {
        return DMatrix::identity(n, n);
    }
    let a = DMatrix::from_fn(set.len(), n, |r, c| rows.a[set[r]][c]);
    let m = a.transpose() * &a;
    let eig = SymmetricEigen::new(m);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cols: Vec<usize> = (0..n)
        .filter(|&i| eig.eigenvalues[i] <= 1e-10 * top.max(1.0))
        .collect();
    DMatrix::from_fn(n, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])])
}

/// Rank test: does row `i` add a new direction to the rows in `set`?
fn independent(rows: &Rows, set: &[usize], i: usize) -> bool {
    let n = rows.a[i].len();
    let z = nullspace(rows, set, n);
    let a = DVector::from_column_slice(&rows.a[i]);
    let proj = z.transpose() * &a;
    proj.norm() > 1e-9 * a.norm().max(1e-300)
}

/// Primal active-set method. Starts from a feasible vertex found by the LP
/// engine and keeps the working set linearly independent.
pub fn active_set_qp(inst: &QpInstance) -> Result<KktSolution> {
    let n = inst.n();
    let rows = Rows::of(inst);
    let g_mat = hessian(inst);
    let start = inst
        .feasible_region_lp(vec![0.0; n])
        .solve(&SimplexOptions::default())?;
    let mut x = start.x;
    let feas_tol = 1e-9;
    let mut work: Vec<usize> = Vec::new();
    for i in 0..rows.n_eq {
        if independent(&rows, &work, i) {
            work.push(i);
        }
    }
    for i in rows.n_eq..rows.len() {
        if rows.residual(i, &x).abs() <= feas_tol && independent(&rows, &work, i) {
            work.push(i);
        }
    }
    let max_iter = 100 * (n + rows.len()) + 1000;
    for _ in 0..max_iter {
        let grad = DVector::from_vec(inst.eval_gradient(&x)?);
        let z = nullspace(&rows, &work, n);
        let d = z.ncols();
        let mut p = DVector::zeros(n);
        let mut unbounded_dir = false;
        if d > 0 {
            let zg = z.transpose() * &grad;
            let rh = z.transpose() * &g_mat * &z;
            let eig = SymmetricEigen::new(rh);
            let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let thr = 1e-10 * top.max(1.0);
            let mut v = DVector::zeros(d);
            // a descent direction of zero curvature makes the step ray-like
            for k in 0..d {
                let ev = eig.eigenvectors.column(k);
                let c = ev.dot(&zg);
                if eig.eigenvalues[k] <= thr && c.abs() > 1e-12 * (1.0 + zg.norm()) {
                    v = -ev * c.signum();
                    unbounded_dir = true;
                    break;
                }
            }
            if !unbounded_dir {
                for k in 0..d {
                    if eig.eigenvalues[k] > thr {
                        let ev = eig.eigenvectors.column(k);
                        v -= ev * (ev.dot(&zg) / eig.eigenvalues[k]);
                    }
                }
            }
            p = &z * v;
        }
        let xnorm = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if p.amax() <= 1e-13 * xnorm {
            let g: Vec<f64> = grad.iter().copied().collect();
            let mu = multipliers(&rows, &work, &g);
            let (mut worst, mut at) = (-1e-12 * (1.0 + grad.amax()), None);
            for (k, &i) in work.iter().enumerate() {
                if i >= rows.n_eq && mu[k] < worst {
                    worst = mu[k];
                    at = Some(k);
                }
            }
            match at {
                Some(k) => {
                    work.remove(k);
                    continue;
                }
                None => {
                    let sol = certify(inst, &rows, x, &work);
                    return Ok(sol);
                }
            }
        }
        let pv: Vec<f64> = p.iter().copied().collect();
        let mut alpha = if unbounded_dir { f64::INFINITY } else { 1.0 };
        let mut block = None;
        for i in rows.n_eq..rows.len() {
            if work.contains(&i) {
                continue;
            }
            let ap = dot(&rows.a[i], &pv);
            if ap < -1e-14 {
                let t = (-rows.residual(i, &x) / ap).max(0.0);
                if t < alpha {
                    alpha = t;
                    block = Some(i);
                }
            }
        }
        if !alpha.is_finite() {
            return Err(Error::Unbounded);
        }
        for j in 0..n {
            x[j] += alpha * pv[j];
        }
        if let Some(i) = block {
            work.push(i);
        }
    }
    Err(Error::OracleBudget("active-set iteration cap reached".into()))
}

/// Number of candidate sets [`enumerate_active_sets`] would visit.
pub fn enumeration_size(inst: &QpInstance) -> u128 {
    let n = inst.n() as u32;
    let free_dims = n.saturating_sub(inst.eq.len() as u32);
    let mi = inst.ineq.len() as u32;
    // choose r rows and j bounded variables, each at one of its bounds
    let choose = |a: u32, b: u32| -> u128 {
        if b > a {
            return 0;
        }
        let mut r: u128 = 1;
        for i in 0..b {
            r = r * (a - i) as u128 / (i + 1) as u128;
        }
        r
    };
    let bounded = if inst.bounds.is_some() { n } else { 0 };
    let mut total: u128 = 0;
    for r in 0..=mi.min(free_dims) {
        for j in 0..=bounded.min(free_dims - r) {
            total = total.saturating_add(choose(mi, r) * choose(bounded, j) * (1u128 << j));
        }
    }
    total
}

/// Solves `min xᵀQx + cᵀx` with the constraints in `set` (plus all
/// equalities) held as equalities, by a minimum-norm KKT solve. Returns
/// `None` if the system is inconsistent.
fn solve_eqp(inst: &QpInstance, rows: &Rows, set: &[usize]) -> Option<Vec<f64>> {
    let n = inst.n();
    let k = set.len();
    let g = hessian(inst);
    let mut kkt = DMatrix::zeros(n + k, n + k);
    let mut rhs = DVector::zeros(n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(&g);
    for (r, &i) in set.iter().enumerate() {
        for j in 0..n {
            kkt[(n + r, j)] = rows.a[i][j];
            kkt[(j, n + r)] = rows.a[i][j];
        }
        rhs[n + r] = rows.b[i];
    }
    for j in 0..n {
        rhs[j] = -inst.c()[j];
    }
    let svd = kkt.clone().svd(true, true);
    let sol = svd.solve(&rhs, 1e-11).ok()?;
    let resid = (&kkt * &sol - &rhs).amax();
    if resid > 1e-8 * (1.0 + rhs.amax()) {
        return None;
    }
    Some(sol.rows(0, n).iter().copied().collect())
}

/// Brute-force enumeration over active sets in increasing size. Refuses
/// when the candidate count exceeds `budget`.
pub fn enumerate_active_sets(inst: &QpInstance, budget: u128) -> Result<KktSolution> {
    let size = enumeration_size(inst);
    if size > budget {
        return Err(Error::OracleBudget(format!(
            "{size} candidate active sets exceed the budget of {budget}"
        )));
    }
    let n = inst.n();
    let rows = Rows::of(inst);
    let eqs: Vec<usize> = (0..rows.n_eq).collect();
    let mi = inst.ineq.len();
    let ineq_rows: Vec<usize> = (rows.n_eq..rows.n_eq + mi).collect();
    let bounded = inst.bounds.is_some();
    let free_dims = n.saturating_sub(rows.n_eq);
    let mut best: Option<(f64, f64, Vec<f64>, Vec<usize>)> = None;
    // bound choice per variable: 0 none, 1 lower, 2 upper
    let mut bound_state = vec![0u8; if bounded { n } else { 0 }];
    for row_mask in 0u64..(1u64 << mi) {
        let nr = row_mask.count_ones() as usize;
        if nr > free_dims {
            continue;
        }
        bound_state.iter_mut().for_each(|s| *s = 0);
        loop {
            let nb = bound_state.iter().filter(|s| **s != 0).count();
            if nr + nb <= free_dims {
                let mut set = eqs.clone();
                for (t, &i) in ineq_rows.iter().enumerate() {
                    if row_mask >> t & 1 == 1 {
                        set.push(i);
                    }
                }
                let base = rows.n_eq + mi;
                for (j, s) in bound_state.iter().enumerate() {
                    match s {
                        1 => set.push(base + 2 * j),
                        2 => set.push(base + 2 * j + 1),
                        _ => {}
                    }
                }
                if let Some(x) = solve_eqp(inst, &rows, &set) {
                    let feasible = inst.max_violation(&x) <= 1e-9;
                    if feasible {
                        let g = inst.eval_gradient(&x)?;
                        let mu = multipliers(&rows, &set, &g);
                        let dual_ok = set
                            .iter()
                            .zip(&mu)
                            .all(|(&i, &m)| i < rows.n_eq || m >= -1e-9 * (1.0 + g.iter().fold(0.0f64, |a, v| a.max(v.abs()))));
                        if dual_ok {
                            let f = inst.eval_objective(&x)?;
                            let norm = dot(&x, &x);
                            let better = match &best {
                                None => true,
                                Some((bf, bn, _, _)) => {
                                    f < bf - 1e-12 * (1.0 + bf.abs())
                                        || (f <= bf + 1e-12 * (1.0 + bf.abs()) && norm < *bn)
                                }
                            };
                            if better {
                                best = Some((f, norm, x, set));
                            }
                        }
                    }
                }
            }
            // next bound assignment (base-3 counter)
            let mut j = 0;
            while j < bound_state.len() {
                bound_state[j] += 1;
                if bound_state[j] < 3 {
                    break;
                }
                bound_state[j] = 0;
                j += 1;
            }
            if j == bound_state.len() {
                break;
            }
        }
    }
    let (_, _, x, set) = best.ok_or(Error::Infeasible)?;
    Ok(certify(inst, &rows, x, &set))
}

/// Reference optimum: enumeration when affordable, the active-set method
/// otherwise. The result is certified against the KKT conditions.
pub fn oracle_solve_qp(inst: &QpInstance) -> Result<KktSolution> {
    let sol = if enumeration_size(inst) <= 20_000 {
        enumerate_active_sets(inst, ENUMERATION_BUDGET)?
    } else {
        active_set_qp(inst)?
    };
    if sol.residuals.max() > 1e-9 {
        return Err(Error::OracleBudget(format!(
            "KKT certificate failed: {:?}",
            sol.residuals
        )));
    }
    Ok(sol)
}

/// Minimizes `½λᵀHλ + hᵀλ` over the unit simplex by enumerating its
/// `2ᵏ − 1` faces. Refuses `k > 8`.
pub fn oracle_simplex_qp(h: &[Vec<f64>], hv: &[f64]) -> Result<Vec<f64>> {
    let k = hv.len();
    if k > 8 {
        return Err(Error::OracleBudget(format!("face enumeration refused for k = {k} > 8")));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("empty simplex".into()));
    }
    let obj = |l: &[f64]| crate::master::master_objective(h, hv, l);
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for mask in 1u32..(1u32 << k) {
        let face: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let s = face.len();
        let mut kkt = DMatrix::zeros(s + 1, s + 1);
        let mut rhs = DVector::zeros(s + 1);
        for (a, &i) in face.iter().enumerate() {
            for (b, &j) in face.iter().enumerate() {
                kkt[(a, b)] = h[i][j];
            }
            kkt[(a, s)] = 1.0;
            kkt[(s, a)] = 1.0;
            rhs[a] = -hv[i];
        }
        rhs[s] = 1.0;
        let svd = kkt.clone().svd(true, true);
        let Ok(sol) = svd.solve(&rhs, 1e-12) else {
            continue;
        };
        if (&kkt * &sol - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
            continue;
        }
        if (0..s).any(|a| sol[a] < -1e-12) {
            continue;
        }
        let mut lambda = vec![0.0; k];
        for (a, &i) in face.iter().enumerate() {
            lambda[i] = sol[a].max(0.0);
        }
        crate::master::normalize(&mut lambda);
        let f = obj(&lambda);
        let norm = dot(&lambda, &lambda);
        let better = match &best {
            None => true,
            Some((bf, bn, _)) => {
                f < bf - 1e-14 * (1.0 + bf.abs()) || (f <= bf + 1e-14 * (1.0 + bf.abs()) && norm < *bn)
            }
        };
        if better {
            best = Some((f, norm, lambda));
        }
    }
    best.map(|b| b.2)
        .ok_or_else(|| Error::OracleBudget("no feasible face found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist_inf, Matrix};
    use crate::problem::LinearRow;

    #[test]
    fn one_dimensional_bound() {
        // min x² s.t. x ≥ 1
        let mut inst = QpInstance::new("x2", Matrix::identity(1), vec![0.0]).unwrap();
        inst.push_ineq(LinearRow::new(vec![1.0], 1.0)).unwrap();
        inst.set_bounds(vec![-10.0], vec![10.0]).unwrap();
        for sol in [enumerate_active_sets(&inst, ENUMERATION_BUDGET).unwrap(), active_set_qp(&inst).unwrap()] {
            assert!((sol.x[0] - 1.0).abs() < 1e-12);
            assert!((sol.mult_ineq[0] - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn interior_optimum_is_stationary_point() {
        let q = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let c = vec![-1.0, -0.5];
        let mut inst = QpInstance::new("int", q.clone(), c.clone()).unwrap();
        inst.set_bounds(vec![-5.0; 2], vec![5.0; 2]).unwrap();
        let sol = oracle_solve_qp(&inst).unwrap();
        // -(2Q)^{-1} c
        let g = q.to_nalgebra() * 2.0;
        let x = g.try_inverse().unwrap() * DVector::from_vec(c).scale(-1.0);
        assert!((sol.x[0] - x[0]).abs() < 1e-10 && (sol.x[1] - x[1]).abs() < 1e-10);
        let act = active_set_qp(&inst).unwrap();
        assert!(dist_inf(&act.x, &sol.x) < 1e-10);
    }

    #[test]
    fn two_asset_portfolio_closed_form() {
        // Σ = [[s1, r], [r, s2]], e'x = 1: x1 = (s2 - r)/(s1 + s2 - 2r)
        let (s1, s2, r) = (0.04, 0.09, -0.01);
        let q = Matrix::from_rows(&[vec![s1, r], vec![r, s2]]);
        let mut inst = QpInstance::new("p2", q, vec![0.0; 2]).unwrap();
        inst.push_eq(LinearRow::new(vec![1.0, 1.0], 1.0)).unwrap();
        inst.push_ineq(LinearRow::new(vec![0.01, 0.01], 0.005)).unwrap();
        inst.set_bounds(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let sol = oracle_solve_qp(&inst).unwrap();
        let x1 = (s2 - r) / (s1 + s2 - 2.0 * r);
        assert!((sol.x[0] - x1).abs() < 1e-12);
        assert!((sol.x[1] - (1.0 - x1)).abs() < 1e-12);
    }

    #[test]
    fn enumeration_budget_refuses() {
        let n = 30;
        let mut inst = QpInstance::new("big", Matrix::identity(n), vec![0.0; n]).unwrap();
        inst.set_bounds(vec![0.0; n], vec![1.0; n]).unwrap();
        assert!(matches!(
            enumerate_active_sets(&inst, ENUMERATION_BUDGET),
            Err(Error::OracleBudget(_))
        ));
    }

    #[test]
    fn simplex_oracle_examples() {
        let h = vec![vec![2.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 2.0]];
        let l = oracle_simplex_qp(&h, &[0.0; 3]).unwrap();
        assert!(dist_inf(&l, &[1.0 / 3.0; 3]) < 1e-14);
        let l = oracle_simplex_qp(&h, &[-10.0, 0.0, 0.0]).unwrap();
        assert_eq!(l, vec![1.0, 0.0, 0.0]);
        let big = vec![vec![0.0; 9]; 9];
        assert!(oracle_simplex_qp(&big, &[0.0; 9]).is_err());
    }
}
