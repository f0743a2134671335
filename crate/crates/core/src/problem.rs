//! The quadratic program `min xᵀQx + cᵀx` over a polyhedron given by
//! equality rows, `≥` rows and optional finite variable bounds.
//!
//! The objective carries no ½ factor; the gradient is `2Qx + c`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::pricing::simplex::{LpProblem, LpStatus, RowKind, SimplexOptions};

/// One linear row `aᵀx (= or ≥) b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub a: Vec<f64>,
    pub b: f64,
}

impl LinearRow {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        LinearRow { a, b }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        dot(&self.a, x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpInstance {
    pub name: String,
    q: Matrix,
    c: Vec<f64>,
    pub eq: Vec<LinearRow>,
    pub ineq: Vec<LinearRow>,
    pub bounds: Option<Bounds>,
}

impl QpInstance {
    /// Builds an instance with no constraints. `q` is symmetrized as
    /// `(Q + Qᵀ)/2`, which leaves an already symmetric matrix untouched.
    pub fn new(name: impl Into<String>, q: Matrix, c: Vec<f64>) -> Result<Self> {
        let n = c.len();
        if q.rows() != n {
            return Err(Error::Dimension {
                expected: n,
                got: q.rows(),
            });
        }
        if q.cols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: q.cols(),
            });
        }
        let mut q = q;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (q[(i, j)] + q[(j, i)]);
                q[(i, j)] = v;
                q[(j, i)] = v;
            }
        }
        Ok(QpInstance {
            name: name.into(),
            q,
            c,
            eq: Vec::new(),
            ineq: Vec::new(),
            bounds: None,
        })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Number of general rows (equalities plus inequalities).
    pub fn m(&self) -> usize {
        self.eq.len() + self.ineq.len()
    }

    fn check_row(&self, row: &LinearRow) -> Result<()> {
        if row.a.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: row.a.len(),
            });
        }
        Ok(())
    }

    pub fn push_eq(&mut self, row: LinearRow) -> Result<()> {
        self.check_row(&row)?;
        self.eq.push(row);
        Ok(())
    }

    pub fn push_ineq(&mut self, row: LinearRow) -> Result<()> {
        self.check_row(&row)?;
        self.ineq.push(row);
        Ok(())
    }

    pub fn set_bounds(&mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<()> {
        for v in [&lower, &upper] {
            if v.len() != self.n() {
                return Err(Error::Dimension {
                    expected: self.n(),
                    got: v.len(),
                });
            }
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("bounds must be finite".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidArgument("lower bound above upper bound".into()));
        }
        self.bounds = Some(Bounds { lower, upper });
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `xᵀQx + cᵀx`.
    pub fn eval_objective(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let qx = self.q.mul_vec(x);
        Ok(dot(x, &qx) + dot(&self.c, x))
    }

    /// `2Qx + c`.
    pub fn eval_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut g = self.q.mul_vec(x);
        for (gi, ci) in g.iter_mut().zip(&self.c) {
            *gi = 2.0 * *gi + ci;
        }
        Ok(g)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        self.check_dim(x)?;
        let qx = self.q.mul_vec(x);
        let value = dot(x, &qx) + dot(&self.c, x);
        let gradient = qx.iter().zip(&self.c).map(|(q, c)| 2.0 * q + c).collect();
        Ok(Evaluation { value, gradient })
    }

    /// Largest violation of any row or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for r in &self.eq {
            worst = worst.max((r.activity(x) - r.b).abs());
        }
        for r in &self.ineq {
            worst = worst.max(r.b - r.activity(x));
        }
        if let Some(bd) = &self.bounds {
            for j in 0..x.len() {
                worst = worst.max(bd.lower[j] - x[j]).max(x[j] - bd.upper[j]);
            }
        }
        worst
    }

    /// Lower and upper variable bounds, infinite where absent.
    pub fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.bounds {
            Some(b) => (b.lower.clone(), b.upper.clone()),
            None => (
                vec![f64::NEG_INFINITY; self.n()],
                vec![f64::INFINITY; self.n()],
            ),
        }
    }

    /// LP over the feasible region of this instance with the given objective.
    pub fn feasible_region_lp(&self, objective: Vec<f64>) -> LpProblem {
        let (lower, upper) = self.variable_bounds();
        let mut lp = LpProblem::new(objective, lower, upper);
        for r in &self.eq {
            lp.push_row(r.a.clone(), RowKind::Eq, r.b);
        }
        for r in &self.ineq {
            lp.push_row(r.a.clone(), RowKind::Ge, r.b);
        }
        lp
    }

    /// Structural checks: symmetry, PSD probe, feasibility and boundedness.
    pub fn validate(&self) -> ValidationReport {
        let n = self.n();
        let asymmetry = self.q.max_asymmetry();
        let norm = self.q.norm_inf();
        let (min_eig, _) = crate::linalg::extreme_eigenvalues(&self.q, 2000, 0x5eed);
        let indefinite = min_eig < -1e-8 * norm.max(f64::MIN_POSITIVE);

        let opts = SimplexOptions::default();
        let feas = self.feasible_region_lp(vec![0.0; n]).solve(&opts);
        let infeasible = matches!(feas, Err(Error::Infeasible));
        let unbounded = if infeasible {
            false
        } else {
            !self.recession_cone_is_trivial(&opts)
        };
        ValidationReport {
            asymmetry,
            min_eigenvalue: min_eig,
            indefinite,
            infeasible,
            unbounded,
        }
    }

    /// Checks that the recession cone `{d : A_E d = 0, A_I d ≥ 0, bounds}`
    /// is `{0}` by maximizing and minimizing each unrestricted coordinate
    /// over the cone intersected with the unit box.
    fn recession_cone_is_trivial(&self, opts: &SimplexOptions) -> bool {
        let n = self.n();
        if self.bounds.is_some() {
            // all bounds are finite
            return true;
        }
        let mut base = LpProblem::new(vec![0.0; n], vec![-1.0; n], vec![1.0; n]);
        for r in &self.eq {
            base.push_row(r.a.clone(), RowKind::Eq, 0.0);
        }
        for r in &self.ineq {
            base.push_row(r.a.clone(), RowKind::Ge, 0.0);
        }
        for j in 0..n {
            for sign in [1.0, -1.0] {
                let mut lp = base.clone();
                lp.objective[j] = sign;
                match lp.solve(opts) {
                    Ok(sol) if sol.status == LpStatus::Optimal && sol.objective < -1e-9 => {
                        return false
                    }
                    Ok(_) => {}
                    Err(_) => return false,
                }
            }
        }
        true
    }

    /// Writes the `QPTXT1` text format.
    pub fn to_text(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "QPTXT1 n {} eq {} ineq {} bounds {}",
            n,
            self.eq.len(),
            self.ineq.len(),
            u8::from(self.bounds.is_some())
        );
        let write_nums = |out: &mut String, nums: &[f64]| {
            let mut first = true;
            for v in nums {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{:.16e}", v);
            }
            out.push('\n');
        };
        for i in 0..n {
            write_nums(&mut out, self.q.row(i));
        }
        write_nums(&mut out, &self.c);
        for r in self.eq.iter().chain(&self.ineq) {
            let mut row = r.a.clone();
            row.push(r.b);
            write_nums(&mut out, &row);
        }
        if let Some(b) = &self.bounds {
            write_nums(&mut out, &b.lower);
            write_nums(&mut out, &b.upper);
        }
        out
    }

    pub fn from_text(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        let (n, n_eq, n_ineq, has_bounds) = parse_header(header)?;

        let mut next_numbers = |what: &str, count: usize| -> Result<Vec<f64>> {
            let (line, text) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing {what}"),
            })?;
            let nums = text
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|e| Error::Parse {
                        line,
                        msg: format!("{what}: bad number {t:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if nums.len() != count {
                return Err(Error::Parse {
                    line,
                    msg: format!("{what}: expected {count} numbers, found {}", nums.len()),
                });
            }
            Ok(nums)
        };

        let mut q = Matrix::zeros(n, n);
        for i in 0..n {
            let row = next_numbers(&format!("Q row {}", i + 1), n)?;
            q.row_mut(i).copy_from_slice(&row);
        }
        let c = next_numbers("c", n)?;
        let mut inst = QpInstance::new(name, q, c)?;
        for i in 0..n_eq {
            let mut row = next_numbers(&format!("equality row {}", i + 1), n + 1)?;
            let b = row.pop().unwrap_or_default();
            inst.eq.push(LinearRow::new(row, b));
        }
        for i in 0..n_ineq {
            let mut row = next_numbers(&format!("inequality row {}", i + 1), n + 1)?;
            let b = row.pop().unwrap_or_default();
            inst.ineq.push(LinearRow::new(row, b));
        }
        if has_bounds {
            let lower = next_numbers("lower bounds", n)?;
            let upper = next_numbers("upper bounds", n)?;
            inst.set_bounds(lower, upper)?;
        }
        Ok(inst)
    }

    pub fn write_instance(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Reads a `QPTXT1` file; the instance is named after the file stem.
    pub fn read_instance(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        QpInstance::from_text(name, &text)
    }
}

fn parse_header(header: &str) -> Result<(usize, usize, usize, bool)> {
    let bad = |msg: &str| Error::Parse {
        line: 1,
        msg: msg.to_string(),
    };
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 9 || toks[0] != "QPTXT1" {
        return Err(bad("expected `QPTXT1 n <n> eq <e> ineq <i> bounds <0|1>`"));
    }
    let mut vals = [0usize; 4];
    for (k, key) in ["n", "eq", "ineq", "bounds"].iter().enumerate() {
        if toks[1 + 2 * k] != *key {
            return Err(bad(&format!("expected key `{key}`")));
        }
        vals[k] = toks[2 + 2 * k]
            .parse()
            .map_err(|_| bad(&format!("bad value for `{key}`")))?;
    }
    if vals[3] > 1 {
        return Err(bad("bounds flag must be 0 or 1"));
    }
    Ok((vals[0], vals[1], vals[2], vals[3] == 1))
}

/// Objective value and gradient at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub asymmetry: f64,
    pub min_eigenvalue: f64,
    pub indefinite: bool,
    pub infeasible: bool,
    pub unbounded: bool,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.asymmetry == 0.0 && !self.indefinite && !self.infeasible && !self.unbounded
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex_instance(n: usize) -> QpInstance {
        let mut inst = QpInstance::new("simplex", Matrix::identity(n), vec![0.0; n]).unwrap();
        inst.push_eq(LinearRow::new(vec![1.0; n], 1.0)).unwrap();
        inst.set_bounds(vec![0.0; n], vec![1.0; n]).unwrap();
        inst
    }

    #[test]
    fn objective_examples() {
        let inst = QpInstance::new("i", Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        assert_eq!(inst.eval_objective(&[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(inst.eval_gradient(&[1.0, 0.0]).unwrap(), vec![2.0, 0.0]);

        let lin = QpInstance::new("l", Matrix::zeros(2, 2), vec![1.0, 2.0]).unwrap();
        assert_eq!(lin.eval_objective(&[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(lin.eval_gradient(&[-7.0, 0.5]).unwrap(), vec![1.0, 2.0]);

        let q = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let inst = QpInstance::new("q", q, vec![-1.0, 0.0]).unwrap();
        // 2 + 1 + 1 + 2 - 1
        assert_eq!(inst.eval_objective(&[1.0, 1.0]).unwrap(), 5.0);
        assert_eq!(inst.eval_gradient(&[1.0, 1.0]).unwrap(), vec![5.0, 6.0]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let inst = QpInstance::new("i", Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            inst.eval_objective(&[1.0]),
            Err(Error::Dimension { expected: 2, got: 1 })
        ));
        assert!(inst.eval_gradient(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn validate_accepts_unit_simplex() {
        let report = simplex_instance(4).validate();
        assert!(report.is_ok(), "{report:?}");
    }

    #[test]
    fn validate_flags_unbounded_orthant() {
        let n = 3;
        let mut inst = QpInstance::new("orthant", Matrix::identity(n), vec![0.0; n]).unwrap();
        for j in 0..n {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            inst.push_ineq(LinearRow::new(a, 0.0)).unwrap();
        }
        let report = inst.validate();
        assert!(report.unbounded);
        assert!(!report.infeasible);
    }

    #[test]
    fn validate_flags_negative_eigenvalue() {
        let mut q = Matrix::identity(4);
        q[(1, 1)] = -1.0;
        let mut inst = QpInstance::new("indef", q, vec![0.0; 4]).unwrap();
        inst.push_eq(LinearRow::new(vec![1.0; 4], 1.0)).unwrap();
        inst.set_bounds(vec![0.0; 4], vec![1.0; 4]).unwrap();
        let report = inst.validate();
        assert!(report.indefinite, "{report:?}");
    }

    #[test]
    fn validate_flags_infeasible() {
        let mut inst = simplex_instance(3);
        inst.push_ineq(LinearRow::new(vec![1.0; 3], 2.0)).unwrap();
        assert!(inst.validate().infeasible);
    }

    #[test]
    fn header_counts_parse() {
        let text = "QPTXT1 n 2 eq 1 ineq 0 bounds 0\n1 0\n0 1\n0 0\n1 1 1\n";
        let inst = QpInstance::from_text("t", text).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.eq.len(), 1);
        assert_eq!(inst.ineq.len(), 0);
        assert!(inst.bounds.is_none());
    }

    #[test]
    fn truncated_q_names_missing_row() {
        let text = "QPTXT1 n 3 eq 0 ineq 0 bounds 0\n1 0 0\n0 1 0\n";
        let err = QpInstance::from_text("t", text).unwrap_err();
        assert!(err.to_string().contains("Q row 3"), "{err}");
    }

    #[test]
    fn short_row_reports_line_number() {
        let text = "QPTXT1 n 2 eq 0 ineq 0 bounds 0\n1 0\n0\n0 0\n";
        match QpInstance::from_text("t", text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn text_round_trip_is_byte_identical() {
        let mut inst = simplex_instance(3);
        inst.push_ineq(LinearRow::new(vec![0.1, 1.0 / 3.0, 2.0], 0.7)).unwrap();
        let first = inst.to_text();
        let back = QpInstance::from_text("simplex", &first).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_text(), first);
    }
}
