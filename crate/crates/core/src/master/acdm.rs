//! Adaptive conjugate directions for the master QP over the simplex.
//!
//! Directions live in barycentric coordinates and are kept mutually
//! `H`-conjugate. Steps are exact line minimizations truncated at the
//! simplex boundary. Inside a face, each interior step adds its direction
//! to the conjugate set, so a face of dimension `d` is solved after at most
//! `d` interior steps. A boundary hit removes the blocking vertex from the
//! face and restarts the set from `e_j − λ` for the remaining vertices.
//!
//! The direction set survives between master solves: a new vertex only
//! appends a zero coordinate to each stored direction.

use std::collections::VecDeque;

use super::{normalize, MasterReport, MasterState};
use crate::linalg::{axpy, dot, norm2};

/// Weight at or below which a coordinate counts as zero.
pub const ZERO_WEIGHT: f64 = 1e-10;

fn hmul(h: &[Vec<f64>], d: &[f64]) -> Vec<f64> {
    h.iter().map(|row| dot(row, d)).collect()
}

fn hnorm(h: &[Vec<f64>]) -> f64 {
    h.iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `H`-orthogonalizes `d_bar` against `dirs` (two passes of modified
/// Gram-Schmidt). Directions of curvature at most `1e-12·‖H‖·‖d‖²` are
/// skipped. Returns `None` when nothing is left of `d_bar`.
pub fn conjugate_against(d_bar: &[f64], dirs: &[Vec<f64>], h: &[Vec<f64>]) -> Option<Vec<f64>> {
    let hd: Vec<(Vec<f64>, f64)> = dirs.iter().map(|dj| curvature(h, dj)).collect();
    conjugate_cached(d_bar, dirs, &hd, hnorm(h))
}

/// `(Hd, dᵀHd)`.
fn curvature(h: &[Vec<f64>], d: &[f64]) -> (Vec<f64>, f64) {
    let hd = hmul(h, d);
    let c = dot(d, &hd);
    (hd, c)
}

fn conjugate_cached(d_bar: &[f64], dirs: &[Vec<f64>], hd: &[(Vec<f64>, f64)], scale: f64) -> Option<Vec<f64>> {
    let mut d = d_bar.to_vec();
    for _ in 0..2 {
        for (dj, (hdj, c)) in dirs.iter().zip(hd) {
            if *c <= 1e-12 * scale * dot(dj, dj) {
                continue;
            }
            let coef = dot(&d, hdj) / c;
            axpy(-coef, dj, &mut d);
        }
    }
    let nb = norm2(d_bar);
    if norm2(&d) <= 1e-12 * nb || nb == 0.0 {
        None
    } else {
        Some(d)
    }
}

/// Largest `α ≥ 0` with `(1 − α)λˢ + αλᵗ ≥ 0`. `None` when `λᵗ = λˢ`;
/// `Some(∞)` when no coordinate decreases.
pub fn max_feasible_step(lambda_s: &[f64], lambda_t: &[f64]) -> Option<f64> {
    if lambda_s == lambda_t {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (s, t) in lambda_s.iter().zip(lambda_t) {
        if *s <= 0.0 {
            if *t < 0.0 {
                return Some(0.0);
            }
            continue;
        }
        if s - t > 0.0 {
            worst = worst.max((s - t) / s);
        }
    }
    if worst == 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(1.0 / worst)
    }
}

/// Minimizer over `β ∈ [0, 1]` of the master objective on the segment
/// from `λˢ` to `λᵖ`.
pub fn exact_line_min(lambda_s: &[f64], lambda_p: &[f64], h: &[Vec<f64>], hv: &[f64]) -> f64 {
    let p: Vec<f64> = lambda_p.iter().zip(lambda_s).map(|(a, b)| a - b).collect();
    let g = super::master_gradient(h, hv, lambda_s);
    let slope = dot(&g, &p);
    let curv = dot(&p, &hmul(h, &p));
    if curv <= 0.0 {
        if slope < 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (-slope / curv).clamp(0.0, 1.0)
    }
}

/// Largest normalized off-diagonal `|dᵢᵀHdⱼ| / √(dᵢᵀHdᵢ · dⱼᵀHdⱼ)`.
pub fn conjugacy_error(dirs: &[Vec<f64>], h: &[Vec<f64>]) -> f64 {
    let scale = hnorm(h);
    let hd: Vec<Vec<f64>> = dirs.iter().map(|d| hmul(h, d)).collect();
    let curv: Vec<f64> = dirs.iter().zip(&hd).map(|(d, hd)| dot(d, hd)).collect();
    let mut worst: f64 = 0.0;
    for i in 0..dirs.len() {
        if curv[i] <= 1e-12 * scale * dot(&dirs[i], &dirs[i]) {
            continue;
        }
        for j in 0..i {
            if curv[j] <= 1e-12 * scale * dot(&dirs[j], &dirs[j]) {
                continue;
            }
            let v = dot(&dirs[i], &hd[j]).abs() / (curv[i].sqrt() * curv[j].sqrt());
            worst = worst.max(v);
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub struct Acdm {
    directions: Vec<Vec<f64>>,
    pending: VecDeque<Vec<f64>>,
    /// Measure conjugacy of the direction set after every step.
    pub check_conjugacy: bool,
}

impl Default for Acdm {
    fn default() -> Self {
        Self::new()
    }
}

impl Acdm {
    pub fn new() -> Self {
        Acdm {
            directions: Vec::new(),
            pending: VecDeque::new(),
            check_conjugacy: false,
        }
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    /// Extends every stored direction by a zero coordinate.
    pub fn on_vertex_added(&mut self) {
        for d in self.directions.iter_mut().chain(self.pending.iter_mut()) {
            d.push(0.0);
        }
    }

    /// Removes coordinates of dropped vertices. Directions that used any of
    /// them are no longer valid, so the whole set is reset in that case.
    pub fn on_vertices_dropped(&mut self, dropped: &[usize]) {
        if dropped.is_empty() {
            return;
        }
        let touched = self
            .directions
            .iter()
            .chain(self.pending.iter())
            .any(|d| dropped.iter().any(|&i| d[i] != 0.0));
        if touched {
            self.directions.clear();
            self.pending.clear();
            return;
        }
        let k = self.directions.first().or(self.pending.front()).map_or(0, Vec::len);
        let keep: Vec<bool> = (0..k).map(|i| !dropped.contains(&i)).collect();
        for d in self.directions.iter_mut().chain(self.pending.iter_mut()) {
            super::retain_mask(d, &keep);
        }
    }

    pub fn push_direction(&mut self, d: Vec<f64>) {
        self.pending.push_back(d);
    }

    pub fn reset(&mut self) {
        self.directions.clear();
        self.pending.clear();
    }

    /// Minimizes `½λᵀHλ + hᵀλ` over the simplex starting from `lambda`.
    pub fn solve(&mut self, h: &[Vec<f64>], hv: &[f64], lambda: &mut [f64]) -> MasterReport {
        let k = lambda.len();
        let mut report = MasterReport::default();
        if k <= 1 {
            lambda.iter_mut().for_each(|v| *v = 1.0);
            self.reset();
            report.converged = true;
            return report;
        }
        let scale = hnorm(h);
        // H·d and dᵀHd of every stored direction, valid for this H
        let mut cache: Vec<(Vec<f64>, f64)> = self.directions.iter().map(|d| curvature(h, d)).collect();
        let mut active: Vec<bool> = lambda.iter().map(|v| *v > 0.0).collect();
        for d in self.directions.iter().chain(self.pending.iter()) {
            for (a, v) in active.iter_mut().zip(d) {
                if *v != 0.0 {
                    *a = true;
                }
            }
        }
        let mut rebuilt = false;
        let mut refreshed = false;
        let mut steps_in_face = 0;
        let cap = 50 * k + 500;
        for _ in 0..cap {
            let face_dim = active.iter().filter(|a| **a).count().saturating_sub(1);
            let Some(d_bar) = self.pending.pop_front() else {
                if self.directions.len() < face_dim && !rebuilt {
                    rebuilt = true;
                    for j in (0..k).filter(|&j| active[j]) {
                        let mut d: Vec<f64> = lambda.iter().map(|v| -v).collect();
                        d[j] += 1.0;
                        self.pending.push_back(d);
                    }
                    continue;
                }
                // the face is solved; check the full simplex
                let g = super::master_gradient(h, hv, lambda);
                let gl = dot(&g, lambda);
                let tol = 1e-10 * (1.0 + g.iter().fold(0.0f64, |m, v| m.max(v.abs())));
                let mut enter: Option<(usize, f64)> = None;
                let mut face_ok = true;
                for i in 0..k {
                    let r = g[i] - gl;
                    if lambda[i] > 0.0 {
                        face_ok &= r.abs() <= tol;
                    } else if r < -tol && enter.is_none_or(|(_, b)| r < b) {
                        enter = Some((i, r));
                    }
                }
                if let Some((i, _)) = enter {
                    active[i] = true;
                    let mut d: Vec<f64> = lambda.iter().map(|v| -v).collect();
                    d[i] += 1.0;
                    self.pending.push_back(d);
                    rebuilt = false;
                    continue;
                }
                if !face_ok && !refreshed {
                    refreshed = true;
                    self.directions.clear();
                    cache.clear();
                    rebuilt = false;
                    continue;
                }
                report.converged = true;
                break;
            };
            let Some(mut d) = conjugate_cached(&d_bar, &self.directions, &cache, scale) else {
                continue;
            };
            let g = super::master_gradient(h, hv, lambda);
            let mut slope = dot(&g, &d);
            if slope > 0.0 {
                d.iter_mut().for_each(|v| *v = -*v);
                slope = -slope;
            }
            let (hd, curv) = curvature(h, &d);
            let curved = curv > 1e-12 * scale * dot(&d, &d);
            if slope == 0.0 {
                if curved && self.directions.len() < face_dim {
                    self.directions.push(d);
                    cache.push((hd, curv));
                }
                continue;
            }
            let t_opt = if curved { -slope / curv } else { f64::INFINITY };
            let mut alpha = f64::INFINITY;
            let mut block = None;
            for i in 0..k {
                if d[i] < 0.0 {
                    let t = (lambda[i] / -d[i]).max(0.0);
                    if t < alpha {
                        alpha = t;
                        block = Some(i);
                    }
                }
            }
            if t_opt < alpha {
                axpy(t_opt, &d, lambda);
                report.steps += 1;
                steps_in_face += 1;
                report.max_steps_in_face = report.max_steps_in_face.max(steps_in_face);
                if self.directions.len() < face_dim {
                    self.directions.push(d);
                    cache.push((hd, curv));
                }
            } else {
                axpy(alpha, &d, lambda);
                if let Some(b) = block {
                    lambda[b] = 0.0;
                }
                for i in 0..k {
                    if active[i] && lambda[i] <= ZERO_WEIGHT {
                        lambda[i] = 0.0;
                        active[i] = false;
                    }
                }
                normalize(lambda);
                report.steps += 1;
                report.boundary_hits += 1;
                steps_in_face = 0;
                self.directions.clear();
                cache.clear();
                self.pending.clear();
                rebuilt = false;
                refreshed = false;
            }
            if self.check_conjugacy {
                report.max_conjugacy_error =
                    report.max_conjugacy_error.max(conjugacy_error(&self.directions, h));
            }
        }
        normalize(lambda);
        report
    }
}

/// Runs ACDM on the master, seeding it with `new_direction` if given.
pub fn solve_master_acdm(
    state: &mut MasterState,
    acdm: &mut Acdm,
    new_direction: Option<Vec<f64>>,
) -> MasterReport {
    if let Some(d) = new_direction {
        acdm.push_direction(d);
    }
    let mut lambda = std::mem::take(&mut state.lambda);
    let report = acdm.solve(state.hessian(), state.linear(), &mut lambda);
    state.lambda = lambda;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist_inf, Matrix};
    use crate::problem::QpInstance;

    #[test]
    fn conjugate_examples() {
        let h = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(conjugate_against(&[1.0, 0.0], &[], &h), Some(vec![1.0, 0.0]));
        let d = conjugate_against(&[1.0, 0.0], &[vec![1.0, -1.0]], &h).unwrap();
        assert!(dist_inf(&d, &[0.5, 0.5]) < 1e-15);
        assert!(conjugate_against(&[2.0, -2.0], &[vec![1.0, -1.0]], &h).is_none());
    }

    #[test]
    fn feasible_step_examples() {
        assert_eq!(max_feasible_step(&[0.5, 0.5], &[1.0, 0.0]), Some(1.0));
        assert_eq!(max_feasible_step(&[0.5, 0.5], &[0.75, 0.25]), Some(2.0));
        assert_eq!(max_feasible_step(&[0.0, 1.0], &[-0.1, 1.1]), Some(0.0));
        assert_eq!(max_feasible_step(&[0.3, 0.7], &[0.3, 0.7]), None);
    }

    #[test]
    fn line_min_examples() {
        let h = vec![vec![2.0, 0.0], vec![0.0, 2.0]];
        // g at (0.5, 0.5) is (1, 1), orthogonal to p = (0.5, -0.5)
        assert_eq!(exact_line_min(&[0.5, 0.5], &[1.0, 0.0], &h, &[0.0, 0.0]), 0.0);
        let zero = vec![vec![0.0; 2]; 2];
        assert_eq!(exact_line_min(&[1.0, 0.0], &[0.0, 1.0], &zero, &[1.0, 0.0]), 1.0);
        // interior minimizer against golden-section search
        let h = vec![vec![4.0, 1.0], vec![1.0, 3.0]];
        let hv = [0.5, -0.2];
        let (s, p) = ([0.9, 0.1], [0.0, 1.0]);
        let beta = exact_line_min(&s, &p, &h, &hv);
        let phi = |b: f64| {
            let l = [(1.0 - b) * s[0] + b * p[0], (1.0 - b) * s[1] + b * p[1]];
            super::super::master_objective(&h, &hv, &l)
        };
        let (mut a, mut c) = (0.0, 1.0);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = c - r * (c - a);
            let x2 = a + r * (c - a);
            if phi(x1) < phi(x2) {
                c = x2;
            } else {
                a = x1;
            }
        }
        assert!(beta > 0.0 && beta < 1.0);
        assert!((beta - 0.5 * (a + c)).abs() < 1e-8);
    }

    #[test]
    fn symmetric_two_vertex_master() {
        let inst = QpInstance::new("u", Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        let mut m = MasterState::new();
        m.add_vertex(&inst, vec![1.0, 0.0]);
        let mut acdm = Acdm::new();
        solve_master_acdm(&mut m, &mut acdm, None);
        m.add_vertex(&inst, vec![0.0, 1.0]);
        acdm.on_vertex_added();
        let r = solve_master_acdm(&mut m, &mut acdm, Some(vec![-1.0, 1.0]));
        assert!(r.converged);
        assert!(dist_inf(&m.lambda, &[0.5, 0.5]) < 1e-14);
        assert!((m.objective_at(&m.lambda) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn interior_optimum_within_face_dimension_steps() {
        // H = 2I, h = 0: optimum is the barycenter
        let k = 6;
        let h: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 2.0 } else { 0.0 }).collect())
            .collect();
        let hv = vec![0.0; k];
        let mut lambda = vec![0.0; k];
        lambda[0] = 0.5;
        lambda[1] = 0.5;
        let mut acdm = Acdm::new();
        acdm.check_conjugacy = true;
        let r = acdm.solve(&h, &hv, &mut lambda);
        assert!(r.converged);
        assert!(dist_inf(&lambda, &[1.0 / k as f64; 6]) < 1e-12);
        assert!(r.max_conjugacy_error < 1e-8);
    }
}
