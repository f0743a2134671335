//! The master problem: minimize `f(Bλ)` over the unit simplex, where the
//! columns of `B` are the vertices generated so far.
//!
//! In barycentric coordinates the master objective is `½λᵀHλ + hᵀλ` with
//! `H = 2BᵀQB` and `h = Bᵀc`. Each vertex keeps its product `Qx̃` so the
//! iterate's gradient never needs a fresh `O(n²)` product.

pub mod acdm;
pub mod fgpm;

use crate::linalg::{axpy, dist_inf, dot};
use crate::problem::QpInstance;

#[derive(Debug, Clone, Default)]
pub struct MasterState {
    vertices: Vec<Vec<f64>>,
    qx: Vec<Vec<f64>>,
    h_mat: Vec<Vec<f64>>,
    h_vec: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl MasterState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn k(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn hessian(&self) -> &[Vec<f64>] {
        &self.h_mat
    }

    pub fn linear(&self) -> &[f64] {
        &self.h_vec
    }

    /// Index of a stored vertex within `tol` in the ℓ∞ norm.
    pub fn find_vertex(&self, x: &[f64], tol: f64) -> Option<usize> {
        self.vertices.iter().position(|v| dist_inf(v, x) <= tol)
    }

    /// Appends `x` with weight zero (weight one for the first vertex).
    /// Returns `None` if `x` duplicates a stored vertex within `1e-10`.
    pub fn add_vertex(&mut self, inst: &QpInstance, x: Vec<f64>) -> Option<usize> {
        if self.find_vertex(&x, 1e-10).is_some() {
            return None;
        }
        let qx = inst.q().mul_vec(&x);
        let mut row: Vec<f64> = self.vertices.iter().map(|v| 2.0 * dot(v, &qx)).collect();
        row.push(2.0 * dot(&x, &qx));
        for (i, r) in self.h_mat.iter_mut().enumerate() {
            r.push(row[i]);
        }
        self.h_mat.push(row);
        self.h_vec.push(dot(inst.c(), &x));
        self.vertices.push(x);
        self.qx.push(qx);
        self.lambda.push(if self.lambda.is_empty() { 1.0 } else { 0.0 });
        Some(self.k() - 1)
    }

    /// Removes vertices with `λᵢ ≤ tol`, always keeping the heaviest one,
    /// and renormalizes. Returns the removed indices in increasing order.
    pub fn drop_vertices(&mut self, tol: f64) -> Vec<usize> {
        let k = self.k();
        if k == 0 {
            return Vec::new();
        }
        let heaviest = (0..k)
            .max_by(|&a, &b| self.lambda[a].total_cmp(&self.lambda[b]))
            .unwrap();
        let keep: Vec<bool> = (0..k)
            .map(|i| i == heaviest || self.lambda[i] > tol)
            .collect();
        let dropped: Vec<usize> = (0..k).filter(|&i| !keep[i]).collect();
        if dropped.is_empty() {
            return dropped;
        }
        retain_mask(&mut self.vertices, &keep);
        retain_mask(&mut self.qx, &keep);
        retain_mask(&mut self.h_mat, &keep);
        for r in &mut self.h_mat {
            retain_mask(r, &keep);
        }
        retain_mask(&mut self.h_vec, &keep);
        retain_mask(&mut self.lambda, &keep);
        normalize(&mut self.lambda);
        dropped
    }

    /// `Hλ + h` at the given weights.
    pub fn gradient_at(&self, lambda: &[f64]) -> Vec<f64> {
        master_gradient(&self.h_mat, &self.h_vec, lambda)
    }

    pub fn gradient(&self) -> Vec<f64> {
        self.gradient_at(&self.lambda)
    }

    pub fn objective_at(&self, lambda: &[f64]) -> f64 {
        master_objective(&self.h_mat, &self.h_vec, lambda)
    }

    /// The iterate `x = Bλ`.
    pub fn point(&self) -> Vec<f64> {
        combine(&self.vertices, &self.lambda)
    }

    /// `Qx` at the iterate, from the cached products.
    pub fn q_point(&self) -> Vec<f64> {
        combine(&self.qx, &self.lambda)
    }

    /// Gradient `2Qx + c` of the original objective at the iterate.
    pub fn full_gradient(&self, inst: &QpInstance) -> Vec<f64> {
        let mut g = self.q_point();
        for (gi, ci) in g.iter_mut().zip(inst.c()) {
            *gi = 2.0 * *gi + ci;
        }
        g
    }

    /// Largest entry-wise gap between the cached `H, h` and a rebuild.
    pub fn rebuild_error(&self, inst: &QpInstance) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.k() {
            let qi = inst.q().mul_vec(&self.vertices[i]);
            for j in 0..self.k() {
                let fresh = 2.0 * dot(&self.vertices[j], &qi);
                worst = worst.max((fresh - self.h_mat[i][j]).abs());
            }
            worst = worst.max((dot(inst.c(), &self.vertices[i]) - self.h_vec[i]).abs());
        }
        worst
    }
}

pub(crate) fn retain_mask<T>(v: &mut Vec<T>, keep: &[bool]) {
    let mut i = 0;
    v.retain(|_| {
        i += 1;
        keep[i - 1]
    });
}

fn combine(vs: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let n = vs.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    for (v, &wi) in vs.iter().zip(w) {
        if wi != 0.0 {
            axpy(wi, v, &mut out);
        }
    }
    out
}

pub(crate) fn normalize(lambda: &mut [f64]) {
    for v in lambda.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = lambda.iter().sum();
    if s > 0.0 {
        lambda.iter_mut().for_each(|v| *v /= s);
    }
}

pub fn master_gradient(h_mat: &[Vec<f64>], h_vec: &[f64], lambda: &[f64]) -> Vec<f64> {
    h_mat
        .iter()
        .zip(h_vec)
        .map(|(row, hi)| dot(row, lambda) + hi)
        .collect()
}

pub fn master_objective(h_mat: &[Vec<f64>], h_vec: &[f64], lambda: &[f64]) -> f64 {
    let hl: Vec<f64> = h_mat.iter().map(|row| dot(row, lambda)).collect();
    0.5 * dot(&hl, lambda) + dot(h_vec, lambda)
}

/// How a master solve ended.
#[derive(Debug, Clone, Default)]
pub struct MasterReport {
    /// Line steps that moved the iterate.
    pub steps: usize,
    pub boundary_hits: usize,
    /// False when an iteration cap cut the solve short.
    pub converged: bool,
    /// Largest normalized `|dᵢᵀHdⱼ|` seen after any step (when checked).
    pub max_conjugacy_error: f64,
    /// Largest number of conjugate steps taken inside one face.
    pub max_steps_in_face: usize,
}
