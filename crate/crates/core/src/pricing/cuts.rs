//! Shrinking cuts `∇f(xᵢ)ᵀ(x − xᵢ) ≤ 0`.
//!
//! For convex `f`, any point with `f(y) ≤ f(xᵢ)` satisfies the cut, so the
//! cuts keep every later incumbent and the optimum while trimming the
//! region the pricing LP searches.

use crate::linalg::dot;

/// Slack above which a cut counts as inactive and is pruned.
pub const PRUNE_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub a: Vec<f64>,
    pub beta: f64,
    /// SD iteration that produced the cut.
    pub origin: usize,
    pub(crate) id: u64,
}

impl Cut {
    /// `β − aᵀx`; nonnegative when `x` satisfies the cut.
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.beta - dot(&self.a, x)
    }
}

#[derive(Debug, Clone)]
pub struct CutPool {
    cuts: Vec<Cut>,
    cap: usize,
    next_id: u64,
}

impl CutPool {
    /// `cap` is the last SD iteration (exclusive) that may add cuts.
    pub fn new(cap: usize) -> Self {
        CutPool {
            cuts: Vec::new(),
            cap,
            next_id: 0,
        }
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// Stores the cut through `x_k`. No-op once `iter` reaches the cap.
    pub fn add_cut(&mut self, iter: usize, x_k: &[f64], grad_k: &[f64]) -> bool {
        if iter >= self.cap {
            return false;
        }
        self.cuts.push(Cut {
            a: grad_k.to_vec(),
            beta: dot(grad_k, x_k),
            origin: iter,
            id: self.next_id,
        });
        self.next_id += 1;
        true
    }

    /// Drops cuts whose slack at `last_vertex` exceeds the prune threshold.
    /// Returns how many were removed.
    pub fn prune_inactive(&mut self, last_vertex: &[f64]) -> usize {
        let before = self.cuts.len();
        self.cuts.retain(|c| c.slack(last_vertex) <= PRUNE_SLACK);
        before - self.cuts.len()
    }

    /// Smallest slack over all cuts (`∞` for an empty pool).
    pub fn min_slack(&self, x: &[f64]) -> f64 {
        self.cuts.iter().map(|c| c.slack(x)).fold(f64::INFINITY, f64::min)
    }
}
