//! Projected gradient on the master simplex with a nonmonotone Armijo
//! search and spectral (Barzilai-Borwein) steplengths.
//!
//! Each iteration projects `λ − s∇f(λ)` with a fixed `s`, then searches
//! along `d = λ̂ − λ`. Trial steps are `δʲα₀` with `α₀ = min(ρ, 1)`, which
//! keeps every iterate on the simplex.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{master_gradient, master_objective, normalize, MasterReport, MasterState};
use crate::error::{Error, Result};
use crate::geometry::project_simplex_fast;
use crate::linalg::{dot, norm_inf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgpmParams {
    /// Fixed gradient step; `None` uses `1/‖H‖∞`.
    pub s: Option<f64>,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho0: f64,
    pub gamma1: f64,
    pub delta: f64,
    pub memory: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FgpmParams {
    fn default() -> Self {
        FgpmParams {
            s: None,
            rho_min: 1e-10,
            rho_max: 1e10,
            rho0: 1.0,
            gamma1: 1e-4,
            delta: 0.5,
            memory: 10,
            tol: 1e-6,
            max_iters: 100_000,
        }
    }
}

impl FgpmParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rho_min > 0.0
            && self.rho_min <= self.rho_max
            && self.gamma1 > 0.0
            && self.gamma1 < 0.5
            && self.delta > 0.0
            && self.delta < 1.0
            && self.tol > 0.0
            && self.s.is_none_or(|s| s > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config("invalid projected gradient parameters".into()))
        }
    }
}

/// One accepted line-search step, kept for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmijoStep {
    pub f_new: f64,
    /// Nonmonotone reference value `f̄`.
    pub f_ref: f64,
    pub beta: f64,
    /// `∇f(λ)ᵀd`.
    pub slope: f64,
    pub backtracks: usize,
    pub a: f64,
    pub b: f64,
    pub rho_next: f64,
}

impl ArmijoStep {
    /// The acceptance test the step passed.
    pub fn satisfies_armijo(&self, gamma1: f64) -> bool {
        self.f_new <= self.f_ref + gamma1 * self.beta * self.slope
    }
}

/// Spectral steplength update from `a = β²‖d‖²` and `b = βdᵀ(∇f⁺ − ∇f)`.
pub fn spectral_step(a: f64, b: f64, params: &FgpmParams) -> f64 {
    if b <= 0.0 {
        params.rho_max
    } else {
        (a / b).clamp(params.rho_min, params.rho_max)
    }
}

/// Nonmonotone Armijo search along `d` from `lambda`. Returns the accepted
/// step and the new iterate.
pub fn armijo_spectral(
    h: &[Vec<f64>],
    hv: &[f64],
    lambda: &[f64],
    d: &[f64],
    f_ref: f64,
    rho: f64,
    params: &FgpmParams,
) -> Result<(ArmijoStep, Vec<f64>)> {
    let g = master_gradient(h, hv, lambda);
    let slope = dot(&g, d);
    let mut beta = rho.min(1.0);
    let mut j = 0;
    loop {
        let trial: Vec<f64> = lambda.iter().zip(d).map(|(l, di)| l + beta * di).collect();
        let f_new = master_objective(h, hv, &trial);
        if f_new <= f_ref + params.gamma1 * beta * slope {
            let g_new = master_gradient(h, hv, &trial);
            let a = beta * beta * dot(d, d);
            let yk: Vec<f64> = g_new.iter().zip(&g).map(|(x, y)| x - y).collect();
            let b = beta * dot(d, &yk);
            let rho_next = spectral_step(a, b, params);
            let step = ArmijoStep {
                f_new,
                f_ref,
                beta,
                slope,
                backtracks: j,
                a,
                b,
                rho_next,
            };
            return Ok((step, trial));
        }
        j += 1;
        if j > 60 {
            return Err(Error::LineSearch(j));
        }
        beta *= params.delta;
    }
}

/// Result of a projected-gradient master solve.
#[derive(Debug, Clone, Default)]
pub struct FgpmOutcome {
    pub report: MasterReport,
    pub iterations: usize,
    /// Accepted steps, filled when `record` is set.
    pub steps: Vec<ArmijoStep>,
}

/// Runs the projected gradient method from `lambda`. With `force_step` the
/// first iteration moves whenever the projected direction is a descent
/// direction, even if it is shorter than the tolerance.
pub fn solve_fgpm(
    h: &[Vec<f64>],
    hv: &[f64],
    lambda: &mut [f64],
    params: &FgpmParams,
    record: bool,
    force_step: bool,
) -> Result<FgpmOutcome> {
    let k = lambda.len();
    let mut out = FgpmOutcome::default();
    if k <= 1 {
        lambda.iter_mut().for_each(|v| *v = 1.0);
        out.report.converged = true;
        return Ok(out);
    }
    let s = params.s.unwrap_or_else(|| {
        let norm = h
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        if norm > 0.0 {
            1.0 / norm
        } else {
            1.0
        }
    });
    let mut history: VecDeque<f64> = VecDeque::with_capacity(params.memory + 1);
    history.push_back(master_objective(h, hv, lambda));
    let mut rho = params.rho0;
    for it in 0..params.max_iters {
        out.iterations = it;
        let g = master_gradient(h, hv, lambda);
        let y: Vec<f64> = lambda.iter().zip(&g).map(|(l, gi)| l - s * gi).collect();
        let hat = project_simplex_fast(&y);
        let d: Vec<f64> = hat.iter().zip(lambda.iter()).map(|(a, b)| a - b).collect();
        let small = norm_inf(&d) <= params.tol && !(force_step && it == 0);
        if small || dot(&g, &d) >= 0.0 {
            out.report.converged = true;
            break;
        }
        let f_ref = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (step, next) = armijo_spectral(h, hv, lambda, &d, f_ref, rho, params)?;
        rho = step.rho_next;
        lambda.copy_from_slice(&next);
        out.report.steps += 1;
        if history.len() == params.memory + 1 {
            history.pop_front();
        }
        history.push_back(step.f_new);
        if record {
            out.steps.push(step);
        }
    }
    normalize(lambda);
    Ok(out)
}

pub fn solve_master_fgpm(
    state: &mut MasterState,
    params: &FgpmParams,
    record: bool,
    force_step: bool,
) -> Result<FgpmOutcome> {
    let mut lambda = std::mem::take(&mut state.lambda);
    let out = solve_fgpm(state.hessian(), state.linear(), &mut lambda, params, record, force_step);
    state.lambda = lambda;
    out
}
