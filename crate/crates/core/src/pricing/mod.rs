//! The pricing problem `min ∇f(x_k)ᵀ(x − x_k)` over the feasible region,
//! optionally intersected with shrinking cuts, solved by the dense simplex
//! engine either directly or by column sifting, to optimality or up to the
//! first vertex that is good enough.

pub mod cuts;
pub mod sifting;
pub mod simplex;

pub use cuts::{Cut, CutPool};
pub use sifting::{sifting_solve, SiftingOptions, SiftingStats};
pub use simplex::{Basis, LpProblem, LpSolution, LpStatus, RowKind, SimplexOptions};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::problem::QpInstance;

/// Row ids at or above this value belong to cuts.
pub const CUT_ROW_BASE: u64 = 1 << 40;

/// Solves an LP with the dense simplex engine.
pub fn lp_solve(lp: &LpProblem) -> Result<LpSolution> {
    lp.solve(&SimplexOptions::default())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PricingOptions {
    /// Stop at the first vertex with value `≤ −ε`.
    pub early_eps: Option<f64>,
    pub use_cuts: bool,
    pub use_sifting: bool,
}

#[derive(Debug, Clone)]
pub struct PricingOutcome {
    pub vertex: Vec<f64>,
    /// `∇f(x_k)ᵀ(x̃ − x_k)`.
    pub value: f64,
    pub status: LpStatus,
    pub pivots: usize,
    /// The LP with cuts was infeasible and the cuts were ignored.
    pub cuts_ignored: bool,
    pub basis: Basis,
    pub sifting: Option<SiftingStats>,
}

/// Builds the pricing LP for gradient `grad`, with the pool's cuts as
/// `−aᵀx ≥ −β` rows when `with_cuts` is set.
pub fn pricing_lp(inst: &QpInstance, grad: &[f64], pool: &CutPool, with_cuts: bool) -> LpProblem {
    let mut lp = inst.feasible_region_lp(grad.to_vec());
    if with_cuts {
        for cut in pool.cuts() {
            let a: Vec<f64> = cut.a.iter().map(|v| -v).collect();
            lp.push_row_with_id(a, RowKind::Ge, -cut.beta, CUT_ROW_BASE + cut.id);
        }
    }
    lp
}

/// Solves the pricing problem at `x_k` with gradient `grad`.
pub fn price(
    inst: &QpInstance,
    x_k: &[f64],
    grad: &[f64],
    pool: &CutPool,
    opts: &PricingOptions,
    warm: Option<&Basis>,
) -> Result<PricingOutcome> {
    let base = dot(grad, x_k);
    let simplex_opts = SimplexOptions {
        stop_below: opts.early_eps.map(|eps| base - eps),
        warm_start: warm.cloned(),
        ..Default::default()
    };
    let with_cuts = opts.use_cuts && !pool.is_empty();
    let run = |cuts: bool| -> Result<(LpSolution, Option<SiftingStats>)> {
        let lp = pricing_lp(inst, grad, pool, cuts);
        if opts.use_sifting {
            let (sol, stats) = sifting_solve(&lp, Some(x_k), &SiftingOptions::default(), &simplex_opts)?;
            Ok((sol, Some(stats)))
        } else {
            Ok((lp.solve(&simplex_opts)?, None))
        }
    };
    let (sol, sifting, cuts_ignored) = match run(with_cuts) {
        Ok((s, st)) => (s, st, false),
        // cuts can only empty the region through rounding
        Err(Error::Infeasible) if with_cuts => {
            let (s, st) = run(false)?;
            (s, st, true)
        }
        Err(e) => return Err(e),
    };
    let value = dot(grad, &sol.x) - base;
    Ok(PricingOutcome {
        vertex: sol.x,
        value,
        status: sol.status,
        pivots: sol.pivots,
        cuts_ignored,
        basis: sol.basis,
        sifting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn simplex_inst(n: usize) -> QpInstance {
        let mut inst = QpInstance::new("s", Matrix::identity(n), vec![0.0; n]).unwrap();
        inst.push_eq(crate::problem::LinearRow::new(vec![1.0; n], 1.0)).unwrap();
        inst.set_bounds(vec![0.0; n], vec![1.0; n]).unwrap();
        inst
    }

    #[test]
    fn optimal_point_gives_nonnegative_value() {
        let inst = simplex_inst(4);
        let x = vec![0.25; 4];
        let g = inst.eval_gradient(&x).unwrap();
        for opts in [
            PricingOptions::default(),
            PricingOptions {
                use_sifting: true,
                ..Default::default()
            },
        ] {
            let out = price(&inst, &x, &g, &CutPool::new(100), &opts, None).unwrap();
            assert!(out.value >= -1e-9);
            assert_eq!(out.status, LpStatus::Optimal);
        }
    }

    #[test]
    fn infinite_eps_is_plain_pricing() {
        let inst = simplex_inst(5);
        let x = vec![1.0, 0.0, 0.0, 0.0, 0.0];
        let g = vec![0.3, -0.1, 0.2, -0.4, 0.0];
        let plain = price(&inst, &x, &g, &CutPool::new(100), &PricingOptions::default(), None).unwrap();
        let inf = PricingOptions {
            early_eps: Some(f64::INFINITY),
            ..Default::default()
        };
        let early = price(&inst, &x, &g, &CutPool::new(100), &inf, None).unwrap();
        assert_eq!(plain.vertex, early.vertex);
        assert_eq!(early.status, LpStatus::Optimal);
    }

    #[test]
    fn vertex_respects_cuts() {
        let inst = simplex_inst(3);
        let mut pool = CutPool::new(100);
        // iterates along a descent path
        let xs = [vec![1.0, 0.0, 0.0], vec![0.5, 0.5, 0.0]];
        for (i, x) in xs.iter().enumerate() {
            pool.add_cut(i, x, &inst.eval_gradient(x).unwrap());
        }
        let x = &xs[1];
        let g = inst.eval_gradient(x).unwrap();
        let opts = PricingOptions {
            use_cuts: true,
            ..Default::default()
        };
        let out = price(&inst, x, &g, &pool, &opts, None).unwrap();
        assert!(pool.min_slack(&out.vertex) >= -1e-8);
        assert!(out.value < 0.0);
    }
}
