//! Column sifting for LPs with many more columns than rows.
//!
//! A restricted LP over a working set of columns is solved with every other
//! column held at a bound. The row duals then price the held columns, the
//! most attractive ones join the working set, and the restricted problem is
//! re-optimized from its current basis. This stops when no held column has
//! a negative reduced cost, at which point the restricted optimum is optimal
//! for the full LP.

use rayon::prelude::*;

use super::simplex::{Engine, LpProblem, LpSolution, LpStatus, SimplexOptions, VarId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct SiftingOptions {
    /// Columns added per round; `None` means `max(50, m)`.
    pub batch: Option<usize>,
    /// Most attractive columns added to the initial working set; `None`
    /// means `2m`.
    pub initial_extra: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SiftingStats {
    pub rounds: usize,
    pub initial_columns: usize,
    pub columns_added: usize,
    /// The restricted LP was infeasible and the full LP was solved instead.
    pub fell_back: bool,
}

const SNAP: f64 = 1e-12;

/// Solves `lp` by sifting. Columns of `x_ref` strictly inside their bounds
/// start in the working set; the others are held at the bound `x_ref` sits
/// on. With `x_ref = None` held columns sit at their lower bound.
pub fn sifting_solve(
    lp: &LpProblem,
    x_ref: Option<&[f64]>,
    sift: &SiftingOptions,
    opts: &SimplexOptions,
) -> Result<(LpSolution, SiftingStats)> {
    let n = lp.n();
    let m = lp.m();
    let mut stats = SiftingStats::default();
    let mut fixed = vec![0.0; n];
    let mut working = vec![false; n];
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let v = x_ref.map_or(l, |x| x[j]);
        if !l.is_finite() && !u.is_finite() {
            working[j] = true;
        } else if l.is_finite() && (v - l).abs() <= SNAP {
            fixed[j] = l;
        } else if (u.is_finite() && (v - u).abs() <= SNAP) || (!l.is_finite() && x_ref.is_none()) {
            fixed[j] = u;
        } else {
            working[j] = true;
            fixed[j] = v;
        }
    }
    if let Some(w) = &opts.warm_start {
        for id in &w.basic {
            if let VarId::Structural(j) = id {
                if *j < n {
                    working[*j] = true;
                }
            }
        }
    }
    // most attractive held columns by signed cost
    let extra = sift.initial_extra.unwrap_or(2 * m);
    let mut scored: Vec<(usize, f64)> = (0..n)
        .filter(|&j| !working[j])
        .map(|j| {
            let g = lp.objective[j];
            let score = if fixed[j] == lp.lower[j] { g } else { -g };
            (j, score)
        })
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    for &(j, _) in scored.iter().take(extra) {
        working[j] = true;
    }
    let cols: Vec<usize> = (0..n).filter(|&j| working[j]).collect();
    stats.initial_columns = cols.len();

    let mut engine = Engine::new(lp, cols, &fixed, opts);
    match engine.solve(opts) {
        Ok(()) => {}
        Err(Error::Infeasible) => {
            stats.fell_back = true;
            return Ok((lp.solve(opts)?, stats));
        }
        Err(e) => return Err(e),
    }
    let batch = sift.batch.unwrap_or(50.max(m));
    loop {
        stats.rounds += 1;
        if engine.status() == LpStatus::EarlyStopped {
            break;
        }
        let y = engine.duals();
        let mut candidates: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .filter(|&j| !engine.is_active(j))
            .filter_map(|j| {
                let d = engine.column_reduced_cost(j, &y);
                let at_lower = engine.fixed_value(j) == lp.lower[j];
                let gain = if at_lower { -d } else { d };
                (gain > opts.opt_tol).then_some((j, gain))
            })
            .collect();
        if candidates.is_empty() {
            break;
        }
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let add: Vec<usize> = candidates.iter().take(batch).map(|c| c.0).collect();
        stats.columns_added += add.len();
        engine.add_columns(&add);
        engine.resume(opts)?;
    }
    Ok((engine.solution(), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::simplex::RowKind;
    use rand::{Rng, SeedableRng};

    fn random_lp(n: usize, m: usize, seed: u64) -> LpProblem {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut lp = LpProblem::new(g, vec![0.0; n], vec![1.0; n]);
        lp.push_row(vec![1.0; n], RowKind::Eq, 1.0);
        for _ in 1..m {
            let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mn = a.iter().copied().fold(f64::INFINITY, f64::min);
            let mx = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            lp.push_row(a, RowKind::Ge, 0.75 * mn + 0.25 * mx);
        }
        lp
    }

    #[test]
    fn matches_full_solve() {
        for seed in 0..5 {
            let lp = random_lp(1000, 3, seed);
            let full = lp.solve(&SimplexOptions::default()).unwrap();
            let (sift, _) =
                sifting_solve(&lp, None, &SiftingOptions::default(), &SimplexOptions::default()).unwrap();
            assert!((full.objective - sift.objective).abs() <= 1e-8, "seed {seed}");
            assert!(lp.max_violation(&sift.x) <= 1e-9);
        }
    }

    #[test]
    fn optimal_basis_in_working_set_needs_no_additions() {
        let lp = random_lp(200, 2, 9);
        let full = lp.solve(&SimplexOptions::default()).unwrap();
        let (sift, stats) = sifting_solve(
            &lp,
            Some(&full.x),
            &SiftingOptions {
                batch: None,
                initial_extra: Some(0),
            },
            &SimplexOptions {
                warm_start: Some(full.basis.clone()),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(stats.rounds, 1);
        assert_eq!(stats.columns_added, 0);
        assert!((sift.objective - full.objective).abs() <= 1e-12);
    }

    #[test]
    fn small_batches_force_several_rounds() {
        let lp = random_lp(500, 4, 3);
        let full = lp.solve(&SimplexOptions::default()).unwrap();
        // start from the worst vertex so the optimum is far away
        let mut flipped = lp.clone();
        flipped.objective.iter_mut().for_each(|v| *v = -*v);
        let start = flipped.solve(&SimplexOptions::default()).unwrap();
        let (sift, stats) = sifting_solve(
            &lp,
            Some(&start.x),
            &SiftingOptions {
                batch: Some(1),
                initial_extra: Some(1),
            },
            &SimplexOptions::default(),
        )
        .unwrap();
        assert!(!stats.fell_back);
        assert!(stats.rounds >= 2);
        assert!((full.objective - sift.objective).abs() <= 1e-8);
    }
}
