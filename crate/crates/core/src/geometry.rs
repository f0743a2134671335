//! Euclidean projection onto the unit simplex `{λ ≥ 0, Σλ = 1}`.

/// Projection by Gauss-Seidel variable fixing (Condat's variant of
/// Michelot's method). Runs in near-linear time on typical inputs.
pub fn project_simplex_fast(y: &[f64]) -> Vec<f64> {
    let k = y.len();
    assert!(k >= 1, "projection needs at least one coordinate");
    if k == 1 {
        return vec![1.0];
    }
    // candidate set v, with a waiting list for elements that were
    // discarded before tau settled
    let mut v: Vec<f64> = Vec::with_capacity(k);
    let mut waiting: Vec<f64> = Vec::new();
    v.push(y[0]);
    let mut tau = y[0] - 1.0;
    for &yi in &y[1..] {
        if yi > tau {
            tau += (yi - tau) / (v.len() as f64 + 1.0);
            if tau > yi - 1.0 {
                v.push(yi);
            } else {
                waiting.append(&mut v);
                v.push(yi);
                tau = yi - 1.0;
            }
        }
    }
    for &w in &waiting {
        if w > tau {
            v.push(w);
            tau += (w - tau) / v.len() as f64;
        }
    }
    loop {
        let before = v.len();
        let mut i = 0;
        while i < v.len() {
            if v[i] <= tau {
                let removed = v.swap_remove(i);
                tau += (tau - removed) / v.len() as f64;
            } else {
                i += 1;
            }
        }
        if v.len() == before {
            break;
        }
    }
    finish(y, tau)
}

/// Reference projection: sort descending and find the threshold.
pub fn project_simplex_sort(y: &[f64]) -> Vec<f64> {
    let k = y.len();
    assert!(k >= 1, "projection needs at least one coordinate");
    if k == 1 {
        return vec![1.0];
    }
    let mut s = y.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = s[0] - 1.0;
    for (j, &sj) in s.iter().enumerate() {
        cum += sj;
        let t = (cum - 1.0) / (j as f64 + 1.0);
        if sj - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    finish(y, tau)
}

/// Clips at the threshold and removes the residual rounding error from the
/// sum by rescaling the positive part.
fn finish(y: &[f64], tau: f64) -> Vec<f64> {
    let mut p: Vec<f64> = y.iter().map(|v| (v - tau).max(0.0)).collect();
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|v| *v /= s);
    } else {
        // all mass clipped away only happens with non-finite input
        let k = p.len() as f64;
        p.iter_mut().for_each(|v| *v = 1.0 / k);
    }
    p
}

/// True if `lambda` is nonnegative and sums to one within `tol`.
pub fn on_simplex(lambda: &[f64], tol: f64) -> bool {
    lambda.iter().all(|v| *v >= -tol) && (lambda.iter().sum::<f64>() - 1.0).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist_inf, dot, norm2};
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(project_simplex_fast(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(project_simplex_fast(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex_fast(&[0.3, 0.3, 0.3]);
        assert!(dist_inf(&p, &[1.0 / 3.0; 3]) < 1e-15);
        assert_eq!(project_simplex_sort(&[0.0, 1.0, 0.0]), vec![0.0, 1.0, 0.0]);
        assert_eq!(project_simplex_sort(&[10.0, 1.0]), vec![1.0, 0.0]);
        assert_eq!(project_simplex_fast(&[-7.0]), vec![1.0]);
    }

    #[test]
    fn idempotent() {
        let y = [0.9, -0.2, 0.4, 1.3];
        let p = project_simplex_sort(&y);
        assert!(dist_inf(&project_simplex_sort(&p), &p) < 1e-15);
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        (1usize..40).prop_flat_map(|k| prop::collection::vec(-5.0f64..5.0, k))
    }

    proptest! {
        #[test]
        fn feasible_and_agreeing(y in vec_strategy()) {
            let a = project_simplex_fast(&y);
            let b = project_simplex_sort(&y);
            prop_assert!(on_simplex(&a, 1e-12));
            prop_assert!(dist_inf(&a, &b) <= 1e-12);
        }

        #[test]
        fn variational_inequality(y in vec_strategy(), seed in any::<u64>()) {
            let p = project_simplex_fast(&y);
            let k = y.len();
            // random feasible point
            let raw: Vec<f64> = (0..k).map(|i| ((seed.wrapping_mul(i as u64 + 7) >> 11) % 1000) as f64 + 1.0).collect();
            let s: f64 = raw.iter().sum();
            let x: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let r: Vec<f64> = y.iter().zip(&p).map(|(a, b)| a - b).collect();
            let d: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
            prop_assert!(dot(&r, &d) <= 1e-10);
        }

        #[test]
        fn nonexpansive(pair in (1usize..30).prop_flat_map(|k| (prop::collection::vec(-3.0f64..3.0, k), prop::collection::vec(-3.0f64..3.0, k)))) {
            let (y1, y2) = pair;
            let p1 = project_simplex_fast(&y1);
            let p2 = project_simplex_fast(&y2);
            let dp: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a - b).collect();
            let dy: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a - b).collect();
            prop_assert!(norm2(&dp) <= norm2(&dy) + 1e-12);
        }
    }
}
