//! The two master solvers side by side on a master problem over the
//! simplex, checked against face enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdqp::master::acdm::Acdm;
use sdqp::master::fgpm::{solve_fgpm, FgpmParams};
use sdqp::master::master_objective;
use sdqp::oracle::oracle_simplex_qp;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let k = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // H = 2WᵀW is positive semidefinite
    let w: Vec<Vec<f64>> = (0..k).map(|_| (0..k).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
    let h: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| 2.0 * (0..k).map(|l| w[l][i] * w[l][j]).sum::<f64>()).collect())
        .collect();
    let hv: Vec<f64> = (0..k).map(|_| rng.random::<f64>() - 0.5).collect();

    let exact = oracle_simplex_qp(&h, &hv)?;
    println!("enumeration   f = {:.12}", master_objective(&h, &hv, &exact));

    let mut lambda = vec![0.0; k];
    lambda[0] = 1.0;
    let mut acdm = Acdm::new();
    acdm.check_conjugacy = true;
    let rep = acdm.solve(&h, &hv, &mut lambda);
    println!(
        "acdm          f = {:.12}  ({} steps, {} boundary hits, conjugacy error {:.1e})",
        master_objective(&h, &hv, &lambda),
        rep.steps,
        rep.boundary_hits,
        rep.max_conjugacy_error
    );

    let mut lambda = vec![1.0 / k as f64; k];
    let out = solve_fgpm(&h, &hv, &mut lambda, &FgpmParams::default(), true, false)?;
    let backtracks: usize = out.steps.iter().map(|s| s.backtracks).sum();
    println!(
        "fgpm          f = {:.12}  ({} iterations, {backtracks} backtracks)",
        master_objective(&h, &hv, &lambda),
        out.iterations
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("master_solvers");
}
