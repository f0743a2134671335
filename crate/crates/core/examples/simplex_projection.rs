//! Euclidean projection onto the unit simplex: the linear-time variant
//! against the sorting one.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdqp::geometry::{on_simplex, project_simplex_fast, project_simplex_sort};
use sdqp::linalg::dist_inf;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:?}", project_simplex_fast(&[0.8, 0.6, -0.3]));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [10, 1_000, 100_000] {
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let t = Instant::now();
        let fast = project_simplex_fast(&y);
        let t_fast = t.elapsed();
        let t = Instant::now();
        let slow = project_simplex_sort(&y);
        let t_sort = t.elapsed();
        assert!(on_simplex(&fast, 1e-12));
        println!(
            "n = {n:>6}: fast {t_fast:>10.2?}  sort {t_sort:>10.2?}  distance {:.1e}",
            dist_inf(&fast, &slow)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("simplex_projection");
}
