//! Mean-variance portfolios over a synthetic return panel: one solve per
//! required return, then the same problem after cloning every asset with
//! noise.

use sdqp::instances::{augment_series, build_portfolio, synthetic_panel, MU_GRID};
use sdqp::sd::{sd_solve, SdConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let panel = synthetic_panel(60, 120, 3)?;
    for mu in MU_GRID {
        let inst = build_portfolio(&panel, mu, format!("mu_{mu}"))?;
        let r = sd_solve(&inst, &SdConfig::default())?;
        let held = r.x.iter().filter(|w| **w > 1e-6).count();
        let ret: f64 = panel.means().iter().zip(&r.x).map(|(m, w)| m * w).sum();
        println!("mu {mu:.3}: variance {:.4e}, return {ret:.4}, {held} assets held", r.f);
    }

    let big = augment_series(&panel, 3, 0.05, 3)?;
    let inst = build_portfolio(&big, MU_GRID[2], "augmented")?;
    let r = sd_solve(&inst, &SdConfig::default())?;
    println!(
        "{} assets after augmentation: variance {:.4e} in {} iterations",
        big.n_assets(),
        r.f,
        r.iterations
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("portfolio");
}
