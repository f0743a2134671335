//! Compare SD against the certified KKT oracle on small instances.

use sdqp::instances::{generate_synthetic, InstanceClass, SyntheticConfig};
use sdqp::oracle::oracle_solve_qp;
use sdqp::sd::{sd_solve, MasterKind, PricingConfig, SdConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut worst: f64 = 0.0;
    for (i, class) in InstanceClass::SYNTHETIC.into_iter().enumerate() {
        let (inst, _) = generate_synthetic(&SyntheticConfig {
            n: 12 + 3 * i,
            m: 3,
            class,
            seed: 40 + i as u64,
        })?;
        let exact = oracle_solve_qp(&inst)?;
        println!(
            "{:<16} f* = {:.10e}  active {:>2}  KKT residual {:.1e}",
            inst.name,
            exact.f,
            exact.active.len(),
            exact.residuals.max()
        );
        for master in [MasterKind::Acdm, MasterKind::Fgpm] {
            for p in PricingConfig::ALL {
                let r = sd_solve(&inst, &SdConfig::new(master, p))?;
                worst = worst.max((r.f - exact.f).abs() / (1.0 + exact.f.abs()));
            }
        }
    }
    println!("largest relative error over 16 configurations: {worst:.2e}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("oracle_check");
}
