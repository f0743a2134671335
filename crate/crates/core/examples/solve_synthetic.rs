//! Generate one synthetic instance per class and solve it with the default
//! configuration.

use sdqp::instances::{generate_synthetic, InstanceClass, SyntheticConfig};
use sdqp::sd::{sd_solve, MasterKind, PricingConfig, SdConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SdConfig::new(MasterKind::Acdm, "Sif".parse::<PricingConfig>()?);
    println!("{:<22} {:>12} {:>6} {:>6} {:>9}", "instance", "f*", "iters", "dim", "time");
    for class in InstanceClass::SYNTHETIC {
        let (inst, _) = generate_synthetic(&SyntheticConfig {
            n: 300,
            m: 8,
            class,
            seed: 7,
        })?;
        let r = sd_solve(&inst, &cfg)?;
        println!(
            "{:<22} {:>12.6e} {:>6} {:>6} {:>8.3}s",
            inst.name, r.f, r.iterations, r.master_dim, r.trace.total
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("solve_synthetic");
}
