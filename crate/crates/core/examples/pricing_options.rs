//! All eight pricing option sets for both master solvers on one instance.

use sdqp::instances::{generate_synthetic, InstanceClass, SyntheticConfig};
use sdqp::sd::{sd_solve, MasterKind, PricingConfig, SdConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (inst, _) = generate_synthetic(&SyntheticConfig {
        n: 400,
        m: 12,
        class: InstanceClass::Rb,
        seed: 2,
    })?;
    println!("{}", inst.name);
    println!("{:<12} {:>16} {:>6} {:>8} {:>9}", "config", "f*", "iters", "pivots", "time");
    for master in [MasterKind::Acdm, MasterKind::Fgpm] {
        for p in PricingConfig::ALL {
            let cfg = SdConfig::new(master, p);
            let r = sd_solve(&inst, &cfg)?;
            let pivots: usize = r.trace.records.iter().map(|x| x.pivots).sum();
            println!(
                "{:<12} {:>16.10e} {:>6} {:>8} {:>8.3}s",
                cfg.label(),
                r.f,
                r.iterations,
                pivots,
                r.trace.total
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("pricing_options");
}
