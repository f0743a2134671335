//! A small benchmark batch, then performance profiles and objective-decay
//! curves from its results.

use sdqp::bench::{decay_trace, perf_profile, references_from_traces, run_bench, Manifest};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let manifest = Manifest::from_toml(
        r#"
        configs = ["acdm/D", "acdm/Sif-E", "fgpm/D", "fgpm/Sif-E"]
        [[generate]]
        class = "S-b"
        n = 150
        m = "n/16"
        seeds = [1, 2, 3]
        [[generate]]
        class = "R-rb"
        n = 150
        m = "4"
        seeds = [1, 2, 3]
        "#,
    )?;
    let out = run_bench(&manifest, 4)?;
    for r in &out.records {
        println!(
            "{:<18} {:<11} {:>8.4}s  Er {:.1e}",
            r.instance,
            r.config,
            r.wall_time,
            r.er.unwrap_or(f64::NAN)
        );
    }

    let curves = perf_profile(&out.records, &manifest.configs)?;
    for c in &curves {
        println!("{:<11} rho(1) = {:.2}  rho(2) = {:.2}  rho(10) = {:.2}", c.solver, c.rho(1.0), c.rho(2.0), c.rho(10.0));
    }

    let refs = references_from_traces(&out.traces, "acdm/D")?;
    for c in decay_trace(&out.traces, &refs, 4, 0.0)? {
        let ys: Vec<String> = c.points.iter().map(|(_, y)| format!("{y:.4}")).collect();
        println!("{:<11} objective ratio at time ratio 0, .5, 1, 1.5, 2: {}", c.solver, ys.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("performance_profile");
}
