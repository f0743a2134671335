//! Instance files, metadata sidecars and solver configuration documents.

use sdqp::instances::{generate_synthetic, InstanceClass, InstanceMetadata, SyntheticConfig};
use sdqp::sd::{sd_solve, SdConfig};
use sdqp::QpInstance;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("sdqp_instance_io");
    std::fs::create_dir_all(&dir)?;
    let (inst, meta) = generate_synthetic(&SyntheticConfig {
        n: 50,
        m: 4,
        class: InstanceClass::Srb,
        seed: 9,
    })?;
    let path = dir.join(format!("{}.qp", inst.name));
    inst.write_instance(&path)?;
    meta.write(path.with_extension("json"))?;

    let back = QpInstance::read_instance(&path)?;
    let meta_back = InstanceMetadata::read(path.with_extension("json"))?;
    assert_eq!(back, inst);
    assert_eq!(meta_back, meta);
    println!("{} ({} variables, {} rows), valid: {}", path.display(), back.n(), back.m(), back.validate().is_ok());

    let mut cfg = SdConfig::default();
    cfg.cuts = true;
    cfg.tol_sd = 1e-8;
    let text = cfg.to_toml()?;
    println!("{text}");
    let r = sd_solve(&back, &SdConfig::from_toml(&text)?)?;
    println!("{}: f* = {:.10e}", cfg.label(), r.f);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("instance_io");
}
