#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdqp::instances::{build_portfolio, generate_synthetic, synthetic_panel, InstanceClass, SyntheticConfig, MU_GRID};
use sdqp::QpInstance;

/// 95 synthetic instances cycling through the six classes plus five
/// portfolio instances, all with `n ≤ 30` and at most five rows.
pub fn small_corpus() -> Vec<QpInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();
    for i in 0..95 {
        let class = InstanceClass::SYNTHETIC[i % 6];
        let n = rng.random_range(4..=30);
        let budget_rows = match class {
            InstanceClass::Sb => 1,
            InstanceClass::Srb | InstanceClass::Rrb => 2,
            _ => 0,
        };
        let m = rng.random_range(1..=(5 - budget_rows).min(n));
        let cfg = SyntheticConfig {
            n,
            m,
            class,
            seed: 1000 + i as u64,
        };
        out.push(generate_synthetic(&cfg).unwrap().0);
    }
    for (i, mu) in MU_GRID.iter().enumerate() {
        let n = 5 + 5 * i;
        let panel = synthetic_panel(n, 60, 77 + i as u64).unwrap();
        let best = panel.means().into_iter().fold(f64::NEG_INFINITY, f64::max);
        out.push(build_portfolio(&panel, mu.min(0.9 * best), format!("portfolio_{i}")).unwrap());
    }
    out
}
