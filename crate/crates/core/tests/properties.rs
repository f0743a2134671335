use proptest::prelude::*;

use sdqp::bench::{read_records, write_records, BenchRecord};
use sdqp::instances::{generate_synthetic, InstanceClass, SyntheticConfig};
use sdqp::master::acdm::Acdm;
use sdqp::master::fgpm::{solve_fgpm, FgpmParams};
use sdqp::master::master_objective;
use sdqp::oracle::{oracle_simplex_qp, oracle_solve_qp};
use sdqp::sd::{sd_solve, MasterKind, PricingConfig, SdConfig};

fn class() -> impl Strategy<Value = InstanceClass> {
    prop::sample::select(InstanceClass::SYNTHETIC.to_vec())
}

fn psd(k: usize, w: &[f64]) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| (0..k).map(|j| 2.0 * (0..k).map(|l| w[i * k + l] * w[j * k + l]).sum::<f64>()).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sd_matches_oracle(class in class(), n in 4usize..20, m in 1usize..3, seed in 0u64..10_000, p in 0usize..8) {
        let (inst, _) = generate_synthetic(&SyntheticConfig { n, m, class, seed }).unwrap();
        let exact = oracle_solve_qp(&inst).unwrap();
        let r = sd_solve(&inst, &SdConfig::new(MasterKind::Acdm, PricingConfig::ALL[p])).unwrap();
        prop_assert!((r.f - exact.f).abs() <= 1e-6 * (1.0 + exact.f.abs()));
        prop_assert!(inst.max_violation(&r.x) <= 1e-8);
    }

    #[test]
    fn masters_agree_with_face_enumeration(k in 2usize..8, w in prop::collection::vec(-1.0f64..1.0, 64), hv in prop::collection::vec(-1.0f64..1.0, 8)) {
        let h = psd(k, &w);
        let hv = &hv[..k];
        let exact = oracle_simplex_qp(&h, hv).unwrap();
        let f_star = master_objective(&h, hv, &exact);
        let mut l = vec![0.0; k];
        l[0] = 1.0;
        let r = Acdm::new().solve(&h, hv, &mut l);
        prop_assert!(r.converged);
        prop_assert!(master_objective(&h, hv, &l) - f_star <= 1e-10 * (1.0 + f_star.abs()));
        let mut l = vec![1.0 / k as f64; k];
        solve_fgpm(&h, hv, &mut l, &FgpmParams { tol: 1e-9, ..Default::default() }, false, false).unwrap();
        prop_assert!(master_objective(&h, hv, &l) - f_star <= 1e-7 * (1.0 + f_star.abs()));
    }

    #[test]
    fn records_survive_csv(wall in 0.0f64..1e4, f in prop::option::of(-1e6f64..1e6), er in prop::option::of(0.0f64..1.0), iters in 0usize..100_000, name in "[a-zA-Z0-9_,\" -]{1,20}") {
        let rec = BenchRecord {
            instance: name,
            class: "R-b".into(),
            n: 100,
            m: 3,
            config: "fgpm/Sif-CE".into(),
            wall_time: wall,
            status: "optimal".into(),
            f,
            er,
            ei: er.map(|v| v * 3.0),
            iterations: iters,
            master_dim: iters / 2,
            t_pre: wall / 7.0,
            t_master: wall / 3.0,
            t_pricing: wall / 5.0,
            t_update: 0.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_records(&path, std::slice::from_ref(&rec)).unwrap();
        prop_assert_eq!(read_records(&path).unwrap(), vec![rec]);
    }
}
