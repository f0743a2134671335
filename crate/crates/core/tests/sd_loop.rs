mod common;

use sdqp::instances::{build_portfolio, synthetic_panel, TimeSeriesPanel};
use sdqp::linalg::{dist_inf, Matrix};
use sdqp::master::MasterState;
use sdqp::sd::{initialize, sd_solve, MasterKind, PricingConfig, SdConfig, SdStatus};
use sdqp::{LinearRow, QpInstance};

fn all_configs() -> Vec<SdConfig> {
    [MasterKind::Acdm, MasterKind::Fgpm]
        .into_iter()
        .flat_map(|m| PricingConfig::ALL.map(|p| SdConfig::new(m, p)))
        .collect()
}

#[test]
fn anti_correlated_pair_splits_evenly() {
    // returns +r/-r around the same mean: Σ = s²[[1,-1],[-1,1]]
    let values = vec![vec![0.01, 0.03, 0.01, 0.03], vec![0.03, 0.01, 0.03, 0.01]];
    let panel = TimeSeriesPanel::new(vec!["a".into(), "b".into()], values).unwrap();
    let inst = build_portfolio(&panel, 0.015, "pair").unwrap();
    for cfg in all_configs() {
        let r = sd_solve(&inst, &cfg).unwrap();
        assert_eq!(r.status, SdStatus::Optimal);
        assert!(dist_inf(&r.x, &[0.5, 0.5]) < 1e-5, "{}: {:?}", cfg.label(), r.x);
    }
}

#[test]
fn portfolio_starts_at_a_vertex_of_the_feasible_region() {
    let panel = synthetic_panel(12, 60, 4).unwrap();
    let inst = build_portfolio(&panel, 0.006, "p").unwrap();
    let (state, _) = initialize(&inst, &SdConfig::default()).unwrap();
    let x0 = &state.vertices()[0];
    assert!(inst.max_violation(x0) <= 1e-9);
    // a vertex has at most two fractional coordinates here (two rows)
    let fractional = x0.iter().filter(|v| **v > 1e-9 && **v < 1.0 - 1e-9).count();
    assert!(fractional <= 2, "{x0:?}");
}

#[test]
fn linear_objective_is_certified_in_one_pricing() {
    let n = 6;
    let mut inst = QpInstance::new("lin", Matrix::zeros(n, n), vec![0.4, -0.1, 0.3, 0.2, -0.6, 0.0]).unwrap();
    inst.push_ineq(LinearRow::new(vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0], 0.5)).unwrap();
    inst.set_bounds(vec![0.0; n], vec![1.0; n]).unwrap();
    for cfg in all_configs() {
        let r = sd_solve(&inst, &cfg).unwrap();
        assert_eq!(r.status, SdStatus::Optimal);
        assert_eq!(r.trace.records.len(), 1, "{}", cfg.label());
        assert!((r.f + 0.7).abs() < 1e-12);
    }
}

#[test]
fn added_vertices_keep_the_master_hessian_exact() {
    let inst = &common::small_corpus()[7];
    let mut state = MasterState::new();
    for k in 0..inst.n() {
        let mut g = vec![0.0; inst.n()];
        g[k] = -1.0;
        g[(k + 1) % inst.n()] = 0.5;
        let v = inst.feasible_region_lp(g).solve(&Default::default()).unwrap().x;
        let known = state.find_vertex(&v, 1e-10).is_some();
        assert_eq!(state.add_vertex(inst, v).is_none(), known);
    }
    assert!(state.k() > 2);
    assert!(state.rebuild_error(inst) <= 1e-9);
}

#[test]
fn drop_rule_examples() {
    let inst = QpInstance::new("d", Matrix::identity(2), vec![0.3, -0.2]).unwrap();
    let mut s = MasterState::new();
    s.add_vertex(&inst, vec![1.0, 0.0]);
    s.add_vertex(&inst, vec![0.0, 1.0]);
    s.lambda = vec![0.5, 0.5];
    assert!(s.drop_vertices(1e-10).is_empty());
    let f = s.objective_at(&s.lambda);
    s.add_vertex(&inst, vec![1.0, 1.0]);
    let before = s.point();
    assert_eq!(s.drop_vertices(1e-10), vec![2]);
    assert_eq!(s.k(), 2);
    assert_eq!(s.point(), before);
    assert!((s.objective_at(&s.lambda) - f).abs() <= 1e-12);
    s.lambda = vec![1.0, 0.0];
    s.drop_vertices(1e-10);
    assert_eq!(s.k(), 1);
}

#[test]
fn traces_are_consistent() {
    let corpus = common::small_corpus();
    for cfg in all_configs() {
        for inst in corpus.iter().step_by(9) {
            let r = sd_solve(inst, &cfg).unwrap();
            let t = &r.trace;
            let split = t.t_pre + t.t_master + t.t_pricing + t.t_update;
            assert!(split <= 1.05 * t.total + 1e-3, "{}: split {split} total {}", cfg.label(), t.total);
            for (i, rec) in t.records.iter().enumerate() {
                assert_eq!(rec.iter, i);
                assert!(rec.master_dim <= i + t.initial_vertices);
                assert!(rec.elapsed >= 0.0 && rec.t_master >= 0.0);
            }
            assert!(inst.max_violation(&r.x) <= 1e-8);
        }
    }
}

#[test]
fn reruns_are_deterministic() {
    let inst = &common::small_corpus()[20];
    for cfg in all_configs() {
        let a = sd_solve(inst, &cfg).unwrap();
        let b = sd_solve(inst, &cfg).unwrap();
        assert_eq!(a.f.to_bits(), b.f.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }
}

#[test]
fn limits_return_the_feasible_incumbent() {
    let inst = &common::small_corpus()[3];
    let mut cfg = SdConfig::default();
    cfg.max_iters = 2;
    let r = sd_solve(inst, &cfg).unwrap();
    assert_eq!(r.status, SdStatus::IterLimit);
    assert!(inst.max_violation(&r.x) <= 1e-8);
    cfg.max_iters = 100_000;
    cfg.time_limit_s = 1e-12;
    let r = sd_solve(inst, &cfg).unwrap();
    assert_eq!(r.status, SdStatus::TimeLimit);
}

#[test]
fn several_initial_vertices() {
    let corpus = common::small_corpus();
    let inst = &corpus[11];
    let exact = sdqp::oracle::oracle_solve_qp(inst).unwrap();
    let mut cfg = SdConfig::default();
    cfg.initial_vertices = 4;
    cfg.seed = 9;
    let r = sd_solve(inst, &cfg).unwrap();
    assert!(r.trace.initial_vertices > 1);
    assert!((r.f - exact.f).abs() <= 1e-6 * (1.0 + exact.f.abs()));
}

#[test]
fn oracle_master_matches_acdm_on_small_masters() {
    for inst in common::small_corpus().iter().filter(|i| i.n() <= 8) {
        let mut cfg = SdConfig::default();
        let a = sd_solve(inst, &cfg).unwrap();
        cfg.master = MasterKind::OracleMaster;
        match sd_solve(inst, &cfg) {
            Ok(b) => assert!((a.f - b.f).abs() <= 1e-9 * (1.0 + a.f.abs())),
            // face enumeration refuses masters above eight vertices
            Err(sdqp::Error::OracleBudget(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
}
