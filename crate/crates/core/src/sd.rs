//! The simplicial decomposition loop.
//!
//! Each iteration solves the master over the current vertex set, drops
//! vertices whose weight vanished, prices a new vertex with the LP and
//! stops once the pricing value certifies optimality.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist_inf, dot};
use crate::master::acdm::{solve_master_acdm, Acdm};
use crate::master::fgpm::{solve_master_fgpm, ArmijoStep, FgpmParams};
use crate::master::{MasterReport, MasterState};
use crate::oracle::oracle_simplex_qp;
use crate::pricing::{price, Basis, Cut, CutPool, LpStatus, PricingOptions, SimplexOptions};
use crate::problem::QpInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasterKind {
    Acdm,
    Fgpm,
    /// Face enumeration; only for masters with at most 8 vertices.
    OracleMaster,
}

impl MasterKind {
    pub fn label(self) -> &'static str {
        match self {
            MasterKind::Acdm => "acdm",
            MasterKind::Fgpm => "fgpm",
            MasterKind::OracleMaster => "oracle_master",
        }
    }
}

impl FromStr for MasterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "acdm" => Ok(MasterKind::Acdm),
            "fgpm" => Ok(MasterKind::Fgpm),
            "oracle_master" | "oracle" => Ok(MasterKind::OracleMaster),
            _ => Err(Error::InvalidArgument(format!("unknown master solver '{s}'"))),
        }
    }
}

/// One of the eight pricing option sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PricingConfig {
    pub sifting: bool,
    pub cuts: bool,
    pub early_stop: bool,
}

impl PricingConfig {
    pub const ALL: [PricingConfig; 8] = [
        PricingConfig::new(false, false, false),
        PricingConfig::new(false, true, false),
        PricingConfig::new(false, false, true),
        PricingConfig::new(false, true, true),
        PricingConfig::new(true, false, false),
        PricingConfig::new(true, true, false),
        PricingConfig::new(true, false, true),
        PricingConfig::new(true, true, true),
    ];

    pub const fn new(sifting: bool, cuts: bool, early_stop: bool) -> Self {
        PricingConfig {
            sifting,
            cuts,
            early_stop,
        }
    }

    /// `D`, `C`, `E`, `CE`, `Sif`, `Sif-C`, `Sif-E` or `Sif-CE`.
    pub fn label(&self) -> String {
        let mut suffix = String::new();
        if self.cuts {
            suffix.push('C');
        }
        if self.early_stop {
            suffix.push('E');
        }
        match (self.sifting, suffix.is_empty()) {
            (false, true) => "D".into(),
            (false, false) => suffix,
            (true, true) => "Sif".into(),
            (true, false) => format!("Sif-{suffix}"),
        }
    }
}

impl fmt::Display for PricingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for PricingConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PricingConfig::ALL
            .into_iter()
            .find(|p| p.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown pricing option set '{s}'")))
    }
}

/// Solver settings. Serializes as a flat key-value table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdConfig {
    pub master: MasterKind,
    pub sifting: bool,
    pub early_stop: bool,
    pub cuts: bool,
    /// Stop when the pricing value is at least `−tol_sd·(1 + |f|)`.
    pub tol_sd: f64,
    /// Early-stopping threshold is `early_eps·(1 + |f|)`.
    pub early_eps: f64,
    pub drop_tol: f64,
    pub time_limit_s: f64,
    pub max_iters: usize,
    /// Iteration from which no more cuts are added.
    pub cut_cap: usize,
    pub initial_vertices: usize,
    pub seed: u64,
    pub fgpm_s: Option<f64>,
    pub fgpm_rho0: f64,
    pub fgpm_rho_min: f64,
    pub fgpm_rho_max: f64,
    pub fgpm_gamma1: f64,
    pub fgpm_delta: f64,
    pub fgpm_memory: usize,
    pub fgpm_tol: f64,
    pub fgpm_max_iters: usize,
    /// Keep added vertices, cut snapshots and line-search steps in the
    /// trace.
    pub record_details: bool,
    /// Measure direction-set conjugacy after every ACDM step.
    pub check_conjugacy: bool,
}

impl Default for SdConfig {
    fn default() -> Self {
        let f = FgpmParams::default();
        SdConfig {
            master: MasterKind::Acdm,
            sifting: false,
            early_stop: false,
            cuts: false,
            tol_sd: 1e-6,
            early_eps: 1e-4,
            drop_tol: 1e-10,
            time_limit_s: 1000.0,
            max_iters: 100_000,
            cut_cap: 100,
            initial_vertices: 1,
            seed: 0,
            fgpm_s: f.s,
            fgpm_rho0: f.rho0,
            fgpm_rho_min: f.rho_min,
            fgpm_rho_max: f.rho_max,
            fgpm_gamma1: f.gamma1,
            fgpm_delta: f.delta,
            fgpm_memory: f.memory,
            fgpm_tol: f.tol,
            fgpm_max_iters: f.max_iters,
            record_details: false,
            check_conjugacy: false,
        }
    }
}

impl SdConfig {
    pub fn new(master: MasterKind, pricing: PricingConfig) -> Self {
        SdConfig {
            master,
            ..Default::default()
        }
        .with_pricing(pricing)
    }

    pub fn with_pricing(mut self, p: PricingConfig) -> Self {
        self.sifting = p.sifting;
        self.cuts = p.cuts;
        self.early_stop = p.early_stop;
        self
    }

    pub fn pricing(&self) -> PricingConfig {
        PricingConfig::new(self.sifting, self.cuts, self.early_stop)
    }

    /// Label such as `acdm/Sif-E`.
    pub fn label(&self) -> String {
        format!("{}/{}", self.master.label(), self.pricing().label())
    }

    pub fn fgpm_params(&self) -> FgpmParams {
        FgpmParams {
            s: self.fgpm_s,
            rho_min: self.fgpm_rho_min,
            rho_max: self.fgpm_rho_max,
            rho0: self.fgpm_rho0,
            gamma1: self.fgpm_gamma1,
            delta: self.fgpm_delta,
            memory: self.fgpm_memory,
            tol: self.fgpm_tol,
            max_iters: self.fgpm_max_iters,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_sd > 0.0) || !(self.early_eps > 0.0) || !(self.drop_tol >= 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.time_limit_s > 0.0) {
            return Err(Error::Config("time limit must be positive".into()));
        }
        if self.initial_vertices == 0 {
            return Err(Error::Config("need at least one initial vertex".into()));
        }
        self.fgpm_params().validate()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SdConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdStatus {
    Optimal,
    TimeLimit,
    IterLimit,
    /// Pricing kept returning a vertex already in the master.
    Stalled,
}

impl SdStatus {
    pub fn label(self) -> &'static str {
        match self {
            SdStatus::Optimal => "optimal",
            SdStatus::TimeLimit => "time_limit",
            SdStatus::IterLimit => "iter_limit",
            SdStatus::Stalled => "stalled",
        }
    }
}

/// Telemetry of one SD iteration; times are cumulative seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Objective at the master solution of this iteration.
    pub f: f64,
    pub pricing_value: f64,
    pub early_stopped: bool,
    /// Early-stopping threshold, when enabled.
    pub eps: Option<f64>,
    pub tol: f64,
    pub master_dim: usize,
    pub cuts: usize,
    pub pivots: usize,
    /// The master was re-solved without adding a vertex.
    pub repair: bool,
    pub t_pre: f64,
    pub t_master: f64,
    pub t_pricing: f64,
    pub t_update: f64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SdTrace {
    pub records: Vec<IterRecord>,
    pub status: Option<SdStatus>,
    pub t_pre: f64,
    pub t_master: f64,
    pub t_pricing: f64,
    pub t_update: f64,
    pub total: f64,
    pub initial_vertices: usize,
    /// Distinct vertices ever generated (when recorded).
    pub vertices: Vec<Vec<f64>>,
    /// Indices into `vertices` in the order they entered the master; a
    /// vertex that was dropped and later priced again appears twice.
    pub entered: Vec<usize>,
    /// Master vertex set after each master solve and drop, as sorted
    /// indices into `vertices`.
    pub simplices: Vec<Vec<usize>>,
    /// Cut pool after each pricing (when recorded).
    pub cut_snapshots: Vec<Vec<Cut>>,
    pub armijo_steps: Vec<ArmijoStep>,
    pub master_reports: Vec<MasterReport>,
    pub cuts_ignored: usize,
}

impl SdTrace {
    /// Id of `v` in `vertices`, registering it if new, and records its
    /// entry.
    fn vertex_id(&mut self, v: &[f64]) -> usize {
        let id = match self.vertices.iter().position(|u| dist_inf(u, v) <= 1e-10) {
            Some(i) => i,
            None => {
                self.vertices.push(v.to_vec());
                self.vertices.len() - 1
            }
        };
        self.entered.push(id);
        id
    }
}

#[derive(Debug, Clone)]
pub struct SdResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub status: SdStatus,
    pub iterations: usize,
    pub master_dim: usize,
    pub trace: SdTrace,
}

/// Picks `X₀`: the minimizer of `cᵀx` over the feasible region plus
/// `initial_vertices − 1` vertices for seeded random objectives.
pub fn initialize(inst: &QpInstance, config: &SdConfig) -> Result<(MasterState, Option<Basis>)> {
    let n = inst.n();
    let mut state = MasterState::new();
    let first = inst.feasible_region_lp(inst.c().to_vec()).solve(&SimplexOptions::default())?;
    let basis = Some(first.basis.clone());
    state.add_vertex(inst, first.x);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let mut attempts = 0;
    while state.k() < config.initial_vertices && attempts < 10 * config.initial_vertices {
        attempts += 1;
        let g: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let sol = inst.feasible_region_lp(g).solve(&SimplexOptions::default())?;
        state.add_vertex(inst, sol.x);
    }
    if state.k() > 1 {
        let k = state.k() as f64;
        state.lambda.iter_mut().for_each(|v| *v = 1.0 / k);
    }
    Ok((state, basis))
}

enum MasterOutcome {
    Report(MasterReport),
    Fgpm(MasterReport, Vec<ArmijoStep>),
}

/// Runs simplicial decomposition on `inst`.
pub fn sd_solve(inst: &QpInstance, config: &SdConfig) -> Result<SdResult> {
    config.validate()?;
    let start = Instant::now();
    let mut trace = SdTrace::default();
    let (mut state, mut warm) = initialize(inst, config)?;
    trace.initial_vertices = state.k();
    // vertex ids of the current master, kept when recording
    let mut ids: Vec<usize> = Vec::new();
    if config.record_details {
        for v in state.vertices() {
            ids.push(trace.vertex_id(v));
        }
    }
    let mut acdm = Acdm::new();
    acdm.check_conjugacy = config.check_conjugacy;
    let mut fgpm = config.fgpm_params();
    let mut pool = CutPool::new(config.cut_cap);
    let popts_base = PricingOptions {
        early_eps: None,
        use_cuts: config.cuts,
        use_sifting: config.sifting,
    };
    trace.t_pre = start.elapsed().as_secs_f64();

    let mut new_direction: Option<Vec<f64>> = None;
    let mut force_step = false;
    let mut repair = false;
    let mut repairs_in_row = 0;
    let mut iter = 0;
    let status = loop {
        // master
        let t = Instant::now();
        let outcome = match config.master {
            MasterKind::Acdm => MasterOutcome::Report(solve_master_acdm(&mut state, &mut acdm, new_direction.take())),
            MasterKind::Fgpm => {
                let out = solve_master_fgpm(&mut state, &fgpm, config.record_details, force_step)?;
                MasterOutcome::Fgpm(out.report, out.steps)
            }
            MasterKind::OracleMaster => {
                state.lambda = oracle_simplex_qp(state.hessian(), state.linear())?;
                MasterOutcome::Report(MasterReport {
                    converged: true,
                    ..Default::default()
                })
            }
        };
        trace.t_master += t.elapsed().as_secs_f64();
        match outcome {
            MasterOutcome::Report(r) => trace.master_reports.push(r),
            MasterOutcome::Fgpm(r, steps) => {
                trace.master_reports.push(r);
                trace.armijo_steps.extend(steps);
            }
        }

        // drop and refresh the iterate
        let t = Instant::now();
        let dropped = state.drop_vertices(config.drop_tol);
        acdm.on_vertices_dropped(&dropped);
        if config.record_details {
            let keep: Vec<usize> = (0..ids.len()).filter(|i| !dropped.contains(i)).map(|i| ids[i]).collect();
            ids = keep;
            let mut simplex = ids.clone();
            simplex.sort_unstable();
            trace.simplices.push(simplex);
        }
        let x = state.point();
        let grad = state.full_gradient(inst);
        let f = state.objective_at(&state.lambda);
        trace.t_update += t.elapsed().as_secs_f64();

        // pricing
        let t = Instant::now();
        let tol = config.tol_sd * (1.0 + f.abs());
        let eps = config.early_stop.then(|| config.early_eps * (1.0 + f.abs()));
        let popts = PricingOptions {
            early_eps: eps,
            ..popts_base.clone()
        };
        let out = price(inst, &x, &grad, &pool, &popts, warm.as_ref())?;
        if config.cuts {
            pool.prune_inactive(&out.vertex);
        }
        trace.t_pricing += t.elapsed().as_secs_f64();
        if out.cuts_ignored {
            trace.cuts_ignored += 1;
        }
        if config.record_details {
            trace.cut_snapshots.push(pool.cuts().to_vec());
        }
        let elapsed = start.elapsed().as_secs_f64();
        trace.records.push(IterRecord {
            iter,
            f,
            pricing_value: out.value,
            early_stopped: out.status == LpStatus::EarlyStopped,
            eps,
            tol,
            master_dim: state.k(),
            cuts: pool.len(),
            pivots: out.pivots,
            repair,
            t_pre: trace.t_pre,
            t_master: trace.t_master,
            t_pricing: trace.t_pricing,
            t_update: trace.t_update,
            elapsed,
        });

        if out.value >= -tol {
            break SdStatus::Optimal;
        }
        if elapsed >= config.time_limit_s {
            break SdStatus::TimeLimit;
        }
        if iter + 1 >= config.max_iters {
            break SdStatus::IterLimit;
        }

        // update
        let t = Instant::now();
        if config.cuts {
            pool.add_cut(iter, &x, &grad);
        }
        warm = Some(out.basis.clone());
        let vertex = out.vertex;
        repair = false;
        force_step = false;
        match state.find_vertex(&vertex, 1e-10) {
            None => {
                if config.record_details {
                    ids.push(trace.vertex_id(&vertex));
                }
                state.add_vertex(inst, vertex);
                acdm.on_vertex_added();
                let mut d: Vec<f64> = state.lambda.iter().map(|v| -v).collect();
                *d.last_mut().unwrap() += 1.0;
                new_direction = Some(d);
                force_step = true;
                repairs_in_row = 0;
            }
            Some(j) => {
                // the master was not solved accurately enough for the
                // pricing to find a new vertex
                repairs_in_row += 1;
                repair = true;
                let can_tighten = config.master == MasterKind::Fgpm && fgpm.tol > 1e-13;
                if repairs_in_row > 3 && !can_tighten {
                    trace.t_update += t.elapsed().as_secs_f64();
                    break SdStatus::Stalled;
                }
                match config.master {
                    MasterKind::Fgpm => {
                        fgpm.tol = (fgpm.tol * 0.1).max(1e-14);
                        force_step = true;
                    }
                    MasterKind::Acdm => {
                        let mut d: Vec<f64> = state.lambda.iter().map(|v| -v).collect();
                        d[j] += 1.0;
                        if repairs_in_row > 1 {
                            acdm.reset();
                        }
                        new_direction = Some(d);
                    }
                    MasterKind::OracleMaster => {}
                }
            }
        }
        trace.t_update += t.elapsed().as_secs_f64();
        iter += 1;
    };

    let x = state.point();
    let f = inst.eval_objective(&x)?;
    trace.status = Some(status);
    trace.total = start.elapsed().as_secs_f64();
    Ok(SdResult {
        x,
        f,
        status,
        iterations: iter + 1,
        master_dim: state.k(),
        trace,
    })
}

/// `∇f(x)ᵀ(y − x)` helper used by tests and diagnostics.
pub fn directional_value(grad: &[f64], x: &[f64], y: &[f64]) -> f64 {
    dot(grad, y) - dot(grad, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::problem::LinearRow;

    fn simplex_box(n: usize, q: Matrix, c: Vec<f64>) -> QpInstance {
        let mut inst = QpInstance::new("t", q, c).unwrap();
        inst.push_eq(LinearRow::new(vec![1.0; n], 1.0)).unwrap();
        inst.set_bounds(vec![0.0; n], vec![1.0; n]).unwrap();
        inst
    }

    #[test]
    fn labels() {
        let labels: Vec<String> = PricingConfig::ALL.iter().map(|p| p.label()).collect();
        assert_eq!(labels, ["D", "C", "E", "CE", "Sif", "Sif-C", "Sif-E", "Sif-CE"]);
        for p in PricingConfig::ALL {
            assert_eq!(p.label().parse::<PricingConfig>().unwrap(), p);
        }
        let cfg = SdConfig::new(MasterKind::Acdm, "Sif-E".parse().unwrap());
        assert_eq!(cfg.label(), "acdm/Sif-E");
    }

    #[test]
    fn config_toml_round_trip() {
        let mut cfg = SdConfig::new(MasterKind::Fgpm, PricingConfig::new(true, true, false));
        cfg.fgpm_s = Some(0.25);
        let text = cfg.to_toml().unwrap();
        assert_eq!(SdConfig::from_toml(&text).unwrap(), cfg);
        assert!(SdConfig::from_toml("tol_sd = -1.0").is_err());
        assert!(SdConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn linear_objective_needs_two_pricings_at_most() {
        let n = 5;
        let c = vec![0.3, -0.2, 0.5, -0.7, 0.1];
        let inst = simplex_box(n, Matrix::zeros(n, n), c);
        let r = sd_solve(&inst, &SdConfig::default()).unwrap();
        assert_eq!(r.status, SdStatus::Optimal);
        assert!(r.trace.records.len() <= 2);
        assert!((r.f + 0.7).abs() < 1e-12);
    }

    #[test]
    fn box_only_start_is_lower_bound() {
        let n = 3;
        let mut inst = QpInstance::new("b", Matrix::identity(n), vec![0.1, 0.2, 0.3]).unwrap();
        inst.set_bounds(vec![0.0; n], vec![1.0; n]).unwrap();
        let (state, _) = initialize(&inst, &SdConfig::default()).unwrap();
        assert_eq!(state.vertices()[0], vec![0.0; 3]);
        let r = sd_solve(&inst, &SdConfig::default()).unwrap();
        assert_eq!(r.status, SdStatus::Optimal);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn balanced_pair_for_every_master() {
        let q = Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let inst = simplex_box(2, q, vec![0.0, 0.0]);
        for master in [MasterKind::Acdm, MasterKind::Fgpm, MasterKind::OracleMaster] {
            for p in PricingConfig::ALL {
                let r = sd_solve(&inst, &SdConfig::new(master, p)).unwrap();
                assert_eq!(r.status, SdStatus::Optimal, "{master:?} {p}");
                assert!(dist_inf(&r.x, &[0.5, 0.5]) < 1e-5, "{master:?} {p} {:?}", r.x);
            }
        }
    }

    #[test]
    fn strictly_convex_simplex_problem() {
        let n = 6;
        let mut q = Matrix::identity(n);
        for i in 0..n {
            q[(i, i)] = 1.0 + i as f64;
        }
        let c: Vec<f64> = (0..n).map(|i| 0.1 * i as f64 - 0.2).collect();
        let inst = simplex_box(n, q, c);
        let exact = crate::oracle::oracle_solve_qp(&inst).unwrap();
        for master in [MasterKind::Acdm, MasterKind::Fgpm] {
            for p in PricingConfig::ALL {
                let r = sd_solve(&inst, &SdConfig::new(master, p)).unwrap();
                assert_eq!(r.status, SdStatus::Optimal);
                let er = (r.f - exact.f).abs() / (1.0 + exact.f.abs());
                assert!(er < 1e-6, "{master:?} {p} er {er}");
            }
        }
    }
}
