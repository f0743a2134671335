//! Benchmark harness: batch runs over instance × configuration grids,
//! CSV records, performance profiles and objective-decay curves.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{generate_synthetic, parse_m, InstanceClass, SyntheticConfig};
use crate::linalg::dist_inf;
use crate::oracle::oracle_solve_qp;
use crate::problem::QpInstance;
use crate::sd::{sd_solve, MasterKind, PricingConfig, SdConfig, SdResult, SdStatus};

/// Label of the configuration used as reference on instances too large for
/// the oracle.
pub const REFERENCE_LABEL: &str = "acdm/D";
/// Instances up to this size are checked against the oracle.
pub const ORACLE_MAX_N: usize = 30;

/// One CSV row per (instance, configuration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: String,
    pub class: String,
    pub n: usize,
    pub m: usize,
    pub config: String,
    pub wall_time: f64,
    /// `optimal`, `time_limit`, `iter_limit`, `stalled` or `error`.
    pub status: String,
    pub f: Option<f64>,
    /// Relative objective error against the reference.
    pub er: Option<f64>,
    /// `ℓ∞` distance to the reference solution.
    pub ei: Option<f64>,
    pub iterations: usize,
    pub master_dim: usize,
    pub t_pre: f64,
    pub t_master: f64,
    pub t_pricing: f64,
    pub t_update: f64,
}

impl BenchRecord {
    pub fn solved(&self) -> bool {
        self.status == SdStatus::Optimal.label()
    }
}

pub fn write_records(path: impl AsRef<Path>, records: &[BenchRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| Ok(row?)).collect()
}

/// Parses a label such as `fgpm/Sif-CE`.
pub fn parse_config_label(label: &str) -> Result<SdConfig> {
    let (master, pricing) = label
        .split_once('/')
        .ok_or_else(|| Error::InvalidArgument(format!("config label '{label}' is not master/pricing")))?;
    let master: MasterKind = master.parse()?;
    let pricing: PricingConfig = pricing.parse()?;
    Ok(SdConfig::new(master, pricing))
}

/// Relative error `|f − f_ref| / (1 + |f_ref|)`.
pub fn relative_error(f: f64, f_ref: f64) -> f64 {
    (f - f_ref).abs() / (1.0 + f_ref.abs())
}

/// Synthetic instances to generate as part of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub class: InstanceClass,
    pub n: usize,
    /// Row count or fraction such as `n/32`.
    pub m: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

/// Batch description read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    /// Instance files, relative to the manifest directory.
    #[serde(default)]
    pub instances: Vec<PathBuf>,
    #[serde(default)]
    pub generate: Vec<GenerateSpec>,
    pub configs: Vec<String>,
    /// Added to every generator seed; overridden by `SDQP_SEED`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub time_limit_s: Option<f64>,
    #[serde(default)]
    pub tol_sd: Option<f64>,
    /// Directory for per-run iteration traces.
    #[serde(default)]
    pub trace_dir: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Manifest = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if m.configs.is_empty() {
            return Err(Error::Config("manifest lists no configurations".into()));
        }
        for c in &m.configs {
            parse_config_label(c)?;
        }
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m = Self::from_toml(&text)?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Ok(s) = std::env::var("SDQP_SEED") {
            m.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("SDQP_SEED must be an integer, got '{s}'")))?;
        }
        Ok(m)
    }

    fn config(&self, label: &str) -> Result<SdConfig> {
        let mut cfg = parse_config_label(label)?;
        if let Some(t) = self.time_limit_s {
            cfg.time_limit_s = t;
        }
        if let Some(t) = self.tol_sd {
            cfg.tol_sd = t;
        }
        cfg.seed = self.seed;
        Ok(cfg)
    }
}

/// An instance slot of a batch; loading may have failed.
struct Slot {
    id: String,
    class: String,
    inst: Option<QpInstance>,
}

fn load_slots(manifest: &Manifest) -> Vec<Slot> {
    let mut slots = Vec::new();
    for p in &manifest.instances {
        let path = manifest.base_dir.join(p);
        let id = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        let inst = QpInstance::read_instance(&path).ok();
        let class = class_from_name(&id);
        slots.push(Slot { id, class, inst });
    }
    for g in &manifest.generate {
        for &s in &g.seeds {
            let seed = s.wrapping_add(manifest.seed);
            let made = parse_m(&g.m, g.n).and_then(|m| {
                generate_synthetic(&SyntheticConfig {
                    n: g.n,
                    m,
                    class: g.class,
                    seed,
                })
            });
            let (id, inst) = match made {
                Ok((inst, _)) => (inst.name.clone(), Some(inst)),
                Err(_) => (format!("{}_n{}_m{}_s{}", g.class.label(), g.n, g.m, seed), None),
            };
            slots.push(Slot {
                id,
                class: g.class.label().to_string(),
                inst,
            });
        }
    }
    slots
}

fn class_from_name(id: &str) -> String {
    id.split('_')
        .next()
        .filter(|p| p.parse::<InstanceClass>().is_ok())
        .unwrap_or("unknown")
        .to_string()
}

/// Reference optimum for error columns.
#[derive(Debug, Clone)]
pub struct Reference {
    pub x: Vec<f64>,
    pub f: f64,
    pub source: String,
}

/// Oracle on small instances, a tight exact-pricing ACDM run otherwise.
pub fn reference_solution(inst: &QpInstance) -> Result<Reference> {
    if inst.n() <= ORACLE_MAX_N {
        if let Ok(k) = oracle_solve_qp(inst) {
            return Ok(Reference {
                x: k.x,
                f: k.f,
                source: "oracle".into(),
            });
        }
    }
    let mut cfg = parse_config_label(REFERENCE_LABEL)?;
    cfg.tol_sd = 1e-9;
    let r = sd_solve(inst, &cfg)?;
    Ok(Reference {
        x: r.x,
        f: r.f,
        source: REFERENCE_LABEL.into(),
    })
}

fn record_for(slot: &Slot, inst: &QpInstance, label: &str, wall: f64, run: &Result<SdResult>, reference: Option<&Reference>) -> BenchRecord {
    let mut rec = BenchRecord {
        instance: slot.id.clone(),
        class: slot.class.clone(),
        n: inst.n(),
        m: inst.m(),
        config: label.to_string(),
        wall_time: wall,
        status: "error".into(),
        f: None,
        er: None,
        ei: None,
        iterations: 0,
        master_dim: 0,
        t_pre: 0.0,
        t_master: 0.0,
        t_pricing: 0.0,
        t_update: 0.0,
    };
    if let Ok(r) = run {
        rec.status = r.status.label().into();
        rec.f = Some(r.f);
        rec.iterations = r.iterations;
        rec.master_dim = r.master_dim;
        rec.t_pre = r.trace.t_pre;
        rec.t_master = r.trace.t_master;
        rec.t_pricing = r.trace.t_pricing;
        rec.t_update = r.trace.t_update;
        if let Some(reference) = reference {
            rec.er = Some(relative_error(r.f, reference.f));
            rec.ei = Some(dist_inf(&r.x, &reference.x));
        }
    }
    rec
}

/// Records plus per-run iteration traces keyed by (instance, config).
#[derive(Debug, Clone, Default)]
pub struct BenchOutput {
    pub records: Vec<BenchRecord>,
    pub traces: BTreeMap<(String, String), Vec<TracePoint>>,
}

impl BenchOutput {
    /// 0 when every run reached optimality, 2 when some hit a limit or
    /// stalled, 1 when some run failed.
    pub fn exit_code(&self) -> i32 {
        if self.records.iter().any(|r| r.status == "error") {
            1
        } else if self.records.iter().all(BenchRecord::solved) {
            0
        } else {
            2
        }
    }
}

/// Runs every configuration of the manifest on every instance using
/// `jobs` worker threads. Output is sorted by (instance, config).
pub fn run_bench(manifest: &Manifest, jobs: usize) -> Result<BenchOutput> {
    let configs: Vec<(String, SdConfig)> = manifest
        .configs
        .iter()
        .map(|l| manifest.config(l).map(|c| (l.clone(), c)))
        .collect::<Result<_>>()?;
    let slots = load_slots(manifest);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let references: Vec<Option<Reference>> = pool.install(|| {
        slots
            .par_iter()
            .map(|s| s.inst.as_ref().and_then(|i| reference_solution(i).ok()))
            .collect()
    });
    let tasks: Vec<(usize, usize)> = (0..slots.len())
        .flat_map(|i| (0..configs.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<(BenchRecord, Vec<TracePoint>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, j)| {
                let slot = &slots[i];
                let (label, cfg) = &configs[j];
                let Some(inst) = &slot.inst else {
                    return (missing_record(slot, label), Vec::new());
                };
                let start = Instant::now();
                let run = sd_solve(inst, cfg);
                let wall = start.elapsed().as_secs_f64();
                let rec = record_for(slot, inst, label, wall, &run, references[i].as_ref());
                let trace = run.map(|r| trace_points(&r)).unwrap_or_default();
                (rec, trace)
            })
            .collect()
    });
    let mut out = BenchOutput::default();
    for (rec, trace) in results {
        out.traces.insert((rec.instance.clone(), rec.config.clone()), trace);
        out.records.push(rec);
    }
    out.records
        .sort_by(|a, b| a.instance.cmp(&b.instance).then_with(|| a.config.cmp(&b.config)));
    if let Some(dir) = &manifest.trace_dir {
        let dir = manifest.base_dir.join(dir);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for ((inst, cfg), points) in &out.traces {
            write_trace(dir.join(trace_file_name(inst, cfg)), inst, cfg, points)?;
        }
    }
    Ok(out)
}

fn missing_record(slot: &Slot, label: &str) -> BenchRecord {
    BenchRecord {
        instance: slot.id.clone(),
        class: slot.class.clone(),
        n: 0,
        m: 0,
        config: label.to_string(),
        wall_time: 0.0,
        status: "error".into(),
        f: None,
        er: None,
        ei: None,
        iterations: 0,
        master_dim: 0,
        t_pre: 0.0,
        t_master: 0.0,
        t_pricing: 0.0,
        t_update: 0.0,
    }
}

pub fn trace_file_name(instance: &str, config: &str) -> String {
    format!("{instance}__{}.csv", config.replace('/', "-"))
}

/// Objective sample taken at the end of an SD iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub time: f64,
    pub f: f64,
}

pub fn trace_points(r: &SdResult) -> Vec<TracePoint> {
    r.trace
        .records
        .iter()
        .map(|rec| TracePoint {
            time: rec.elapsed,
            f: rec.f,
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    instance: String,
    config: String,
    time: f64,
    f: f64,
}

pub fn write_trace(path: impl AsRef<Path>, instance: &str, config: &str, points: &[TracePoint]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(TraceRow {
            instance: instance.into(),
            config: config.into(),
            time: p.time,
            f: p.f,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads every trace CSV in `dir`, keyed by (instance, config).
pub fn read_traces(dir: impl AsRef<Path>) -> Result<BTreeMap<(String, String), Vec<TracePoint>>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut out: BTreeMap<(String, String), Vec<TracePoint>> = BTreeMap::new();
    for p in paths {
        let mut r = csv::Reader::from_path(&p)?;
        for row in r.deserialize() {
            let row: TraceRow = row?;
            out.entry((row.instance, row.config)).or_default().push(TracePoint {
                time: row.time,
                f: row.f,
            });
        }
    }
    Ok(out)
}

/// Dolan–Moré profile of one solver.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub solver: String,
    /// `t_{p,s} / min_s t_{p,s}` sorted ascending; failures are `∞`.
    pub ratios: Vec<f64>,
}

impl ProfileCurve {
    /// Fraction of instances with ratio at most `tau`.
    pub fn rho(&self, tau: f64) -> f64 {
        if self.ratios.is_empty() {
            return 0.0;
        }
        let hit = self.ratios.partition_point(|&r| r <= tau);
        hit as f64 / self.ratios.len() as f64
    }

    /// Corners `(τ, ρ(τ))` of the step function at every finite ratio.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &r in self.ratios.iter().filter(|r| r.is_finite()) {
            if out.last().is_some_and(|&(t, _)| t == r) {
                continue;
            }
            out.push((r, self.rho(r)));
        }
        out
    }
}

/// Performance profiles of `solvers` over the instances every one of them
/// has a record for. Unsolved runs get ratio `∞`.
pub fn perf_profile(records: &[BenchRecord], solvers: &[String]) -> Result<Vec<ProfileCurve>> {
    if solvers.len() < 2 {
        return Err(Error::InvalidArgument("a profile needs at least two solvers".into()));
    }
    let mut times: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in records {
        if solvers.contains(&r.config) {
            let t = if r.solved() { r.wall_time } else { f64::INFINITY };
            times.entry(&r.config).or_default().insert(&r.instance, t);
        }
    }
    let mut shared: Option<BTreeSet<&str>> = None;
    for s in solvers {
        let set: BTreeSet<&str> = times.get(s.as_str()).map(|m| m.keys().copied().collect()).unwrap_or_default();
        shared = Some(match shared {
            None => set,
            Some(prev) => prev.intersection(&set).copied().collect(),
        });
    }
    let shared = shared.unwrap_or_default();
    if shared.is_empty() {
        return Err(Error::InvalidArgument("solvers share no instances".into()));
    }
    let best: BTreeMap<&str, f64> = shared
        .iter()
        .map(|p| (*p, solvers.iter().map(|s| times[s.as_str()][p]).fold(f64::INFINITY, f64::min)))
        .collect();
    Ok(solvers
        .iter()
        .map(|s| {
            let mut ratios: Vec<f64> = shared
                .iter()
                .map(|p| {
                    let t = times[s.as_str()][p];
                    let b = best[p];
                    if !t.is_finite() {
                        f64::INFINITY
                    } else if b > 0.0 {
                        t / b
                    } else {
                        1.0
                    }
                })
                .collect();
            ratios.sort_by(f64::total_cmp);
            ProfileCurve {
                solver: s.clone(),
                ratios,
            }
        })
        .collect())
}

/// Long-format rows `solver,tau,rho` at the union of all breakpoints.
pub fn write_profile(path: impl AsRef<Path>, curves: &[ProfileCurve]) -> Result<()> {
    let path = path.as_ref();
    let mut taus: Vec<f64> = curves
        .iter()
        .flat_map(|c| c.ratios.iter().copied().filter(|r| r.is_finite()))
        .collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["solver", "tau", "rho"])?;
    for c in curves {
        for &t in &taus {
            w.write_record([c.solver.clone(), t.to_string(), c.rho(t).to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reference total time and optimum of one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReference {
    pub total_time: f64,
    pub f_opt: f64,
}

/// Averaged objective-decay curve of one solver.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub solver: String,
    /// `(time ratio, mean objective ratio)` on the sampling grid.
    pub points: Vec<(f64, f64)>,
    pub instances: usize,
}

/// Objective ratio; equals `f/f_ref` when `f_ref > 0` and is at least one
/// above the optimum for any sign of `f_ref`.
pub fn objective_ratio(f: f64, f_ref: f64) -> f64 {
    let scale = f_ref.abs().max(f64::MIN_POSITIVE);
    1.0 + (f - f_ref) / scale
}

/// Objective held from the last sample at or before `t`; the first sample
/// before the trace starts.
fn value_at(trace: &[TracePoint], t: f64) -> Option<f64> {
    let first = trace.first()?;
    let i = trace.partition_point(|p| p.time <= t);
    Some(if i == 0 { first.f } else { trace[i - 1].f })
}

/// Averages objective ratios over instances at `samples + 1` time ratios
/// evenly spread over `[0, 2]`. Instances whose reference time is below
/// `min_reference_time` are skipped.
pub fn decay_trace(
    traces: &BTreeMap<(String, String), Vec<TracePoint>>,
    references: &BTreeMap<String, DecayReference>,
    samples: usize,
    min_reference_time: f64,
) -> Result<Vec<DecayCurve>> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample interval".into()));
    }
    let grid: Vec<f64> = (0..=samples).map(|i| 2.0 * i as f64 / samples as f64).collect();
    let mut sums: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for ((inst, solver), trace) in traces {
        let reference = references
            .get(inst)
            .ok_or_else(|| Error::InvalidArgument(format!("no reference for instance '{inst}'")))?;
        if reference.total_time < min_reference_time || trace.is_empty() {
            continue;
        }
        let entry = sums.entry(solver).or_insert_with(|| (vec![0.0; grid.len()], 0));
        for (acc, &x) in entry.0.iter_mut().zip(&grid) {
            let f = value_at(trace, x * reference.total_time).unwrap_or(f64::NAN);
            *acc += objective_ratio(f, reference.f_opt);
        }
        entry.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(solver, (acc, count))| DecayCurve {
            solver: solver.to_string(),
            points: grid.iter().zip(&acc).map(|(&x, &s)| (x, s / count as f64)).collect(),
            instances: count,
        })
        .collect())
}

/// References taken from the final sample of `label`'s traces.
pub fn references_from_traces(
    traces: &BTreeMap<(String, String), Vec<TracePoint>>,
    label: &str,
) -> Result<BTreeMap<String, DecayReference>> {
    let out: BTreeMap<String, DecayReference> = traces
        .iter()
        .filter(|((_, s), t)| s == label && !t.is_empty())
        .map(|((inst, _), t)| {
            let last = t[t.len() - 1];
            (
                inst.clone(),
                DecayReference {
                    total_time: last.time,
                    f_opt: last.f,
                },
            )
        })
        .collect();
    if out.is_empty() {
        return Err(Error::InvalidArgument(format!("no traces for reference '{label}'")));
    }
    Ok(out)
}

pub fn write_decay(path: impl AsRef<Path>, curves: &[DecayCurve]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["solver", "time_ratio", "objective_ratio", "instances"])?;
    for c in curves {
        for &(x, y) in &c.points {
            w.write_record([c.solver.clone(), x.to_string(), y.to_string(), c.instances.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(instance: &str, config: &str, t: f64, status: &str) -> BenchRecord {
        BenchRecord {
            instance: instance.into(),
            class: "S".into(),
            n: 3,
            m: 1,
            config: config.into(),
            wall_time: t,
            status: status.into(),
            f: Some(1.0),
            er: None,
            ei: None,
            iterations: 1,
            master_dim: 1,
            t_pre: 0.0,
            t_master: 0.0,
            t_pricing: 0.0,
            t_update: 0.0,
        }
    }

    #[test]
    fn labels_parse() {
        let c = parse_config_label("fgpm/Sif-CE").unwrap();
        assert_eq!(c.label(), "fgpm/Sif-CE");
        assert!(parse_config_label("fgpm").is_err());
        assert!(parse_config_label("simplex/D").is_err());
    }

    #[test]
    fn strictly_fastest_solver_has_unit_rho() {
        let recs = vec![
            rec("p1", "a", 1.0, "optimal"),
            rec("p1", "b", 3.0, "optimal"),
            rec("p2", "a", 2.0, "optimal"),
            rec("p2", "b", 5.0, "time_limit"),
        ];
        let c = perf_profile(&recs, &["a".into(), "b".into()]).unwrap();
        assert_eq!(c[0].rho(1.0), 1.0);
        assert_eq!(c[1].rho(1.0), 0.0);
        assert_eq!(c[1].rho(1e300), 0.5);
    }

    #[test]
    fn disjoint_instance_sets_fail() {
        let recs = vec![rec("p1", "a", 1.0, "optimal"), rec("p2", "b", 1.0, "optimal")];
        assert!(perf_profile(&recs, &["a".into(), "b".into()]).is_err());
        assert!(perf_profile(&recs, &["a".into()]).is_err());
    }

    #[test]
    fn objective_ratio_is_one_at_optimum() {
        assert_eq!(objective_ratio(2.0, 2.0), 1.0);
        assert_eq!(objective_ratio(3.0, 2.0), 1.5);
        assert!(objective_ratio(-1.0, -2.0) > 1.0);
    }

    #[test]
    fn manifest_parses() {
        let m = Manifest::from_toml(
            r#"
            configs = ["acdm/D", "fgpm/Sif-E"]
            instances = ["a.qp"]
            [[generate]]
            class = "S-b"
            n = 40
            m = "n/8"
            seeds = [1, 2]
            "#,
        )
        .unwrap();
        assert_eq!(m.generate[0].class, InstanceClass::Sb);
        assert!(Manifest::from_toml("configs = [\"acdm/X\"]").is_err());
        assert!(Manifest::from_toml("configs = []").is_err());
    }
}
