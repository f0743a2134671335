use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sdqp::bench::{
    decay_trace, perf_profile, read_records, read_traces, references_from_traces, run_bench, write_decay,
    write_profile, write_records, write_trace, trace_points, Manifest,
};
use sdqp::instances::{build_portfolio, generate_synthetic, parse_m, synthetic_panel, InstanceClass, InstanceMetadata, SyntheticConfig, MU_GRID};
use sdqp::sd::{sd_solve, MasterKind, SdConfig, SdStatus};
use sdqp::{Error, QpInstance, Result};

#[derive(Parser)]
#[command(name = "sdqp", version, about = "Simplicial decomposition for dense convex QPs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum PricingArg {
    Default,
    Sifting,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated instance and its metadata to a directory.
    Generate {
        #[arg(long)]
        class: InstanceClass,
        #[arg(long)]
        n: usize,
        /// Row count or a fraction such as n/32 (ignored for portfolio).
        #[arg(long, default_value = "2")]
        m: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Periods of the synthetic return panel (portfolio only).
        #[arg(long, default_value_t = 120)]
        periods: usize,
        /// Required mean return (portfolio only).
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one instance.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// TOML configuration; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        master: Option<MasterKind>,
        #[arg(long, value_enum)]
        pricing: Option<PricingArg>,
        #[arg(long)]
        early_stop: bool,
        #[arg(long)]
        cuts: bool,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        time_limit: Option<f64>,
        /// Per-iteration objective trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Solution vector, one value per line.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Run every configuration of a manifest on every instance.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Performance profiles from bench results.
    Profile {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated configuration labels.
        #[arg(long, value_delimiter = ',')]
        solvers: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Averaged objective-decay curves from a directory of traces.
    Decay {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        reference: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Skip instances the reference solved faster than this (seconds).
        #[arg(long, default_value_t = 0.0)]
        min_time: f64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Generate {
            class,
            n,
            m,
            seed,
            periods,
            mu,
            out,
        } => {
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let (inst, meta) = if class == InstanceClass::Portfolio {
                let panel = synthetic_panel(n, periods, seed)?;
                let mu = mu.unwrap_or(MU_GRID[0]);
                let inst = build_portfolio(&panel, mu, format!("portfolio_n{n}_t{periods}_s{seed}"))?;
                let meta = InstanceMetadata {
                    class,
                    n,
                    m: inst.m(),
                    seed,
                    stepwise_width: None,
                    truncated: false,
                    budget: class.budget(),
                    mu: Some(mu),
                    periods: Some(periods),
                };
                (inst, meta)
            } else {
                let m = parse_m(&m, n)?;
                generate_synthetic(&SyntheticConfig { n, m, class, seed })?
            };
            let base = out.join(&inst.name);
            inst.write_instance(base.with_extension("qp"))?;
            meta.write(base.with_extension("json"))?;
            println!("{}", base.with_extension("qp").display());
            Ok(0)
        }
        Cmd::Solve {
            instance,
            config,
            master,
            pricing,
            early_stop,
            cuts,
            tol,
            time_limit,
            trace,
            solution,
        } => {
            let inst = QpInstance::read_instance(&instance)?;
            let mut cfg = match config {
                Some(p) => SdConfig::from_toml(&fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?)?,
                None => SdConfig::default(),
            };
            if let Some(m) = master {
                cfg.master = m;
            }
            if let Some(p) = pricing {
                cfg.sifting = matches!(p, PricingArg::Sifting);
            }
            cfg.early_stop |= early_stop;
            cfg.cuts |= cuts;
            if let Some(t) = tol {
                cfg.tol_sd = t;
            }
            if let Some(t) = time_limit {
                cfg.time_limit_s = t;
            }
            let r = sd_solve(&inst, &cfg)?;
            println!("instance    {}", inst.name);
            println!("config      {}", cfg.label());
            println!("status      {}", r.status.label());
            println!("objective   {:.12e}", r.f);
            println!("iterations  {}", r.iterations);
            println!("master dim  {}", r.master_dim);
            println!(
                "time        {:.3}s (pre {:.3}, master {:.3}, pricing {:.3}, update {:.3})",
                r.trace.total, r.trace.t_pre, r.trace.t_master, r.trace.t_pricing, r.trace.t_update
            );
            if let Some(p) = trace {
                write_trace(&p, &inst.name, &cfg.label(), &trace_points(&r))?;
            }
            if let Some(p) = solution {
                let text: String = r.x.iter().map(|v| format!("{v:e}\n")).collect();
                fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
            }
            Ok(if r.status == SdStatus::Optimal { 0 } else { 2 })
        }
        Cmd::Bench { manifest, jobs, out } => {
            let m = Manifest::read(&manifest)?;
            let res = run_bench(&m, jobs)?;
            write_records(&out, &res.records)?;
            let solved = res.records.iter().filter(|r| r.solved()).count();
            println!("{solved}/{} runs optimal, results in {}", res.records.len(), out.display());
            Ok(res.exit_code() as u8)
        }
        Cmd::Profile { input, solvers, out } => {
            let records = read_records(&input)?;
            let curves = perf_profile(&records, &solvers)?;
            write_profile(&out, &curves)?;
            for c in &curves {
                println!("{:<14} rho(1) = {:.3}", c.solver, c.rho(1.0));
            }
            Ok(0)
        }
        Cmd::Decay {
            input,
            reference,
            out,
            samples,
            min_time,
        } => {
            let traces = read_traces(&input)?;
            let refs = references_from_traces(&traces, &reference)?;
            let curves = decay_trace(&traces, &refs, samples, min_time)?;
            write_decay(&out, &curves)?;
            for c in &curves {
                println!("{:<14} {} instances", c.solver, c.instances);
            }
            Ok(0)
        }
    }
}
