use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use crn_access::config::{parse_config, Config};
use crn_access::model::CONSTRAINT_NAMES;
use crn_access::optimizer::{self, ModeKind, OptimizeError, SolverOptions};
use crn_access::oracle::{simulate_network, simulate_network_traced, SimConfig};
use crn_access::parallel::Execution;
use crn_access::sweep::{fmt_f64, run_sweep, write_csv};
use crn_access::verify::verify;
use crn_access::{evaluate, ConfigError};

#[derive(Parser)]
#[command(
    name = "crn-access",
    version,
    about = "Secondary-user random access on a multipacket-reception channel"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Configuration file; missing keys take the reference defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `n_starts`.
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// Overrides `sim_slots`.
    #[arg(long, global = true)]
    slots: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic evaluation of the configured policy.
    Eval,
    /// Slot-level simulation of the configured policy.
    Simulate {
        /// Also write one CSV row per slot to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Optimize one instance (`lambda_p`, `e_th_su`, `num_su_Ms` from the config).
    Optimize {
        #[arg(long, default_value = "adaptive", value_parser = parse_mode)]
        mode: ModeKind,
    },
    /// Optimize every grid point and write CSV.
    Sweep,
    /// Check the closed forms against Monte Carlo.
    Verify {
        /// Overrides `verify_samples`.
        #[arg(long)]
        samples: Option<u64>,
    },
}

fn parse_mode(s: &str) -> Result<ModeKind, String> {
    ModeKind::parse(s)
        .ok_or_else(|| format!("unknown mode `{s}` (expected adaptive, fixed or conventional)"))
}

/// Failures that map to a dedicated exit status.
#[derive(Debug)]
enum Exit {
    Config(String),
    Verification,
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exit::Config(m) => write!(f, "config error: {m}"),
            Exit::Verification => f.write_str("verification failed"),
        }
    }
}

impl std::error::Error for Exit {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}

fn exit_status(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Exit>() {
        Some(Exit::Config(_)) => 2,
        Some(Exit::Verification) => 3,
        None => 1,
    }
}

fn load_config(g: &Global) -> Result<Config> {
    let mut cfg = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Exit::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text)
                .map_err(|e: ConfigError| Exit::Config(format!("{}: {e}", path.display())))?
        }
        None => Config::default(),
    };
    if let Some(seed) = g.seed {
        cfg.sweep.seed = seed;
    }
    if let Some(n) = g.starts {
        if n == 0 {
            return Err(Exit::Config("--starts must be >= 1".into()).into());
        }
        cfg.sweep.n_starts = n;
    }
    if let Some(n) = g.slots {
        if n == 0 {
            return Err(Exit::Config("--slots must be >= 1".into()).into());
        }
        cfg.sweep.sim_slots = n;
    }
    if cfg.warmup_slots.is_some_and(|w| w >= cfg.sweep.sim_slots) {
        return Err(
            Exit::Config("warmup_slots must be < the number of simulated slots".into()).into(),
        );
    }
    Ok(cfg)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.global)?;
    let out_path = cli.global.out.as_deref();
    match cli.command {
        Command::Eval => {
            let rep = evaluate(&cfg.policy, &cfg.params, &cfg.constraints);
            let mut s = String::new();
            policy_lines(&mut s, &cfg);
            writeln!(s, "mu_s = {}", fmt_f64(rep.mu_s))?;
            writeln!(s, "mu_p = {}", fmt_f64(rep.mu_p))?;
            writeln!(s, "pr_empty = {}", fmt_f64(rep.pr_empty))?;
            writeln!(s, "e_su = {}", fmt_f64(rep.energy_su))?;
            writeln!(s, "e_pu = {}", fmt_f64(rep.energy_pu))?;
            writeln!(s, "stable = {}", rep.stable)?;
            writeln!(s, "degenerate = {}", rep.degenerate)?;
            for name in CONSTRAINT_NAMES {
                writeln!(
                    s,
                    "slack_{name} = {}",
                    fmt_f64(rep.slack(name).unwrap_or(f64::NAN))
                )?;
            }
            writeln!(s, "feasible = {}", rep.feasible())?;
            emit(out_path, &s)
        }
        Command::Simulate { trace } => {
            let mut sim = SimConfig::new(
                cfg.params,
                cfg.policy,
                cfg.constraints.lambda_p,
                cfg.sweep.sim_slots,
                cfg.sweep.seed,
            );
            if let Some(w) = cfg.warmup_slots {
                sim.warmup_slots = w;
            }
            let res = match &trace {
                Some(p) => {
                    let f = BufWriter::new(
                        File::create(p)
                            .with_context(|| format!("cannot create {}", p.display()))?,
                    );
                    simulate_network_traced(&sim, f)?
                }
                None => simulate_network(&sim),
            };
            let rep = evaluate(&cfg.policy, &cfg.params, &cfg.constraints);
            let header = [
                "n_slots",
                "warmup_slots",
                "seed",
                "lambda_p",
                "ms",
                "a1",
                "a2",
                "gamma1",
                "gamma2",
                "emp_mu_s",
                "mu_s_analytic",
                "emp_mu_p",
                "mu_p",
                "emp_pr_empty",
                "pr_empty",
                "emp_e_su",
                "e_su",
                "emp_e_pu",
                "e_pu",
                "mean_queue_len",
                "max_queue_len",
                "queue_slope",
            ];
            let p = &cfg.policy;
            let row = [
                sim.n_slots.to_string(),
                sim.warmup_slots.to_string(),
                sim.seed.to_string(),
                fmt_f64(sim.lambda_p),
                cfg.params.num_su.to_string(),
                fmt_f64(p.a1()),
                fmt_f64(p.a2()),
                fmt_f64(p.gamma1()),
                fmt_f64(p.gamma2()),
                fmt_f64(res.emp_mu_s),
                fmt_f64(rep.mu_s),
                fmt_f64(res.emp_mu_p),
                fmt_f64(rep.mu_p),
                fmt_f64(res.emp_pr_empty),
                fmt_f64(rep.pr_empty),
                fmt_f64(res.emp_energy_su),
                fmt_f64(rep.energy_su),
                fmt_f64(res.emp_energy_pu),
                fmt_f64(rep.energy_pu),
                fmt_f64(res.mean_queue_len),
                res.max_queue_len.to_string(),
                fmt_f64(res.queue_slope),
            ];
            let mut w = csv::Writer::from_writer(open_out(out_path)?);
            w.write_record(header)?;
            w.write_record(&row)?;
            w.flush()?;
            Ok(())
        }
        Command::Optimize { mode } => {
            let opts = SolverOptions::new(cfg.sweep.n_starts, cfg.sweep.seed);
            let rep = optimizer::solve(
                &cfg.params,
                &cfg.constraints,
                cfg.sweep.solve_mode(mode),
                &opts,
            )
            .map_err(|e| match e {
                OptimizeError::Invalid(m) => anyhow!(Exit::Config(m.to_string())),
                other => anyhow!(other),
            })?;
            let pol = rep.best_policy;
            let eval = evaluate(&pol, &cfg.params, &cfg.constraints);
            let mut s = String::new();
            writeln!(s, "mode = {}", rep.mode)?;
            writeln!(s, "lambda_p = {}", fmt_f64(cfg.constraints.lambda_p))?;
            writeln!(s, "ms = {}", cfg.params.num_su)?;
            writeln!(s, "e_th_su = {}", fmt_f64(cfg.constraints.e_th_su))?;
            writeln!(s, "a1 = {}", fmt_f64(pol.a1()))?;
            writeln!(s, "a2 = {}", fmt_f64(pol.a2()))?;
            writeln!(s, "gamma1 = {}", fmt_f64(pol.gamma1()))?;
            writeln!(s, "gamma2 = {}", fmt_f64(pol.gamma2()))?;
            writeln!(s, "mu_s = {}", fmt_f64(eval.mu_s))?;
            writeln!(s, "mu_p = {}", fmt_f64(eval.mu_p))?;
            writeln!(s, "e_su = {}", fmt_f64(eval.energy_su))?;
            writeln!(s, "e_pu = {}", fmt_f64(eval.energy_pu))?;
            for name in CONSTRAINT_NAMES {
                writeln!(
                    s,
                    "slack_{name} = {}",
                    fmt_f64(eval.slack(name).unwrap_or(f64::NAN))
                )?;
            }
            writeln!(s, "n_starts = {}", rep.n_starts)?;
            writeln!(s, "n_feasible_starts = {}", rep.n_feasible_starts)?;
            writeln!(
                s,
                "starts_within_tolerance = {}",
                rep.starts_within_tolerance_of_best
            )?;
            writeln!(s, "degenerate_budget = {}", rep.degenerate_budget)?;
            emit(out_path, &s)
        }
        Command::Sweep => {
            let rows = run_sweep(
                &cfg.sweep,
                &cfg.params,
                &cfg.constraints,
                Execution::default(),
            )
            .map_err(|e| anyhow!(Exit::Config(e.to_string())))?;
            let mut out = open_out(out_path)?;
            write_csv(&rows, &mut out)?;
            out.flush()?;
            Ok(())
        }
        Command::Verify { samples } => {
            let n = samples.unwrap_or(cfg.verify_samples);
            if n == 0 {
                return Err(Exit::Config("--samples must be >= 1".into()).into());
            }
            let rep = verify(&cfg.params, n, cfg.sweep.seed, Execution::default());
            emit(out_path, &format!("{rep}\n"))?;
            if rep.passed() {
                Ok(())
            } else {
                Err(Exit::Verification.into())
            }
        }
    }
}

fn policy_lines(s: &mut String, cfg: &Config) {
    let p = &cfg.policy;
    let _ = writeln!(s, "lambda_p = {}", fmt_f64(cfg.constraints.lambda_p));
    let _ = writeln!(s, "ms = {}", cfg.params.num_su);
    let _ = writeln!(s, "a1 = {}", fmt_f64(p.a1()));
    let _ = writeln!(s, "a2 = {}", fmt_f64(p.a2()));
    let _ = writeln!(s, "gamma1 = {}", fmt_f64(p.gamma1()));
    let _ = writeln!(s, "gamma2 = {}", fmt_f64(p.gamma2()));
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = open_out(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}
