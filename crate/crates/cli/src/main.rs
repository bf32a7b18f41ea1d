//! `jamhop` — experiment runner for the decentralized channel-access
//! simulator.
//!
//! Subcommands:
//! - `run`: execute one JSON-configured experiment and write CSV artifacts.
//! - `sweep`: vary n, k or j over a list of values and tabulate final regret.
//! - `phase-lengths`: print the theorem-derived learning schedule.
//! - `selfcheck`: run the built-in verification suites.
//!
//! Exit codes: 0 success, 1 selfcheck failure, 2 validation error, 3 I/O
//! error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jamhop_core::config::{ExperimentConfig, ResolvedConfig};
use jamhop_core::estimators::{phase_lengths, LearningParams};
use jamhop_core::runner::{
    oracle_throughput, run_episode, Aggregate, RegretCurve, RunResult,
};
use jamhop_core::selfcheck;
use jamhop_core::su::Algorithm;
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "jamhop", version, about = "Jamming-aware channel-access simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write regret/summary CSVs.
    Run(RunArgs),
    /// Vary n, k or j over a list of values from a base config.
    Sweep(SweepArgs),
    /// Print the theorem-derived learning schedule for given parameters.
    PhaseLengths(PhaseLengthsArgs),
    /// Run the built-in verification suites.
    Selfcheck(SelfcheckArgs),
}

#[derive(Args)]
struct CommonRunArgs {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's run count.
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory for CSV and resolved-config artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for episode-level parallelism (1 = serial).
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonRunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Which parameter to vary: n, k or j.
    #[arg(long)]
    vary: String,
    /// Comma-separated list of values for the varied parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
}

#[derive(Args)]
struct PhaseLengthsArgs {
    /// Algorithm: cdj, cnj, cuj, myopic or mc.
    #[arg(long)]
    algorithm: String,
    #[arg(long)]
    k: usize,
    /// Availability floor; defaults to the floor of the generated p vector.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    gamma: f64,
}

#[derive(Args)]
struct SelfcheckArgs {
    /// Monte Carlo slot budget per (k, n, j, mode) case.
    #[arg(long, default_value_t = 1_000_000)]
    slots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum CliError {
    Validation(String),
    Io(String),
    CheckFailed,
}

impl From<jamhop_core::Error> for CliError {
    fn from(e: jamhop_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::PhaseLengths(args) => cmd_phase_lengths(args),
        Command::Selfcheck(args) => cmd_selfcheck(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::CheckFailed) => {
            eprintln!("error: selfcheck failed");
            ExitCode::from(1)
        }
        Err(CliError::Validation(msg)) => {
            eprintln!("error (validation): {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error (io): {msg}");
            ExitCode::from(3)
        }
    }
}

fn load_config(args: &CommonRunArgs) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    Ok(cfg)
}

fn algo_name(algo: Algorithm) -> &'static str {
    match algo {
        Algorithm::Cdj => "cdj",
        Algorithm::Cnj => "cnj",
        Algorithm::Cuj => "cuj",
        Algorithm::Myopic => "myopic",
        Algorithm::MusicalChairs => "mc",
    }
}

fn parse_algorithm(s: &str) -> Result<Algorithm, CliError> {
    match s {
        "cdj" => Ok(Algorithm::Cdj),
        "cnj" => Ok(Algorithm::Cnj),
        "cuj" => Ok(Algorithm::Cuj),
        "myopic" => Ok(Algorithm::Myopic),
        "mc" => Ok(Algorithm::MusicalChairs),
        other => Err(CliError::Validation(format!(
            "unknown algorithm '{other}' (expected cdj, cnj, cuj, myopic or mc)"
        ))),
    }
}

fn config_name(cfg: &ResolvedConfig) -> String {
    format!("{}-k{}-n{}-j{}", algo_name(cfg.algorithm), cfg.k, cfg.n, cfg.j)
}

/// Runs all episodes of one resolved config; parallel runs fold in run-index
/// order, so results are identical to the serial path.
fn execute(cfg: &ResolvedConfig, parallel: usize) -> Result<Aggregate, CliError> {
    let results: Vec<RunResult> = if parallel <= 1 {
        (0..cfg.runs as u64)
            .map(|run| RunResult::from_trajectory(&run_episode(cfg, run)))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..cfg.runs as u64)
                .into_par_iter()
                .map(|run| RunResult::from_trajectory(&run_episode(cfg, run)))
                .collect()
        })
    };
    Ok(Aggregate::from_results(results, cfg.horizon as usize))
}

struct SummaryRow {
    name: String,
    final_regret: f64,
    correct_fraction: f64,
    mean_settle_slot: Option<f64>,
    mean_post_settle_su_su: Option<f64>,
}

fn summarize(cfg: &ResolvedConfig, agg: &Aggregate, curve: &RegretCurve) -> SummaryRow {
    let correct = agg
        .results
        .iter()
        .filter(|r| {
            r.agents.iter().all(|a| a.n_hat == cfg.n && a.j_hat == cfg.j && !a.degraded)
        })
        .count();
    let settled: Vec<&RunResult> =
        agg.results.iter().filter(|r| r.last_settle_slot.is_some()).collect();
    let mean_settle = (!settled.is_empty()).then(|| {
        settled.iter().map(|r| r.last_settle_slot.unwrap() as f64).sum::<f64>()
            / settled.len() as f64
    });
    let mean_post = (!settled.is_empty()).then(|| {
        settled.iter().map(|r| r.post_settle_su_su.unwrap() as f64).sum::<f64>()
            / settled.len() as f64
    });
    SummaryRow {
        name: config_name(cfg),
        final_regret: curve.final_regret(),
        correct_fraction: correct as f64 / agg.runs as f64,
        mean_settle_slot: mean_settle,
        mean_post_settle_su_su: mean_post,
    }
}

fn regret_csv(curve: &RegretCurve) -> String {
    let mut out = String::with_capacity(curve.mean_regret.len() * 40 + 64);
    out.push_str("slot,mean_regret,stderr_regret,mean_throughput\n");
    for t in 0..curve.mean_regret.len() {
        // mean_throughput is the per-slot average up to and including slot t.
        let tp = curve.mean_throughput[t] / (t as f64 + 1.0);
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6}",
            t + 1,
            curve.mean_regret[t],
            curve.stderr_regret[t],
            tp
        );
    }
    out
}

fn summary_csv(rows: &mut Vec<SummaryRow>) -> String {
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = String::new();
    out.push_str(
        "config,final_regret,correct_estimate_fraction,mean_settle_slot,post_settle_su_su_collisions\n",
    );
    for row in rows {
        let settle = row.mean_settle_slot.map(|v| format!("{v:.6}")).unwrap_or_default();
        let post = row.mean_post_settle_su_su.map(|v| format!("{v:.6}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{},{}",
            row.name, row.final_regret, row.correct_fraction, settle, post
        );
    }
    out
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.common)?.resolve()?;
    let agg = execute(&cfg, args.common.parallel)?;
    let rate = oracle_throughput(&cfg.p, cfg.n, cfg.j, cfg.jammer_mode)?;
    let curve = RegretCurve::from_aggregate(&agg, rate);
    let mut rows = vec![summarize(&cfg, &agg, &curve)];

    let out = &args.common.out;
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    write_file(&out.join("regret.csv"), &regret_csv(&curve))?;
    write_file(&out.join("summary.csv"), &summary_csv(&mut rows))?;
    let resolved = serde_json::to_string_pretty(&cfg).expect("resolved config serializes");
    write_file(&out.join("config.resolved.json"), &resolved)?;
    println!(
        "{}: {} runs, oracle rate {:.6}/slot, final mean regret {:.6}",
        config_name(&cfg),
        cfg.runs,
        rate,
        curve.final_regret()
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let base = load_config(&args.common)?;
    if args.values.is_empty() {
        return Err(CliError::Validation("sweep needs at least one value".into()));
    }
    if args.vary == "k" && base.p.is_some() {
        return Err(CliError::Validation(
            "sweeping k requires a generated p vector; omit \"p\" from the config".into(),
        ));
    }

    let out = &args.common.out;
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut rows = Vec::new();
    for &value in &args.values {
        let mut point = base.clone();
        match args.vary.as_str() {
            "n" => point.n = value,
            "k" => point.k = value,
            "j" => point.j = value,
            other => {
                return Err(CliError::Validation(format!(
                    "cannot vary '{other}' (expected n, k or j)"
                )))
            }
        }
        let cfg = point.resolve()?;
        let agg = execute(&cfg, args.common.parallel)?;
        let rate = oracle_throughput(&cfg.p, cfg.n, cfg.j, cfg.jammer_mode)?;
        let curve = RegretCurve::from_aggregate(&agg, rate);
        let name = config_name(&cfg);
        write_file(&out.join(format!("regret-{name}.csv")), &regret_csv(&curve))?;
        let resolved = serde_json::to_string_pretty(&cfg).expect("resolved config serializes");
        write_file(&out.join(format!("config-{name}.resolved.json")), &resolved)?;
        println!("{name}: final mean regret {:.6}", curve.final_regret());
        rows.push(summarize(&cfg, &agg, &curve));
    }
    write_file(&out.join("summary.csv"), &summary_csv(&mut rows))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_phase_lengths(args: PhaseLengthsArgs) -> Result<(), CliError> {
    let algo = parse_algorithm(&args.algorithm)?;
    let theta = match args.theta {
        Some(t) => t,
        None => {
            let p = jamhop_core::config::generate_p(args.k);
            1.0 - p.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        }
    };
    let params =
        LearningParams { delta: args.delta, epsilon: args.epsilon, gamma: args.gamma };
    let schedule = phase_lengths(algo, args.k, theta, &params)?;
    println!(
        "algorithm={} k={} theta={:.6} delta={} epsilon={} gamma={}",
        algo_name(algo),
        args.k,
        theta,
        args.delta,
        args.epsilon,
        args.gamma
    );
    println!("t_c = {}", schedule.t_c);
    println!("t_o = {}", schedule.t_o);
    println!("t_j = {}", schedule.t_j);
    println!("total learning slots = {}", schedule.learning_slots());
    Ok(())
}

fn cmd_selfcheck(args: SelfcheckArgs) -> Result<(), CliError> {
    let mut reports = vec![selfcheck::inversion_identities()];
    reports.extend(selfcheck::mc_vs_closed_form(args.slots, args.seed));
    let mut all_passed = true;
    for r in &reports {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", r.name, r.detail);
        all_passed &= r.passed;
    }
    if all_passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}
