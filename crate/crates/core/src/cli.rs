//! `cmab` command line: run experiments, inspect complexity and bounds, and
//! replay stored results.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rayon::ThreadPool;
use serde_json::json;

use crate::complexity::{theorem1_bound, ComplexityReport};
use crate::config::{parse_config, parse_instance_file};
use crate::harness::{
    aggregate, bound_comparison, pigeonhole_audit, run_replications, AggregateResult, CurvePoint,
};
use crate::instance::BanditInstance;
use crate::policy::PolicyConfig;
use crate::record::RunRecord;

pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Parser)]
#[command(
    name = "cmab",
    version,
    about = "Constrained bandit experiments with CAPT / CAPT-E"
)]
pub struct Cli {
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute an experiment and write aggregate.json, curves.csv and meta.json.
    Run(RunArgs),
    /// Print gaps, H(epsilon) and the success bound for an instance.
    Complexity(ComplexityArgs),
    /// Print the success bound over a grid of horizons.
    Bound(BoundArgs),
    /// Re-run a stored result, audit every replication and compare outputs byte for byte.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<u64>,
    /// Output directory (overrides `output_dir`; default `results`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InstanceSource {
    /// Experiment config; its instance and epsilon are used.
    #[arg(long, conflicts_with = "instance")]
    pub config: Option<PathBuf>,
    /// Standalone instance file.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Tolerance (overrides the config's policy epsilon).
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[command(flatten)]
    pub source: InstanceSource,
    /// Also evaluate the bound at this horizon.
    #[arg(long)]
    pub horizon: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub source: InstanceSource,
    /// Number of arms (with --h, instead of an instance).
    #[arg(long, requires = "h")]
    pub arms: Option<usize>,
    /// Problem complexity H(epsilon).
    #[arg(long, requires = "arms")]
    pub h: Option<f64>,
    /// Comma-separated horizons.
    #[arg(long, value_delimiter = ',', required = true)]
    pub horizons: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Directory holding a previous `run` output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
struct CliError(String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

type CliResult = Result<bool, CliError>;

/// Parses `args` (including the program name) and executes the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    let pool = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => Some(pool),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return 2;
            }
        },
        None => None,
    };
    let result = dispatch(&cli, pool.as_ref(), out);
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(CliError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn dispatch(cli: &Cli, pool: Option<&ThreadPool>, out: &mut dyn Write) -> CliResult {
    match &cli.command {
        Command::Run(args) => cmd_run(args, pool, out),
        Command::Complexity(args) => cmd_complexity(args, out),
        Command::Bound(args) => cmd_bound(args, out),
        Command::Verify(args) => cmd_verify(args, pool, out),
    }
}

/// `aggregate.json` body: pretty JSON plus trailing newline.
pub fn aggregate_json(agg: &AggregateResult) -> String {
    let mut s = serde_json::to_string_pretty(agg).expect("aggregate serializes");
    s.push('\n');
    s
}

pub fn curves_csv(curve: &[CurvePoint]) -> String {
    let mut s = String::from("t,p_optimal_selection,p_instantaneous_regret,stderr\n");
    for p in curve {
        s.push_str(&format!(
            "{},{},{},{}\n",
            p.t, p.p_optimal_selection, p.p_instantaneous_regret, p.stderr
        ));
    }
    s
}

struct Outcome {
    aggregate: AggregateResult,
    records: Vec<RunRecord>,
}

fn execute(
    pool: Option<&ThreadPool>,
    instance: &BanditInstance,
    policy: &PolicyConfig,
    horizon: u64,
    replications: u64,
    seed: u64,
    checkpoints: &[u64],
) -> Result<Outcome, CliError> {
    let run = || run_replications(instance, policy, horizon, replications, seed, checkpoints);
    let records = match pool {
        Some(pool) => pool.install(run),
        None => run(),
    }?;
    let aggregate = aggregate(instance, policy, seed, &records)?;
    Ok(Outcome { aggregate, records })
}

fn cmd_run(args: &RunArgs, pool: Option<&ThreadPool>, out: &mut dyn Write) -> CliResult {
    let mut cfg = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.replications {
        if r == 0 {
            return Err(CliError("--replications must be at least 1".into()));
        }
        cfg.replications = r;
    }
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));

    let started = SystemTime::now();
    let outcome = execute(
        pool,
        &cfg.instance,
        &cfg.policy,
        cfg.horizon,
        cfg.replications,
        cfg.seed,
        &cfg.checkpoint_times(),
    )?;
    let agg = &outcome.aggregate;

    fs::create_dir_all(&dir)?;
    fs::write(dir.join(AGGREGATE_FILE), aggregate_json(agg))?;
    fs::write(dir.join(CURVES_FILE), curves_csv(&agg.selection_curve))?;
    let elapsed = started.elapsed().map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let created = started
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let meta = json!({
        "created_unix_ms": created,
        "elapsed_seconds": elapsed,
        "threads": pool.map_or_else(rayon::current_num_threads, |p| p.current_num_threads()),
        "config_path": args.config.display().to_string(),
        "config": cfg.to_json(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(
        dir.join(META_FILE),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;

    writeln!(
        out,
        "{} eps={} T={} R={} seed={}",
        agg.policy.name(),
        agg.policy.epsilon,
        agg.horizon,
        agg.replications,
        agg.seed
    )?;
    writeln!(
        out,
        "success rate {:.4} (stderr {:.4}, {}/{})",
        agg.success_rate, agg.success_stderr, agg.success_count, agg.replications
    )?;
    if let Ok(rows) = bound_comparison(std::slice::from_ref(agg)) {
        let row = rows[0];
        writeln!(
            out,
            "bound raw {:.6} clamped {:.6} satisfied {}",
            row.raw_bound, row.clamped_bound, row.satisfied
        )?;
    }
    if let Some(last) = agg.selection_curve.last() {
        writeln!(
            out,
            "P(optimal feasible arm at t={}) = {:.4}",
            last.t, last.p_optimal_selection
        )?;
    }
    match agg.pigeonhole_passed {
        Some(p) => writeln!(out, "pigeonhole audit {p}/{}", agg.replications)?,
        None => writeln!(out, "pigeonhole audit skipped (epsilon = 0)")?,
    }
    writeln!(out, "wrote {}", dir.display())?;
    Ok(agg.audits_pass())
}

fn load_source(src: &InstanceSource) -> Result<(BanditInstance, f64), CliError> {
    match (&src.config, &src.instance) {
        (Some(c), _) => {
            let cfg = parse_config(c)?;
            Ok((cfg.instance, src.epsilon.unwrap_or(cfg.policy.epsilon)))
        }
        (None, Some(i)) => {
            let eps = src
                .epsilon
                .ok_or_else(|| CliError("--epsilon is required with --instance".into()))?;
            Ok((parse_instance_file(i)?, eps))
        }
        (None, None) => Err(CliError("give --config or --instance".into())),
    }
}

fn cmd_complexity(args: &ComplexityArgs, out: &mut dyn Write) -> CliResult {
    let (instance, eps) = load_source(&args.source)?;
    let mut report = ComplexityReport::new(&instance, eps)?;
    if let Some(t) = args.horizon {
        report = report.with_horizon(t);
    }
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    writeln!(out, "mu* = {}", report.gaps.mu_star)?;
    writeln!(out, "H = {:.6}", report.h_epsilon)?;
    if let Some(b) = report.bound {
        writeln!(out, "bound raw {:.6} clamped {:.6}", b.raw, b.clamped)?;
    }
    Ok(true)
}

fn cmd_bound(args: &BoundArgs, out: &mut dyn Write) -> CliResult {
    let (arms, h) = match (args.arms, args.h) {
        (Some(a), Some(h)) => {
            if !(h > 0.0 && h.is_finite()) || a == 0 {
                return Err(CliError(
                    "--arms must be >= 1 and --h finite and > 0".into(),
                ));
            }
            (a, h)
        }
        _ => {
            let (instance, eps) = load_source(&args.source)?;
            let report = ComplexityReport::new(&instance, eps)?;
            (instance.num_arms(), report.h_epsilon)
        }
    };
    writeln!(out, "# |A| = {arms}, H = {h}, 16H = {}", 16.0 * h)?;
    writeln!(out, "T,raw,clamped")?;
    for &t in &args.horizons {
        let b = theorem1_bound(arms, t, h);
        writeln!(out, "{t},{},{}", b.raw, b.clamped)?;
    }
    Ok(true)
}

fn cmd_verify(args: &VerifyArgs, pool: Option<&ThreadPool>, out: &mut dyn Write) -> CliResult {
    let stored_path = args.out.join(AGGREGATE_FILE);
    let stored = fs::read_to_string(&stored_path)
        .map_err(|e| CliError(format!("{}: {e}", stored_path.display())))?;
    let prior: AggregateResult = serde_json::from_str(&stored)?;
    let outcome = execute(
        pool,
        &prior.instance,
        &prior.policy,
        prior.horizon,
        prior.replications,
        prior.seed,
        &prior.checkpoints,
    )?;
    let agg = &outcome.aggregate;

    let replay_ok = aggregate_json(agg) == stored;
    writeln!(
        out,
        "replay aggregate.json: {}",
        if replay_ok { "identical" } else { "DIFFERS" }
    )?;
    let curves_ok = match read_optional(&args.out.join(CURVES_FILE))? {
        Some(text) => {
            let ok = text == curves_csv(&agg.selection_curve);
            writeln!(
                out,
                "replay curves.csv: {}",
                if ok { "identical" } else { "DIFFERS" }
            )?;
            ok
        }
        None => true,
    };

    let audit_ok = match &agg.complexity {
        Some(c) => {
            let mut passed = 0u64;
            for rec in &outcome.records {
                if pigeonhole_audit(rec, c)? {
                    passed += 1;
                }
            }
            let total = outcome.records.len() as u64;
            writeln!(out, "pigeonhole audit {passed}/{total}")?;
            passed == total
        }
        None => {
            writeln!(out, "pigeonhole audit skipped (epsilon = 0)")?;
            true
        }
    };
    Ok(replay_ok && curves_ok && audit_ok)
}

fn read_optional(path: &Path) -> Result<Option<String>, CliError> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError(format!("{}: {e}", path.display()))),
    }
}
