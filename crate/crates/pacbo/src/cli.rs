//! Command line interface. Exit codes: 0 success, 1 usage error, 2 runtime
//! error (including a failed oracle check).

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use pacbo_core::datagen::{generate, Stream, SyntheticSpec};
use pacbo_core::rng::{purpose_rng, Purpose};
use pacbo_core::PacboConfig;

use crate::bounds_table::{bound_table, BoundParams};
use crate::error::{AppError, Result};
use crate::experiment::{replicate_table1, run_timed, Table1Settings};
use crate::io::{self, FinalPrediction, OutputDir, Table1Row, Table1Summary};
use crate::oracle::{oracle_check, OracleSpec};

#[derive(Debug, Parser)]
#[command(name = "pacbo", version, about = "Quasi-Bayesian online clustering with a time-varying number of clusters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the online clusterer over a stream and write per-step records.
    Run(RunArgs),
    /// Repeat the 10-group benchmark and report correct-k counts and regret.
    #[command(name = "replicate-table1")]
    ReplicateTable1(Table1Args),
    /// Export the sampler chain of one time step.
    Trace(TraceArgs),
    /// Evaluate the regret bounds.
    Bounds(BoundsArgs),
    /// Write a synthetic stream as CSV.
    Generate(GenerateArgs),
    /// Compare the sampler's k-marginal with a grid normalization of the target.
    #[command(name = "oracle-check")]
    OracleCheck(OracleArgs),
}

/// `R` given as a number or `auto` (largest observation norm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusArg {
    Value(f64),
    Auto,
}

impl FromStr for RadiusArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(RadiusArg::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(RadiusArg::Value(v)),
            _ => Err(format!("expected a positive number or `auto`, got {s:?}")),
        }
    }
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON file with run parameters; unspecified fields keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides R; `auto` uses the largest observation norm.
    #[arg(long)]
    pub radius: Option<RadiusArg>,
    /// Overrides the chain length N.
    #[arg(long)]
    pub chain_length: Option<usize>,
    /// Overrides the maximal number of clusters p.
    #[arg(long)]
    pub p: Option<usize>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct DataArgs {
    /// CSV stream with columns t,x_1..x_d[,k_true].
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// JSON synthetic stream description.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Generate the 10-group benchmark stream with this many steps.
    #[arg(long)]
    pub benchmark_horizon: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Seed for generated streams; defaults to the run seed.
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Keep the chain trace of every step in the records.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    /// Number of repetitions.
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Use 100 repetitions.
    #[arg(long, conflicts_with = "reps")]
    pub full: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub horizon: usize,
    /// JSON file overriding the benchmark parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// k-means restarts for the oracle loss.
    #[arg(long, default_value_t = pacbo_core::metrics::OCL_RESTARTS)]
    pub ocl_restarts: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Export the chain run after observing x_1..x_t (it produces the prediction for t+1).
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub horizon: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[arg(long)]
    pub p: usize,
    /// Inverse temperature for the fixed-lambda bound.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Student prior scale for the Student-prior bounds.
    #[arg(long)]
    pub tau0: Option<f64>,
    /// Sum of the comparison centers' norms (Student-prior bounds).
    #[arg(long, default_value_t = 0.0)]
    pub center_norm_sum: f64,
    /// Largest observation norm (Student-prior bounds); defaults to R.
    #[arg(long)]
    pub max_obs_norm: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, conflicts_with = "benchmark_horizon", required_unless_present = "benchmark_horizon")]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub benchmark_horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Three 1-d observations, p = 3.
    Toy,
    /// Prior target, p = 2.
    Prior,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// JSON oracle spec.
    #[arg(long, conflicts_with = "preset")]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Toy)]
    pub preset: Preset,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub json: bool,
}

fn load_config(args: &ConfigArgs) -> Result<PacboConfig> {
    let mut cfg: PacboConfig = match &args.config {
        Some(path) => io::read_json(path)?,
        None => PacboConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.chain_length {
        cfg.chain_length = n;
    }
    if let Some(p) = args.p {
        cfg.p = p;
    }
    Ok(cfg)
}

fn load_stream(args: &DataArgs, seed: u64) -> Result<Stream> {
    if let Some(path) = &args.data {
        return io::read_stream_csv(path);
    }
    let spec = match (&args.spec, args.benchmark_horizon) {
        (Some(path), _) => io::read_json::<SyntheticSpec>(path)?,
        (None, Some(horizon)) => SyntheticSpec::TenGroups { horizon },
        (None, None) => return Err(AppError::Input("no data source given".into())),
    };
    Ok(generate(&spec, &mut purpose_rng(seed, Purpose::DataGen, 0))?)
}

/// Config and stream with `d` and `R` reconciled.
fn prepare_run(config: &ConfigArgs, data: &DataArgs, data_seed: Option<u64>) -> Result<(PacboConfig, Stream)> {
    let mut cfg = load_config(config)?;
    let stream = load_stream(data, data_seed.unwrap_or(cfg.seed))?;
    if config.config.is_none() {
        cfg.d = stream.d;
    } else if cfg.d != stream.d {
        return Err(AppError::Input(format!("config has d = {} but the stream has d = {}", cfg.d, stream.d)));
    }
    match config.radius {
        Some(RadiusArg::Value(r)) => cfg.radius = r,
        Some(RadiusArg::Auto) => {
            let r = stream.max_norm();
            if !(r > 0.0) {
                return Err(AppError::Input("cannot set R automatically from an all-zero stream".into()));
            }
            cfg.radius = r;
        }
        None => {}
    }
    cfg.validate()?;
    Ok((cfg, stream))
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let (mut cfg, stream) = prepare_run(&args.config, &args.data, args.data_seed)?;
    cfg.record_trace = args.trace;
    let out = OutputDir::new(&args.out, args.overwrite);
    out.prepare(&[io::RUN_JSONL, io::FINAL_JSON, io::SUMMARY_CSV])?;
    let record = run_timed(&stream.data, &cfg)?;
    io::write_run_jsonl(&out.path(io::RUN_JSONL), &record.steps)?;
    io::write_run_summary_csv(&out.path(io::SUMMARY_CSV), &record.steps)?;
    let last = FinalPrediction { t: record.steps.len() + 1, centers: record.final_centers, trace: record.final_trace };
    io::write_json(&out.path(io::FINAL_JSON), &last)?;
    let cumulative = record.steps.last().map_or(0.0, |s| s.cumulative_loss);
    println!("{} steps, cumulative loss {cumulative:.6}, final k = {}", record.steps.len(), last.centers.k());
    println!("wrote {}", out.root().display());
    Ok(())
}

fn cmd_table1(args: &Table1Args) -> Result<()> {
    let reps = if args.full { 100 } else { args.reps };
    let mut settings = Table1Settings::benchmark(reps, args.seed);
    settings.horizon = args.horizon;
    settings.ocl.restarts = args.ocl_restarts;
    if let Some(path) = &args.config {
        settings.config = io::read_json(path)?;
    }
    settings.config.validate()?;
    let out = OutputDir::new(&args.out, args.overwrite);
    out.prepare(&[io::TABLE1_CSV, io::TABLE1_SUMMARY_CSV, io::REGRET_CSV])?;
    let outcome = replicate_table1(&settings)?;
    io::write_rows(
        &out.path(io::TABLE1_CSV),
        outcome.reps.iter().map(|r| Table1Row { rep: r.rep, seed: r.seed, correct_k: r.correct_k }),
    )?;
    let summary = Table1Summary { reps, mean: outcome.mean_correct_k, sd: outcome.sd_correct_k };
    io::write_rows(&out.path(io::TABLE1_SUMMARY_CSV), [summary])?;
    io::write_regret_csv(&out.path(io::REGRET_CSV), &outcome.report)?;
    match summary.sd {
        Some(sd) => println!("correct k over {reps} repetitions: mean {:.2} (sd {sd:.2}) of {}", summary.mean, settings.horizon),
        None => println!("correct k over 1 repetition: {:.0} of {}", summary.mean, settings.horizon),
    }
    if let Some(last) = outcome.report.rows.last() {
        println!(
            "T = {}: ECL {:.2}, OCL<= {:.2}, regret>= {:.2}, bound {:.2}",
            last.t, last.ecl, last.ocl, last.regret, last.bound_cor3
        );
    }
    println!("OCL is a k-means upper approximation of the oracle loss, so the regret column is a lower estimate.");
    let outliers = outcome.outliers(settings.config.radius);
    if outliers > 0 {
        println!("{outliers} repetition(s) had observations outside the ball of radius R (kept unclipped).");
    }
    println!("wrote {}", out.root().display());
    Ok(())
}

fn cmd_trace(args: &TraceArgs) -> Result<()> {
    let (mut cfg, stream) = prepare_run(&args.config, &args.data, args.data_seed)?;
    if args.t == 0 || args.t > stream.len() {
        return Err(AppError::Input(format!("--t must be in 1..={}, got {}", stream.len(), args.t)));
    }
    cfg.record_trace = true;
    let out = OutputDir::new(&args.out, args.overwrite);
    out.prepare(&[io::TRACE_CSV])?;
    let record = pacbo_core::run_stream(&stream.data[..args.t * stream.d], &cfg)?;
    let trace = record.final_trace.expect("traces were recorded");
    io::write_trace_csv(&out.path(io::TRACE_CSV), args.t, &trace)?;
    println!("{} iterations, acceptance rate {:.3}", trace.len(), trace.acceptance_rate());
    println!("wrote {}", out.path(io::TRACE_CSV).display());
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs) -> Result<()> {
    let params = BoundParams {
        k: args.k,
        horizon: args.horizon,
        d: args.d,
        radius: args.radius,
        eta: args.eta,
        p: args.p,
        lambda: args.lambda,
        tau0: args.tau0,
        center_norm_sum: args.center_norm_sum,
        max_obs_norm: args.max_obs_norm,
    };
    let table = bound_table(&params);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&table).expect("bound table serializes"));
    } else {
        for e in &table {
            match (e.value, &e.error) {
                (Some(v), _) => println!("{:<18} {v}", e.name),
                (None, Some(err)) => println!("{:<18} error: {err}", e.name),
                (None, None) => unreachable!(),
            }
        }
    }
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let spec = match (&args.spec, args.benchmark_horizon) {
        (Some(path), _) => io::read_json::<SyntheticSpec>(path)?,
        (None, Some(horizon)) => SyntheticSpec::TenGroups { horizon },
        (None, None) => unreachable!("clap requires one source"),
    };
    let stream = generate(&spec, &mut purpose_rng(args.seed, Purpose::DataGen, 0))?;
    if args.out.exists() && !args.overwrite {
        return Err(AppError::OutputExists(args.out.clone()));
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| AppError::Io { path: parent.to_path_buf(), source })?;
    }
    io::write_stream_csv(&args.out, &stream)?;
    println!("{} observations in dimension {}; wrote {}", stream.len(), stream.d, args.out.display());
    Ok(())
}

/// Returns whether the check passed.
fn cmd_oracle(args: &OracleArgs) -> Result<bool> {
    let mut spec = match &args.spec {
        Some(path) => io::read_json::<OracleSpec>(path)?,
        None => match args.preset {
            Preset::Toy => OracleSpec::toy(),
            Preset::Prior => OracleSpec::prior(),
        },
    };
    if let Some(n) = args.iterations {
        spec.iterations = n;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let report = oracle_check(&spec)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        println!("chain  k-marginal: {:?}", report.chain_marginal);
        println!("oracle k-marginal: {:?}", report.oracle_marginal);
        println!("TV = {:.4} (tolerance {}) {}", report.tv, report.tolerance, if report.pass { "PASS" } else { "FAIL" });
    }
    Ok(report.pass)
}

pub fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::ReplicateTable1(a) => cmd_table1(a).map(|_| true),
        Command::Trace(a) => cmd_trace(a).map(|_| true),
        Command::Bounds(a) => cmd_bounds(a).map(|_| true),
        Command::Generate(a) => cmd_generate(a).map(|_| true),
        Command::OracleCheck(a) => cmd_oracle(a),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

