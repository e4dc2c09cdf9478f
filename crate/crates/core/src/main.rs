use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use noma_son::env::{generate_scenario, Environment};
use noma_son::harness::fit::Band;
use noma_son::harness::run::{exploration_lengths, oracle_report};
use noma_son::harness::{
    aggregate_tables, fit_log_square, parse_seed_range, read_table, simulate_all, write_results, write_table, Method,
    RunConfig,
};
use noma_son::oracle::{regret_bound_curves, BoundParams};
use noma_son::schedule::ExploreMode;
use noma_son::{Error, Result};

#[derive(Parser)]
#[command(name = "noma-son", version, about = "Multi-player bandit channel and power allocation for NOMA SONs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one or more seeds and write their outputs.
    Run(RunArgs),
    /// Print the default configuration.
    Config,
    /// Solve a deployment exactly and print the optima and phase-length bounds.
    Oracle(ScenarioArgs),
    /// Print the regret envelope over a list of horizons.
    Bounds(BoundsArgs),
    /// Fit `a·ln(t)²` to a regret curve.
    Fit(FitArgs),
    /// Pointwise mean and std of the same CSV across run directories.
    Aggregate(AggregateArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config; the default deployment is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        match &self.config {
            Some(p) => RunConfig::load(p),
            None => Ok(RunConfig::paper()),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// `A..B` or `A..=B`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    scenario_seed: Option<u64>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    explore_mode: Option<ExploreMode>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated horizons in slots.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e5, 5e5, 1e6, 2e6])]
    horizons: Vec<f64>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with columns `t` and `regret`.
    input: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    t_start: f64,
    #[arg(long, default_value = "regret")]
    column: String,
    /// Band `lo,hi` the curve must stay within, as multiples of `ln(t)²`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    band: Option<Vec<f64>>,
}

#[derive(Args)]
struct AggregateArgs {
    /// Run directories holding the file.
    #[arg(required = true)]
    dirs: Vec<PathBuf>,
    #[arg(long, default_value = "metrics.csv")]
    file: String,
    #[arg(long)]
    out: PathBuf,
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = args.config.load()?;
    if let Some(s) = args.seed {
        cfg.seeds = vec![s];
    }
    if let Some(r) = &args.seeds {
        cfg.seeds = parse_seed_range(r)?;
    }
    if args.scenario_seed.is_some() {
        cfg.scenario_seed = args.scenario_seed;
    }
    if let Some(m) = args.method {
        cfg.method = m;
    }
    if let Some(m) = args.explore_mode {
        cfg.algorithm.explore_mode = m;
    }
    if args.out.is_some() {
        cfg.output.dir = args.out;
    }
    let dir = cfg
        .output
        .dir
        .clone()
        .ok_or_else(|| Error::Config("an output directory is required (--out or output.dir)".into()))?;
    log::info!("running {} seed(s) into {}", cfg.seeds.len(), dir.display());
    let results = simulate_all(&cfg)?;
    let summary = write_results(&dir, &cfg, results)?;
    print_json(&summary)?;
    if summary.seeds.is_empty() {
        let first = &summary.skipped[0].report;
        return Err(Error::Data(format!("every seed failed; first: {}", first.message)));
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleOutput {
    oracle: noma_son::harness::run::OracleReport,
    channel_explore_len: u64,
    power_explore_len: u64,
}

fn oracle(args: &ScenarioArgs) -> Result<(RunConfig, OracleOutput)> {
    let cfg = args.config.load()?;
    let sc = generate_scenario(&cfg.scenario, cfg.scenario_seed.unwrap_or(args.seed))?;
    let env = Environment::new(sc.clone())?;
    let oracle = oracle_report(&sc, &env, &cfg)?;
    let (c, p) = exploration_lengths(&cfg, &oracle);
    Ok((
        cfg,
        OracleOutput {
            oracle,
            channel_explore_len: c,
            power_explore_len: p,
        },
    ))
}

#[derive(Serialize)]
struct BoundsOutput {
    channel: Vec<noma_son::oracle::BoundPoint>,
    power: Vec<noma_son::oracle::BoundPoint>,
}

fn bounds(args: &BoundsArgs) -> Result<()> {
    let (cfg, o) = oracle(&args.scenario)?;
    let a = &cfg.algorithm;
    let players: usize = cfg
        .scenario
        .channels_per_ap()
        .iter()
        .sum();
    let base = BoundParams {
        players: players as f64,
        explore_len: o.channel_explore_len as f64,
        c1: a.c1,
        c2: a.c2 as f64,
        delta: a.delta,
    };
    let power = BoundParams {
        players: cfg.scenario.aps as f64,
        explore_len: o.power_explore_len as f64,
        ..base
    };
    print_json(&BoundsOutput {
        channel: regret_bound_curves(&base, &args.horizons),
        power: regret_bound_curves(&power, &args.horizons),
    })
}

fn fit(args: &FitArgs) -> Result<()> {
    let table = read_table(&args.input)?;
    let col = table
        .headers
        .iter()
        .position(|h| h == &args.column)
        .ok_or_else(|| Error::Data(format!("no column {:?} in {}", args.column, args.input.display())))?;
    let curve: Vec<(f64, f64)> = table.columns[0].iter().copied().zip(table.columns[col].iter().copied()).collect();
    let band = args.band.as_ref().map(|b| Band { lo: b[0], hi: b[1] });
    print_json(&fit_log_square(&curve, args.t_start, band)?)
}

fn aggregate(args: &AggregateArgs) -> Result<()> {
    let tables = args
        .dirs
        .iter()
        .map(|d| read_table(&d.join(&args.file)))
        .collect::<Result<Vec<_>>>()?;
    write_table(&args.out, &aggregate_tables(&tables)?)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => run(a),
        Command::Config => print_json(&RunConfig::paper()),
        Command::Oracle(a) => print_json(&oracle(&a)?.1),
        Command::Bounds(a) => bounds(&a),
        Command::Fit(a) => fit(&a),
        Command::Aggregate(a) => aggregate(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.report()).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(match e {
                Error::Config(_) => 2,
                _ => 1,
            })
        }
    }
}
