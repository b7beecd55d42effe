use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use relayfair::allocators::AllocatorKind;
use relayfair::experiments::{
    emit_csv, emit_oracle_csv, emit_summary, oracle_path, parse_range, run_sweep, SweepKind,
    SweepSpec,
};
use relayfair::scenario::ScenarioConfig;
use relayfair::{Error, Result};

/// Runs used when neither `--runs`, `--paper-scale` nor the config file say otherwise.
const DESK_RUNS: usize = 200;
const FULL_RUNS: usize = 1000;
const FULL_USERS: usize = 600;

#[derive(Parser)]
#[command(name = "relayfair", version, about = "Max-min fair allocation in relay networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep relays per gNB or the number of gNBs and record per-run utilities.
    Sweep(SweepArgs),
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Scenario configuration (JSON); missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// What to sweep: `relays` (per gNB) or `gnbs`.
    #[arg(long)]
    kind: String,
    /// Inclusive range, e.g. `2..8`.
    #[arg(long)]
    range: String,
    #[arg(long)]
    runs: Option<usize>,
    /// Overrides the seed of the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Cross-check small instances against the grid oracle; writes `<out>_oracle.csv`.
    #[arg(long)]
    oracle: bool,
    /// Grid points per relay dimension for `--oracle`.
    #[arg(long, default_value_t = 200)]
    oracle_points: usize,
    /// 1000 runs and 600 users.
    #[arg(long)]
    paper_scale: bool,
    /// Write every per-gNB instance as JSON into this directory.
    #[arg(long)]
    dump_instances: Option<PathBuf>,
    /// Exit with status 2 if any run was infeasible.
    #[arg(long)]
    strict: bool,
    /// Record wall-clock time per run (makes the CSV non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Comma-separated allocators to run.
    #[arg(long, value_delimiter = ',', default_value = "linex,wfill")]
    allocators: Vec<String>,
}

fn load_config(path: Option<&PathBuf>) -> Result<(ScenarioConfig, bool)> {
    let Some(path) = path else {
        return Ok((ScenarioConfig::default(), false));
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let json = |source| Error::Json {
        path: path.clone(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(json)?;
    let has_runs = value.get("runs").is_some();
    let cfg: ScenarioConfig = serde_json::from_value(value).map_err(json)?;
    Ok((cfg, has_runs))
}

/// Returns whether any run was skipped as infeasible.
fn sweep(args: SweepArgs) -> Result<bool> {
    let (mut cfg, cfg_has_runs) = load_config(args.config.as_ref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.paper_scale {
        cfg.n_users = FULL_USERS;
    }
    let runs = match (args.runs, args.paper_scale, cfg_has_runs) {
        (Some(n), ..) => n,
        (None, true, _) => FULL_RUNS,
        (None, false, true) => cfg.runs,
        (None, false, false) => DESK_RUNS,
    };
    cfg.runs = runs.max(1);

    let mut spec = SweepSpec::new(args.kind.parse::<SweepKind>()?, parse_range(&args.range)?, cfg, runs);
    spec.allocators = args
        .allocators
        .iter()
        .map(|a| a.trim().parse::<AllocatorKind>())
        .collect::<Result<_>>()?;
    spec.oracle_points = args.oracle.then_some(args.oracle_points);
    spec.timing = args.timing;
    spec.dump_instances = args.dump_instances;

    let result = run_sweep(&spec)?;
    emit_csv(&result, &args.out)?;
    if args.oracle {
        emit_oracle_csv(&result, &oracle_path(&args.out))?;
        let failed = result.oracle.iter().filter(|r| !r.pass).count();
        eprintln!("oracle: {} instances checked, {failed} outside the bound", result.oracle.len());
    }
    print!("{}", emit_summary(&result));
    Ok(!result.skipped.is_empty())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Sweep(args) => {
            let strict = args.strict;
            match sweep(args) {
                Ok(true) if strict => ExitCode::from(2),
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
