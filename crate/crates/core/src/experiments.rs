//! Batch sweeps over random scenarios and their CSV / text output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocators::{linex, AllocatorKind};
use crate::error::{Error, Result};
use crate::model::StationId;
use crate::oracle::{grid_oracle, MAX_RELAYS, MAX_USERS};
use crate::scenario::{run_scenario, ScenarioConfig};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "RELAYFAIR_THREADS";

pub const CSV_HEADER: &str = "sweep_value,allocator,run_index,min_rate_bps,ops,iterations,wall_ns";
pub const ORACLE_CSV_HEADER: &str =
    "sweep_value,run_index,gnb,linex_min_rate_bps,oracle_best_bps,resolution_bound_bps,pass";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Relays per gNB varies.
    Relays,
    /// Number of gNBs varies.
    Gnbs,
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relays" | "relays-per-gnb" => Ok(SweepKind::Relays),
            "gnbs" | "n-gnbs" => Ok(SweepKind::Gnbs),
            other => Err(Error::Config(format!("unknown sweep kind {other:?}"))),
        }
    }
}

/// Parses `A..B` (inclusive) or a single value.
pub fn parse_range(s: &str) -> Result<(usize, usize)> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("bad range {s:?}")))
    };
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => {
            let v = num(s)?;
            (v, v)
        }
    };
    if a > b {
        return Err(Error::Config(format!("empty range {s:?}")));
    }
    Ok((a, b))
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub kind: SweepKind,
    /// Inclusive bounds of the swept value.
    pub range: (usize, usize),
    pub base: ScenarioConfig,
    pub allocators: Vec<AllocatorKind>,
    pub runs: usize,
    /// Grid points per dimension for oracle cross-checks; `None` disables them.
    pub oracle_points: Option<usize>,
    /// Record wall-clock time per run. Off by default so output stays byte-stable.
    pub timing: bool,
    pub dump_instances: Option<PathBuf>,
    /// Worker count; `None` uses [`THREADS_ENV`] or all cores.
    pub threads: Option<usize>,
}

impl SweepSpec {
    pub fn new(kind: SweepKind, range: (usize, usize), base: ScenarioConfig, runs: usize) -> Self {
        Self {
            kind,
            range,
            base,
            allocators: AllocatorKind::ALL.to_vec(),
            runs,
            oracle_points: None,
            timing: false,
            dump_instances: None,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.range.0 > self.range.1 {
            return Err(Error::Config("sweep range is empty".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.allocators.is_empty() {
            return Err(Error::Config("no allocator selected".into()));
        }
        if self.kind == SweepKind::Gnbs && self.range.0 == 0 {
            return Err(Error::Config("a sweep over gNBs must start at 1".into()));
        }
        for v in self.points() {
            let mut cfg = self.config_at(v);
            cfg.runs = self.runs;
            cfg.validate()?;
        }
        Ok(())
    }

    pub fn points(&self) -> impl Iterator<Item = usize> {
        self.range.0..=self.range.1
    }

    /// Scenario used at sweep value `v`.
    pub fn config_at(&self, v: usize) -> ScenarioConfig {
        let mut cfg = self.base.clone();
        match self.kind {
            SweepKind::Relays => cfg.relays_per_gnb = v,
            SweepKind::Gnbs => cfg.n_gnbs = v,
        }
        cfg
    }
}

/// One allocator on one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub sweep_value: usize,
    pub allocator: AllocatorKind,
    pub run_index: usize,
    /// Smallest user rate over the whole network.
    pub min_rate_bps: f64,
    pub ops: u64,
    pub iterations: u64,
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRun {
    pub sweep_value: usize,
    pub run_index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub sweep_value: usize,
    pub run_index: usize,
    pub gnb: StationId,
    pub linex_min_rate_bps: f64,
    pub oracle_best_bps: f64,
    pub resolution_bound_bps: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub sweep_value: usize,
    pub allocator: AllocatorKind,
    pub runs: usize,
    pub mean_min_rate_bps: f64,
    pub stderr_bps: f64,
    pub mean_ops: f64,
    pub mean_iterations: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Ordered by sweep value, run index, then allocator.
    pub records: Vec<RunRecord>,
    /// Runs where some gNB could not honour its bandwidth floors.
    pub skipped: Vec<SkippedRun>,
    pub oracle: Vec<OracleRecord>,
}

impl SweepResult {
    pub fn infeasible_count(&self) -> usize {
        self.skipped.len()
    }

    /// Per point and allocator means, in record order.
    pub fn summary(&self) -> Vec<PointSummary> {
        let mut keys: Vec<(usize, AllocatorKind)> = Vec::new();
        for r in &self.records {
            if !keys.contains(&(r.sweep_value, r.allocator)) {
                keys.push((r.sweep_value, r.allocator));
            }
        }
        keys.into_iter()
            .map(|(v, a)| {
                let rs: Vec<&RunRecord> = self
                    .records
                    .iter()
                    .filter(|r| r.sweep_value == v && r.allocator == a)
                    .collect();
                let n = rs.len() as f64;
                let mean = rs.iter().map(|r| r.min_rate_bps).sum::<f64>() / n;
                let var = if rs.len() > 1 {
                    rs.iter().map(|r| (r.min_rate_bps - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                PointSummary {
                    sweep_value: v,
                    allocator: a,
                    runs: rs.len(),
                    mean_min_rate_bps: mean,
                    stderr_bps: (var / n).sqrt(),
                    mean_ops: rs.iter().map(|r| r.ops as f64).sum::<f64>() / n,
                    mean_iterations: rs.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
                }
            })
            .collect()
    }
}

/// Worker count from the environment, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|n| *n > 0)
}

enum RunOutcome {
    Done(Vec<RunRecord>, Vec<OracleRecord>),
    Skipped(SkippedRun),
}

fn run_one(spec: &SweepSpec, v: usize, run_index: usize) -> Result<RunOutcome> {
    let cfg = spec.config_at(v);
    let scenario = run_scenario(&cfg, run_index as u64);
    let instances = match scenario.instances {
        Ok(i) => i,
        Err(e) if e.is_infeasible() => {
            return Ok(RunOutcome::Skipped(SkippedRun {
                sweep_value: v,
                run_index,
                reason: e.to_string(),
            }))
        }
        Err(e) => return Err(e),
    };

    if let Some(dir) = &spec.dump_instances {
        for inst in &instances {
            let name = format!("v{v}_run{run_index}_gnb{}.json", inst.gnb);
            let path = dir.join(name);
            fs::write(&path, inst.to_json()).map_err(|e| Error::io(path, e))?;
        }
    }

    let mut records = Vec::with_capacity(spec.allocators.len());
    for kind in &spec.allocators {
        let start = Instant::now();
        let mut min = f64::INFINITY;
        let mut ops = 0;
        let mut iterations = 0;
        for inst in &instances {
            let (alloc, trace) = kind.run(inst)?;
            if let Some(m) = alloc.min_user_rate() {
                min = min.min(m);
            }
            ops += trace.arithmetic_ops;
            iterations += trace.loop_iterations;
        }
        let wall_ns = if spec.timing {
            start.elapsed().as_nanos() as u64
        } else {
            0
        };
        records.push(RunRecord {
            sweep_value: v,
            allocator: *kind,
            run_index,
            min_rate_bps: min,
            ops,
            iterations,
            wall_ns,
        });
    }

    let mut oracle = Vec::new();
    if let Some(points) = spec.oracle_points {
        for inst in &instances {
            if inst.relays.len() > MAX_RELAYS || inst.user_count() > MAX_USERS {
                continue;
            }
            let Some(l) = linex(inst)?.0.min_user_rate() else {
                continue;
            };
            let g = grid_oracle(inst, points)?;
            let slack = 1e-9 * g.best_min_rate.abs();
            oracle.push(OracleRecord {
                sweep_value: v,
                run_index,
                gnb: inst.gnb,
                linex_min_rate_bps: l,
                oracle_best_bps: g.best_min_rate,
                resolution_bound_bps: g.resolution_bound,
                pass: l >= g.best_min_rate - g.resolution_bound - slack,
            });
        }
    }
    Ok(RunOutcome::Done(records, oracle))
}

/// Runs every allocator on every run of every sweep point.
///
/// Runs execute in parallel; results are gathered in (point, run) order, so
/// the output does not depend on the thread count.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    if let Some(dir) = &spec.dump_instances {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let jobs: Vec<(usize, usize)> = spec
        .points()
        .flat_map(|v| (0..spec.runs).map(move |r| (v, r)))
        .collect();
    let threads = spec.threads.or_else(threads_from_env).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<RunOutcome>> =
        pool.install(|| jobs.par_iter().map(|(v, r)| run_one(spec, *v, *r)).collect());

    let mut result = SweepResult::default();
    for outcome in outcomes {
        match outcome? {
            RunOutcome::Done(records, oracle) => {
                result.records.extend(records);
                result.oracle.extend(oracle);
            }
            RunOutcome::Skipped(s) => result.skipped.push(s),
        }
    }
    Ok(result)
}

pub fn csv_string(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &result.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.sweep_value, r.allocator, r.run_index, r.min_rate_bps, r.ops, r.iterations, r.wall_ns
        );
    }
    out
}

pub fn oracle_csv_string(result: &SweepResult) -> String {
    let mut out = String::from(ORACLE_CSV_HEADER);
    out.push('\n');
    for r in &result.oracle {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.sweep_value,
            r.run_index,
            r.gnb,
            r.linex_min_rate_bps,
            r.oracle_best_bps,
            r.resolution_bound_bps,
            r.pass
        );
    }
    out
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    fs::write(path, csv_string(result)).map_err(|e| Error::io(path, e))
}

pub fn emit_oracle_csv(result: &SweepResult, path: &Path) -> Result<()> {
    fs::write(path, oracle_csv_string(result)).map_err(|e| Error::io(path, e))
}

/// Path of the oracle comparison file next to `out`: `results.csv` becomes
/// `results_oracle.csv`.
pub fn oracle_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    out.with_file_name(format!("{stem}_oracle{ext}"))
}

/// One line per point and allocator: mean minimum rate with its standard
/// error, mean operation count and mean loop iterations.
pub fn emit_summary(result: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6} {:>6} {:>5} {:>14} {:>12} {:>12} {:>8}",
        "value", "alloc", "runs", "min rate Mbps", "stderr", "ops", "iters"
    );
    for s in result.summary() {
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>5} {:>14.4} {:>12.4} {:>12.1} {:>8.2}",
            s.sweep_value,
            s.allocator,
            s.runs,
            s.mean_min_rate_bps / 1e6,
            s.stderr_bps / 1e6,
            s.mean_ops,
            s.mean_iterations
        );
    }
    if !result.skipped.is_empty() {
        let _ = writeln!(out, "{} runs skipped as infeasible", result.skipped.len());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(runs: usize) -> SweepSpec {
        let base = ScenarioConfig {
            n_gnbs: 2,
            n_users: 40,
            seed: 7,
            ..ScenarioConfig::default()
        };
        SweepSpec::new(SweepKind::Relays, (1, 2), base, runs)
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..8").unwrap(), (2, 8));
        assert_eq!(parse_range("3").unwrap(), (3, 3));
        assert_eq!(parse_range("2..=4").unwrap(), (2, 4));
        assert!(parse_range("5..2").is_err());
        assert!(parse_range("a..b").is_err());
    }

    #[test]
    fn kinds() {
        assert_eq!("relays".parse::<SweepKind>().unwrap(), SweepKind::Relays);
        assert_eq!("gnbs".parse::<SweepKind>().unwrap(), SweepKind::Gnbs);
        assert!("users".parse::<SweepKind>().is_err());
    }

    #[test]
    fn deterministic_and_complete() {
        let spec = tiny(3);
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&SweepSpec { threads: Some(1), ..spec.clone() }).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.records.len() + a.skipped.len() * spec.allocators.len(),
            2 * 3 * spec.allocators.len()
        );
        assert_eq!(csv_string(&a), csv_string(&b));
    }

    #[test]
    fn empty_result_is_header_only() {
        let s = csv_string(&SweepResult::default());
        assert_eq!(s, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn summary_rows() {
        let spec = tiny(2);
        let r = run_sweep(&spec).unwrap();
        assert!(r.skipped.is_empty());
        assert_eq!(r.summary().len(), 2 * 2);
        let text = emit_summary(&r);
        assert_eq!(text.lines().count(), 1 + 4);
    }

    #[test]
    fn oracle_file_name() {
        assert_eq!(oracle_path(Path::new("out/results.csv")), Path::new("out/results_oracle.csv"));
        assert_eq!(oracle_path(Path::new("r")), Path::new("r_oracle"));
    }

    #[test]
    fn invalid_specs() {
        let mut s = tiny(1);
        s.runs = 0;
        assert!(matches!(run_sweep(&s), Err(Error::Config(_))));
        let mut s = tiny(1);
        s.kind = SweepKind::Gnbs;
        s.range = (0, 2);
        assert!(s.validate().is_err());
    }
}
