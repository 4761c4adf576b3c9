use std::fs;
use std::path::{Path, PathBuf};

use fw_core::guarantees::{audit, curvature_sampled_lower_bound, BoundKind, CurvatureInfo, GuaranteeReport};
use fw_core::problems::{Instance, Problem};
use fw_core::solver::{meta_path, run, RunTrace};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{CliError, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_VIOLATION};

/// Summary written next to every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: String,
    /// Number of Frank-Wolfe iterations evaluated (rows with `k >= 1`).
    pub iterations: usize,
    /// `B_K - h` at the last iterate.
    pub final_gap: Option<f64>,
    /// FW gap on the last row; absent for (δ, L)-oracle runs.
    pub final_fwgap: Option<f64>,
    pub best_bound: Option<f64>,
    /// Curvature constant the bounds are evaluated with: the exact value when
    /// known, else the Lipschitz upper bound.
    pub curvature_used: Option<f64>,
    pub doublings: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunSummary {
    fn from_trace(trace: &RunTrace, curvature: Option<f64>, error: Option<String>) -> Self {
        let last = trace.records.last();
        Self {
            status: if error.is_some() { "error".into() } else { trace.meta.status.as_str().into() },
            iterations: trace.records.iter().filter(|r| r.k >= 1).count(),
            final_gap: last.map(|r| r.bbest - trace.meta.final_h),
            final_fwgap: last.and_then(|r| r.g),
            best_bound: last.map(|r| r.bbest),
            curvature_used: curvature,
            doublings: trace.meta.doublings,
            error,
        }
    }
}

/// Sidecar holding the instance a trace was produced on.
pub fn instance_path(trace_path: &Path) -> PathBuf {
    trace_path.with_extension("instance.json")
}

fn default_output(config_path: &Path, suffix: &str) -> PathBuf {
    let stem = config_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    config_path.with_file_name(format!("{stem}.{suffix}"))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::runtime(format!("cannot write {}: {e}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Result of executing one config.
#[derive(Debug)]
pub struct Executed {
    pub trace: RunTrace,
    pub summary: RunSummary,
    pub problem_label: String,
}

/// Builds the problem, runs it and writes the trace, its sidecars and the
/// summary. A failing run still writes what it recorded, then returns the
/// runtime error.
pub fn execute(cfg: &RunConfig, trace_path: &Path, summary_path: &Path) -> Result<Executed, CliError> {
    let problem = Problem::from_spec(&cfg.problem).map_err(|e| CliError::config(format!("field `problem`: {e}")))?;
    let start = problem.start(&cfg.start).map_err(|e| CliError::config(format!("field `start`: {e}")))?;
    let curvature = CurvatureInfo::for_problem(&problem, 0, 0).for_bounds();
    let (trace, error) = match run(&problem, &cfg.run_spec(), start) {
        Ok(t) => (t, None),
        Err(f) => {
            let f = *f;
            if matches!(f.error, fw_core::Error::Parameter(_) | fw_core::Error::Dimension(_) | fw_core::Error::Unsupported(_))
                && f.trace.records.is_empty()
            {
                return Err(CliError::config(format!("invalid run: {}", f.error)));
            }
            (f.trace, Some(f.error.to_string()))
        }
    };
    for p in [trace_path, summary_path] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
    }
    trace.save(trace_path).map_err(|e| io_err(trace_path, e))?;
    problem.instance.save(instance_path(trace_path)).map_err(|e| io_err(trace_path, e))?;
    let summary = RunSummary::from_trace(&trace, curvature, error.clone());
    write_json(summary_path, &summary)?;
    if let Some(e) = error {
        return Err(CliError::runtime(format!("run failed: {e}; partial trace written to {}", trace_path.display())));
    }
    Ok(Executed { trace, summary, problem_label: cfg.problem.label() })
}

/// `run <config>`
pub fn cmd_run(config_path: &Path) -> Result<RunSummary, CliError> {
    let cfg = RunConfig::load(config_path)?;
    let trace_path = cfg.output.trace.clone().unwrap_or_else(|| default_output(config_path, "trace.csv"));
    let summary_path = cfg.output.summary.clone().unwrap_or_else(|| default_output(config_path, "summary.json"));
    Ok(execute(&cfg, &trace_path, &summary_path)?.summary)
}

/// Where `check` gets its curvature constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureMode {
    /// Vertex-pair value for quadratics.
    Exact,
    /// `L · Diam²` in the region's norm.
    Lipschitz,
    /// Sampled lower bound; bounds checked with it are optimistic.
    Sampled,
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// `None` audits every applicable bound.
    pub bounds: Option<Vec<BoundKind>>,
    pub curvature: CurvatureMode,
    pub samples: usize,
    pub seed: u64,
    pub report: Option<PathBuf>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { bounds: None, curvature: CurvatureMode::Exact, samples: 2000, seed: 0, report: None }
    }
}

/// Parses a comma-separated bound list; `all` (or empty) selects every
/// applicable bound.
pub fn parse_bounds(list: &str) -> Result<Option<Vec<BoundKind>>, CliError> {
    let list = list.trim();
    if list.is_empty() || list == "all" {
        return Ok(None);
    }
    list.split(',')
        .map(|s| BoundKind::parse(s.trim()).map_err(|e| CliError::config(format!("--bounds: {e}"))))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub trace: String,
    pub curvature_mode: CurvatureMode,
    #[serde(flatten)]
    pub report: GuaranteeReport,
}

fn curvature_for(trace: &RunTrace, trace_path: &Path, opts: &CheckOptions) -> Result<f64, CliError> {
    let meta = &trace.meta;
    match opts.curvature {
        CurvatureMode::Exact => meta
            .exact_curvature
            .ok_or_else(|| CliError::config(format!("{} has no exact curvature constant; use --curvature lipschitz", meta.problem_id))),
        CurvatureMode::Lipschitz => meta
            .lipschitz
            .map(|l| l * meta.diameter * meta.diameter)
            .ok_or_else(|| CliError::config(format!("{} has no finite Lipschitz constant", meta.problem_id))),
        CurvatureMode::Sampled => {
            let path = instance_path(trace_path);
            let instance = Instance::load(&path)
                .map_err(|e| CliError::config(format!("sampled curvature needs {}: {e}", path.display())))?;
            let problem = Problem::from_instance(instance).map_err(|e| CliError::config(e.to_string()))?;
            Ok(curvature_sampled_lower_bound(problem.objective.as_ref(), problem.region.as_ref(), opts.samples, opts.seed))
        }
    }
}

/// `check <trace>`: audits the trace and writes a JSON report (default
/// `<trace stem>.check.json`). A violation is reported as an error with
/// exit code 3 after the report is written.
pub fn cmd_check(trace_path: &Path, opts: &CheckOptions) -> Result<CheckReport, CliError> {
    let trace = RunTrace::load(trace_path, meta_path(trace_path))
        .map_err(|e| CliError::config(format!("cannot load trace {}: {e}", trace_path.display())))?;
    let c = curvature_for(&trace, trace_path, opts)?;
    let report = audit(&trace, c, opts.bounds.as_deref()).map_err(|e| CliError::config(e.to_string()))?;
    let out = CheckReport { trace: trace_path.display().to_string(), curvature_mode: opts.curvature, report };
    let report_path = opts.report.clone().unwrap_or_else(|| trace_path.with_extension("check.json"));
    write_json(&report_path, &out)?;
    if let Some(v) = &out.report.first_violation {
        let row = trace.position(v.k).map(|i| &trace.records[i]);
        return Err(CliError::violation(format!(
            "bound {} violated at k={}{}: {} = {:?} exceeds {:?} (margin {:?})\nrow: {:?}",
            v.bound.name(),
            v.k,
            v.ell.map(|l| format!(", ℓ={l}")).unwrap_or_default(),
            v.what,
            v.empirical,
            v.rhs,
            v.margin,
            row
        )));
    }
    Ok(out)
}

pub const SWEEP_HEADER: [&str; 10] =
    ["name", "problem", "rule", "status", "exit_code", "iterations", "final_gap", "curvature_used", "bound_margin", "error"];

/// One line of the sweep summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub name: String,
    pub problem: String,
    pub rule: String,
    pub status: String,
    pub exit_code: u8,
    pub iterations: Option<usize>,
    pub final_gap: Option<f64>,
    pub curvature_used: Option<f64>,
    /// Smallest audit margin over the applicable convergence bounds.
    pub bound_margin: Option<f64>,
    pub error: String,
}

fn sweep_one(config_path: &Path, out_dir: &Path) -> SweepRow {
    let name = config_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut row = SweepRow {
        name: name.clone(),
        problem: String::new(),
        rule: String::new(),
        status: "config_error".into(),
        exit_code: EXIT_USAGE,
        iterations: None,
        final_gap: None,
        curvature_used: None,
        bound_margin: None,
        error: String::new(),
    };
    let cfg = match RunConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            row.error = e.message;
            return row;
        }
    };
    row.problem = cfg.problem.label();
    row.rule = cfg.rule.label();
    let trace_path = out_dir.join(format!("{name}.csv"));
    let summary_path = out_dir.join(format!("{name}.summary.json"));
    let done = match execute(&cfg, &trace_path, &summary_path) {
        Ok(d) => d,
        Err(e) => {
            row.status = if e.code == EXIT_RUNTIME { "error".into() } else { "config_error".into() };
            row.exit_code = e.code;
            row.error = e.message;
            return row;
        }
    };
    row.status = done.summary.status.clone();
    row.exit_code = EXIT_OK;
    row.iterations = Some(done.summary.iterations);
    row.final_gap = done.summary.final_gap;
    row.curvature_used = done.summary.curvature_used;
    if let Some(c) = done.summary.curvature_used {
        match audit(&done.trace, c, None) {
            Ok(rep) => {
                // consistency checks compare equal quantities and sit at zero margin
                let margin = rep
                    .checks
                    .iter()
                    .filter(|c| c.bound != BoundKind::Consistency)
                    .map(|c| c.margin)
                    .fold(f64::INFINITY, f64::min);
                row.bound_margin = margin.is_finite().then_some(margin);
                if let Some(v) = rep.first_violation {
                    row.status = "bound_violated".into();
                    row.exit_code = EXIT_VIOLATION;
                    row.error = format!("{} violated at k={}", v.bound.name(), v.k);
                }
            }
            Err(e) => row.error = format!("audit skipped: {e}"),
        }
    }
    row
}

/// JSON files written by `run` and `check`, skipped when listing configs.
const OUTPUT_SUFFIXES: [&str; 4] = [".meta.json", ".summary.json", ".instance.json", ".check.json"];

/// Top-level `*.json` config files of `dir`, sorted by name.
pub fn list_configs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::config(format!("cannot read {}: {e}", dir.display())))?;
    let mut configs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            !OUTPUT_SUFFIXES.iter().any(|s| name.ends_with(s))
        })
        .collect();
    configs.sort();
    Ok(configs)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn write_sweep_summary(rows: &[SweepRow], path: &Path) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let fail = |e: csv::Error| io_err(path, e);
    w.write_record(SWEEP_HEADER).map_err(fail)?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.problem.clone(),
            r.rule.clone(),
            r.status.clone(),
            r.exit_code.to_string(),
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            fmt_opt(r.final_gap),
            fmt_opt(r.curvature_used),
            fmt_opt(r.bound_margin),
            r.error.clone(),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Outcome of a sweep: the rows (sorted by name) and the exit code, which
/// is the largest child exit code.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub summary_path: PathBuf,
    pub exit_code: u8,
}

/// `sweep <dir> -j N`: runs every config in `dir` on `jobs` workers and
/// writes traces plus `summary.csv` into `out_dir` (default `<dir>/sweep`).
pub fn cmd_sweep(dir: &Path, jobs: usize, out_dir: Option<&Path>) -> Result<SweepOutcome, CliError> {
    if jobs == 0 {
        return Err(CliError::config("-j must be at least 1"));
    }
    let configs = list_configs(dir)?;
    let out_dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| dir.join("sweep"));
    fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::runtime(format!("cannot start worker pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| configs.par_iter().map(|c| sweep_one(c, &out_dir)).collect());
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    let summary_path = out_dir.join("summary.csv");
    write_sweep_summary(&rows, &summary_path)?;
    let exit_code = rows.iter().map(|r| r.exit_code).max().unwrap_or(EXIT_OK);
    Ok(SweepOutcome { rows, summary_path, exit_code })
}

/// Prints one status line per sweep row.
pub fn print_sweep(outcome: &SweepOutcome, mut out: impl std::io::Write) -> std::io::Result<()> {
    for r in &outcome.rows {
        let extra = if r.error.is_empty() { String::new() } else { format!(" ({})", r.error) };
        writeln!(out, "{:<24} {}{extra}", r.name, r.status)?;
    }
    writeln!(out, "summary: {}", outcome.summary_path.display())?;
    out.flush()
}

