use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{OtherBound, RunSpec};
use crate::error::{Error, Result};
use crate::oracles::{DecisionPoint, InexactnessSpec, Norm};
use crate::problems::Problem;
use crate::steprules::StepRule;

pub const CSV_HEADER: [&str; 10] =
    ["k", "stepsize", "h_lambda", "Bw", "Bo", "Bbest", "G", "C_k", "delta_k", "support"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    MaxIters,
    GapTolMet,
    FwgapTolMet,
    AlreadyOptimal,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::MaxIters => "max_iters",
            Status::GapTolMet => "gap_tol_met",
            Status::FwgapTolMet => "fwgap_tol_met",
            Status::AlreadyOptimal => "already_optimal",
        }
    }
}

/// One row of a run. Row `k = 0` is the pre-start step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `h(λ_k)`, always the true objective value.
    pub h: f64,
    /// `ᾱ_k`; absent on the row where the run stopped.
    pub stepsize: Option<f64>,
    pub bw: f64,
    pub bo: Option<f64>,
    pub bbest: f64,
    /// FW gap; absent for (δ, L)-oracle runs.
    pub g: Option<f64>,
    pub c_k: Option<f64>,
    pub delta_k: Option<f64>,
    pub support: usize,
}

/// Run-level facts stored next to the CSV so a trace can be audited alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMeta {
    pub problem_id: String,
    pub rule: StepRule,
    pub inexactness: InexactnessSpec,
    pub prestart: bool,
    pub b_prior: Option<f64>,
    pub other_bound: OtherBound,
    pub status: Status,
    /// `h(λ_{K+1})` after the last step, or `h(λ_K)` if the run stopped.
    pub final_h: f64,
    pub doublings: usize,
    pub exact_curvature: Option<f64>,
    pub optimum: Option<f64>,
    /// Gradient Lipschitz constant in the region's norm.
    pub lipschitz: Option<f64>,
    pub diameter: f64,
    pub norm: Norm,
}

impl TraceMeta {
    pub fn for_run(problem: &Problem, spec: &RunSpec) -> Self {
        let norm = problem.region.norm();
        Self {
            problem_id: problem.id.clone(),
            rule: spec.rule.clone(),
            inexactness: spec.inexactness,
            prestart: spec.settings.prestart,
            b_prior: spec.settings.b_prior,
            other_bound: spec.settings.other_bound,
            status: Status::MaxIters,
            final_h: f64::NAN,
            doublings: 0,
            exact_curvature: problem.exact_curvature,
            optimum: problem.optimum,
            lipschitz: problem.objective.lipschitz(norm),
            diameter: problem.region.diameter(),
            norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub meta: TraceMeta,
    pub records: Vec<IterationRecord>,
    /// Last iterate; not serialized.
    pub final_lambda: DecisionPoint,
    /// Per-iteration `∇h^T(λ̃* - λ̃)` against the exact LMO, for runs with an
    /// inexact subproblem; not serialized.
    pub realized_subopt: Vec<f64>,
}

impl RunTrace {
    pub(crate) fn new(meta: TraceMeta) -> Self {
        Self {
            meta,
            records: Vec::new(),
            final_lambda: DecisionPoint::from_trusted(nalgebra::DVector::zeros(0)),
            realized_subopt: Vec::new(),
        }
    }

    pub(crate) fn finish(&mut self, status: Status, final_h: f64, lambda: DecisionPoint) {
        self.meta.status = status;
        self.meta.final_h = final_h;
        self.final_lambda = lambda;
    }

    /// `h(λ_{k+1})` for the record at position `i`. A stopping row did not
    /// move, so its successor value is its own.
    pub fn h_next(&self, i: usize) -> f64 {
        self.records.get(i + 1).map_or(self.meta.final_h, |r| r.h)
    }

    /// Position of iteration `k` in `records`.
    pub fn position(&self, k: usize) -> Option<usize> {
        let first = self.records.first()?.k;
        let i = k.checked_sub(first)?;
        (i < self.records.len()).then_some(i)
    }

    /// `h(λ_1)`, the reference value of every bound.
    pub fn h_first(&self) -> Option<f64> {
        self.position(1).map(|i| self.records[i].h).or_else(|| {
            // only the pre-start row was recorded
            (self.records.len() == 1 && self.records[0].k == 0).then_some(self.meta.final_h)
        })
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        write_csv(&self.records, w)
    }

    /// Writes `path` and its metadata sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.write_csv(std::fs::File::create(path)?)?;
        std::fs::write(meta_path(path), serde_json::to_string_pretty(&self.meta)?)?;
        Ok(())
    }

    /// Reads a CSV trace and the metadata sidecar at `meta`.
    pub fn load(csv_path: impl AsRef<Path>, meta: impl AsRef<Path>) -> Result<Self> {
        let records = read_csv(std::fs::File::open(csv_path)?)?;
        let meta: TraceMeta = serde_json::from_str(&std::fs::read_to_string(meta)?)?;
        let trace = Self { meta, records, ..Self::new(placeholder_meta()) };
        trace.check_contiguous()?;
        Ok(trace)
    }

    fn check_contiguous(&self) -> Result<()> {
        let Some(first) = self.records.first() else { return Ok(()) };
        if first.k > 1 || (first.k == 0) != self.meta.prestart {
            return Err(Error::Format(format!(
                "trace starts at k = {} but pre-start is {}",
                first.k, self.meta.prestart
            )));
        }
        for (i, r) in self.records.iter().enumerate() {
            if r.k != first.k + i {
                return Err(Error::Format(format!("row {} has k = {}, expected {}", i + 1, r.k, first.k + i)));
            }
        }
        Ok(())
    }
}

fn placeholder_meta() -> TraceMeta {
    TraceMeta {
        problem_id: String::new(),
        rule: StepRule::Standard,
        inexactness: InexactnessSpec::exact(),
        prestart: false,
        b_prior: None,
        other_bound: OtherBound::None,
        status: Status::MaxIters,
        final_h: f64::NAN,
        doublings: 0,
        exact_curvature: None,
        optimum: None,
        lipschitz: None,
        diameter: 0.0,
        norm: Norm::L2,
    }
}

/// Sidecar path `<stem>.meta.json` next to a trace file.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

fn fmt_f(v: f64) -> String {
    // Debug formatting is the shortest representation that parses back exactly
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

pub fn write_csv(records: &[IterationRecord], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record([
            r.k.to_string(),
            fmt_opt(r.stepsize),
            fmt_f(r.h),
            fmt_f(r.bw),
            fmt_opt(r.bo),
            fmt_f(r.bbest),
            fmt_opt(r.g),
            fmt_opt(r.c_k),
            fmt_opt(r.delta_k),
            r.support.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(r: impl Read) -> Result<Vec<IterationRecord>> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format(format!(
            "unexpected header {:?}, expected {}",
            header.iter().collect::<Vec<_>>(),
            CSV_HEADER.join(",")
        )));
    }
    let mut records = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| {
                Error::Format(format!("line {line}: column {} is not a number: {:?}", CSV_HEADER[i], field(i)))
            })
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if field(i).is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let int = |i: usize| -> Result<usize> {
            field(i).parse::<usize>().map_err(|_| {
                Error::Format(format!("line {line}: column {} is not an integer: {:?}", CSV_HEADER[i], field(i)))
            })
        };
        records.push(IterationRecord {
            k: int(0)?,
            stepsize: opt(1)?,
            h: num(2)?,
            bw: num(3)?,
            bo: opt(4)?,
            bbest: num(5)?,
            g: opt(6)?,
            c_k: opt(7)?,
            delta_k: opt(8)?,
            support: int(9)?,
        });
    }
    Ok(records)
}
