//! The Frank-Wolfe run loop.
//!
//! One loop serves every variant: open-loop step rules, the static and
//! dynamic warm-start rules, exact line search, approximate LMOs, δ-oracle
//! gradients and the (δ, L)-oracle. Each iteration computes the Wolfe bound
//! `B^w_k = h(λ_k) + ∇h(λ_k)^T(λ̃_k - λ_k)` (plus the inexactness slack),
//! keeps the best bound `B_k = min{B_{k-1}, B^w_k, B^o_k}` and moves to
//! `λ_{k+1} = λ_k + ᾱ_k(λ̃_k - λ_k)`.

mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::{
    approx_lmo, delta_gradient, dl_oracle, DecisionPoint, FeasibleRegion, GradientModel,
    InexactnessSpec, LinearFunctional, Objective,
};
use crate::problems::Problem;
use crate::rng;
use crate::steprules::{dynamic_step, line_search, warm_start_step, StepRule};

pub use trace::{meta_path, read_csv, write_csv, IterationRecord, RunTrace, Status, TraceMeta, CSV_HEADER};

/// Curvature estimates above this mean the oracle is inconsistent.
pub const CURVATURE_LIMIT: f64 = 1e300;

/// Relative slack in the dynamic rule's acceptance test, absorbing rounding
/// in `h` evaluations.
pub const DYNAMIC_SLACK: f64 = 1e-12;

/// Stopping tolerances; `None` disables a test.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default)]
    pub gap_tol: Option<f64>,
    #[serde(default)]
    pub fwgap_tol: Option<f64>,
}

/// Source of the optional extra bound `B^o_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtherBound {
    #[default]
    None,
    /// Minmax bound from the problem's saddle structure.
    Minmax,
    /// The problem's known optimal value.
    Optimum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub iters: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub prestart: bool,
    #[serde(default)]
    pub b_prior: Option<f64>,
    #[serde(default)]
    pub other_bound: OtherBound,
}

impl RunSettings {
    pub fn new(iters: usize) -> Self {
        Self { iters, tolerances: Tolerances::default(), prestart: false, b_prior: None, other_bound: OtherBound::None }
    }

    pub fn with_prestart(mut self) -> Self {
        self.prestart = true;
        self
    }

    pub fn with_other_bound(mut self, other: OtherBound) -> Self {
        self.other_bound = other;
        self
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }
}

/// An oracle or step-rule error together with everything recorded before it.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub trace: RunTrace,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} recorded iterations)", self.error, self.trace.records.len())
    }
}

impl std::error::Error for RunFailure {}

/// Output of one linear subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub lambda_tilde: DecisionPoint,
    /// Wolfe bound `B^w_k`.
    pub bw: f64,
    /// Frank-Wolfe gap `G_k = B^w_k - h(λ_k)`.
    pub g: f64,
    /// How far the returned point is from the best LMO value.
    pub certificate: f64,
}

fn subproblem_with(
    h: f64,
    grad: &LinearFunctional,
    region: &dyn FeasibleRegion,
    lambda: &DecisionPoint,
    delta_lmo: f64,
    slack: f64,
) -> Result<SubproblemResult> {
    let (lambda_tilde, certificate) = approx_lmo(region, grad, delta_lmo)?;
    let mut g = grad.apply(&(lambda_tilde.coords() - lambda.coords()));
    // skip zero additions so exact runs stay bit-identical
    if slack != 0.0 {
        g += slack;
    }
    Ok(SubproblemResult { lambda_tilde, bw: h + g, g, certificate })
}

/// Solves the linear subproblem at `λ_k` with a `delta`-approximate LMO and
/// returns the inflated Wolfe bound and FW gap.
pub fn subproblem(
    objective: &dyn Objective,
    region: &dyn FeasibleRegion,
    lambda: &DecisionPoint,
    delta: f64,
) -> Result<SubproblemResult> {
    subproblem_with(objective.value(lambda), &objective.gradient(lambda), region, lambda, delta, delta)
}

/// Pre-start step: a full step from `λ_0` to `λ_1 = λ̃_0`. Returns `λ_1`,
/// `B_0 = min{B_prior, B^w_0}` and the subproblem data.
pub fn prestart(
    objective: &dyn Objective,
    region: &dyn FeasibleRegion,
    lambda0: &DecisionPoint,
    b_prior: Option<f64>,
    delta0: f64,
) -> Result<(DecisionPoint, f64, SubproblemResult)> {
    let sub = subproblem(objective, region, lambda0, delta0)?;
    let b0 = b_prior.unwrap_or(f64::INFINITY).min(sub.bw);
    Ok((sub.lambda_tilde.clone(), b0, sub))
}

/// Everything that defines a run apart from the problem and start.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub rule: StepRule,
    pub inexactness: InexactnessSpec,
    pub settings: RunSettings,
}

pub fn run_basic(problem: &Problem, rule: StepRule, settings: RunSettings, start: DecisionPoint) -> std::result::Result<RunTrace, Box<RunFailure>> {
    run(problem, &RunSpec { rule, inexactness: InexactnessSpec::exact(), settings }, start)
}

pub fn run_dynamic(problem: &Problem, c0: f64, settings: RunSettings, start: DecisionPoint) -> std::result::Result<RunTrace, Box<RunFailure>> {
    run(problem, &RunSpec { rule: StepRule::Dynamic { c0 }, inexactness: InexactnessSpec::exact(), settings }, start)
}

pub fn run_inexact(
    problem: &Problem,
    rule: StepRule,
    inexactness: InexactnessSpec,
    settings: RunSettings,
    start: DecisionPoint,
) -> std::result::Result<RunTrace, Box<RunFailure>> {
    run(problem, &RunSpec { rule, inexactness, settings }, start)
}

fn validate(problem: &Problem, spec: &RunSpec, start: &DecisionPoint) -> Result<()> {
    spec.rule.validate()?;
    spec.inexactness.validate()?;
    if start.len() != problem.region.dim() {
        return Err(Error::Dimension(format!(
            "start has dimension {}, region has {}",
            start.len(),
            problem.region.dim()
        )));
    }
    if let Some(b) = spec.settings.b_prior {
        if b.is_nan() {
            return Err(Error::Parameter("prior bound is NaN".into()));
        }
    }
    match spec.settings.other_bound {
        OtherBound::Minmax if problem.objective.minmax().is_none() => {
            Err(Error::Unsupported(format!("{} has no minmax structure", problem.id)))
        }
        OtherBound::Optimum if problem.optimum.is_none() => {
            Err(Error::Unsupported(format!("{} has no known optimal value", problem.id)))
        }
        _ => Ok(()),
    }
}

/// Runs the configured method from `start` (which is `λ_0` with pre-start
/// and `λ_1` otherwise).
pub fn run(problem: &Problem, spec: &RunSpec, start: DecisionPoint) -> std::result::Result<RunTrace, Box<RunFailure>> {
    let mut trace = RunTrace::new(TraceMeta::for_run(problem, spec));
    if let Err(error) = validate(problem, spec, &start) {
        return Err(Box::new(RunFailure { error, trace }));
    }
    trace.meta.final_h = problem.objective.value(&start);
    trace.final_lambda = start.clone();
    match run_loop(problem, spec, start, &mut trace) {
        Ok(()) => Ok(trace),
        Err(error) => Err(Box::new(RunFailure { error, trace })),
    }
}

fn run_loop(problem: &Problem, spec: &RunSpec, start: DecisionPoint, trace: &mut RunTrace) -> Result<()> {
    let objective = problem.objective.as_ref();
    let region = problem.region.as_ref();
    let settings = &spec.settings;
    let exact_oracles = spec.inexactness.is_exact();
    let mut rng = rng::seeded(spec.inexactness.seed);

    let mut lambda = start;
    let mut bbest = settings.b_prior.unwrap_or(f64::INFINITY);
    let mut curvature = match spec.rule {
        StepRule::Dynamic { c0 } => c0,
        _ => f64::NAN,
    };
    let mut gap1: Option<f64> = None;
    let first = if settings.prestart { 0 } else { 1 };

    for k in first..=settings.iters {
        let h = objective.value(&lambda);
        if !h.is_finite() {
            return Err(Error::NonFinite(format!("h(λ_{k})")));
        }
        let delta_lmo = spec.inexactness.lmo_delta.at(k);

        let (sub, g, delta_k) = match spec.inexactness.gradient {
            GradientModel::Exact => {
                let grad = objective.gradient(&lambda);
                let sub = subproblem_with(h, &grad, region, &lambda, delta_lmo, delta_lmo)?;
                let g = sub.g;
                let recorded = (!exact_oracles).then_some(delta_lmo);
                if !exact_oracles {
                    let exact_best = region.lmo(&grad)?;
                    trace.realized_subopt.push(grad.apply(&(exact_best.coords() - sub.lambda_tilde.coords())));
                }
                (sub, Some(g), recorded)
            }
            GradientModel::DeltaOracle { delta } => {
                let grad = delta_gradient(objective, region, &lambda, delta, &mut rng)?;
                let sub = subproblem_with(h, &grad, region, &lambda, delta_lmo, delta + delta_lmo)?;
                let exact = objective.gradient(&lambda);
                let exact_best = region.lmo(&exact)?;
                trace.realized_subopt.push(exact.apply(&(exact_best.coords() - sub.lambda_tilde.coords())));
                let g = sub.g;
                (sub, Some(g), Some(2.0 * delta + delta_lmo))
            }
            GradientModel::DlOracle { delta, lipschitz } => {
                let (value, grad) = dl_oracle(objective, region, &lambda, delta, lipschitz)?;
                // the model value replaces h in the Wolfe bound and no FW gap is formed
                let sub = subproblem_with(value, &grad, region, &lambda, 0.0, 0.0)?;
                (sub, None, Some(delta))
            }
        };

        let bo = match settings.other_bound {
            OtherBound::None => None,
            OtherBound::Minmax => Some(
                objective
                    .minmax()
                    .expect("validated before the loop")
                    .minmax_bound(&lambda)?,
            ),
            OtherBound::Optimum => problem.optimum,
        };
        bbest = bbest.min(sub.bw);
        if let Some(bo) = bo {
            bbest = bbest.min(bo);
        }
        let gap = bbest - h;
        if k == 1 {
            gap1 = Some(gap);
        }

        let mut record = IterationRecord {
            k,
            h,
            stepsize: None,
            bw: sub.bw,
            bo,
            bbest,
            g,
            c_k: None,
            delta_k,
            support: lambda.support_size(),
        };

        let stop = if settings.tolerances.gap_tol.is_some_and(|t| gap <= t) {
            Some(Status::GapTolMet)
        } else if settings.tolerances.fwgap_tol.zip(g).is_some_and(|(t, g)| g <= t) {
            Some(Status::FwgapTolMet)
        } else if exact_oracles && g.is_some_and(|g| g <= 0.0) {
            Some(Status::AlreadyOptimal)
        } else {
            None
        };
        if let Some(status) = stop {
            trace.records.push(record);
            trace.finish(status, h, lambda);
            return Ok(());
        }

        let step = if k == 0 {
            Some(1.0)
        } else {
            match &spec.rule {
                StepRule::WarmStartStatic { c1 } => warm_start_step(k, *c1, gap1.expect("set at k = 1"))?,
                StepRule::Dynamic { .. } => {
                    let d = sub.lambda_tilde.coords() - lambda.coords();
                    let slack = DYNAMIC_SLACK * h.abs().max(1.0);
                    loop {
                        let Some(a) = dynamic_step(curvature, gap)? else { break None };
                        let trial = objective.value(&(lambda.coords() + a * &d));
                        if trial >= h + a * gap - 0.5 * curvature * a * a - slack {
                            break Some(a);
                        }
                        curvature *= 2.0;
                        trace.meta.doublings += 1;
                        if curvature > CURVATURE_LIMIT {
                            return Err(Error::CurvatureOverflow { k, limit: CURVATURE_LIMIT });
                        }
                    }
                }
                StepRule::LineSearch { candidates } => {
                    Some(line_search(objective, &lambda, &sub.lambda_tilde, candidates)?)
                }
                rule => Some(rule.open_loop_step(k).expect("open-loop rule")),
            }
        };
        if matches!(spec.rule, StepRule::Dynamic { .. }) && k > 0 {
            record.c_k = Some(curvature);
        }
        let Some(step) = step else {
            trace.records.push(record);
            trace.finish(Status::AlreadyOptimal, h, lambda);
            return Ok(());
        };
        if k > 0 && !(0.0..1.0).contains(&step) {
            return Err(Error::Domain(step));
        }
        record.stepsize = Some(step);
        trace.records.push(record);
        lambda = if step == 1.0 { sub.lambda_tilde } else { lambda.step_toward(&sub.lambda_tilde, step) };
    }
    let h = objective.value(&lambda);
    trace.finish(Status::MaxIters, h, lambda);
    Ok(())
}
