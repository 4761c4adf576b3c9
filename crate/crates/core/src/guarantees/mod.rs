//! Convergence-bound evaluation and curvature constants.
//!
//! [`audit`] replays a finished [`RunTrace`] against every bound that
//! applies to its step rule and oracle model and reports a margin
//! `rhs - empirical` for each check. A check passes when the margin is at
//! least `-1e-9 · max(1, |rhs|)`; the bounds are exact inequalities so only
//! rounding slack is allowed.

mod closed_form;
mod curvature;
mod evaluator;
pub mod lemmas;

use std::collections::BTreeSet;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::solver::RunTrace;
use crate::steprules::{optimized_constant, standard_step, CandidateSet, StepRule};

pub use closed_form::{
    averaging_fwgap_bound, averaging_gap_bound, closed_form_bounds, constant_gap_bound,
    constant_gap_bound_prestart, dynamic_gap_bound, optimized_fwgap_bound, optimized_gap_bound,
    standard_fwgap_bound, standard_gap_bound, warm_start_gap_bound, ClosedFormExtras,
};
pub use curvature::{curvature_exact_quadratic, curvature_ratio, curvature_sampled_lower_bound, CurvatureInfo};
pub use evaluator::{BoundEvaluator, InexactTheorem};

/// Relative slack allowed by a passing check.
pub const PASS_TOL: f64 = 1e-9;

/// Number of extra random `(ℓ, k)` pairs audited for FW-gap bounds.
pub const RANDOM_PAIRS: usize = 10;

const PAIR_SEED: u64 = 0x5eed_f00d;

/// Names of the auditable bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `B^w = h + G`, `B_k <= B^w_k, B^o_k`, `B_k` nonincreasing, `G >= 0`.
    Consistency,
    /// `B_k >= h*` and `h(λ_k) <= h*` when `h*` is known.
    Validity,
    /// `B_0 - h(λ_1) <= ½C + δ_0`.
    Prestart,
    Thm21,
    Thm22,
    Bound31,
    Bound32,
    Bound33,
    Bound34,
    Bound41,
    Bound42,
    /// `C_k <= max{C_0, 2C}` for the doubling strategy.
    DynamicCap,
    Thm51,
    Thm52,
    Thm53,
}

impl BoundKind {
    pub const ALL: [BoundKind; 15] = [
        BoundKind::Consistency,
        BoundKind::Validity,
        BoundKind::Prestart,
        BoundKind::Thm21,
        BoundKind::Thm22,
        BoundKind::Bound31,
        BoundKind::Bound32,
        BoundKind::Bound33,
        BoundKind::Bound34,
        BoundKind::Bound41,
        BoundKind::Bound42,
        BoundKind::DynamicCap,
        BoundKind::Thm51,
        BoundKind::Thm52,
        BoundKind::Thm53,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Consistency => "consistency",
            BoundKind::Validity => "validity",
            BoundKind::Prestart => "prestart",
            BoundKind::Thm21 => "thm21",
            BoundKind::Thm22 => "thm22",
            BoundKind::Bound31 => "bound31",
            BoundKind::Bound32 => "bound32",
            BoundKind::Bound33 => "bound33",
            BoundKind::Bound34 => "bound34",
            BoundKind::Bound41 => "bound41",
            BoundKind::Bound42 => "bound42",
            BoundKind::DynamicCap => "dynamic_cap",
            BoundKind::Thm51 => "thm51",
            BoundKind::Thm52 => "thm52",
            BoundKind::Thm53 => "thm53",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown bound {s:?}")))
    }

    /// Whether the bound's hypotheses match the trace's configuration.
    pub fn applies_to(self, trace: &RunTrace) -> bool {
        let m = &trace.meta;
        let exact = m.inexactness.is_exact();
        let prestart = m.prestart;
        match self {
            BoundKind::Consistency => true,
            BoundKind::Validity => m.optimum.is_some(),
            BoundKind::Prestart => prestart,
            BoundKind::Thm21 | BoundKind::Thm22 => exact,
            BoundKind::Bound31 => exact && prestart && (m.rule == StepRule::Standard || covers_reference(&m.rule, 2.0 / 3.0)),
            BoundKind::Bound32 => exact && prestart && (m.rule == StepRule::Averaging || covers_reference(&m.rule, 0.5)),
            BoundKind::Bound33 => exact && matches!(m.rule, StepRule::Constant { .. } | StepRule::OptimizedConstant { .. }),
            BoundKind::Bound34 => exact && prestart && matches!(m.rule, StepRule::OptimizedConstant { .. }),
            BoundKind::Bound41 => exact && matches!(m.rule, StepRule::WarmStartStatic { .. }),
            BoundKind::Bound42 | BoundKind::DynamicCap => exact && matches!(m.rule, StepRule::Dynamic { .. }),
            BoundKind::Thm51 | BoundKind::Thm52 => !exact && !m.inexactness.is_dl(),
            BoundKind::Thm53 => m.inexactness.is_dl(),
        }
    }
}

/// True for a line search over an interval `[0, hi]` with `hi >= largest`,
/// which contains every step of a reference rule whose first step is
/// `largest`.
fn covers_reference(rule: &StepRule, largest: f64) -> bool {
    matches!(rule, StepRule::LineSearch { candidates: CandidateSet::Interval { lo, hi } } if *lo == 0.0 && *hi >= largest)
}

/// One evaluated inequality `empirical <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub bound: BoundKind,
    pub k: usize,
    pub ell: Option<usize>,
    pub empirical: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    /// What was compared, e.g. `B_k - h(λ_{k+1})`.
    pub what: String,
}

impl Check {
    fn new(bound: BoundKind, k: usize, ell: Option<usize>, empirical: f64, rhs: f64, what: impl Into<String>) -> Self {
        let margin = rhs - empirical;
        let pass = passes(empirical, rhs);
        Self { bound, k, ell, empirical, rhs, margin, pass, what: what.into() }
    }
}

/// `rhs - empirical >= -1e-9 · max(1, |rhs|)`; an infinite right-hand side
/// always passes and NaN never does.
pub fn passes(empirical: f64, rhs: f64) -> bool {
    if rhs == f64::INFINITY {
        return !empirical.is_nan();
    }
    rhs - empirical >= -PASS_TOL * rhs.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeReport {
    pub curvature: f64,
    pub bounds: Vec<BoundKind>,
    pub checks: Vec<Check>,
    pub min_margin: f64,
    pub first_violation: Option<Check>,
}

impl GuaranteeReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn checks_for(&self, bound: BoundKind) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(move |c| c.bound == bound)
    }
}

/// Audits `trace` with curvature constant `c`. `selection = None` audits
/// every applicable bound; naming a bound whose hypotheses do not match the
/// trace is a parameter error.
pub fn audit(trace: &RunTrace, c: f64, selection: Option<&[BoundKind]>) -> Result<GuaranteeReport> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Parameter(format!("curvature constant must be finite and >= 0, got {c}")));
    }
    let bounds: Vec<BoundKind> = match selection {
        Some(sel) => {
            let set: BTreeSet<BoundKind> = sel.iter().copied().collect();
            if let Some(b) = set.iter().find(|b| !b.applies_to(trace)) {
                return Err(Error::Parameter(format!(
                    "bound {} does not apply to a {} run with {} oracles{}",
                    b.name(),
                    trace.meta.rule.label(),
                    oracle_label(trace),
                    if trace.meta.prestart { " and pre-start" } else { "" }
                )));
            }
            set.into_iter().collect()
        }
        None => BoundKind::ALL.into_iter().filter(|b| b.applies_to(trace)).collect(),
    };
    let mut checks = Vec::new();
    if !trace.records.is_empty() {
        let ev = BoundEvaluator::new(trace)?;
        for &b in &bounds {
            run_checks(b, trace, &ev, c, &mut checks)?;
        }
    }
    checks.sort_by_key(|ch| ch.k);
    let min_margin = checks.iter().map(|ch| ch.margin).fold(f64::INFINITY, f64::min);
    let first_violation = checks.iter().find(|ch| !ch.pass).cloned();
    Ok(GuaranteeReport { curvature: c, bounds, checks, min_margin, first_violation })
}

fn oracle_label(trace: &RunTrace) -> &'static str {
    let i = &trace.meta.inexactness;
    if i.is_exact() {
        "exact"
    } else if i.is_dl() {
        "(δ, L)"
    } else {
        "approximate"
    }
}

/// `(ℓ, k)` pairs for FW-gap audits at `k`: `0`, `⌈k/2⌉ - 2` and
/// `⌊k/2⌋ - 1`, kept when they leave a nonempty window.
fn structured_pairs(k: usize) -> Vec<usize> {
    let k = k as i64;
    let mut ells: Vec<usize> = [0, (k + 1) / 2 - 2, k / 2 - 1]
        .into_iter()
        .filter(|l| *l >= 0 && *l < k)
        .map(|l| l as usize)
        .collect();
    ells.sort_unstable();
    ells.dedup();
    ells
}

fn fw_gap_checks(
    bound: BoundKind,
    trace: &RunTrace,
    ev: &BoundEvaluator,
    c: f64,
    out: &mut Vec<Check>,
) -> Result<()> {
    let first = ev.first_k();
    let last = ev.last_k();
    let usable = |ell: usize| ell >= first || trace.meta.b_prior.is_some();
    let eval = |ell: usize, k: usize, out: &mut Vec<Check>| -> Result<()> {
        if !usable(ell) || k <= ell || k < 1 {
            return Ok(());
        }
        let rhs = match bound {
            BoundKind::Thm22 => ev.thm22_rhs(c, ell, k)?,
            _ => ev.thm52_rhs(c, ell, k)?,
        };
        if rhs.is_nan() {
            // zero steps throughout the window: the bound is vacuous
            return Ok(());
        }
        out.push(Check::new(bound, k, Some(ell), ev.min_fw_gap(ell, k)?, rhs, "min G_i over (ℓ, k]"));
        Ok(())
    };
    for k in first.max(1)..=last {
        for ell in structured_pairs(k) {
            eval(ell, k, out)?;
        }
    }
    if last >= 1 {
        let mut r = rng::seeded(PAIR_SEED);
        for _ in 0..RANDOM_PAIRS {
            let k = r.random_range(first.max(1)..=last);
            let ell = r.random_range(0..k);
            eval(ell, k, out)?;
        }
    }
    Ok(())
}

fn run_checks(bound: BoundKind, trace: &RunTrace, ev: &BoundEvaluator, c: f64, out: &mut Vec<Check>) -> Result<()> {
    let meta = &trace.meta;
    let records = &trace.records;
    let stepped = |i: usize| records[i].stepsize.is_some();
    match bound {
        BoundKind::Consistency => {
            let exact = meta.inexactness.is_exact();
            let mut prev = meta.b_prior.unwrap_or(f64::INFINITY);
            for r in records {
                if let Some(g) = r.g {
                    out.push(Check::new(bound, r.k, None, (r.bw - (r.h + g)).abs(), 0.0, "|B^w - h - G|"));
                    if exact {
                        out.push(Check::new(bound, r.k, None, -g, 0.0, "-G"));
                    }
                }
                out.push(Check::new(bound, r.k, None, r.bbest, r.bw, "B_k vs B^w_k"));
                if let Some(bo) = r.bo {
                    out.push(Check::new(bound, r.k, None, r.bbest, bo, "B_k vs B^o_k"));
                }
                out.push(Check::new(bound, r.k, None, r.bbest, prev, "B_k vs B_{k-1}"));
                prev = r.bbest;
            }
        }
        BoundKind::Validity => {
            let hstar = meta.optimum.expect("checked by applies_to");
            for r in records {
                out.push(Check::new(bound, r.k, None, hstar, r.bbest, "h* vs B_k"));
                out.push(Check::new(bound, r.k, None, r.h, hstar, "h(λ_k) vs h*"));
            }
        }
        BoundKind::Prestart => {
            let r = &records[0];
            if r.k == 0 {
                let d0 = r.delta_k.unwrap_or(0.0);
                out.push(Check::new(bound, 0, None, r.bbest - trace.h_next(0), 0.5 * c + d0, "B_0 - h(λ_1)"));
            }
        }
        BoundKind::Thm21 | BoundKind::Thm51 | BoundKind::Thm53 => {
            for r in records {
                let rhs = match bound {
                    BoundKind::Thm21 => ev.thm21_rhs(c, r.k)?,
                    BoundKind::Thm51 => ev.thm5x_rhs(c, InexactTheorem::Thm51, None, r.k)?,
                    _ => ev.thm5x_rhs(c, InexactTheorem::Thm53, None, r.k)?,
                };
                out.push(Check::new(bound, r.k, None, ev.empirical_gap(r.k)?, rhs, "B_k - h(λ_{k+1})"));
            }
            if bound == BoundKind::Thm21 && covers_reference(&meta.rule, 2.0 / 3.0) {
                // line search: the bound also holds for the standard steps
                let steps = (1..=ev.last_k()).map(standard_step).collect();
                let reference = BoundEvaluator::with_steps(trace, steps)?;
                for r in records {
                    out.push(Check::new(
                        bound,
                        r.k,
                        None,
                        reference.empirical_gap(r.k)?,
                        reference.thm21_rhs(c, r.k)?,
                        "B_k - h(λ_{k+1}) with standard reference steps",
                    ));
                }
            }
        }
        BoundKind::Thm22 | BoundKind::Thm52 => fw_gap_checks(bound, trace, ev, c, out)?,
        BoundKind::Bound31 | BoundKind::Bound32 => {
            let standard = bound == BoundKind::Bound31;
            let mut gmin = f64::INFINITY;
            for (i, r) in records.iter().enumerate() {
                if r.k >= 1 {
                    gmin = gmin.min(r.g.unwrap_or(f64::INFINITY));
                }
                if !stepped(i) {
                    continue;
                }
                let gap_rhs = if standard { standard_gap_bound(c, r.k) } else { averaging_gap_bound(c, r.k) };
                out.push(Check::new(bound, r.k, None, ev.empirical_gap(r.k)?, gap_rhs, "B_k - h(λ_{k+1})"));
                let line_search = matches!(meta.rule, StepRule::LineSearch { .. });
                if !line_search && r.k >= if standard { 1 } else { 2 } {
                    let fw_rhs = if standard { standard_fwgap_bound(c, r.k) } else { averaging_fwgap_bound(c, r.k) };
                    out.push(Check::new(bound, r.k, None, gmin, fw_rhs, "min G_i over 1..=k"));
                }
            }
        }
        BoundKind::Bound33 => {
            let alpha = match meta.rule {
                StepRule::Constant { alpha } => alpha,
                StepRule::OptimizedConstant { k_total } => optimized_constant(k_total),
                _ => unreachable!("checked by applies_to"),
            };
            for (i, r) in records.iter().enumerate() {
                if r.k == 0 || !stepped(i) {
                    continue;
                }
                let rhs = if meta.prestart {
                    constant_gap_bound_prestart(c, alpha, r.k)
                } else {
                    constant_gap_bound(c, alpha, r.k, r.bbest - ev.h1())
                };
                out.push(Check::new(bound, r.k, None, ev.empirical_gap(r.k)?, rhs, "B_k - h(λ_{k+1})"));
            }
        }
        BoundKind::Bound34 => {
            let StepRule::OptimizedConstant { k_total } = meta.rule else { unreachable!("checked by applies_to") };
            if let Some(i) = trace.position(k_total).filter(|i| stepped(*i)) {
                out.push(Check::new(bound, k_total, None, ev.empirical_gap(k_total)?, optimized_gap_bound(c, k_total), "B_k - h(λ_{k+1})"));
                let _ = i;
            }
            let end = 2 * k_total + 1;
            if let Some(i) = trace.position(end).filter(|i| stepped(*i)) {
                let gmin = records[..=i].iter().filter(|r| r.k >= 1).map(|r| r.g.unwrap_or(f64::INFINITY)).fold(f64::INFINITY, f64::min);
                out.push(Check::new(bound, end, None, gmin, optimized_fwgap_bound(c, k_total), "min G_i over 1..=2k+1"));
            }
        }
        BoundKind::Bound41 => {
            let StepRule::WarmStartStatic { c1 } = meta.rule else { unreachable!("checked by applies_to") };
            let Some(p1) = trace.position(1) else { return Ok(()) };
            let gap1 = records[p1].bbest - records[p1].h;
            for (i, r) in records.iter().enumerate() {
                if r.k >= 1 && stepped(i) {
                    out.push(Check::new(bound, r.k, None, ev.empirical_gap(r.k)?, warm_start_gap_bound(c, c1, gap1, r.k), "B_k - h(λ_{k+1})"));
                }
            }
        }
        BoundKind::Bound42 => {
            let mut gaps = Vec::new();
            for r in records.iter().filter(|r| r.k >= 1) {
                gaps.push(r.bbest - r.h);
                let Some(ck) = r.c_k else { continue };
                let (rhs, ell) = dynamic_gap_bound(ck, &gaps, r.k);
                out.push(Check::new(bound, r.k, Some(ell), r.bbest - r.h, rhs, "B_k - h(λ_k)"));
            }
        }
        BoundKind::DynamicCap => {
            let StepRule::Dynamic { c0 } = meta.rule else { unreachable!("checked by applies_to") };
            let cap = c0.max(2.0 * c);
            for r in records {
                if let Some(ck) = r.c_k {
                    out.push(Check::new(bound, r.k, None, ck, cap, "C_k vs max{C_0, 2C}"));
                }
            }
        }
    }
    Ok(())
}
