//! Step-size rules and the dual-averages sequences they induce.
//!
//! Given steps `ᾱ_1, ..., ᾱ_k` in `[0, 1)` the dual-averages sequences are
//!
//! ```text
//! β_k = 1 / Π_{j<k} (1 - ᾱ_j),    α_k = β_k ᾱ_k / (1 - ᾱ_k) = β_{k+1} ᾱ_k
//! ```
//!
//! and every convergence bound in [`crate::guarantees`] is a function of
//! them. Open-loop rules are plain functions of the iteration index; the
//! warm-start rules also take the current bound gap and curvature estimate.
//! The curvature search of the dynamic rule lives in the solver because it
//! needs objective evaluations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::{DecisionPoint, Objective};

/// Largest admissible step for line searches: steps must stay below 1 so
/// that `β_{k+1}` is finite.
pub const MAX_LINE_SEARCH_STEP: f64 = 1.0 - 1e-12;

const GOLDEN_TOL: f64 = 1e-10;

/// `β_1..=β_{k+1}` and `α_1..=α_k` for a step sequence of length `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAverages {
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl DualAverages {
    /// Number of steps the sequences were built from.
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// `α_i` for `1 <= i <= len()`.
    pub fn alpha(&self, i: usize) -> f64 {
        self.alphas[i - 1]
    }

    /// `β_i` for `1 <= i <= len() + 1`.
    pub fn beta(&self, i: usize) -> f64 {
        self.betas[i - 1]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

fn check_step(step: f64) -> Result<()> {
    if (0.0..1.0).contains(&step) {
        Ok(())
    } else {
        Err(Error::Domain(step))
    }
}

pub fn dual_averages(steps: &[f64]) -> Result<DualAverages> {
    let mut alphas = Vec::with_capacity(steps.len());
    let mut betas = Vec::with_capacity(steps.len() + 1);
    let mut beta = 1.0;
    betas.push(beta);
    for &s in steps {
        check_step(s)?;
        let next = beta / (1.0 - s);
        alphas.push(next * s);
        betas.push(next);
        beta = next;
    }
    Ok(DualAverages { alphas, betas })
}

/// `2 / (i + 2)`.
pub fn standard_step(i: usize) -> f64 {
    2.0 / (i as f64 + 2.0)
}

/// `1 / (i + 1)`; with a pre-start step the iterates are running averages
/// of the LMO outputs.
pub fn averaging_step(i: usize) -> f64 {
    1.0 / (i as f64 + 1.0)
}

/// Constant step minimizing the pre-started constant-step bound after
/// `k_total` iterations: `1 - (k_total + 1)^(-1/k_total)`.
pub fn optimized_constant(k_total: usize) -> f64 {
    let k = k_total.max(1) as f64;
    1.0 - (k + 1.0).powf(-1.0 / k)
}

/// Static warm-start step `2 / (2 C_1 / gap_1 + i + 1)`. `None` when the
/// initial gap is not positive, meaning the start is already optimal.
pub fn warm_start_step(i: usize, c1: f64, gap1: f64) -> Result<Option<f64>> {
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(Error::Parameter(format!("curvature estimate must be positive, got {c1}")));
    }
    if gap1 <= 0.0 {
        return Ok(None);
    }
    Ok(Some(2.0 / (2.0 * c1 / gap1 + i as f64 + 1.0)))
}

/// Dynamic step `2 / (2 C_k / gap_k + 2)`. `None` when the gap is not
/// positive.
pub fn dynamic_step(ck: f64, gap: f64) -> Result<Option<f64>> {
    if !(ck > 0.0 && ck.is_finite()) {
        return Err(Error::Parameter(format!("curvature estimate must be positive, got {ck}")));
    }
    if gap <= 0.0 {
        return Ok(None);
    }
    Ok(Some(2.0 / (2.0 * ck / gap + 2.0)))
}

/// Candidate steps searched by an exact line search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CandidateSet {
    Interval { lo: f64, hi: f64 },
    Finite { values: Vec<f64> },
}

impl Default for CandidateSet {
    fn default() -> Self {
        CandidateSet::Interval { lo: 0.0, hi: MAX_LINE_SEARCH_STEP }
    }
}

impl CandidateSet {
    pub fn validate(&self) -> Result<()> {
        let inside = |v: f64| (0.0..=MAX_LINE_SEARCH_STEP).contains(&v);
        match self {
            CandidateSet::Interval { lo, hi } => {
                if !(inside(*lo) && inside(*hi)) {
                    return Err(Error::Parameter(format!(
                        "line-search interval [{lo}, {hi}] must lie in [0, {MAX_LINE_SEARCH_STEP}]"
                    )));
                }
                if lo > hi {
                    return Err(Error::Parameter(format!("empty line-search interval [{lo}, {hi}]")));
                }
            }
            CandidateSet::Finite { values } => {
                if values.is_empty() {
                    return Err(Error::Parameter("empty line-search candidate set".into()));
                }
                if let Some(v) = values.iter().find(|v| !inside(**v)) {
                    return Err(Error::Parameter(format!(
                        "line-search candidate {v} is outside [0, {MAX_LINE_SEARCH_STEP}]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn infimum(&self) -> f64 {
        match self {
            CandidateSet::Interval { lo, .. } => *lo,
            CandidateSet::Finite { values } => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// Maximizer of a concave function on `[lo, hi]` by golden-section search,
/// compared against both endpoints.
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (lo, f(lo));
    for x in [mid, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best.0
}

/// Exact line search: `argmax_{α ∈ A} h(λ + α(λ̃ - λ))`.
///
/// Quadratics use the clamped closed-form maximizer; other objectives use
/// golden-section search. A zero direction returns the infimum of `A`.
pub fn line_search(
    objective: &dyn Objective,
    lambda: &DecisionPoint,
    lambda_tilde: &DecisionPoint,
    candidates: &CandidateSet,
) -> Result<f64> {
    candidates.validate()?;
    let d = lambda_tilde.coords() - lambda.coords();
    if d.iter().all(|v| *v == 0.0) {
        return Ok(candidates.infimum());
    }
    let phi = |a: f64| objective.value(&(lambda.coords() + a * &d));
    match candidates {
        CandidateSet::Finite { values } => {
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let mut best = (sorted[0], phi(sorted[0]));
            for &a in &sorted[1..] {
                let v = phi(a);
                if v > best.1 {
                    best = (a, v);
                }
            }
            Ok(best.0)
        }
        CandidateSet::Interval { lo, hi } => {
            if let Some(curv) = objective.directional_curvature(&d) {
                let slope = objective.gradient(lambda).apply(&d);
                let a = if curv > 0.0 {
                    slope / curv
                } else if slope > 0.0 {
                    *hi
                } else {
                    *lo
                };
                Ok(a.clamp(*lo, *hi))
            } else {
                Ok(golden_section_max(phi, *lo, *hi, GOLDEN_TOL))
            }
        }
    }
}

/// A step-size strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepRule {
    /// `2 / (i + 2)`
    Standard,
    /// `1 / (i + 1)`
    Averaging,
    Constant { alpha: f64 },
    OptimizedConstant { k_total: usize },
    WarmStartStatic { c1: f64 },
    Dynamic { c0: f64 },
    LineSearch {
        #[serde(default)]
        candidates: CandidateSet,
    },
}

impl StepRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            StepRule::Standard | StepRule::Averaging => Ok(()),
            StepRule::Constant { alpha } => check_step(*alpha),
            StepRule::OptimizedConstant { k_total } => {
                if *k_total >= 1 {
                    Ok(())
                } else {
                    Err(Error::Parameter("optimized constant step needs k_total >= 1".into()))
                }
            }
            StepRule::WarmStartStatic { c1: c } | StepRule::Dynamic { c0: c } => {
                if *c > 0.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("curvature estimate must be positive, got {c}")))
                }
            }
            StepRule::LineSearch { candidates } => candidates.validate(),
        }
    }

    /// Step for iteration `i >= 1` when the rule is open loop.
    pub fn open_loop_step(&self, i: usize) -> Option<f64> {
        match self {
            StepRule::Standard => Some(standard_step(i)),
            StepRule::Averaging => Some(averaging_step(i)),
            StepRule::Constant { alpha } => Some(*alpha),
            StepRule::OptimizedConstant { k_total } => Some(optimized_constant(*k_total)),
            _ => None,
        }
    }

    /// Short human-readable label, e.g. `constant(0.5)`.
    pub fn label(&self) -> String {
        match self {
            StepRule::Standard => "standard".into(),
            StepRule::Averaging => "averaging".into(),
            StepRule::Constant { alpha } => format!("constant({alpha})"),
            StepRule::OptimizedConstant { k_total } => format!("optimized_constant({k_total})"),
            StepRule::WarmStartStatic { c1 } => format!("warm_start_static({c1})"),
            StepRule::Dynamic { c0 } => format!("dynamic({c0})"),
            StepRule::LineSearch { .. } => "line_search".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Quadratic;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn dual_averages_examples() {
        let d = dual_averages(&[2.0 / 3.0, 0.5, 0.4]).unwrap();
        for (got, want) in d.betas().iter().zip([1.0, 3.0, 6.0, 10.0]) {
            assert!(rel(*got, want) < 1e-14);
        }
        for (got, want) in d.alphas().iter().zip([2.0, 3.0, 4.0]) {
            assert!(rel(*got, want) < 1e-14);
        }
        let d = dual_averages(&[0.5, 1.0 / 3.0, 0.25]).unwrap();
        for (got, want) in d.betas().iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!(rel(*got, want) < 1e-14);
        }
        for a in d.alphas() {
            assert!(rel(*a, 1.0) < 1e-14);
        }
        let d = dual_averages(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(d.betas(), &[1.0, 2.0, 4.0, 8.0]);
        assert_eq!(d.alphas(), &[1.0, 2.0, 4.0]);
    }

    #[test]
    fn dual_averages_rejects_full_steps() {
        assert!(matches!(dual_averages(&[0.5, 1.0]), Err(Error::Domain(v)) if v == 1.0));
        assert!(matches!(dual_averages(&[-0.1]), Err(Error::Domain(_))));
        assert!(dual_averages(&[f64::NAN]).is_err());
        assert!(dual_averages(&[]).unwrap().is_empty());
    }

    #[test]
    fn constant_rule_closed_form() {
        for &a in &[0.05, 0.3, 0.5, 0.9] {
            let d = dual_averages(&vec![a; 60]).unwrap();
            for i in 1..=60 {
                assert!(rel(d.beta(i), (1.0 - a).powi(1 - i as i32)) < 1e-12);
                assert!(rel(d.alpha(i), a * (1.0 - a).powi(-(i as i32))) < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn dual_average_identities(steps in prop::collection::vec(0.0f64..0.95, 1..40)) {
            let d = dual_averages(&steps).unwrap();
            let mut sum = 1.0;
            for i in 1..=steps.len() {
                let (b0, b1, a) = (d.beta(i), d.beta(i + 1), d.alpha(i));
                prop_assert!(rel(b1 - b0, a) < 1e-12 || (b1 - b0 - a).abs() < 1e-12 * b1);
                prop_assert!(rel(steps[i - 1] * b1, a) < 1e-12 || a == 0.0);
                prop_assert!(b1 >= b0 && b0 > 0.0);
                sum += a;
                prop_assert!(rel(sum, b1) < 1e-12);
            }
        }
    }

    #[test]
    fn standard_and_averaging_examples() {
        assert_eq!(standard_step(1), 2.0 / 3.0);
        assert_eq!(standard_step(2), 0.5);
        assert_eq!(standard_step(98), 0.02);
        assert_eq!(averaging_step(1), 0.5);
        assert_eq!(averaging_step(3), 0.25);
    }

    #[test]
    fn optimized_constant_examples() {
        assert_eq!(optimized_constant(1), 0.5);
        assert!((optimized_constant(3) - 0.370_039_475_7).abs() < 1e-9);
        assert!((optimized_constant(3) - (1.0 - 4f64.powf(-1.0 / 3.0))).abs() < 1e-15);
    }

    #[test]
    fn warm_start_examples() {
        assert!((warm_start_step(1, 2.0, 1.0).unwrap().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        // 2 C_1 / gap_1 = 1 reproduces the standard rule shifted by one
        assert_eq!(warm_start_step(1, 0.5, 1.0).unwrap().unwrap(), standard_step(1));
        // vanishing 2C_1/gap_1 tends to 2 / (i + 1)
        let s = warm_start_step(3, 1e-12, 1.0).unwrap().unwrap();
        assert!((s - 0.5).abs() < 1e-11);
        assert_eq!(warm_start_step(1, 1.0, 0.0).unwrap(), None);
        assert!(warm_start_step(1, 0.0, 1.0).is_err());
    }

    #[test]
    fn dynamic_examples() {
        assert_eq!(dynamic_step(1.0, 1.0).unwrap(), Some(0.5));
        assert!((dynamic_step(1.0, 2.0).unwrap().unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(dynamic_step(1.0, 1e-14).unwrap().unwrap() < 1e-13);
        assert_eq!(dynamic_step(1.0, -1.0).unwrap(), None);
    }

    proptest! {
        #[test]
        fn rules_stay_in_unit_interval(i in 1usize..100_000, c in 1e-6f64..1e6, gap in 1e-9f64..1e6, k in 1usize..10_000) {
            for s in [standard_step(i), averaging_step(i), optimized_constant(k),
                      warm_start_step(i, c, gap).unwrap().unwrap(), dynamic_step(c, gap).unwrap().unwrap()] {
                prop_assert!((0.0..1.0).contains(&s));
            }
        }
    }

    fn neg_half_norm(n: usize) -> Quadratic {
        Quadratic::new(DMatrix::identity(n, n), DVector::zeros(n), 0.0).unwrap()
    }

    fn pt(v: &[f64]) -> DecisionPoint {
        DecisionPoint::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn line_search_examples() {
        let h = neg_half_norm(2);
        let a = line_search(&h, &pt(&[1.0, 0.0]), &pt(&[0.0, 1.0]), &CandidateSet::default()).unwrap();
        assert!((a - 0.5).abs() < 1e-15);
        let a = line_search(&h, &pt(&[0.3, 0.7]), &pt(&[0.3, 0.7]), &CandidateSet::default()).unwrap();
        assert_eq!(a, 0.0);
        let a = line_search(&h, &pt(&[1.0, 0.0]), &pt(&[0.0, 1.0]), &CandidateSet::Finite { values: vec![0.3] }).unwrap();
        assert_eq!(a, 0.3);
        let empty = CandidateSet::Finite { values: vec![] };
        assert!(matches!(line_search(&h, &pt(&[1.0, 0.0]), &pt(&[0.0, 1.0]), &empty), Err(Error::Parameter(_))));
        let bad = CandidateSet::Interval { lo: 0.0, hi: 1.0 };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn golden_section_agrees_with_closed_form() {
        let f = |a: f64| -(a - 0.37).powi(2);
        assert!((golden_section_max(f, 0.0, 1.0, 1e-10) - 0.37).abs() < 1e-8);
        let g = |a: f64| a;
        assert_eq!(golden_section_max(g, 0.0, 0.9, 1e-10), 0.9);
    }

    #[test]
    fn rule_validation() {
        assert!(StepRule::Constant { alpha: 1.0 }.validate().is_err());
        assert!(StepRule::OptimizedConstant { k_total: 0 }.validate().is_err());
        assert!(StepRule::Dynamic { c0: 0.0 }.validate().is_err());
        assert!(StepRule::Standard.validate().is_ok());
        let r: StepRule = serde_json::from_str(r#"{"kind":"constant","alpha":0.25}"#).unwrap();
        assert_eq!(r, StepRule::Constant { alpha: 0.25 });
        assert!(serde_json::from_str::<StepRule>(r#"{"kind":"constant","alpha":0.25,"x":1}"#).is_err());
    }
}
