use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::steprules::{optimized_constant, StepRule};

/// Run-dependent inputs some closed-form bounds need.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClosedFormExtras {
    pub prestart: bool,
    /// `B_k - h(λ_1)`, for the constant rule without pre-start.
    pub b_minus_h1: Option<f64>,
    /// `B_1 - h(λ_1)`, for the static warm-start rule.
    pub gap1: Option<f64>,
    /// `C_k`, for the dynamic rule.
    pub c_k: Option<f64>,
    /// `B_ℓ - h(λ_ℓ)` for `ℓ = 1..=k`, for the dynamic rule.
    pub gaps: Option<Vec<f64>>,
}

fn missing(what: &str, rule: &StepRule) -> Error {
    Error::Parameter(format!("{} bound needs {what}", rule.label()))
}

/// `2C / (k + 4)`
pub fn standard_gap_bound(c: f64, k: usize) -> f64 {
    2.0 * c / (k as f64 + 4.0)
}

/// `4.5C / k`
pub fn standard_fwgap_bound(c: f64, k: usize) -> f64 {
    4.5 * c / k as f64
}

/// `½C (1 + ln(k+1)) / (k+1)`
pub fn averaging_gap_bound(c: f64, k: usize) -> f64 {
    let k = k as f64;
    0.5 * c * (1.0 + (k + 1.0).ln()) / (k + 1.0)
}

/// `¾C (2.3 + 2 ln k) / (k-1)` for `k >= 2`
pub fn averaging_fwgap_bound(c: f64, k: usize) -> f64 {
    let k = k as f64;
    0.75 * c * (2.3 + 2.0 * k.ln()) / (k - 1.0)
}

/// Constant step `ᾱ` with pre-start: `½C [(1-ᾱ)^{k+1} + ᾱ]`.
pub fn constant_gap_bound_prestart(c: f64, alpha: f64, k: usize) -> f64 {
    0.5 * c * ((1.0 - alpha).powi(k as i32 + 1) + alpha)
}

/// Constant step `ᾱ` without pre-start:
/// `(B_k - h(λ_1))(1-ᾱ)^k + ½C [ᾱ - ᾱ(1-ᾱ)^k]`.
pub fn constant_gap_bound(c: f64, alpha: f64, k: usize, b_minus_h1: f64) -> f64 {
    let decay = (1.0 - alpha).powi(k as i32);
    b_minus_h1 * decay + 0.5 * c * (alpha - alpha * decay)
}

/// Optimized constant step after `k` iterations: `½C (1 + ln(k+1)) / k`.
pub fn optimized_gap_bound(c: f64, k: usize) -> f64 {
    let k = k as f64;
    0.5 * c * (1.0 + (k + 1.0).ln()) / k
}

/// FW gap over `2k+1` iterations of the optimized constant step:
/// `½C (1 + 2 ln(k+1)) / k`.
pub fn optimized_fwgap_bound(c: f64, k: usize) -> f64 {
    let k = k as f64;
    0.5 * c * (1.0 + 2.0 * (k + 1.0).ln()) / k
}

/// Static warm start: `2 max{C_1, C} / (2C_1/gap_1 + k)`.
pub fn warm_start_gap_bound(c: f64, c1: f64, gap1: f64, k: usize) -> f64 {
    2.0 * c1.max(c) / (2.0 * c1 / gap1 + k as f64)
}

/// Dynamic rule: `min_ℓ 2C_k / (2C_k/gap_ℓ + k - ℓ)` over `ℓ = 1..=k`, with
/// `gaps[ℓ-1] = B_ℓ - h(λ_ℓ)`. Returns the value and the minimizing `ℓ`.
pub fn dynamic_gap_bound(c_k: f64, gaps: &[f64], k: usize) -> (f64, usize) {
    let mut best = (f64::INFINITY, k);
    for (i, gap) in gaps.iter().take(k).enumerate() {
        let ell = i + 1;
        let v = 2.0 * c_k / (2.0 * c_k / gap + (k - ell) as f64);
        if v < best.0 {
            best = (v, ell);
        }
    }
    best
}

/// Every closed-form bound that applies to `rule` at iteration `k`.
pub fn closed_form_bounds(
    rule: &StepRule,
    c: f64,
    k: usize,
    extras: &ClosedFormExtras,
) -> Result<BTreeMap<&'static str, f64>> {
    let mut out = BTreeMap::new();
    let constant = |alpha: f64, out: &mut BTreeMap<&'static str, f64>| -> Result<()> {
        if k >= 1 {
            let v = if extras.prestart {
                constant_gap_bound_prestart(c, alpha, k)
            } else {
                let b = extras.b_minus_h1.ok_or_else(|| missing("B_k - h(λ_1)", rule))?;
                constant_gap_bound(c, alpha, k, b)
            };
            out.insert("bound33_gap", v);
        }
        Ok(())
    };
    match rule {
        StepRule::Standard if extras.prestart => {
            out.insert("bound31_gap", standard_gap_bound(c, k));
            if k >= 1 {
                out.insert("bound31_fwgap", standard_fwgap_bound(c, k));
            }
        }
        StepRule::Averaging if extras.prestart => {
            out.insert("bound32_gap", averaging_gap_bound(c, k));
            if k >= 2 {
                out.insert("bound32_fwgap", averaging_fwgap_bound(c, k));
            }
        }
        StepRule::LineSearch { .. } if extras.prestart => {
            out.insert("bound31_gap", standard_gap_bound(c, k));
            out.insert("bound32_gap", averaging_gap_bound(c, k));
        }
        StepRule::Constant { alpha } => constant(*alpha, &mut out)?,
        StepRule::OptimizedConstant { k_total } => {
            constant(optimized_constant(*k_total), &mut out)?;
            if extras.prestart && k == *k_total {
                out.insert("bound34_gap", optimized_gap_bound(c, k));
            }
            if extras.prestart && k == 2 * k_total + 1 {
                out.insert("bound34_fwgap", optimized_fwgap_bound(c, *k_total));
            }
        }
        StepRule::WarmStartStatic { c1 } if k >= 1 => {
            let gap1 = extras.gap1.ok_or_else(|| missing("B_1 - h(λ_1)", rule))?;
            out.insert("bound41_gap", warm_start_gap_bound(c, *c1, gap1, k));
        }
        StepRule::Dynamic { .. } if k >= 1 => {
            let c_k = extras.c_k.ok_or_else(|| missing("C_k", rule))?;
            let gaps = extras.gaps.as_ref().ok_or_else(|| missing("the bound-gap history", rule))?;
            if gaps.len() < k {
                return Err(missing("a bound-gap history covering 1..=k", rule));
            }
            out.insert("bound42_gap", dynamic_gap_bound(c_k, gaps, k).0);
        }
        _ => {}
    }
    Ok(out)
}
