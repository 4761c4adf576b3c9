//! Elementary inequalities used to turn the master bounds into closed forms.
//! Each helper returns the two (or three) sides so callers can check them.

use crate::steprules::optimized_constant;

/// `(Σ_{i=0}^k (i+1)/(i+2), (k+1)(k+2)/(k+4))`; the first never exceeds
/// the second.
pub fn ratio_sum(k: usize) -> (f64, f64) {
    let lhs = (0..=k).map(|i| (i as f64 + 1.0) / (i as f64 + 2.0)).sum();
    let k = k as f64;
    (lhs, (k + 1.0) * (k + 2.0) / (k + 4.0))
}

/// For the optimized constant step `ᾱ = 1 - (k+1)^{-1/k}`:
/// returns `(ln(k+1)/k, ᾱ, (k+1)ᾱ)`. The first is at least `ᾱ` and the last
/// is at least 1.
pub fn optimized_step_facts(k: usize) -> (f64, f64, f64) {
    let a = optimized_constant(k);
    let kf = k as f64;
    ((kf + 1.0).ln() / kf, a, (kf + 1.0) * a)
}

/// Integral sandwich `ln((k+1)/ℓ) <= Σ_{i=ℓ}^k 1/i <= ln(k/(ℓ-1))` for
/// `2 <= ℓ <= k`, given the partial sum.
pub fn harmonic_bounds(ell: usize, k: usize) -> (f64, f64) {
    let (l, k) = (ell as f64, k as f64);
    (((k + 1.0) / l).ln(), (k / (l - 1.0)).ln())
}

/// Integral sandwich `(k-ℓ+1)/((k+1)ℓ) <= Σ_{i=ℓ}^k 1/i² <= (k-ℓ+1)/(k(ℓ-1))`.
pub fn inverse_square_bounds(ell: usize, k: usize) -> (f64, f64) {
    let (l, k) = (ell as f64, k as f64);
    let n = k - l + 1.0;
    (n / ((k + 1.0) * l), n / (k * (l - 1.0)))
}
