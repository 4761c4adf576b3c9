use nalgebra::DVector;
use rand::{Rng, RngCore};

use super::{FeasibleRegion, Objective};

/// Largest violation of midpoint concavity over `pairs` sampled pairs,
/// `max(μ h(x) + (1-μ) h(y) - h(μx + (1-μ)y))`. Concave objectives give a
/// value no larger than rounding noise.
pub fn concavity_violation(
    objective: &dyn Objective,
    region: &dyn FeasibleRegion,
    pairs: usize,
    rng: &mut dyn RngCore,
) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let x = region.sample(rng);
        let y = region.sample(rng);
        let mu: f64 = rng.random();
        let mid = mu * x.coords() + (1.0 - mu) * y.coords();
        let gap = mu * objective.value(&x) + (1.0 - mu) * objective.value(&y) - objective.value(&mid);
        worst = worst.max(gap);
    }
    worst
}

/// Largest relative deviation between the analytic gradient and central
/// finite differences, measured as `||g_fd - g||_inf / max(1, ||g||_inf)`.
pub fn gradient_fd_error(
    objective: &dyn Objective,
    region: &dyn FeasibleRegion,
    points: usize,
    rng: &mut dyn RngCore,
) -> f64 {
    let mut worst = 0.0_f64;
    for _ in 0..points {
        let x = region.sample(rng).into_inner();
        let g = objective.gradient(&x);
        let n = x.len();
        let fd = DVector::from_fn(n, |i, _| {
            let step = 1e-6 * x[i].abs().max(1.0);
            let mut up = x.clone();
            let mut down = x.clone();
            up[i] += step;
            down[i] -= step;
            (objective.value(&up) - objective.value(&down)) / (2.0 * step)
        });
        let scale = g.amax().max(1.0);
        worst = worst.max((fd - g.coeffs()).amax() / scale);
    }
    worst
}
