use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::{FeasibleRegion, Objective};
use crate::problems::{check_psd, Problem};
use crate::rng;

/// Exact curvature constant of `h(λ) = c^Tλ - ½λ^TQλ` over a polytope:
/// `max (w - v)^T Q (w - v)` over vertex pairs. The quadratic form is
/// convex in the difference, so its maximum over the polytope's difference
/// set is attained at a pair of vertices.
pub fn curvature_exact_quadratic(q: &DMatrix<f64>, region: &dyn FeasibleRegion) -> Result<f64> {
    check_psd(q)?;
    if q.nrows() != region.dim() {
        return Err(Error::Dimension(format!("Q is {}x{} but the region has dimension {}", q.nrows(), q.ncols(), region.dim())));
    }
    let count = region
        .vertex_count()
        .ok_or_else(|| Error::Unsupported(format!("{} has no vertex enumeration", region.name())))?;
    if region.name() == "simplex" {
        let mut best = 0.0_f64;
        for i in 0..count {
            for j in i + 1..count {
                best = best.max(q[(i, i)] - 2.0 * q[(i, j)] + q[(j, j)]);
            }
        }
        return Ok(best);
    }
    let vertices: Vec<_> = (0..count).map(|i| region.vertex(i).expect("index below vertex count")).collect();
    let mut best = 0.0_f64;
    for i in 0..count {
        for j in i + 1..count {
            let d = vertices[j].coords() - vertices[i].coords();
            best = best.max(d.dot(&(q * &d)));
        }
    }
    Ok(best)
}

/// `2[h(λ) + α∇h(λ)^T(λ̄ - λ) - h(λ + α(λ̄ - λ))] / α²` for one triple.
pub fn curvature_ratio(objective: &dyn Objective, lambda: &nalgebra::DVector<f64>, bar: &nalgebra::DVector<f64>, alpha: f64) -> f64 {
    let d = bar - lambda;
    let lin = objective.gradient(lambda).apply(&d);
    let next = objective.value(&(lambda + alpha * &d));
    2.0 * (objective.value(lambda) + alpha * lin - next) / (alpha * alpha)
}

/// Lower bound on the curvature constant from sampled triples `(λ, λ̄, α)`
/// with `α ∈ [0.05, 1]`. When the region has at most 64 vertices every
/// vertex pair is also tried at `α = 1`.
pub fn curvature_sampled_lower_bound(objective: &dyn Objective, region: &dyn FeasibleRegion, samples: usize, seed: u64) -> f64 {
    let mut r = rng::seeded(seed);
    let mut best = 0.0_f64;
    if let Some(count) = region.vertex_count().filter(|c| *c <= 64) {
        for i in 0..count {
            for j in 0..count {
                if i != j {
                    let (v, w) = (region.vertex(i).expect("vertex"), region.vertex(j).expect("vertex"));
                    best = best.max(curvature_ratio(objective, v.coords(), w.coords(), 1.0));
                }
            }
        }
    }
    for _ in 0..samples {
        let l = region.sample(&mut r);
        let b = region.sample(&mut r);
        let alpha = r.random_range(0.05..=1.0);
        best = best.max(curvature_ratio(objective, l.coords(), b.coords(), alpha));
    }
    best
}

/// What is known about the curvature constant of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CurvatureInfo {
    pub exact: Option<f64>,
    /// `L · Diam²` in the region's norm.
    pub upper: Option<f64>,
    pub sampled: Option<f64>,
}

impl CurvatureInfo {
    pub fn for_problem(problem: &Problem, samples: usize, seed: u64) -> Self {
        let norm = problem.region.norm();
        let diam = problem.region.diameter();
        Self {
            exact: problem.exact_curvature,
            upper: problem.objective.lipschitz(norm).map(|l| l * diam * diam),
            sampled: (samples > 0).then(|| {
                curvature_sampled_lower_bound(problem.objective.as_ref(), problem.region.as_ref(), samples, seed)
            }),
        }
    }

    /// The value that feeds the bound evaluators: the exact constant when
    /// known, otherwise the Lipschitz upper bound.
    pub fn for_bounds(&self) -> Option<f64> {
        self.exact.or(self.upper)
    }
}
