//! Objective and linear-optimization oracles.
//!
//! A run only ever talks to two abstractions: an [`Objective`] that supplies
//! values and gradients of the concave function being maximized, and a
//! [`FeasibleRegion`] whose linear maximization oracle (LMO) returns an
//! extreme point maximizing a linear functional. Inexact variants of both
//! live in [`inexact`].

mod audit;
pub mod inexact;
mod regions;
mod spectrahedron;

use std::fmt::Debug;
use std::ops::Deref;

use nalgebra::DVector;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use audit::{concavity_violation, gradient_fd_error};
pub use inexact::{
    approx_lmo, delta_gradient, dl_oracle, worst_admissible_vertex, DeltaSchedule, GradientModel,
    InexactnessSpec,
};
pub use regions::{lmo_l1ball, lmo_simplex, L1Ball, Simplex};
pub use spectrahedron::{lmo_spectrahedron, power_iteration, Spectrahedron};

/// Tolerance used for membership tests of LMO outputs and iterates.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A feasible point of a region.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPoint(DVector<f64>);

impl DecisionPoint {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.iter().all(|v| v.is_finite()) {
            Ok(Self(coords))
        } else {
            Err(Error::NonFinite("decision point".into()))
        }
    }

    pub fn from_vec(coords: Vec<f64>) -> Result<Self> {
        Self::new(DVector::from_vec(coords))
    }

    pub(crate) fn from_trusted(coords: DVector<f64>) -> Self {
        debug_assert!(coords.iter().all(|v| v.is_finite()));
        Self(coords)
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    /// Number of exactly nonzero coordinates.
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    /// Returns `self + alpha * (target - self)`.
    pub fn step_toward(&self, target: &DecisionPoint, alpha: f64) -> DecisionPoint {
        let mut next = self.0.clone();
        next.zip_apply(&target.0, |x, t| *x += alpha * (t - *x));
        Self::from_trusted(next)
    }
}

impl Deref for DecisionPoint {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

/// A linear functional `c`, evaluated as `c^T x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFunctional(DVector<f64>);

impl LinearFunctional {
    pub fn new(coeffs: DVector<f64>) -> Result<Self> {
        if coeffs.iter().all(|v| v.is_finite()) {
            Ok(Self(coeffs))
        } else {
            Err(Error::NonFinite("linear functional".into()))
        }
    }

    pub fn from_vec(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(DVector::from_vec(coeffs))
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn apply(&self, x: &DVector<f64>) -> f64 {
        self.0.dot(x)
    }
}

impl Deref for LinearFunctional {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Norm used to measure diameters and Lipschitz constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn of(self, v: &DVector<f64>) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.norm(),
        }
    }

    /// The dual norm (l-infinity for l1, l2 for l2).
    pub fn dual_of(self, v: &DVector<f64>) -> f64 {
        match self {
            Norm::L1 => v.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
            Norm::L2 => v.norm(),
        }
    }
}

/// A compact convex feasible region together with its linear maximization
/// oracle.
pub trait FeasibleRegion: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn name(&self) -> &'static str;

    /// Norm under which [`FeasibleRegion::diameter`] is reported.
    fn norm(&self) -> Norm;

    fn diameter_in(&self, norm: Norm) -> f64;

    fn diameter(&self) -> f64 {
        self.diameter_in(self.norm())
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool;

    /// Returns an extreme point maximizing `c^T x` over the region.
    fn lmo(&self, c: &LinearFunctional) -> Result<DecisionPoint>;

    /// Number of vertices, for polytopes whose vertices can be listed.
    fn vertex_count(&self) -> Option<usize> {
        None
    }

    fn vertex(&self, _index: usize) -> Option<DecisionPoint> {
        None
    }

    /// `c^T v_index`; regions override this when it is cheaper than
    /// materializing the vertex.
    fn vertex_value(&self, c: &LinearFunctional, index: usize) -> Option<f64> {
        self.vertex(index).map(|v| c.apply(&v))
    }

    /// A δ-approximate LMO returning the worst point that still satisfies
    /// `c^T x >= max c^T y - delta`, plus the realized suboptimality.
    fn approx_lmo(&self, c: &LinearFunctional, delta: f64) -> Result<(DecisionPoint, f64)> {
        worst_admissible_vertex(self, c, delta)
    }

    /// Draws a random feasible point (vertices included with positive
    /// probability for polytopes).
    fn sample(&self, rng: &mut dyn RngCore) -> DecisionPoint;
}

/// Concave objective `h` to be maximized.
pub trait Objective: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> LinearFunctional;

    /// Lipschitz constant of the gradient measured with `norm` (dual norm on
    /// gradients), when known.
    fn lipschitz(&self, _norm: Norm) -> Option<f64> {
        None
    }

    /// `d^T H d` where `-H` is a constant Hessian; `Some` only for
    /// quadratics. Enables closed-form line searches.
    fn directional_curvature(&self, _d: &DVector<f64>) -> Option<f64> {
        None
    }

    fn minmax(&self) -> Option<&dyn MinmaxStructure> {
        None
    }
}

/// Saddle structure `h(λ) = min_x φ(x, λ)` with a computable optimal
/// response.
pub trait MinmaxStructure: Send + Sync + Debug {
    /// `x(λ) ∈ argmin_x φ(x, λ)`.
    fn optimal_response(&self, lambda: &DVector<f64>) -> DVector<f64>;

    fn coupling(&self, x: &DVector<f64>, lambda: &DVector<f64>) -> f64;

    /// `f(x) = max_{λ ∈ Q} φ(x, λ)`.
    fn primal_value(&self, x: &DVector<f64>) -> Result<f64>;

    /// Minmax upper bound `f(x(λ))` at the given iterate.
    fn minmax_bound(&self, lambda: &DVector<f64>) -> Result<f64> {
        self.primal_value(&self.optimal_response(lambda))
    }
}

fn check_dim(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what}: expected dimension {expected}, got {got}"
        )))
    }
}
