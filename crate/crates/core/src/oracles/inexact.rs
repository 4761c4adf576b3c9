//! Inexact subproblem solutions and inexact gradients.
//!
//! Three models are supported:
//!
//! * a δ-approximate LMO, which returns a point whose linear value is within
//!   δ of the maximum;
//! * a δ-oracle gradient `g` with `|(∇h(y) - g)^T (x - y)| <= δ` on the
//!   region, built from the sufficient condition `||g - ∇h||_* Diam <= δ`;
//! * a (δ, L)-oracle returning `(h + δ, ∇h)`, which sandwiches `h` between
//!   a linear upper model and a quadratic-minus-δ lower model whenever
//!   `L >= L_h`.
//!
//! The injectors are adversarial where they have freedom: the approximate
//! LMO returns the worst admissible vertex so that bounds are exercised at
//! their binding edge.

use nalgebra::DVector;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DecisionPoint, FeasibleRegion, LinearFunctional, Norm, Objective};
use crate::error::{Error, Result};

/// Accuracy schedule `δ_k` for the approximate LMO.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeltaSchedule {
    Constant { delta: f64 },
    /// `δ_k = delta0 / (k + 1)^power`
    Decaying { delta0: f64, power: f64 },
}

impl Default for DeltaSchedule {
    fn default() -> Self {
        DeltaSchedule::Constant { delta: 0.0 }
    }
}

impl DeltaSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            DeltaSchedule::Constant { delta } => delta,
            DeltaSchedule::Decaying { delta0, power } => delta0 / ((k + 1) as f64).powf(power),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            DeltaSchedule::Constant { delta } => delta == 0.0,
            DeltaSchedule::Decaying { delta0, .. } => delta0 == 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            DeltaSchedule::Constant { delta } => delta >= 0.0 && delta.is_finite(),
            DeltaSchedule::Decaying { delta0, power } => {
                delta0 >= 0.0 && delta0.is_finite() && power.is_finite() && power >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid LMO accuracy schedule {self:?}")))
        }
    }
}

/// How gradients are computed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GradientModel {
    #[default]
    Exact,
    DeltaOracle { delta: f64 },
    DlOracle { delta: f64, lipschitz: f64 },
}

/// Full description of the inexactness injected into a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InexactnessSpec {
    #[serde(default)]
    pub lmo_delta: DeltaSchedule,
    #[serde(default)]
    pub gradient: GradientModel,
    #[serde(default)]
    pub seed: u64,
}

impl InexactnessSpec {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn constant_lmo(delta: f64) -> Self {
        Self { lmo_delta: DeltaSchedule::Constant { delta }, ..Self::default() }
    }

    pub fn delta_oracle(delta: f64, seed: u64) -> Self {
        Self { gradient: GradientModel::DeltaOracle { delta }, seed, ..Self::default() }
    }

    pub fn dl_oracle(delta: f64, lipschitz: f64) -> Self {
        Self { gradient: GradientModel::DlOracle { delta, lipschitz }, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.lmo_delta.validate()?;
        match self.gradient {
            GradientModel::Exact => {}
            GradientModel::DeltaOracle { delta } => {
                if !(delta >= 0.0 && delta.is_finite()) {
                    return Err(Error::Parameter(format!("δ-oracle accuracy must be >= 0, got {delta}")));
                }
            }
            GradientModel::DlOracle { delta, lipschitz } => {
                if !(delta >= 0.0 && delta.is_finite() && lipschitz >= 0.0 && lipschitz.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "(δ, L)-oracle needs δ >= 0 and L >= 0, got δ={delta}, L={lipschitz}"
                    )));
                }
                if !self.lmo_delta.is_zero() {
                    return Err(Error::Parameter(
                        "the (δ, L)-oracle model is run with an exact LMO".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// True when neither the LMO nor the gradient is perturbed.
    pub fn is_exact(&self) -> bool {
        self.lmo_delta.is_zero() && matches!(self.gradient, GradientModel::Exact)
    }

    pub fn is_dl(&self) -> bool {
        matches!(self.gradient, GradientModel::DlOracle { .. })
    }
}

/// Scans the vertex list for the worst vertex `v` with
/// `max - c^T v <= delta`, lowest index on ties.
pub fn worst_admissible_vertex<R: FeasibleRegion + ?Sized>(
    region: &R,
    c: &LinearFunctional,
    delta: f64,
) -> Result<(DecisionPoint, f64)> {
    let count = region.vertex_count().ok_or_else(|| {
        Error::Unsupported(format!("{} has no vertex enumeration for approximate LMO", region.name()))
    })?;
    let values: Vec<f64> = (0..count)
        .map(|i| region.vertex_value(c, i).expect("index below vertex count"))
        .collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut chosen: Option<(usize, f64)> = None;
    for (i, v) in values.iter().copied().enumerate() {
        if best - v > delta {
            continue;
        }
        match chosen {
            Some((_, w)) if v >= w => {}
            _ => chosen = Some((i, v)),
        }
    }
    let (i, v) = chosen.ok_or_else(|| Error::Dimension("region has no vertices".into()))?;
    Ok((region.vertex(i).expect("index below vertex count"), best - v))
}

/// δ-approximate LMO. With `delta == 0` this is exactly the region's LMO.
pub fn approx_lmo(
    region: &dyn FeasibleRegion,
    c: &LinearFunctional,
    delta: f64,
) -> Result<(DecisionPoint, f64)> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Parameter(format!("LMO accuracy must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok((region.lmo(c)?, 0.0));
    }
    region.approx_lmo(c, delta)
}

/// A δ-oracle gradient: `∇h(λ) + e` where `e` is a random direction with
/// dual norm exactly `δ / Diam_Q`.
pub fn delta_gradient(
    objective: &dyn Objective,
    region: &dyn FeasibleRegion,
    lambda: &DecisionPoint,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<LinearFunctional> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Parameter(format!("δ-oracle accuracy must be >= 0, got {delta}")));
    }
    let exact = objective.gradient(lambda);
    let diam = region.diameter();
    if delta == 0.0 || diam == 0.0 {
        return Ok(exact);
    }
    let norm = region.norm();
    let n = exact.len();
    let mut e: DVector<f64> = match norm {
        Norm::L1 => DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0)),
        Norm::L2 => DVector::from_fn(n, |_, _| StandardNormal.sample(&mut *rng)),
    };
    let size = norm.dual_of(&e);
    if size == 0.0 {
        e[0] = 1.0;
    }
    let size = norm.dual_of(&e);
    e *= (delta / diam) / size;
    LinearFunctional::new(exact.into_inner() + e)
}

/// The offset (δ, L)-oracle: returns `(h(λ) + δ, ∇h(λ))`.
///
/// The upper inequality holds by concavity and the lower one by
/// L-smoothness, provided `L` is at least the objective's declared
/// Lipschitz constant in the region's norm.
pub fn dl_oracle(
    objective: &dyn Objective,
    region: &dyn FeasibleRegion,
    lambda: &DecisionPoint,
    delta: f64,
    lipschitz: f64,
) -> Result<(f64, LinearFunctional)> {
    if !(delta >= 0.0 && delta.is_finite() && lipschitz >= 0.0) {
        return Err(Error::Parameter(format!(
            "(δ, L)-oracle needs δ >= 0 and L >= 0, got δ={delta}, L={lipschitz}"
        )));
    }
    if let Some(declared) = objective.lipschitz(region.norm()) {
        if lipschitz < declared {
            return Err(Error::Parameter(format!(
                "L = {lipschitz} is below the objective's Lipschitz constant {declared}"
            )));
        }
    }
    let value = objective.value(lambda);
    let grad = objective.gradient(lambda);
    if delta == 0.0 {
        Ok((value, grad))
    } else {
        Ok((value + delta, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{L1Ball, Simplex};
    use crate::problems::Quadratic;
    use crate::rng;
    use nalgebra::DMatrix;

    fn lf(v: &[f64]) -> LinearFunctional {
        LinearFunctional::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn approx_lmo_examples() {
        let s = Simplex::new(3).unwrap();
        let c = lf(&[1.0, 3.0, 2.0]);
        let (x, cert) = approx_lmo(&s, &c, 0.5).unwrap();
        assert_eq!((x.as_slice(), cert), (&[0.0, 1.0, 0.0][..], 0.0));
        let (x, cert) = approx_lmo(&s, &c, 1.0).unwrap();
        assert_eq!((x.as_slice(), cert), (&[0.0, 0.0, 1.0][..], 1.0));
        let (x, cert) = approx_lmo(&s, &c, 0.0).unwrap();
        assert_eq!(x, s.lmo(&c).unwrap());
        assert_eq!(cert, 0.0);
    }

    #[test]
    fn approx_lmo_rejects_negative_delta() {
        let s = Simplex::new(2).unwrap();
        assert!(matches!(approx_lmo(&s, &lf(&[1.0, 0.0]), -0.1), Err(Error::Parameter(_))));
    }

    #[test]
    fn approx_certificate_within_delta() {
        let mut r = rng::seeded(5);
        let regions: Vec<Box<dyn FeasibleRegion>> =
            vec![Box::new(Simplex::new(7).unwrap()), Box::new(L1Ball::new(7, 1.3).unwrap())];
        for region in &regions {
            for _ in 0..500 {
                let c = LinearFunctional::new(DVector::from_fn(7, |_, _| r.random::<f64>() * 4.0 - 2.0)).unwrap();
                let delta = r.random::<f64>() * 3.0;
                let (x, cert) = approx_lmo(region.as_ref(), &c, delta).unwrap();
                let exact = c.apply(&region.lmo(&c).unwrap());
                assert!((0.0..=delta).contains(&cert));
                assert_eq!(cert, exact - c.apply(&x));
                assert!(region.contains(&x, 1e-9));
            }
        }
    }

    fn quad(n: usize) -> Quadratic {
        Quadratic::new(DMatrix::identity(n, n), DVector::zeros(n), 0.0).unwrap()
    }

    #[test]
    fn delta_gradient_zero_is_exact() {
        let q = quad(3);
        let s = Simplex::new(3).unwrap();
        let x = s.barycenter();
        let g = delta_gradient(&q, &s, &x, 0.0, &mut rng::seeded(1)).unwrap();
        assert_eq!(g, q.gradient(&x));
    }

    #[test]
    fn delta_gradient_scale_on_two_simplex() {
        let q = quad(2);
        let s = Simplex::new(2).unwrap();
        let x = s.barycenter();
        let g = delta_gradient(&q, &s, &x, 0.6, &mut rng::seeded(2)).unwrap();
        let e = g.coeffs() - q.gradient(&x).coeffs();
        assert!((Norm::L1.dual_of(&e) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn delta_gradient_condition_monte_carlo() {
        let q = quad(6);
        let delta = 0.25;
        let regions: Vec<Box<dyn FeasibleRegion>> =
            vec![Box::new(Simplex::new(6).unwrap()), Box::new(L1Ball::new(6, 2.0).unwrap())];
        let mut r = rng::seeded(8);
        for region in &regions {
            for _ in 0..10_000 {
                let y = region.sample(&mut r);
                let x = region.sample(&mut r);
                let g = delta_gradient(&q, region.as_ref(), &y, delta, &mut r).unwrap();
                let err = (q.gradient(&y).coeffs() - g.coeffs()).dot(&(x.coords() - y.coords()));
                assert!(err.abs() <= delta * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn dl_oracle_offset() {
        let q = quad(3);
        let s = Simplex::new(3).unwrap();
        let x = s.barycenter();
        let (v, g) = dl_oracle(&q, &s, &x, 0.0, 1.0).unwrap();
        assert_eq!((v, &g), (q.value(&x), &q.gradient(&x)));
        let (v, _) = dl_oracle(&q, &s, &x, 0.1, 1.0).unwrap();
        assert_eq!(v, q.value(&x) + 0.1);
    }

    #[test]
    fn dl_oracle_rejects_small_lipschitz() {
        let q = Quadratic::new(DMatrix::from_diagonal_element(3, 3, 2.0), DVector::zeros(3), 0.0).unwrap();
        let s = Simplex::new(3).unwrap();
        assert!(matches!(dl_oracle(&q, &s, &s.barycenter(), 0.1, 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn dl_oracle_inequalities_monte_carlo() {
        let mut r = rng::seeded(13);
        let a = DMatrix::from_fn(5, 5, |_, _| r.random::<f64>() - 0.5);
        let q = Quadratic::new(&a * a.transpose(), DVector::from_fn(5, |_, _| r.random::<f64>()), 0.0).unwrap();
        let s = Simplex::new(5).unwrap();
        let l = q.lipschitz(Norm::L1).unwrap();
        let delta = 0.05;
        for _ in 0..10_000 {
            let y = s.sample(&mut r);
            let x = s.sample(&mut r);
            let (hv, g) = dl_oracle(&q, &s, &y, delta, l).unwrap();
            let d = x.coords() - y.coords();
            let upper = hv + g.apply(&d);
            let lower = upper - 0.5 * l * Norm::L1.of(&d).powi(2) - delta;
            let hx = q.value(&x);
            assert!(hx <= upper + 1e-12);
            assert!(hx >= lower - 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(InexactnessSpec::constant_lmo(-1.0).validate().is_err());
        assert!(InexactnessSpec::dl_oracle(0.1, -2.0).validate().is_err());
        let mixed = InexactnessSpec { lmo_delta: DeltaSchedule::Constant { delta: 0.1 }, ..InexactnessSpec::dl_oracle(0.1, 1.0) };
        assert!(mixed.validate().is_err());
        assert!(InexactnessSpec::exact().is_exact());
        let s = DeltaSchedule::Decaying { delta0: 1.0, power: 2.0 };
        assert_eq!(s.at(1), 0.25);
    }
}
