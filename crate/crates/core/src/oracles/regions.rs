use nalgebra::DVector;
use rand::{Rng, RngCore};
use rand_distr::Exp1;

use super::{check_dim, DecisionPoint, FeasibleRegion, LinearFunctional, Norm};
use crate::error::{Error, Result};

/// Index of the largest entry of `score`, lowest index on ties.
fn first_argmax(scores: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// LMO over the unit simplex: the coordinate vertex `e_i` with the largest
/// coefficient, lowest index on ties.
pub fn lmo_simplex(c: &LinearFunctional) -> Result<DecisionPoint> {
    let n = c.len();
    let i = first_argmax(c.iter().copied())
        .ok_or_else(|| Error::Dimension("simplex LMO needs n >= 1".into()))?;
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    Ok(DecisionPoint::from_trusted(v))
}

/// LMO over the l1 ball of radius `tau`: `tau * sign(c_i) * e_i` for the
/// largest `|c_i|`, lowest index on ties and `sign(0) = +1`.
pub fn lmo_l1ball(c: &LinearFunctional, tau: f64) -> Result<DecisionPoint> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Parameter(format!("l1 ball radius must be positive, got {tau}")));
    }
    let n = c.len();
    let i = first_argmax(c.iter().map(|x| x.abs()))
        .ok_or_else(|| Error::Dimension("l1 ball LMO needs n >= 1".into()))?;
    let mut v = DVector::zeros(n);
    v[i] = if c[i] < 0.0 { -tau } else { tau };
    Ok(DecisionPoint::from_trusted(v))
}

/// Uniform sample from the probability simplex of dimension `n`.
fn dirichlet_ones(n: usize, rng: &mut dyn RngCore) -> DVector<f64> {
    let mut v = DVector::from_fn(n, |_, _| {
        let e: f64 = rng.sample(Exp1);
        e
    });
    let s = v.sum();
    if s > 0.0 {
        v /= s;
    } else {
        v[0] = 1.0;
    }
    v
}

/// The unit simplex `{x >= 0, sum x = 1}` with the l1 norm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simplex {
    n: usize,
}

impl Simplex {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("simplex dimension must be >= 1".into()));
        }
        Ok(Self { n })
    }

    pub fn barycenter(&self) -> DecisionPoint {
        DecisionPoint::from_trusted(DVector::from_element(self.n, 1.0 / self.n as f64))
    }
}

impl FeasibleRegion for Simplex {
    fn dim(&self) -> usize {
        self.n
    }

    fn name(&self) -> &'static str {
        "simplex"
    }

    fn norm(&self) -> Norm {
        Norm::L1
    }

    fn diameter_in(&self, norm: Norm) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        match norm {
            Norm::L1 => 2.0,
            Norm::L2 => std::f64::consts::SQRT_2,
        }
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.n
            && x.iter().all(|v| v.is_finite() && *v >= -tol)
            && (x.sum() - 1.0).abs() <= tol
    }

    fn lmo(&self, c: &LinearFunctional) -> Result<DecisionPoint> {
        check_dim(self.n, c.len(), "simplex LMO")?;
        lmo_simplex(c)
    }

    fn vertex_count(&self) -> Option<usize> {
        Some(self.n)
    }

    fn vertex(&self, index: usize) -> Option<DecisionPoint> {
        (index < self.n).then(|| {
            let mut v = DVector::zeros(self.n);
            v[index] = 1.0;
            DecisionPoint::from_trusted(v)
        })
    }

    fn vertex_value(&self, c: &LinearFunctional, index: usize) -> Option<f64> {
        (index < self.n).then(|| c[index])
    }

    fn sample(&self, rng: &mut dyn RngCore) -> DecisionPoint {
        if rng.random_bool(0.5) {
            let i = rng.random_range(0..self.n);
            return self.vertex(i).expect("index in range");
        }
        DecisionPoint::from_trusted(dirichlet_ones(self.n, rng))
    }
}

/// The l1 ball `{x : ||x||_1 <= tau}` with the l1 norm.
///
/// Vertices are ordered `+tau e_0, -tau e_0, +tau e_1, ...` so that the
/// first vertex attaining a maximum agrees with [`lmo_l1ball`].
#[derive(Debug, Clone, PartialEq)]
pub struct L1Ball {
    n: usize,
    tau: f64,
}

impl L1Ball {
    pub fn new(n: usize, tau: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("l1 ball dimension must be >= 1".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Parameter(format!("l1 ball radius must be positive, got {tau}")));
        }
        Ok(Self { n, tau })
    }

    pub fn radius(&self) -> f64 {
        self.tau
    }
}

impl FeasibleRegion for L1Ball {
    fn dim(&self) -> usize {
        self.n
    }

    fn name(&self) -> &'static str {
        "l1_ball"
    }

    fn norm(&self) -> Norm {
        Norm::L1
    }

    fn diameter_in(&self, _norm: Norm) -> f64 {
        // +tau e_i and -tau e_i are at distance 2 tau in both norms
        2.0 * self.tau
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.n
            && x.iter().all(|v| v.is_finite())
            && x.iter().map(|v| v.abs()).sum::<f64>() <= self.tau + tol
    }

    fn lmo(&self, c: &LinearFunctional) -> Result<DecisionPoint> {
        check_dim(self.n, c.len(), "l1 ball LMO")?;
        lmo_l1ball(c, self.tau)
    }

    fn vertex_count(&self) -> Option<usize> {
        Some(2 * self.n)
    }

    fn vertex(&self, index: usize) -> Option<DecisionPoint> {
        (index < 2 * self.n).then(|| {
            let mut v = DVector::zeros(self.n);
            v[index / 2] = if index.is_multiple_of(2) { self.tau } else { -self.tau };
            DecisionPoint::from_trusted(v)
        })
    }

    fn vertex_value(&self, c: &LinearFunctional, index: usize) -> Option<f64> {
        (index < 2 * self.n).then(|| {
            let v = self.tau * c[index / 2];
            if index.is_multiple_of(2) {
                v
            } else {
                -v
            }
        })
    }

    fn sample(&self, rng: &mut dyn RngCore) -> DecisionPoint {
        if rng.random_bool(0.5) {
            let i = rng.random_range(0..2 * self.n);
            return self.vertex(i).expect("index in range");
        }
        // uniform weights over the n coordinates plus one slack coordinate
        let w = dirichlet_ones(self.n + 1, rng);
        let v = DVector::from_fn(self.n, |i, _| {
            let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            s * self.tau * w[i]
        });
        DecisionPoint::from_trusted(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn lf(v: &[f64]) -> LinearFunctional {
        LinearFunctional::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn simplex_lmo_examples() {
        assert_eq!(lmo_simplex(&lf(&[1.0, 3.0, 2.0])).unwrap().as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(lmo_simplex(&lf(&[5.0, 5.0, 5.0])).unwrap().as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(lmo_simplex(&lf(&[-1.0, -2.0])).unwrap().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn simplex_lmo_rejects_empty() {
        assert!(matches!(lmo_simplex(&lf(&[])), Err(Error::Dimension(_))));
        assert!(Simplex::new(0).is_err());
        let s = Simplex::new(3).unwrap();
        assert!(matches!(s.lmo(&lf(&[1.0])), Err(Error::Dimension(_))));
    }

    #[test]
    fn l1_lmo_examples() {
        assert_eq!(lmo_l1ball(&lf(&[1.0, -3.0, 2.0]), 1.0).unwrap().as_slice(), &[0.0, -1.0, 0.0]);
        assert_eq!(lmo_l1ball(&lf(&[0.0, 0.0]), 2.0).unwrap().as_slice(), &[2.0, 0.0]);
        assert_eq!(lmo_l1ball(&lf(&[4.0, 4.0]), 0.5).unwrap().as_slice(), &[0.5, 0.0]);
    }

    #[test]
    fn l1_lmo_rejects_bad_radius() {
        assert!(matches!(lmo_l1ball(&lf(&[1.0]), 0.0), Err(Error::Parameter(_))));
        assert!(matches!(lmo_l1ball(&lf(&[1.0]), -1.0), Err(Error::Parameter(_))));
        assert!(L1Ball::new(2, f64::NAN).is_err());
    }

    fn brute_force_diameter(region: &dyn FeasibleRegion, norm: Norm) -> f64 {
        let m = region.vertex_count().unwrap();
        let mut best = 0.0_f64;
        for i in 0..m {
            for j in 0..m {
                let d = region.vertex(i).unwrap().coords() - region.vertex(j).unwrap().coords();
                best = best.max(norm.of(&d));
            }
        }
        best
    }

    #[test]
    fn diameters_match_vertex_enumeration() {
        for n in 1..=6 {
            let s = Simplex::new(n).unwrap();
            let b = L1Ball::new(n, 1.5).unwrap();
            for norm in [Norm::L1, Norm::L2] {
                assert!((s.diameter_in(norm) - brute_force_diameter(&s, norm)).abs() < 1e-15);
                assert!((b.diameter_in(norm) - brute_force_diameter(&b, norm)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn lmo_matches_first_maximizing_vertex() {
        let mut r = rng::seeded(11);
        for n in 1..=12 {
            let regions: Vec<Box<dyn FeasibleRegion>> =
                vec![Box::new(Simplex::new(n).unwrap()), Box::new(L1Ball::new(n, 0.7).unwrap())];
            for region in &regions {
                for trial in 0..50 {
                    // small integer coefficients make ties common
                    let c = lf(&(0..n)
                        .map(|_| if trial % 2 == 0 { r.random_range(-2..=2) as f64 } else { r.random::<f64>() - 0.5 })
                        .collect::<Vec<_>>());
                    let out = region.lmo(&c).unwrap();
                    assert!(region.contains(&out, 1e-9));
                    let m = region.vertex_count().unwrap();
                    let values: Vec<f64> = (0..m).map(|i| region.vertex_value(&c, i).unwrap()).collect();
                    let best = first_argmax(values.iter().copied()).unwrap();
                    assert_eq!(out, region.vertex(best).unwrap());
                    assert_eq!(c.apply(&out), values[best]);
                }
            }
        }
    }

    #[test]
    fn samples_are_feasible() {
        let mut r = rng::seeded(3);
        let s = Simplex::new(5).unwrap();
        let b = L1Ball::new(5, 2.0).unwrap();
        for _ in 0..200 {
            assert!(s.contains(&s.sample(&mut r), 1e-12));
            assert!(b.contains(&b.sample(&mut r), 1e-12));
        }
    }
}
