use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{check_dim, DecisionPoint, FeasibleRegion, LinearFunctional, Norm};
use crate::error::{Error, Result};
use crate::rng;

const SYMMETRY_TOL: f64 = 1e-12;
const DEFAULT_TOL: f64 = 1e-10;
const DEFAULT_MAX_ITERS: usize = 200_000;
const START_SEED: u64 = 0x5e_ed0f_1ead;

fn check_symmetric(c: &DMatrix<f64>) -> Result<()> {
    if !c.is_square() {
        return Err(Error::Shape(format!("matrix is {}x{}, expected square", c.nrows(), c.ncols())));
    }
    let scale = c.norm().max(1.0);
    let n = c.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (c[(i, j)] - c[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::Shape(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Power iteration for the algebraically largest eigenpair of a symmetric
/// matrix.
///
/// The matrix is shifted by its Frobenius norm so that the dominant
/// eigenvalue of the shifted operator is the largest eigenvalue of `c`.
/// Stops once `||Cv - (v^T C v) v|| <= tol * ||C||_F`. Returns the unit
/// vector and its Rayleigh quotient.
pub fn power_iteration(c: &DMatrix<f64>, tol: f64, max_iters: usize) -> Result<(DVector<f64>, f64)> {
    check_symmetric(c)?;
    let n = c.nrows();
    if n == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let scale = c.norm();
    if scale == 0.0 {
        let mut v = DVector::zeros(n);
        v[0] = 1.0;
        return Ok((v, 0.0));
    }
    let mut r = rng::seeded(START_SEED);
    let mut v = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut r));
    v.normalize_mut();

    let mut best = f64::INFINITY;
    let mut best_pair = (v.clone(), 0.0);
    for _ in 0..max_iters {
        let cv = c * &v;
        let rho = v.dot(&cv);
        let residual = (&cv - rho * &v).norm() / scale;
        if residual < best {
            best = residual;
            best_pair = (v.clone(), rho);
        }
        if residual <= tol {
            return Ok(best_pair);
        }
        let mut next = cv + scale * &v;
        let len = next.norm();
        if len == 0.0 {
            break;
        }
        next /= len;
        v = next;
    }
    Err(Error::Convergence { iterations: max_iters, best_residual: best })
}

fn outer_flat(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(n * n, |idx, _| v[idx / n] * v[idx % n])
}

/// LMO over the spectrahedron `{X ⪰ 0, tr X = 1}` for the objective
/// `C • X`: the rank-one matrix `vv^T` of a leading eigenvector, flattened
/// row-major.
pub fn lmo_spectrahedron(c: &DMatrix<f64>, tol: f64) -> Result<DecisionPoint> {
    let (v, _) = power_iteration(c, tol, DEFAULT_MAX_ITERS)?;
    Ok(DecisionPoint::from_trusted(outer_flat(&v)))
}

/// The spectrahedron of `n x n` symmetric matrices, stored as row-major
/// vectors of length `n^2` and measured in the Frobenius norm.
///
/// The power-iteration residual certifies an eigenpair, not that it is the
/// leading one, so δ for this region is a trust parameter rather than a
/// certified accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrahedron {
    n: usize,
    tol: f64,
    max_iters: usize,
}

impl Spectrahedron {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("spectrahedron order must be >= 1".into()));
        }
        Ok(Self { n, tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS })
    }

    pub fn with_tolerance(mut self, tol: f64, max_iters: usize) -> Self {
        self.tol = tol;
        self.max_iters = max_iters;
        self
    }

    pub fn order(&self) -> usize {
        self.n
    }

    fn as_matrix(&self, flat: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, flat.as_slice())
    }
}

impl FeasibleRegion for Spectrahedron {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn name(&self) -> &'static str {
        "spectrahedron"
    }

    fn norm(&self) -> Norm {
        Norm::L2
    }

    fn diameter_in(&self, _norm: Norm) -> f64 {
        // reported in the Frobenius norm: ||uu^T - vv^T||_F for orthogonal u, v
        if self.n < 2 {
            0.0
        } else {
            std::f64::consts::SQRT_2
        }
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.n * self.n || !x.iter().all(|v| v.is_finite()) {
            return false;
        }
        let m = self.as_matrix(x);
        let asym = (&m - m.transpose()).amax();
        if asym > tol || (m.trace() - 1.0).abs() > tol {
            return false;
        }
        let sym = (&m + m.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min() >= -tol
    }

    fn lmo(&self, c: &LinearFunctional) -> Result<DecisionPoint> {
        check_dim(self.n * self.n, c.len(), "spectrahedron LMO")?;
        let (v, _) = power_iteration(&self.as_matrix(c), self.tol, self.max_iters)?;
        Ok(DecisionPoint::from_trusted(outer_flat(&v)))
    }

    /// Rotates the leading eigenvector toward the trailing one until the
    /// objective has dropped by (just under) `delta`.
    fn approx_lmo(&self, c: &LinearFunctional, delta: f64) -> Result<(DecisionPoint, f64)> {
        check_dim(self.n * self.n, c.len(), "spectrahedron LMO")?;
        let m = self.as_matrix(c);
        check_symmetric(&m)?;
        let eig = SymmetricEigen::new((&m + m.transpose()) * 0.5);
        let (mut top, mut bottom) = (0, 0);
        for i in 0..self.n {
            if eig.eigenvalues[i] > eig.eigenvalues[top] {
                top = i;
            }
            if eig.eigenvalues[i] < eig.eigenvalues[bottom] {
                bottom = i;
            }
        }
        let lead = eig.eigenvalues[top];
        let spread = lead - eig.eigenvalues[bottom];
        let v1 = eig.eigenvectors.column(top).into_owned();
        let vn = eig.eigenvectors.column(bottom).into_owned();
        let mut frac = if spread > 0.0 { (delta / spread).min(1.0) } else { 0.0 };
        loop {
            let w = (1.0 - frac).sqrt() * &v1 + frac.sqrt() * &vn;
            let w = w.normalize();
            let value = w.dot(&(&m * &w));
            let cert = (lead - value).max(0.0);
            if cert <= delta || frac == 0.0 {
                return Ok((DecisionPoint::from_trusted(outer_flat(&w)), cert));
            }
            frac = if frac < 1e-300 { 0.0 } else { frac * (1.0 - 1e-9) };
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> DecisionPoint {
        use rand::Rng;
        let terms = rng.random_range(1..=3usize);
        let mut acc = DVector::zeros(self.n * self.n);
        let mut total = 0.0;
        for _ in 0..terms {
            let mut v = DVector::from_fn(self.n, |_, _| StandardNormal.sample(&mut *rng));
            if v.norm() == 0.0 {
                v[0] = 1.0;
            }
            v.normalize_mut();
            let w: f64 = rng.random::<f64>() + 1e-3;
            acc += w * outer_flat(&v);
            total += w;
        }
        DecisionPoint::from_trusted(acc / total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Classical cyclic Jacobi eigenvalue sweeps; independent cross-check.
    fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
        let n = a.nrows();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[(i, i)]).collect()
    }

    fn objective(c: &DMatrix<f64>, x: &DecisionPoint) -> f64 {
        let flat = DVector::from_row_slice(c.transpose().as_slice());
        flat.dot(x)
    }

    #[test]
    fn diagonal_leading_eigenvector() {
        let c = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let x = lmo_spectrahedron(&c, 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10 && x[3].abs() < 1e-10);
        assert!((objective(&c, &x) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn identity_has_value_one() {
        let c = DMatrix::identity(2, 2);
        let x = lmo_spectrahedron(&c, 1e-12).unwrap();
        assert!((objective(&c, &x) - 1.0).abs() < 1e-12);
        assert!(Spectrahedron::new(2).unwrap().contains(&x, 1e-9));
    }

    #[test]
    fn two_by_two_closed_form() {
        // eigenpairs of [[2,1],[1,2]]: 3 with (1,1)/sqrt2, 1 with (1,-1)/sqrt2
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let x = lmo_spectrahedron(&c, 1e-12).unwrap();
        for v in x.iter() {
            assert!((v - 0.5).abs() < 1e-9);
        }
        assert!((objective(&c, &x) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(lmo_spectrahedron(&c, 1e-10), Err(Error::Shape(_))));
    }

    #[test]
    fn reports_non_convergence_with_residual() {
        // eigenvalues 1 and 1 - 1e-7: the residual stalls far above 1e-15
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0 - 1e-7, 0.0, 0.0, 0.0, -1.0]);
        match power_iteration(&c, 1e-15, 5) {
            Err(Error::Convergence { iterations, best_residual }) => {
                assert_eq!(iterations, 5);
                assert!(best_residual.is_finite() && best_residual > 0.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn matches_jacobi_on_random_matrices() {
        let mut r = rng::seeded(21);
        let tol = 1e-10;
        for n in 1..=8 {
            for _ in 0..10 {
                let a = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut r));
                let c: DMatrix<f64> = (&a + a.transpose()) * 0.5;
                let region = Spectrahedron::new(n).unwrap();
                let flat = LinearFunctional::new(DVector::from_row_slice(c.transpose().as_slice())).unwrap();
                let x = region.lmo(&flat).unwrap();
                assert!(region.contains(&x, 1e-9));
                let lmax = jacobi_eigenvalues(c.clone()).into_iter().fold(f64::NEG_INFINITY, f64::max);
                let value = objective(&c, &x);
                assert!(
                    (value - lmax).abs() <= tol * c.norm() * (1.0 + n as f64),
                    "n={n}: {value} vs {lmax}"
                );
            }
        }
    }

    #[test]
    fn approx_lmo_drops_by_at_most_delta() {
        let c = DMatrix::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0]);
        let flat = LinearFunctional::new(DVector::from_row_slice(c.as_slice())).unwrap();
        let region = Spectrahedron::new(3).unwrap();
        for delta in [0.0, 0.5, 2.0, 10.0] {
            let (x, cert) = region.approx_lmo(&flat, delta).unwrap();
            assert!(region.contains(&x, 1e-9));
            assert!((0.0..=delta).contains(&cert));
            assert!((objective(&c, &x) - (3.0 - cert)).abs() < 1e-12);
            assert!(cert >= delta.min(4.0) * (1.0 - 1e-6));
        }
    }
}
