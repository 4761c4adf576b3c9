//! Built-in test instances with analytically known quantities.
//!
//! Every random instance is generated from a [`ProblemSpec`] and a seed into
//! plain numeric [`InstanceData`], and problems are always built from that
//! data. Dumping the data to JSON and loading it back therefore reproduces
//! a problem bit for bit.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guarantees::curvature_exact_quadratic;
use crate::oracles::{
    DecisionPoint, FeasibleRegion, L1Ball, LinearFunctional, MinmaxStructure, Norm, Objective,
    Simplex, MEMBERSHIP_TOL,
};
use crate::rng;

/// Eigenvalues below `-PSD_TOL` mean the quadratic is not concave.
pub const PSD_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;

fn finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Smallest and largest eigenvalue of a symmetric matrix.
fn eigen_range(q: &DMatrix<f64>) -> (f64, f64) {
    if q.nrows() == 0 {
        return (0.0, 0.0);
    }
    let ev = SymmetricEigen::new(q.clone()).eigenvalues;
    (ev.min(), ev.max())
}

/// Checks that `q` is square, symmetric and positive semidefinite; returns
/// its largest eigenvalue.
pub fn check_psd(q: &DMatrix<f64>) -> Result<f64> {
    if q.nrows() != q.ncols() {
        return Err(Error::Shape(format!("Q must be square, got {}x{}", q.nrows(), q.ncols())));
    }
    finite(q.iter().copied(), "Q")?;
    let scale = q.amax().max(1.0);
    if (q - q.transpose()).amax() > SYMMETRY_TOL * scale {
        return Err(Error::Shape("Q must be symmetric".into()));
    }
    let (lo, hi) = eigen_range(q);
    if lo < -PSD_TOL * scale {
        return Err(Error::Unsupported(format!(
            "Q has eigenvalue {lo:e} < 0, so the objective is not concave"
        )));
    }
    Ok(hi.max(0.0))
}

/// `h(λ) = offset + c^T λ - ½ λ^T Q λ` with `Q` positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    q: DMatrix<f64>,
    c: DVector<f64>,
    offset: f64,
    lambda_max: f64,
}

impl Quadratic {
    pub fn new(q: DMatrix<f64>, c: DVector<f64>, offset: f64) -> Result<Self> {
        let lambda_max = check_psd(&q)?;
        if c.len() != q.nrows() {
            return Err(Error::Dimension(format!(
                "linear term has length {} but Q is {}x{}",
                c.len(),
                q.nrows(),
                q.ncols()
            )));
        }
        finite(c.iter().copied().chain([offset]), "quadratic coefficients")?;
        Ok(Self { q, c, offset, lambda_max })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.offset + self.c.dot(x) - 0.5 * x.dot(&(&self.q * x))
    }

    fn gradient(&self, x: &DVector<f64>) -> LinearFunctional {
        LinearFunctional::new(&self.c - &self.q * x).expect("finite gradient of a finite quadratic")
    }

    fn lipschitz(&self, norm: Norm) -> Option<f64> {
        // l1 primal norm pairs with the l-inf dual norm: the operator norm
        // of Q from l1 to l-inf is its largest absolute entry
        Some(match norm {
            Norm::L1 => self.q.amax(),
            Norm::L2 => self.lambda_max,
        })
    }

    fn directional_curvature(&self, d: &DVector<f64>) -> Option<f64> {
        Some(d.dot(&(&self.q * d)))
    }
}

/// `φ(x, λ) = ½||x||² + λ^T (b - A x)` over `x ∈ R^m` and `λ ∈ Δ_n`, with
/// `A` of shape `n x m`. The induced objective is
/// `h(λ) = b^T λ - ½||A^T λ||²` and the optimal response is `x = A^T λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinmaxQuadratic {
    a: DMatrix<f64>,
    b: DVector<f64>,
    inner: Quadratic,
}

impl MinmaxQuadratic {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "A has {} rows but b has length {}",
                a.nrows(),
                b.len()
            )));
        }
        finite(a.iter().copied(), "A")?;
        let q = &a * a.transpose();
        // symmetrize away rounding so the PSD check sees an exact transpose
        let q = (&q + q.transpose()) * 0.5;
        let inner = Quadratic::new(q, b.clone(), 0.0)?;
        Ok(Self { a, b, inner })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn as_quadratic(&self) -> &Quadratic {
        &self.inner
    }
}

impl Objective for MinmaxQuadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let r = self.a.tr_mul(x);
        self.b.dot(x) - 0.5 * r.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> LinearFunctional {
        let r = self.a.tr_mul(x);
        LinearFunctional::new(&self.b - &self.a * r).expect("finite gradient")
    }

    fn lipschitz(&self, norm: Norm) -> Option<f64> {
        self.inner.lipschitz(norm)
    }

    fn directional_curvature(&self, d: &DVector<f64>) -> Option<f64> {
        Some(self.a.tr_mul(d).norm_squared())
    }

    fn minmax(&self) -> Option<&dyn MinmaxStructure> {
        Some(self)
    }
}

impl MinmaxStructure for MinmaxQuadratic {
    fn optimal_response(&self, lambda: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(lambda)
    }

    fn coupling(&self, x: &DVector<f64>, lambda: &DVector<f64>) -> f64 {
        0.5 * x.norm_squared() + lambda.dot(&(&self.b - &self.a * x))
    }

    fn primal_value(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.a.ncols() {
            return Err(Error::Dimension(format!(
                "primal point has length {}, expected {}",
                x.len(),
                self.a.ncols()
            )));
        }
        // max over the simplex of a linear function is its largest entry
        let slack = &self.b - &self.a * x;
        Ok(0.5 * x.norm_squared() + slack.max())
    }
}

/// `h(λ) = -½||y - Xλ||²` over an l1 ball.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    x: DMatrix<f64>,
    y: DVector<f64>,
    gram: Quadratic,
}

impl LeastSquares {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "design has {} rows but response has length {}",
                x.nrows(),
                y.len()
            )));
        }
        finite(x.iter().chain(y.iter()).copied(), "regression data")?;
        let g = x.tr_mul(&x);
        let g = (&g + g.transpose()) * 0.5;
        let gram = Quadratic::new(g, x.tr_mul(&y), -0.5 * y.norm_squared())?;
        Ok(Self { x, y, gram })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.y
    }
}

impl Objective for LeastSquares {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn value(&self, l: &DVector<f64>) -> f64 {
        -0.5 * (&self.y - &self.x * l).norm_squared()
    }

    fn gradient(&self, l: &DVector<f64>) -> LinearFunctional {
        LinearFunctional::new(self.x.tr_mul(&(&self.y - &self.x * l))).expect("finite gradient")
    }

    fn lipschitz(&self, norm: Norm) -> Option<f64> {
        self.gram.lipschitz(norm)
    }

    fn directional_curvature(&self, d: &DVector<f64>) -> Option<f64> {
        Some((&self.x * d).norm_squared())
    }
}

/// `h(λ) = Σ w_i ln(λ_i + s)` with `w >= 0` and shift `s > 0`. Concave but
/// not quadratic, so line searches fall back to golden-section search.
#[derive(Debug, Clone, PartialEq)]
pub struct LogUtility {
    weights: DVector<f64>,
    shift: f64,
}

impl LogUtility {
    pub fn new(weights: DVector<f64>, shift: f64) -> Result<Self> {
        if !(shift > 0.0 && shift.is_finite()) {
            return Err(Error::Parameter(format!("shift must be positive, got {shift}")));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Parameter("weights must be finite and nonnegative".into()));
        }
        Ok(Self { weights, shift })
    }
}

impl Objective for LogUtility {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.weights.iter().zip(x.iter()).map(|(w, v)| w * (v + self.shift).ln()).sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> LinearFunctional {
        let g = DVector::from_fn(self.weights.len(), |i, _| self.weights[i] / (x[i] + self.shift));
        LinearFunctional::new(g).expect("finite gradient on the nonnegative orthant")
    }

    fn lipschitz(&self, norm: Norm) -> Option<f64> {
        // valid on the nonnegative orthant, which contains the simplex
        let w = self.weights.max();
        Some(match norm {
            Norm::L1 | Norm::L2 => w / (self.shift * self.shift),
        })
    }
}

/// Eigenvalue specification for random quadratics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Spectrum {
    /// `Q = σ I`
    Identity {
        #[serde(default = "one")]
        sigma: f64,
    },
    /// `Q = diag(values)`
    Diagonal { values: Vec<f64> },
    /// `Q = U diag(values) U^T` with a random orthogonal `U`.
    Rotated { values: Vec<f64> },
    /// Eigenvalues uniform in `[lo, hi]` under a random rotation.
    Random { lo: f64, hi: f64 },
}

fn one() -> f64 {
    1.0
}

/// Linear term of a random quadratic.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinearTerm {
    #[default]
    Zero,
    /// Gaussian entries with standard deviation `scale`.
    Random { scale: f64 },
    Given { values: Vec<f64> },
}

/// Recipe for a problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    QuadraticSimplex {
        n: usize,
        spectrum: Spectrum,
        #[serde(default)]
        linear: LinearTerm,
        #[serde(default)]
        seed: u64,
    },
    Minmax {
        m: usize,
        n: usize,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        seed: u64,
    },
    L1Regression {
        rows: usize,
        cols: usize,
        tau: f64,
        #[serde(default)]
        noise: f64,
        #[serde(default = "default_sparsity")]
        sparsity: usize,
        #[serde(default)]
        seed: u64,
    },
    LogUtility {
        n: usize,
        #[serde(default = "one")]
        shift: f64,
        #[serde(default)]
        seed: u64,
    },
    /// A previously dumped [`Instance`] file.
    File { path: String },
}

fn default_sparsity() -> usize {
    3
}

/// Raw numeric data of an instance. Matrices are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceData {
    QuadraticSimplex { n: usize, q: Vec<f64>, c: Vec<f64> },
    Minmax { m: usize, n: usize, a: Vec<f64>, b: Vec<f64> },
    L1Regression { rows: usize, cols: usize, tau: f64, x: Vec<f64>, y: Vec<f64>, beta: Vec<f64> },
    LogUtility { weights: Vec<f64>, shift: f64 },
}

/// Serialized instance: the generating recipe plus the resulting data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub spec: Option<ProblemSpec>,
    pub data: InstanceData,
}

impl Instance {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn from_row_major(rows: usize, cols: usize, data: &[f64], what: &str) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "{what} has {} entries, expected {rows}x{cols}",
            data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut rng::Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix with the sign convention fixed by `diag(R) > 0`.
fn random_orthogonal(n: usize, rng: &mut rng::Rng) -> DMatrix<f64> {
    let qr = gaussian_matrix(n, n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn check_spectrum(values: &[f64]) -> Result<()> {
    finite(values.iter().copied(), "spectrum")?;
    if let Some(v) = values.iter().find(|v| **v < 0.0) {
        return Err(Error::Parameter(format!(
            "spectrum entry {v} is negative, so the objective would not be concave"
        )));
    }
    Ok(())
}

fn quadratic_from_spectrum(n: usize, spectrum: &Spectrum, rng: &mut rng::Rng) -> Result<DMatrix<f64>> {
    let rotate = |values: &[f64], rng: &mut rng::Rng| {
        let u = random_orthogonal(n, rng);
        let q = &u * DMatrix::from_diagonal(&DVector::from_column_slice(values)) * u.transpose();
        (&q + q.transpose()) * 0.5
    };
    let sized = |values: &Vec<f64>| {
        if values.len() == n {
            Ok(())
        } else {
            Err(Error::Dimension(format!("spectrum has {} values for n = {n}", values.len())))
        }
    };
    Ok(match spectrum {
        Spectrum::Identity { sigma } => {
            check_spectrum(&[*sigma])?;
            DMatrix::from_diagonal_element(n, n, *sigma)
        }
        Spectrum::Diagonal { values } => {
            sized(values)?;
            check_spectrum(values)?;
            DMatrix::from_diagonal(&DVector::from_column_slice(values))
        }
        Spectrum::Rotated { values } => {
            sized(values)?;
            check_spectrum(values)?;
            rotate(values, rng)
        }
        Spectrum::Random { lo, hi } => {
            check_spectrum(&[*lo, *hi])?;
            if lo > hi {
                return Err(Error::Parameter(format!("empty spectrum range [{lo}, {hi}]")));
            }
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(*lo..=*hi)).collect();
            rotate(&values, rng)
        }
    })
}

impl ProblemSpec {
    /// Generates the instance data for this recipe.
    pub fn generate(&self) -> Result<Instance> {
        let data = match self {
            ProblemSpec::QuadraticSimplex { n, spectrum, linear, seed } => {
                if *n < 2 {
                    return Err(Error::Dimension(format!("quadratic simplex needs n >= 2, got {n}")));
                }
                let mut r = rng::seeded(*seed);
                let q = quadratic_from_spectrum(*n, spectrum, &mut r)?;
                let c = match linear {
                    LinearTerm::Zero => vec![0.0; *n],
                    LinearTerm::Random { scale } => {
                        (0..*n).map(|_| scale * { let z: f64 = StandardNormal.sample(&mut r); z }).collect()
                    }
                    LinearTerm::Given { values } => values.clone(),
                };
                InstanceData::QuadraticSimplex { n: *n, q: row_major(&q), c }
            }
            ProblemSpec::Minmax { m, n, scale, seed } => {
                if *m == 0 || *n == 0 {
                    return Err(Error::Dimension("minmax needs m, n >= 1".into()));
                }
                let mut r = rng::seeded(*seed);
                let a = gaussian_matrix(*n, *m, &mut r) * (*scale / (*m as f64).sqrt());
                let b: Vec<f64> = (0..*n).map(|_| StandardNormal.sample(&mut r)).collect();
                InstanceData::Minmax { m: *m, n: *n, a: row_major(&a), b }
            }
            ProblemSpec::L1Regression { rows, cols, tau, noise, sparsity, seed } => {
                if !(*tau > 0.0 && tau.is_finite()) {
                    return Err(Error::Parameter(format!("l1 radius must be positive, got {tau}")));
                }
                if !(*noise >= 0.0 && noise.is_finite()) {
                    return Err(Error::Parameter(format!("noise level must be >= 0, got {noise}")));
                }
                if *rows == 0 || *cols == 0 {
                    return Err(Error::Dimension("regression needs rows, cols >= 1".into()));
                }
                let mut r = rng::seeded(*seed);
                let x = gaussian_matrix(*rows, *cols, &mut r) / (*rows as f64).sqrt();
                // sparse truth inside half the ball
                let k = (*sparsity).clamp(1, *cols);
                let mut beta = DVector::zeros(*cols);
                let mut picked = 0;
                while picked < k {
                    let j = r.random_range(0..*cols);
                    if beta[j] == 0.0 {
                        beta[j] = if r.random_bool(0.5) { 1.0 } else { -1.0 } * r.random_range(0.5..1.0);
                        picked += 1;
                    }
                }
                let l1 = beta.lp_norm(1);
                beta *= 0.5 * tau / l1;
                let mut y = &x * &beta;
                if *noise > 0.0 {
                    for v in y.iter_mut() {
                        *v += noise * { let z: f64 = StandardNormal.sample(&mut r); z };
                    }
                }
                InstanceData::L1Regression {
                    rows: *rows,
                    cols: *cols,
                    tau: *tau,
                    x: row_major(&x),
                    y: y.as_slice().to_vec(),
                    beta: beta.as_slice().to_vec(),
                }
            }
            ProblemSpec::LogUtility { n, shift, seed } => {
                if *n == 0 {
                    return Err(Error::Dimension("log utility needs n >= 1".into()));
                }
                let mut r = rng::seeded(*seed);
                let weights = (0..*n).map(|_| r.random_range(0.1..1.0)).collect();
                InstanceData::LogUtility { weights, shift: *shift }
            }
            ProblemSpec::File { path } => return Instance::load(path),
        };
        Ok(Instance { spec: Some(self.clone()), data })
    }

    pub fn label(&self) -> String {
        match self {
            ProblemSpec::QuadraticSimplex { n, .. } => format!("quadratic_simplex(n={n})"),
            ProblemSpec::Minmax { m, n, .. } => format!("minmax(m={m},n={n})"),
            ProblemSpec::L1Regression { rows, cols, tau, .. } => {
                format!("l1_regression({rows}x{cols},tau={tau})")
            }
            ProblemSpec::LogUtility { n, .. } => format!("log_utility(n={n})"),
            ProblemSpec::File { path } => format!("file({path})"),
        }
    }
}

/// Id, objective, region and quadratic form of a freshly built problem.
type Parts = (String, Box<dyn Objective>, Box<dyn FeasibleRegion>, Option<DMatrix<f64>>);

/// Where a run starts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StartSpec {
    #[default]
    Barycenter,
    Vertex { index: usize },
    Point { coords: Vec<f64> },
}

/// An objective, its region and whatever is known about it in closed form.
#[derive(Debug)]
pub struct Problem {
    pub id: String,
    pub objective: Box<dyn Objective>,
    pub region: Box<dyn FeasibleRegion>,
    /// Curvature constant computed from vertex pairs, for quadratics.
    pub exact_curvature: Option<f64>,
    /// Optimal value `h*`, when known.
    pub optimum: Option<f64>,
    pub instance: Instance,
}

impl Problem {
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        let instance = spec.generate()?;
        let mut p = Self::from_instance(instance)?;
        p.id = spec.label();
        Ok(p)
    }

    pub fn from_instance(instance: Instance) -> Result<Self> {
        let (id, objective, region, q): Parts =
            match &instance.data {
                InstanceData::QuadraticSimplex { n, q, c } => {
                    let qm = from_row_major(*n, *n, q, "Q")?;
                    let obj = Quadratic::new(qm.clone(), DVector::from_column_slice(c), 0.0)?;
                    (format!("quadratic_simplex(n={n})"), Box::new(obj), Box::new(Simplex::new(*n)?), Some(qm))
                }
                InstanceData::Minmax { m, n, a, b } => {
                    let obj = MinmaxQuadratic::new(from_row_major(*n, *m, a, "A")?, DVector::from_column_slice(b))?;
                    let qm = obj.as_quadratic().q().clone();
                    (format!("minmax(m={m},n={n})"), Box::new(obj), Box::new(Simplex::new(*n)?), Some(qm))
                }
                InstanceData::L1Regression { rows, cols, tau, x, y, .. } => {
                    let obj = LeastSquares::new(from_row_major(*rows, *cols, x, "X")?, DVector::from_column_slice(y))?;
                    let qm = obj.gram.q().clone();
                    (
                        format!("l1_regression({rows}x{cols},tau={tau})"),
                        Box::new(obj),
                        Box::new(L1Ball::new(*cols, *tau)?),
                        Some(qm),
                    )
                }
                InstanceData::LogUtility { weights, shift } => {
                    let obj = LogUtility::new(DVector::from_column_slice(weights), *shift)?;
                    (format!("log_utility(n={})", weights.len()), Box::new(obj), Box::new(Simplex::new(weights.len())?), None)
                }
            };
        let exact_curvature = match &q {
            Some(q) => Some(curvature_exact_quadratic(q, region.as_ref())?),
            None => None,
        };
        let optimum = known_optimum(&instance.data, objective.as_ref());
        Ok(Self { id, objective, region, exact_curvature, optimum, instance })
    }

    /// Builds a problem from an objective and region directly; nothing is
    /// assumed known about it.
    pub fn custom(id: impl Into<String>, objective: Box<dyn Objective>, region: Box<dyn FeasibleRegion>) -> Result<Self> {
        if objective.dim() != region.dim() {
            return Err(Error::Dimension(format!(
                "objective has dimension {} but region has dimension {}",
                objective.dim(),
                region.dim()
            )));
        }
        Ok(Self {
            id: id.into(),
            objective,
            region,
            exact_curvature: None,
            optimum: None,
            instance: Instance { spec: None, data: InstanceData::LogUtility { weights: vec![], shift: 1.0 } },
        })
    }

    /// Resolves a start specification to a feasible point.
    pub fn start(&self, start: &StartSpec) -> Result<DecisionPoint> {
        match start {
            StartSpec::Vertex { index } => {
                let len = self.region.vertex_count().unwrap_or(0);
                self.region.vertex(*index).ok_or(Error::Range { index: *index, len })
            }
            StartSpec::Barycenter => {
                let count = self.region.vertex_count().ok_or_else(|| {
                    Error::Unsupported(format!("{} has no vertex list for a barycenter", self.region.name()))
                })?;
                let mut sum = DVector::zeros(self.region.dim());
                for i in 0..count {
                    sum += self.region.vertex(i).expect("index below vertex count").coords();
                }
                DecisionPoint::new(sum / count as f64)
            }
            StartSpec::Point { coords } => {
                let p = DecisionPoint::from_vec(coords.clone())?;
                if !self.region.contains(&p, MEMBERSHIP_TOL) {
                    return Err(Error::Parameter(format!("start point is not in the {}", self.region.name())));
                }
                Ok(p)
            }
        }
    }
}

fn known_optimum(data: &InstanceData, objective: &dyn Objective) -> Option<f64> {
    match data {
        InstanceData::QuadraticSimplex { n, q, c } => {
            // σI with no linear term: the barycenter is optimal
            let sigma = q[0];
            let scalar = (0..*n).all(|i| (0..*n).all(|j| q[i * n + j] == if i == j { sigma } else { 0.0 }));
            (scalar && c.iter().all(|v| *v == 0.0)).then(|| -sigma / (2.0 * *n as f64))
        }
        InstanceData::L1Regression { tau, beta, .. } => {
            // h <= 0 everywhere, so an exact fit inside the ball is optimal
            let b = DVector::from_column_slice(beta);
            (b.lp_norm(1) <= *tau && objective.value(&b) == 0.0).then_some(0.0)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{concavity_violation, gradient_fd_error};

    fn qs(n: usize, spectrum: Spectrum, seed: u64) -> Problem {
        Problem::from_spec(&ProblemSpec::QuadraticSimplex { n, spectrum, linear: LinearTerm::Zero, seed }).unwrap()
    }

    #[test]
    fn quadratic_simplex_examples() {
        let p = qs(3, Spectrum::Identity { sigma: 1.0 }, 0);
        assert_eq!(p.exact_curvature, Some(2.0));
        assert!((p.optimum.unwrap() + 1.0 / 6.0).abs() < 1e-15);
        let p = qs(2, Spectrum::Diagonal { values: vec![1.0, 4.0] }, 0);
        assert_eq!(p.exact_curvature, Some(5.0));
        assert_eq!(p.optimum, None);
        let p = qs(50, Spectrum::Identity { sigma: 1.0 }, 0);
        assert_eq!(p.optimum, Some(-0.01));
        let bary = p.start(&StartSpec::Barycenter).unwrap();
        assert!((p.objective.value(&bary) + 0.01).abs() < 1e-15);
    }

    #[test]
    fn negative_spectrum_is_rejected() {
        let spec = ProblemSpec::QuadraticSimplex {
            n: 2,
            spectrum: Spectrum::Diagonal { values: vec![1.0, -1.0] },
            linear: LinearTerm::Zero,
            seed: 0,
        };
        assert!(Problem::from_spec(&spec).is_err());
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(Quadratic::new(q, DVector::zeros(2), 0.0), Err(Error::Unsupported(_))));
        let tiny = ProblemSpec::QuadraticSimplex { n: 1, spectrum: Spectrum::Identity { sigma: 1.0 }, linear: LinearTerm::Zero, seed: 0 };
        assert!(matches!(tiny.generate(), Err(Error::Dimension(_))));
    }

    #[test]
    fn rotated_spectrum_has_prescribed_eigenvalues() {
        let p = qs(5, Spectrum::Rotated { values: vec![0.5, 1.0, 2.0, 3.0, 4.0] }, 7);
        let InstanceData::QuadraticSimplex { q, .. } = &p.instance.data else { panic!() };
        let mut ev: Vec<f64> = SymmetricEigen::new(DMatrix::from_row_slice(5, 5, q)).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([0.5, 1.0, 2.0, 3.0, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn minmax_examples() {
        let p = Problem::from_spec(&ProblemSpec::Minmax { m: 4, n: 6, scale: 1.0, seed: 3 }).unwrap();
        let mm = p.objective.minmax().unwrap();
        let mut r = rng::seeded(1);
        for _ in 0..100 {
            let l = p.region.sample(&mut r);
            let h = p.objective.value(&l);
            let g = p.objective.gradient(&l);
            let t = p.region.lmo(&g).unwrap();
            let bw = h + g.apply(&(t.coords() - l.coords()));
            let bm = mm.minmax_bound(&l).unwrap();
            assert!((bm - bw).abs() <= 1e-10 * (1.0 + bw.abs()));
            // φ(·, λ) is minimized at the optimal response; compare along random directions
            let x = mm.optimal_response(&l);
            assert!((mm.coupling(&x, &l) - h).abs() < 1e-12);
            for _ in 0..5 {
                let d = DVector::from_fn(4, |_, _| StandardNormal.sample(&mut r));
                let t: f64 = r.random_range(-1.0..1.0);
                assert!(mm.coupling(&(&x + t * &d), &l) >= h - 1e-12);
            }
        }
    }

    #[test]
    fn minmax_zero_coupling_is_linear() {
        let mm = MinmaxQuadratic::new(DMatrix::zeros(3, 2), DVector::from_vec(vec![0.1, 0.7, 0.3])).unwrap();
        let x = DVector::from_vec(vec![0.2, 0.5, 0.3]);
        assert!((mm.value(&x) - (0.02 + 0.35 + 0.09)).abs() < 1e-15);
        assert_eq!(mm.directional_curvature(&x), Some(0.0));
    }

    #[test]
    fn l1_regression_examples() {
        let spec = ProblemSpec::L1Regression { rows: 30, cols: 10, tau: 2.0, noise: 0.0, sparsity: 3, seed: 5 };
        let p = Problem::from_spec(&spec).unwrap();
        assert_eq!(p.optimum, Some(0.0));
        assert_eq!(p.region.diameter(), 4.0);
        let noisy = ProblemSpec::L1Regression { rows: 30, cols: 10, tau: 2.0, noise: 0.1, sparsity: 3, seed: 5 };
        assert_eq!(Problem::from_spec(&noisy).unwrap().optimum, None);
        let bad = ProblemSpec::L1Regression { rows: 3, cols: 2, tau: 0.0, noise: 0.0, sparsity: 1, seed: 0 };
        assert!(matches!(bad.generate(), Err(Error::Parameter(_))));
    }

    #[test]
    fn orthonormal_design_has_unit_lipschitz() {
        let mut r = rng::seeded(2);
        let x = random_orthogonal(6, &mut r).columns(0, 4).into_owned();
        let ls = LeastSquares::new(x, DVector::from_element(6, 1.0)).unwrap();
        assert!((ls.lipschitz(Norm::L2).unwrap() - 1.0).abs() < 1e-12);
        let c = curvature_exact_quadratic(ls.gram.q(), &L1Ball::new(4, 0.5).unwrap()).unwrap();
        assert!(c <= 1.0 + 1e-12);
    }

    #[test]
    fn tiny_ball_optimum_near_origin() {
        let spec = ProblemSpec::L1Regression { rows: 20, cols: 5, tau: 1e-9, noise: 0.1, sparsity: 2, seed: 1 };
        let p = Problem::from_spec(&spec).unwrap();
        let InstanceData::L1Regression { y, .. } = &p.instance.data else { panic!() };
        let origin = -0.5 * DVector::from_column_slice(y).norm_squared();
        let mut r = rng::seeded(0);
        for _ in 0..50 {
            let v = p.objective.value(&p.region.sample(&mut r));
            assert!((v - origin).abs() < 1e-7);
        }
    }

    #[test]
    fn generated_problems_pass_audits() {
        let specs = vec![
            ProblemSpec::QuadraticSimplex { n: 8, spectrum: Spectrum::Random { lo: 0.0, hi: 3.0 }, linear: LinearTerm::Random { scale: 1.0 }, seed: 1 },
            ProblemSpec::Minmax { m: 5, n: 7, scale: 1.0, seed: 2 },
            ProblemSpec::L1Regression { rows: 20, cols: 8, tau: 1.5, noise: 0.05, sparsity: 3, seed: 3 },
            ProblemSpec::LogUtility { n: 6, shift: 0.5, seed: 4 },
        ];
        for spec in specs {
            let p = Problem::from_spec(&spec).unwrap();
            let mut r = rng::seeded(9);
            assert!(concavity_violation(p.objective.as_ref(), p.region.as_ref(), 500, &mut r) < 1e-12);
            assert!(gradient_fd_error(p.objective.as_ref(), p.region.as_ref(), 50, &mut r) < 1e-6);
        }
    }

    #[test]
    fn instance_round_trip_is_exact() {
        let spec = ProblemSpec::QuadraticSimplex {
            n: 6,
            spectrum: Spectrum::Random { lo: 0.1, hi: 2.0 },
            linear: LinearTerm::Random { scale: 0.3 },
            seed: 42,
        };
        let inst = spec.generate().unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&text).unwrap();
        assert_eq!(inst, back);
        assert_eq!(spec.generate().unwrap(), inst);
    }

    #[test]
    fn start_points() {
        let p = qs(3, Spectrum::Identity { sigma: 1.0 }, 0);
        assert_eq!(p.start(&StartSpec::Vertex { index: 2 }).unwrap().as_slice(), &[0.0, 0.0, 1.0]);
        assert!(matches!(p.start(&StartSpec::Vertex { index: 3 }), Err(Error::Range { .. })));
        assert!(p.start(&StartSpec::Point { coords: vec![0.5, 0.6, 0.0] }).is_err());
        let b = p.start(&StartSpec::Barycenter).unwrap();
        assert!((b.sum() - 1.0).abs() < 1e-15);
    }
}
