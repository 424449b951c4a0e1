//! Orbit Fourier projection `Q_m` and the Reeb eigenrelation `T f = i m f`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{FourierBasis, Measure};
use crate::error::{Error, Result};
use crate::geometry::{Manifold, ManifoldKind, SurfacePoint};
use crate::integrate::{estimate_from_terms, Quadrature};
use crate::linalg::pairwise_sum;

/// Finite-difference step for the Reeb derivative.
pub const REEB_FD_STEP: f64 = 1e-4;

/// Trapezoid rule on the orbit circle with `M` equispaced nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitQuadrature {
    node_count: usize,
}

impl OrbitQuadrature {
    pub fn new(node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidSpec("orbit quadrature needs a node".into()));
        }
        Ok(Self { node_count })
    }

    /// `M = 2·max_level + 8`.
    pub fn for_max_level(max_level: u32) -> Self {
        Self {
            node_count: 2 * max_level as usize + 8,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Characters `e^{ipθ}` with `|p|` up to this degree integrate exactly.
    pub fn exactness_degree(&self) -> usize {
        self.node_count - 1
    }

    pub fn node(&self, s: usize) -> f64 {
        2.0 * std::f64::consts::PI * s as f64 / self.node_count as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.node_count).map(|s| self.node(s)).collect()
    }
}

/// `(Q_m u)(x) = (1/M) Σ_s u(e^{iθ_s}·x) e^{−imθ_s}`.
pub fn circle_average<F>(u: F, x: &SurfacePoint, m: i64, manifold: &Manifold, q: &OrbitQuadrature) -> Complex64
where
    F: Fn(&SurfacePoint) -> Complex64 + Sync,
{
    let terms: Vec<Complex64> = (0..q.node_count())
        .into_par_iter()
        .map(|s| {
            let theta = q.node(s);
            u(&manifold.act(theta, x)) * Complex64::from_polar(1.0, -(m as f64) * theta)
        })
        .collect();
    pairwise_sum(&terms) / q.node_count() as f64
}

/// All orbit components `Q_m u(x)` for `m ∈ levels` from one set of samples.
pub fn orbit_components<F>(
    u: F,
    x: &SurfacePoint,
    levels: &[i64],
    manifold: &Manifold,
    q: &OrbitQuadrature,
) -> Vec<Complex64>
where
    F: Fn(&SurfacePoint) -> Complex64 + Sync,
{
    let values: Vec<Complex64> = (0..q.node_count())
        .into_par_iter()
        .map(|s| u(&manifold.act(q.node(s), x)))
        .collect();
    levels
        .iter()
        .map(|&m| {
            let terms: Vec<Complex64> = values
                .iter()
                .enumerate()
                .map(|(s, v)| v * Complex64::from_polar(1.0, -(m as f64) * q.node(s)))
                .collect();
            pairwise_sum(&terms) / q.node_count() as f64
        })
        .collect()
}

/// Pointwise Parseval defect `|Σ_m |Q_m u(x)|² − mean_s |u(θ_s·x)|²|`.
///
/// Zero up to roundoff when `levels` covers every orbit degree of `u` and
/// the node count exceeds twice the largest degree.
pub fn parseval_defect<F>(
    u: F,
    x: &SurfacePoint,
    levels: &[i64],
    manifold: &Manifold,
    q: &OrbitQuadrature,
) -> f64
where
    F: Fn(&SurfacePoint) -> Complex64 + Sync,
{
    let comps = orbit_components(&u, x, levels, manifold, q);
    let energy: Vec<f64> = comps.iter().map(|c| c.norm_sqr()).collect();
    let samples: Vec<f64> = (0..q.node_count())
        .map(|s| u(&manifold.act(q.node(s), x)).norm_sqr())
        .collect();
    (pairwise_sum(&energy) - pairwise_sum(&samples) / q.node_count() as f64).abs()
}

/// `T f_j(x) = Σ_k ∂f_j/∂z_k · T_k(x)` for every basis element.
pub fn reeb_derivative(basis: &FourierBasis, x: &SurfacePoint, manifold: &Manifold) -> Vec<Complex64> {
    let jac = basis.eval_jacobian(x);
    let t = manifold.reeb_vector(x);
    (0..jac.nrows())
        .map(|j| (0..jac.ncols()).map(|k| jac[(j, k)] * t[k]).sum())
        .collect()
}

/// Central difference of `f` along the orbit: `(f(e^{ih}x) − f(e^{−ih}x)) / 2h`.
pub fn reeb_derivative_fd<F>(f: F, x: &SurfacePoint, manifold: &Manifold, step: f64) -> Complex64
where
    F: Fn(&SurfacePoint) -> Complex64,
{
    (f(&manifold.act(step, x)) - f(&manifold.act(-step, x))) / (2.0 * step)
}

/// `max_j |T f_j(x) − i m f_j(x)|` by the chain rule.
pub fn check_t_eigen(basis: &FourierBasis, x: &SurfacePoint, manifold: &Manifold) -> f64 {
    let tf = reeb_derivative(basis, x, manifold);
    let f = basis.eval(x);
    let im = Complex64::new(0.0, basis.level as f64);
    tf.iter()
        .zip(&f)
        .map(|(d, v)| (d - im * v).norm())
        .fold(0.0, f64::max)
}

/// `|T f(x) − i m f(x)|` with `T f` by central differences.
pub fn check_t_eigen_fd<F>(f: F, x: &SurfacePoint, m: i64, manifold: &Manifold, step: f64) -> f64
where
    F: Fn(&SurfacePoint) -> Complex64,
{
    let d = reeb_derivative_fd(&f, x, manifold, step);
    (d - Complex64::new(0.0, m as f64) * f(x)).norm()
}

/// Monte-Carlo inner products between two Fourier levels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub level: u32,
    pub other_level: u32,
    /// Round-sphere bases are orthogonal by torus symmetry; no sampling.
    pub exact: bool,
    pub samples: usize,
    pub seed: u64,
    pub max_abs: f64,
    /// Largest `|estimate| / stderr` over all pairs.
    pub max_z_score: f64,
    pub pass: bool,
}

/// Estimates `(f_i | g_j)` for all basis pairs of two levels on a fresh
/// sample set drawn with `seed`.
pub fn component_orthogonality(
    manifold: &Manifold,
    a: &FourierBasis,
    b: &FourierBasis,
    trials: usize,
    seed: u64,
) -> Result<OrthogonalityReport> {
    if a.level == b.level {
        return Err(Error::Precondition(format!(
            "orthogonality needs distinct levels, got {} twice",
            a.level
        )));
    }
    let round = manifold.kind() == ManifoldKind::Sphere
        && a.measure == Measure::RoundExact
        && b.measure == Measure::RoundExact;
    if round {
        return Ok(OrthogonalityReport {
            level: a.level,
            other_level: b.level,
            exact: true,
            samples: 0,
            seed,
            max_abs: 0.0,
            max_z_score: 0.0,
            pass: true,
        });
    }
    let q = Quadrature::compliant(manifold, trials, seed)?;
    let count = q.len() as f64;
    let values: Vec<(Vec<Complex64>, Vec<Complex64>)> = q
        .points()
        .par_iter()
        .map(|x| (a.eval(x), b.eval(x)))
        .collect();
    let mut max_abs = 0.0f64;
    let mut max_z = 0.0f64;
    for i in 0..a.dim() {
        for j in 0..b.dim() {
            let ys: Vec<Complex64> = values
                .iter()
                .zip(&q.weights)
                .map(|((fa, fb), w)| fa[i] * fb[j].conj() * (w * count))
                .collect();
            let e = estimate_from_terms(&ys);
            let v = e.value.norm();
            max_abs = max_abs.max(v);
            if e.stderr > 0.0 {
                max_z = max_z.max(v / e.stderr);
            } else if v > 0.0 {
                max_z = f64::INFINITY;
            }
        }
    }
    Ok(OrthogonalityReport {
        level: a.level,
        other_level: b.level,
        exact: false,
        samples: q.len(),
        seed,
        max_abs,
        max_z_score: max_z,
        pass: max_z <= 5.0,
    })
}
