//! Circle-invariant strongly pseudoconvex hypersurfaces `X = {ρ = 0} ⊂ ℂⁿ`
//! with the diagonal action `e^{iθ}·z = (e^{i m_1 θ} z_1, …, e^{i m_n θ} z_n)`.
//!
//! The rigid ("compliant") metric used throughout is the ambient Euclidean
//! metric on the holomorphic tangent space `H = ker ∂ρ`, with the Reeb
//! field `T` declared unit length and orthogonal to `H`. On the standard
//! sphere it is the round metric.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrate::random_unit_vector;
use crate::linalg::hermitian_eigenvalues;
use crate::poly::{Polynomial, Term, TermSpec};

/// Coordinates below this modulus count as zero when reading off the stratum.
pub const ZERO_TOLERANCE: f64 = 1e-9;
/// Coordinates with modulus in `(ZERO_TOLERANCE, NEAR_STRATUM)` are flagged.
pub const NEAR_STRATUM: f64 = 1e-6;
/// Default `|ρ(x)|` cutoff for on-manifold membership.
pub const SURFACE_TOLERANCE: f64 = 1e-8;

const QUOTIENT_GRID: usize = 720;
const QUOTIENT_THETA_TOL: f64 = 1e-10;
const RAY_T_MAX: f64 = 1e3;
const RAY_TOL: f64 = 1e-12;
const RAY_MAX_ITER: usize = 100;
const BRACKET_STEP: f64 = 1e-5;

/// Integer weights `(m_1, …, m_n)` of the circle action, normalized to gcd 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightVector(Vec<u32>);

impl WeightVector {
    /// Builds a normalized weight vector; also returns the divided-out gcd.
    pub fn new(raw: &[u32]) -> Result<(Self, u32)> {
        if raw.is_empty() {
            return Err(Error::InvalidSpec("empty weight vector".into()));
        }
        if raw.iter().any(|&w| w == 0) {
            return Err(Error::InvalidSpec(format!(
                "weights must be positive, got {raw:?}"
            )));
        }
        let g = raw.iter().fold(0u32, |acc, &w| acc.gcd(&w));
        Ok((Self(raw.iter().map(|w| w / g).collect()), g))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn lcm(&self) -> u32 {
        self.0.iter().fold(1u32, |acc, &w| acc.lcm(&w))
    }

    pub fn product(&self) -> u64 {
        self.0.iter().map(|&w| w as u64).product()
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|&w| w == 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Sphere,
    Hypersurface,
}

/// JSON manifold description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub n: usize,
    pub weights: Vec<u32>,
    pub rho: Vec<TermSpec>,
    pub kind: ManifoldKind,
}

impl ManifoldSpec {
    /// Unit sphere `|z|² = 1` with the given weights.
    pub fn sphere(weights: &[u32]) -> Self {
        let n = weights.len();
        Self {
            n,
            weights: weights.to_vec(),
            rho: sphere_rho(n).to_specs(),
            kind: ManifoldKind::Sphere,
        }
    }

    /// `|z₁|² + |z₂|² + |z₃|² + |z₁² + z₂|⁴ + |z₂³ + z₃|⁶ − 1`, weights (1, 2, 6).
    pub fn example2() -> Self {
        let z = |e: [u32; 3]| Polynomial::monomial(&e);
        let p = z([2, 0, 0]).add(&z([0, 1, 0]));
        let q = z([0, 3, 0]).add(&z([0, 0, 1]));
        let rho = sphere_rho(3).add(&p.abs_pow2(2)).add(&q.abs_pow2(3));
        Self {
            n: 3,
            weights: vec![1, 2, 6],
            rho: rho.to_specs(),
            kind: ManifoldKind::Hypersurface,
        }
    }

    /// Named presets: `"sphere"` (weights default to all ones) and `"example2"`.
    pub fn preset(name: &str, n: Option<usize>, weights: Option<&[u32]>) -> Result<Self> {
        match name {
            "sphere" => {
                let w = match (weights, n) {
                    (Some(w), Some(n)) if w.len() != n => {
                        return Err(Error::InvalidSpec(format!(
                            "--n {n} disagrees with {} weights",
                            w.len()
                        )))
                    }
                    (Some(w), _) => w.to_vec(),
                    (None, n) => vec![1; n.unwrap_or(2)],
                };
                Ok(Self::sphere(&w))
            }
            "example2" => Ok(Self::example2()),
            other => Err(Error::InvalidSpec(format!("unknown preset {other:?}"))),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn sphere_rho(n: usize) -> Polynomial {
    let mut terms: Vec<Term> = (0..n)
        .map(|j| {
            let mut e = vec![0; n];
            e[j] = 1;
            Term {
                coeff: BigRational::one(),
                z_exp: e.clone(),
                zbar_exp: e,
            }
        })
        .collect();
    terms.push(Term {
        coeff: -BigRational::one(),
        z_exp: vec![0; n],
        zbar_exp: vec![0; n],
    });
    Polynomial::new(n, terms).expect("sphere polynomial is valid")
}

/// A point of `X` with its defining-function residual `|ρ(x)|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub coords: Vec<Complex64>,
    pub residual: f64,
}

impl SurfacePoint {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// True when some coordinate is small but above the zero tolerance.
    pub fn near_stratum(&self) -> bool {
        self.coords
            .iter()
            .any(|c| (ZERO_TOLERANCE..NEAR_STRATUM).contains(&c.norm()))
    }
}

/// Levi-form eigenvalues and the compliant volume density at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeviData {
    pub eigenvalues: Vec<f64>,
    pub determinant: f64,
    /// `a` in `ω₀ = a · Im ∂ρ`, fixed by `⟨ω₀, T⟩ = −1`.
    pub contact_scale: f64,
    pub volume_density: f64,
}

/// Stratum orders found on a manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrataReport {
    pub confirmed: BTreeSet<u32>,
    pub unconfirmed: BTreeSet<u32>,
}

/// The real contact form `ω₀ = a · Im ∂ρ` at a point.
#[derive(Clone, Debug)]
pub struct ContactForm {
    pub scale: f64,
    pub d_rho: Vec<Complex64>,
}

impl ContactForm {
    /// Pairs `ω₀` (extended complex-linearly) with the vector
    /// `Σ A_j ∂/∂z_j + Σ B_k ∂/∂z̄_k`.
    pub fn pair(&self, hol: &[Complex64], antihol: &[Complex64]) -> Complex64 {
        let dz: Complex64 = self.d_rho.iter().zip(hol).map(|(g, a)| g * a).sum();
        let dzb: Complex64 = self
            .d_rho
            .iter()
            .zip(antihol)
            .map(|(g, b)| g.conj() * b)
            .sum();
        self.scale * (dz - dzb) / Complex64::new(0.0, 2.0)
    }

    /// Pairs `ω₀` with a real tangent vector given by its holomorphic components.
    pub fn pair_real(&self, v: &[Complex64]) -> f64 {
        let conj: Vec<Complex64> = v.iter().map(|c| c.conj()).collect();
        self.pair(v, &conj).re
    }
}

/// The CR manifold `X = {ρ = 0}` with its circle action.
#[derive(Clone, Debug)]
pub struct Manifold {
    n: usize,
    weights: WeightVector,
    rho: Polynomial,
    kind: ManifoldKind,
    surface_tolerance: f64,
    warnings: Vec<String>,
    spec: ManifoldSpec,
}

impl Manifold {
    /// Validates a description: arity, reality and invariance of `ρ`,
    /// gcd normalization, and nondegeneracy plus strong pseudoconvexity at
    /// a deterministic set of sampled points.
    pub fn new(spec: &ManifoldSpec) -> Result<Self> {
        if spec.n < 2 {
            return Err(Error::InvalidSpec(format!("n must be ≥ 2, got {}", spec.n)));
        }
        if spec.weights.len() != spec.n {
            return Err(Error::InvalidSpec(format!(
                "{} weights given for n = {}",
                spec.weights.len(),
                spec.n
            )));
        }
        let (weights, divisor) = WeightVector::new(&spec.weights)?;
        let mut warnings = Vec::new();
        if divisor > 1 {
            let msg = format!(
                "weights {:?} have gcd {divisor}; normalized to {:?}",
                spec.weights,
                weights.as_slice()
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        let rho = Polynomial::from_specs(spec.n, &spec.rho)?;
        if rho.terms().is_empty() {
            return Err(Error::InvalidSpec("ρ has no terms".into()));
        }
        rho.real_check()?;
        for t in rho.terms() {
            let degree = t.orbit_degree(weights.as_slice());
            if degree != 0 {
                return Err(Error::NonInvariant {
                    term: t.to_string(),
                    degree,
                });
            }
        }
        if spec.kind == ManifoldKind::Sphere {
            let expected = sphere_rho(spec.n);
            if rho.terms() != expected.terms() {
                return Err(Error::InvalidSpec(
                    "kind \"sphere\" requires ρ = |z|² − 1".into(),
                ));
            }
        }
        let normalized = ManifoldSpec {
            n: spec.n,
            weights: weights.as_slice().to_vec(),
            rho: rho.to_specs(),
            kind: spec.kind,
        };
        let m = Self {
            n: spec.n,
            weights,
            rho,
            kind: spec.kind,
            surface_tolerance: SURFACE_TOLERANCE,
            warnings,
            spec: normalized,
        };
        m.validate_samples(32)?;
        Ok(m)
    }

    fn validate_samples(&self, count: usize) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..count {
            let u = random_unit_vector(&mut rng, self.n);
            let (x, _) = self.radial_point(&u)?;
            self.levi_form(&x)?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn rho_poly(&self) -> &Polynomial {
        &self.rho
    }

    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn surface_tolerance(&self) -> f64 {
        self.surface_tolerance
    }

    pub fn with_surface_tolerance(mut self, tol: f64) -> Self {
        self.surface_tolerance = tol;
        self
    }

    /// Unit sphere with all weights one.
    pub fn is_standard_sphere(&self) -> bool {
        self.kind == ManifoldKind::Sphere && self.weights.is_unit()
    }

    /// `ρ` depends only on `|z_j|`, so distinct monomials are orthogonal
    /// for every measure built from `ρ`.
    pub fn is_torus_invariant(&self) -> bool {
        self.rho.is_torus_invariant()
    }

    /// SHA-256 of the normalized description.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.spec).expect("spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Surface area of the unit sphere `S^{2n−1}`: `2πⁿ/(n−1)!`.
    pub fn sphere_area(n: usize) -> f64 {
        let fact: f64 = (1..n).map(|k| k as f64).product();
        2.0 * PI.powi(n as i32) / fact
    }

    pub fn rho(&self, z: &[Complex64]) -> f64 {
        self.rho.eval(z).re
    }

    /// `(∂ρ/∂z_j)_j`.
    pub fn d_rho(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.rho.grad_z(z)
    }

    /// Real gradient of `ρ` written as a complex vector, `2·conj(∂ρ)`.
    pub fn real_gradient(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.d_rho(z).iter().map(|g| 2.0 * g.conj()).collect()
    }

    pub fn point(&self, coords: Vec<Complex64>) -> Result<SurfacePoint> {
        if coords.len() != self.n {
            return Err(Error::InvalidSpec(format!(
                "point has {} coordinates, expected {}",
                coords.len(),
                self.n
            )));
        }
        let residual = self.rho(&coords).abs();
        if !(residual <= self.surface_tolerance) {
            return Err(Error::OffManifold {
                residual,
                tolerance: self.surface_tolerance,
            });
        }
        Ok(SurfacePoint { coords, residual })
    }

    /// The unique point of `X` on the ray `t·u`, `t > 0`, and the parameter `t`.
    pub fn radial_point(&self, u: &[Complex64]) -> Result<(SurfacePoint, f64)> {
        let t = self.ray_root(u)?;
        let coords: Vec<Complex64> = u.iter().map(|c| c * t).collect();
        let residual = self.rho(&coords).abs();
        if residual > self.surface_tolerance {
            return Err(Error::OffManifold {
                residual,
                tolerance: self.surface_tolerance,
            });
        }
        Ok((SurfacePoint { coords, residual }, t))
    }

    /// Projects an arbitrary nonzero vector radially onto `X`.
    pub fn project_radial(&self, v: &[Complex64]) -> Result<SurfacePoint> {
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::OriginPoint);
        }
        let u: Vec<Complex64> = v.iter().map(|c| c / norm).collect();
        Ok(self.radial_point(&u)?.0)
    }

    fn ray_value(&self, u: &[Complex64], t: f64) -> (f64, f64) {
        let z: Vec<Complex64> = u.iter().map(|c| c * t).collect();
        let g = self.d_rho(&z);
        let d = 2.0 * g.iter().zip(u).map(|(g, u)| (g * u).re).sum::<f64>();
        (self.rho(&z), d)
    }

    /// Safeguarded Newton/bisection for `ρ(t·u) = 0`.
    pub fn ray_root(&self, u: &[Complex64]) -> Result<f64> {
        if self.kind == ManifoldKind::Sphere {
            let norm = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::OriginPoint);
            }
            return Ok(1.0 / norm);
        }
        let (f0, _) = self.ray_value(u, 0.0);
        if f0 >= 0.0 {
            return Err(Error::RayRoot { t_max: 0.0 });
        }
        let mut lo = 0.0;
        let mut hi = 0.5;
        loop {
            let (f, _) = self.ray_value(u, hi);
            if f > 0.0 {
                break;
            }
            lo = hi;
            hi *= 2.0;
            if hi > RAY_T_MAX {
                return Err(Error::RayRoot { t_max: RAY_T_MAX });
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..RAY_MAX_ITER {
            let (f, d) = self.ray_value(u, t);
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let newton = t - f / d;
            let next = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - t).abs();
            t = next;
            if step < RAY_TOL || hi - lo < RAY_TOL {
                break;
            }
        }
        // Newton polish: the loop may stop on a bisection midpoint.
        for _ in 0..3 {
            let (f, d) = self.ray_value(u, t);
            if f == 0.0 || !(d > 0.0) {
                break;
            }
            let next = t - f / d;
            if !(next >= lo && next <= hi) {
                break;
            }
            t = next;
        }
        Ok(t)
    }

    /// `e^{iθ} ∘ x`.
    pub fn act(&self, theta: f64, x: &SurfacePoint) -> SurfacePoint {
        let coords: Vec<Complex64> = x
            .coords
            .iter()
            .zip(self.weights.as_slice())
            .map(|(c, &w)| c * Complex64::from_polar(1.0, w as f64 * theta))
            .collect();
        let residual = self.rho(&coords).abs();
        SurfacePoint { coords, residual }
    }

    /// Holomorphic components `i·(m_1 x_1, …, m_n x_n)` of the Reeb field `T`.
    pub fn reeb_vector(&self, x: &SurfacePoint) -> Vec<Complex64> {
        x.coords
            .iter()
            .zip(self.weights.as_slice())
            .map(|(c, &w)| Complex64::i() * w as f64 * c)
            .collect()
    }

    /// `gcd{ m_j : |x_j| > zero_tolerance }`.
    pub fn stratum_order(&self, x: &SurfacePoint, zero_tolerance: f64) -> Result<u32> {
        let mut g = 0u32;
        for (c, &w) in x.coords.iter().zip(self.weights.as_slice()) {
            if c.norm() > zero_tolerance {
                g = g.gcd(&w);
            }
        }
        if g == 0 {
            return Err(Error::OriginPoint);
        }
        Ok(g)
    }

    /// Coordinate supports whose weight gcd is `k`, as index lists.
    pub fn supports_with_order(&self, k: u32) -> Vec<Vec<usize>> {
        let n = self.n;
        (1u32..(1 << n))
            .filter_map(|mask| {
                let idx: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
                let g = idx
                    .iter()
                    .fold(0u32, |acc, &j| acc.gcd(&self.weights.as_slice()[j]));
                (g == k).then_some(idx)
            })
            .collect()
    }

    /// Stratum orders realized on `X`. Each candidate gcd of a weight subset
    /// is confirmed by finding a point of `X` with exactly that support.
    pub fn strata_orders(&self, samples: usize, seed: u64) -> StrataReport {
        let n = self.n;
        let mut candidates: BTreeSet<u32> = BTreeSet::new();
        for mask in 1u32..(1 << n) {
            let g = (0..n)
                .filter(|j| mask & (1 << j) != 0)
                .fold(0u32, |acc, j| acc.gcd(&self.weights.as_slice()[j]));
            candidates.insert(g);
        }
        let mut confirmed = BTreeSet::new();
        let mut unconfirmed = BTreeSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for &k in &candidates {
            let mut ok = false;
            'search: for support in self.supports_with_order(k) {
                for _ in 0..samples.max(1) {
                    let u = random_unit_vector(&mut rng, n);
                    let v: Vec<Complex64> = (0..n)
                        .map(|j| if support.contains(&j) { u[j] } else { Complex64::zero() })
                        .collect();
                    if let Ok(x) = self.project_radial(&v) {
                        if self.stratum_order(&x, ZERO_TOLERANCE).ok() == Some(k) {
                            ok = true;
                            break 'search;
                        }
                    }
                }
            }
            if ok {
                confirmed.insert(k);
            } else {
                unconfirmed.insert(k);
            }
        }
        StrataReport {
            confirmed,
            unconfirmed,
        }
    }

    /// Orthonormal basis of `T^{1,0}_x X = ker ∂ρ(x)` under the ambient
    /// Hermitian product.
    pub fn holomorphic_tangent_frame(&self, x: &SurfacePoint) -> Result<Vec<Vec<Complex64>>> {
        frame_from_covector(&self.d_rho(&x.coords))
    }

    pub fn contact_form(&self, x: &SurfacePoint) -> Result<ContactForm> {
        let g = self.d_rho(&x.coords);
        let t = self.reeb_vector(x);
        // Im ∂ρ(T) = Re Σ m_j z_j ∂ρ/∂z_j
        let im_pair: f64 = g.iter().zip(&t).map(|(g, t)| (g * t).im).sum();
        if im_pair.abs() < 1e-14 {
            return Err(Error::SingularPoint(im_pair.abs()));
        }
        Ok(ContactForm {
            scale: -1.0 / im_pair,
            d_rho: g,
        })
    }

    /// Levi matrix in the frame of [`Self::holomorphic_tangent_frame`],
    /// normalized to a metric-orthonormal frame. Complex-Hessian route.
    pub fn levi_matrix(&self, x: &SurfacePoint) -> Result<DMatrix<Complex64>> {
        let frame = self.holomorphic_tangent_frame(x)?;
        let contact = self.contact_form(x)?;
        let n = self.n;
        let h = self.rho.hessian_mixed(&x.coords);
        let r = frame.len();
        // Def-1.6 value on unit-coefficient fields is −a/2 · H; frame vectors
        // of unit coefficient norm have metric length 1/√2.
        let factor = -contact.scale;
        Ok(DMatrix::from_fn(r, r, |a, b| {
            let mut s = Complex64::zero();
            for j in 0..n {
                for k in 0..n {
                    s += h[j * n + k] * frame[a][j] * frame[b][k].conj();
                }
            }
            s * factor
        }))
    }

    /// Levi-form eigenvalues, determinant, contact scale and volume density.
    pub fn levi_form(&self, x: &SurfacePoint) -> Result<LeviData> {
        let l = self.levi_matrix(x)?;
        let eigenvalues = hermitian_eigenvalues(&l);
        if let Some(&e) = eigenvalues.iter().find(|&&e| !(e > 0.0)) {
            return Err(Error::NotPseudoconvex {
                eigenvalue: e,
                point: format!("{:?}", x.coords),
            });
        }
        Ok(LeviData {
            determinant: eigenvalues.iter().product(),
            eigenvalues,
            contact_scale: self.contact_form(x)?.scale,
            volume_density: self.volume_density(x)?,
        })
    }

    /// Levi matrix from the bracket definition `L(U, V̄) = (1/2i)⟨[U, V̄], ω₀⟩`,
    /// with the frame extended by projecting constant coefficient vectors
    /// onto `ker ∂ρ` pointwise and derivatives taken by central differences.
    pub fn levi_matrix_bracket(&self, x: &SurfacePoint) -> Result<DMatrix<Complex64>> {
        let n = self.n;
        let frame = self.holomorphic_tangent_frame(x)?;
        let contact = self.contact_form(x)?;
        let h = BRACKET_STEP;
        let field = |xi: &[Complex64], y: &[Complex64]| -> Vec<Complex64> {
            let g = self.d_rho(y);
            let norm2: f64 = g.iter().map(|c| c.norm_sqr()).sum();
            let gxi: Complex64 = g.iter().zip(xi).map(|(g, v)| g * v).sum();
            xi.iter()
                .zip(&g)
                .map(|(v, gj)| v - gj.conj() * gxi / norm2)
                .collect()
        };
        // dbar[a][k][j] = ∂U_{a,j}/∂z̄_k
        let dbar: Vec<Vec<Vec<Complex64>>> = frame
            .iter()
            .map(|xi| {
                (0..n)
                    .map(|k| {
                        let shifted = |d: Complex64| {
                            let mut y = x.coords.clone();
                            y[k] += d;
                            field(xi, &y)
                        };
                        let px = shifted(Complex64::new(h, 0.0));
                        let mx = shifted(Complex64::new(-h, 0.0));
                        let py = shifted(Complex64::new(0.0, h));
                        let my = shifted(Complex64::new(0.0, -h));
                        (0..n)
                            .map(|j| {
                                let dx = (px[j] - mx[j]) / (2.0 * h);
                                let dy = (py[j] - my[j]) / (2.0 * h);
                                (dx + Complex64::i() * dy) / 2.0
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let r = frame.len();
        Ok(DMatrix::from_fn(r, r, |a, b| {
            let u = &frame[a];
            let v = &frame[b];
            let hol: Vec<Complex64> = (0..n)
                .map(|j| -(0..n).map(|k| v[k].conj() * dbar[a][k][j]).sum::<Complex64>())
                .collect();
            let antihol: Vec<Complex64> = (0..n)
                .map(|k| (0..n).map(|j| u[j] * dbar[b][j][k].conj()).sum::<Complex64>())
                .collect();
            let unit = contact.pair(&hol, &antihol) / Complex64::new(0.0, 2.0);
            unit * 2.0
        }))
    }

    /// Compliant-metric volume density relative to Euclidean surface measure.
    pub fn volume_density(&self, x: &SurfacePoint) -> Result<f64> {
        let frame = self.holomorphic_tangent_frame(x)?;
        let mut real_frame: Vec<Vec<f64>> = Vec::with_capacity(2 * self.n - 1);
        for v in &frame {
            real_frame.push(realify(v));
            let iv: Vec<Complex64> = v.iter().map(|c| Complex64::i() * c).collect();
            real_frame.push(realify(&iv));
        }
        real_frame.push(realify(&self.reeb_vector(x)));
        let k = real_frame.len();
        let gram = DMatrix::from_fn(k, k, |a, b| {
            real_frame[a]
                .iter()
                .zip(&real_frame[b])
                .map(|(p, q)| p * q)
                .sum::<f64>()
        });
        // The compliant Gram of the same frame is the identity.
        Ok(1.0 / gram.determinant().sqrt())
    }

    /// `min_θ |x − e^{iθ}∘y|` by a 720-node grid and golden-section refinement.
    pub fn quotient_distance(&self, x: &SurfacePoint, y: &SurfacePoint) -> f64 {
        let w = self.weights.as_slice();
        let f = |theta: f64| -> f64 {
            x.coords
                .iter()
                .zip(&y.coords)
                .zip(w)
                .map(|((a, b), &m)| (a - b * Complex64::from_polar(1.0, m as f64 * theta)).norm_sqr())
                .sum()
        };
        let step = TAU / QUOTIENT_GRID as f64;
        let values: Vec<f64> = (0..QUOTIENT_GRID).map(|s| f(s as f64 * step)).collect();
        let mut minima: Vec<usize> = (0..QUOTIENT_GRID)
            .filter(|&s| {
                let prev = values[(s + QUOTIENT_GRID - 1) % QUOTIENT_GRID];
                let next = values[(s + 1) % QUOTIENT_GRID];
                values[s] <= prev && values[s] <= next
            })
            .collect();
        minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        minima.truncate(4);
        let mut best = values.iter().copied().fold(f64::INFINITY, f64::min);
        for s in minima {
            let c = s as f64 * step;
            best = best.min(golden_min(&f, c - step, c + step, QUOTIENT_THETA_TOL));
        }
        best.max(0.0).sqrt()
    }
}

/// Orthonormal basis of `{ξ : Σ g_j ξ_j = 0}`.
pub(crate) fn frame_from_covector(g: &[Complex64]) -> Result<Vec<Vec<Complex64>>> {
    let n = g.len();
    let norm = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::SingularPoint(norm));
    }
    // u = conj(g)/|g| spans the Hermitian complement of the kernel.
    let u: Vec<Complex64> = g.iter().map(|c| c.conj() / norm).collect();
    let mut candidates: Vec<(usize, Vec<Complex64>)> = (0..n)
        .map(|k| {
            let v: Vec<Complex64> = (0..n)
                .map(|j| {
                    let e = if j == k { Complex64::one() } else { Complex64::zero() };
                    e - u[j] * u[k].conj()
                })
                .collect();
            (k, v)
        })
        .collect();
    candidates.sort_by(|a, b| {
        let na: f64 = a.1.iter().map(|c| c.norm_sqr()).sum();
        let nb: f64 = b.1.iter().map(|c| c.norm_sqr()).sum();
        nb.total_cmp(&na).then(a.0.cmp(&b.0))
    });
    let mut frame: Vec<Vec<Complex64>> = Vec::with_capacity(n - 1);
    for (_, mut v) in candidates {
        if frame.len() == n - 1 {
            break;
        }
        for _ in 0..2 {
            for f in frame.iter().chain(std::iter::once(&u)) {
                let proj: Complex64 = f.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vj, fj) in v.iter_mut().zip(f) {
                    *vj -= proj * fj;
                }
            }
        }
        let nv = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if nv > 1e-8 {
            frame.push(v.into_iter().map(|c| c / nv).collect());
        }
    }
    Ok(frame)
}

/// `(Re z_1, Im z_1, …, Re z_n, Im z_n)`.
pub fn realify(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}
