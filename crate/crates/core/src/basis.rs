//! Orthonormal monomial bases of the Fourier components `H⁰_{b,m}(X)`.
//!
//! Level `m` is spanned by the restrictions of `z^α` with `⟨α, weights⟩ = m`.
//! Gram matrices are exact on the round sphere and Monte-Carlo estimates
//! under the compliant measure elsewhere; orthonormalization is Cholesky
//! whitening.

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Manifold, ManifoldKind, SurfacePoint, WeightVector};
use crate::integrate::Quadrature;
use crate::linalg::{cholesky_lower, hermitian_eigenvalues, invert_lower, pairwise_sum};

/// Samples per chunk when assembling Monte-Carlo Gram matrices.
const GRAM_CHUNK: usize = 2048;
/// Default Monte-Carlo sample count for compliant Gram matrices.
pub const DEFAULT_GRAM_SAMPLES: usize = 200_000;

/// Exponent vector `α` with its weighted and total degree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    exponents: Vec<u32>,
    weighted_degree: u32,
    total_degree: u32,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>, weights: &WeightVector) -> Self {
        Self::with_weights(exponents, weights.as_slice())
    }

    pub fn with_weights(exponents: Vec<u32>, weights: &[u32]) -> Self {
        let weighted_degree = exponents
            .iter()
            .zip(weights)
            .map(|(a, w)| a * w)
            .sum();
        let total_degree = exponents.iter().sum();
        Self {
            exponents,
            weighted_degree,
            total_degree,
        }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn weighted_degree(&self) -> u32 {
        self.weighted_degree
    }

    pub fn total_degree(&self) -> u32 {
        self.total_degree
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.exponents
            .iter()
            .zip(z)
            .filter(|(&a, _)| a > 0)
            .map(|(&a, c)| c.powu(a))
            .product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.exponents.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All `α ∈ ℕ₀ⁿ` with `⟨α, weights⟩ = m`, in colexicographic order.
pub fn enumerate_multiindices(weights: &WeightVector, m: u32) -> Vec<MultiIndex> {
    let w = weights.as_slice();
    let mut out = Vec::new();
    let mut current = vec![0u32; w.len()];
    fill(w, w.len(), m, &mut current, &mut out);
    out.into_iter().map(|e| MultiIndex::new(e, weights)).collect()
}

// Recurses from the last coordinate down, so the last exponent varies
// slowest: that is colex order.
fn fill(w: &[u32], k: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if k == 1 {
        if remaining % w[0] == 0 {
            cur[0] = remaining / w[0];
            out.push(cur.clone());
        }
        return;
    }
    let j = k - 1;
    for a in 0..=(remaining / w[j]) {
        cur[j] = a;
        fill(w, j, remaining - a * w[j], cur, out);
    }
    cur[j] = 0;
}

/// `d_m = #{α : ⟨α, weights⟩ = m}` by a coin-change count.
pub fn dimension(weights: &WeightVector, m: u32) -> u64 {
    let m = m as usize;
    let mut ways = vec![0u64; m + 1];
    ways[0] = 1;
    for &w in weights.as_slice() {
        let w = w as usize;
        for s in w..=m {
            ways[s] += ways[s - w];
        }
    }
    ways[m]
}

/// `rational_part · π^{pi_power}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactNorm {
    #[serde(with = "rational_string")]
    pub rational_part: BigRational,
    pub pi_power: i32,
}

impl ExactNorm {
    pub fn to_f64(&self) -> f64 {
        self.rational_part.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI.powi(self.pi_power)
    }
}

impl fmt::Display for ExactNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·π^{}", self.rational_part, self.pi_power)
    }
}

mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        crate::poly::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

fn factorial(k: u32) -> BigInt {
    (2..=k).fold(BigInt::one(), |acc, v| acc * v)
}

/// `∫_{S^{2n−1}} |z^α|² dS = 2πⁿ α! / (n − 1 + |α|)!`.
pub fn sphere_monomial_norm_sq(alpha: &MultiIndex, n: usize) -> ExactNorm {
    let num: BigInt = alpha
        .exponents
        .iter()
        .fold(BigInt::from(2), |acc, &a| acc * factorial(a));
    let den = factorial(n as u32 - 1 + alpha.total_degree);
    ExactNorm {
        rational_part: BigRational::new(num, den),
        pi_power: n as i32,
    }
}

/// The inner product used for a basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Measure {
    /// Euclidean surface measure on the unit sphere, integrated exactly.
    RoundExact,
    /// Compliant-metric volume, Monte-Carlo quadrature.
    CompliantQuadrature { samples: usize, seed: u64 },
}

/// Where Gram entries come from.
#[derive(Clone, Copy, Debug)]
pub enum MeasureSource<'a> {
    RoundExact,
    Compliant(&'a Quadrature),
}

impl<'a> MeasureSource<'a> {
    /// Round-exact when no quadrature is supplied.
    pub fn from_quadrature(q: Option<&'a Quadrature>) -> Self {
        q.map_or(MeasureSource::RoundExact, MeasureSource::Compliant)
    }

    pub fn measure(&self) -> Measure {
        match self {
            MeasureSource::RoundExact => Measure::RoundExact,
            MeasureSource::Compliant(q) => Measure::CompliantQuadrature {
                samples: q.len(),
                seed: q.samples.seed,
            },
        }
    }
}

/// Compliant quadrature for bases on `X`, or `None` on the standard sphere
/// where the round measure is exact.
pub fn default_quadrature(m: &Manifold, samples: usize, seed: u64) -> Result<Option<Quadrature>> {
    if m.is_standard_sphere() {
        Ok(None)
    } else {
        Quadrature::compliant(m, samples, seed).map(Some)
    }
}

/// Which entries of a quadrature Gram matrix are assembled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GramMode {
    Full,
    /// Off-diagonal entries are set to zero; exact when `ρ` and the measure
    /// are torus-invariant.
    TorusDiagonal,
}

impl GramMode {
    pub fn for_manifold(m: &Manifold) -> Self {
        if m.is_torus_invariant() {
            GramMode::TorusDiagonal
        } else {
            GramMode::Full
        }
    }
}

/// Hermitian Gram matrix `G_jk = (z^{α_j} | z^{α_k})` with diagnostics.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub matrix: DMatrix<Complex64>,
    /// Per-entry Monte-Carlo standard errors.
    pub stderr: Option<DMatrix<f64>>,
    pub measure: Measure,
    pub smallest_eigenvalue: f64,
    pub condition_number: f64,
}

impl GramMatrix {
    fn with_spectrum(
        matrix: DMatrix<Complex64>,
        stderr: Option<DMatrix<f64>>,
        measure: Measure,
    ) -> Self {
        let d = matrix.nrows();
        let diagonal = is_diagonal(&matrix);
        let (lo, hi) = if d == 0 {
            (f64::NAN, f64::NAN)
        } else if diagonal {
            let diag = (0..d).map(|i| matrix[(i, i)].re);
            diag.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
        } else {
            let ev = hermitian_eigenvalues(&matrix);
            (ev[0], ev[d - 1])
        };
        Self {
            matrix,
            stderr,
            measure,
            smallest_eigenvalue: lo,
            condition_number: hi / lo,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn is_diagonal(m: &DMatrix<Complex64>) -> bool {
    let d = m.nrows();
    (0..d).all(|i| (0..d).all(|j| i == j || m[(i, j)] == Complex64::zero()))
}

/// Exact round-sphere Gram matrix: diagonal by torus orthogonality.
pub fn gram_round_exact(indices: &[MultiIndex], n: usize) -> GramMatrix {
    let d = indices.len();
    let norms: Vec<f64> = indices
        .par_iter()
        .map(|a| sphere_monomial_norm_sq(a, n).to_f64())
        .collect();
    let mut g = DMatrix::<Complex64>::zeros(d, d);
    for (i, v) in norms.into_iter().enumerate() {
        g[(i, i)] = Complex64::new(v, 0.0);
    }
    GramMatrix::with_spectrum(g, None, Measure::RoundExact)
}

/// Monte-Carlo Gram matrix under a quadrature, assembled chunk by chunk and
/// reduced in chunk order.
pub fn gram_quadrature(indices: &[MultiIndex], q: &Quadrature, mode: GramMode) -> GramMatrix {
    let d = indices.len();
    let n = q.points().first().map_or(0, |p| p.dim());
    let evaluator = MonomialEvaluator::new(indices, n);
    let count = q.len();
    let chunks: Vec<(Vec<Complex64>, Vec<f64>)> = (0..count.div_ceil(GRAM_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * GRAM_CHUNK;
            let hi = (lo + GRAM_CHUNK).min(count);
            let mut s1 = vec![Complex64::zero(); d * d];
            let mut s2 = vec![0.0f64; d * d];
            let mut v = vec![Complex64::zero(); d];
            for i in lo..hi {
                let w = q.weights[i];
                evaluator.values_into(&q.points()[i].coords, &mut v);
                for j in 0..d {
                    let wj = v[j] * w;
                    match mode {
                        GramMode::TorusDiagonal => {
                            let a = wj * v[j].conj();
                            s1[j * d + j] += a;
                            s2[j * d + j] += a.norm_sqr();
                        }
                        GramMode::Full => {
                            for k in j..d {
                                let a = wj * v[k].conj();
                                s1[j * d + k] += a;
                                s2[j * d + k] += a.norm_sqr();
                            }
                        }
                    }
                }
            }
            (s1, s2)
        })
        .collect();
    let nf = count as f64;
    let mut g = DMatrix::<Complex64>::zeros(d, d);
    let mut se = DMatrix::<f64>::zeros(d, d);
    let mut col1 = Vec::with_capacity(chunks.len());
    let mut col2 = Vec::with_capacity(chunks.len());
    for j in 0..d {
        let ks: Vec<usize> = match mode {
            GramMode::TorusDiagonal => vec![j],
            GramMode::Full => (j..d).collect(),
        };
        for k in ks {
            col1.clear();
            col2.clear();
            col1.extend(chunks.iter().map(|(s1, _)| s1[j * d + k]));
            col2.extend(chunks.iter().map(|(_, s2)| s2[j * d + k]));
            let mean = pairwise_sum(&col1);
            let sq = pairwise_sum(&col2);
            let var = if count > 1 {
                ((nf * nf * sq - nf * mean.norm_sqr()) / (nf - 1.0)).max(0.0)
            } else {
                0.0
            };
            let err = (var / nf).sqrt();
            if j == k {
                g[(j, j)] = Complex64::new(mean.re, 0.0);
                se[(j, j)] = err;
            } else {
                g[(j, k)] = mean;
                g[(k, j)] = mean.conj();
                se[(j, k)] = err;
                se[(k, j)] = err;
            }
        }
    }
    let measure = Measure::CompliantQuadrature {
        samples: count,
        seed: q.samples.seed,
    };
    GramMatrix::with_spectrum(g, Some(se), measure)
}

/// Gram matrix for a level under the given measure source.
pub fn gram_matrix(
    indices: &[MultiIndex],
    m: &Manifold,
    source: &MeasureSource<'_>,
    mode: GramMode,
) -> Result<GramMatrix> {
    match source {
        MeasureSource::RoundExact => {
            if m.kind() != ManifoldKind::Sphere {
                return Err(Error::Precondition(
                    "round-exact measure requires the unit sphere".into(),
                ));
            }
            Ok(gram_round_exact(indices, m.n()))
        }
        MeasureSource::Compliant(q) => Ok(gram_quadrature(indices, q, mode)),
    }
}

/// Evaluates a fixed list of monomials from per-coordinate power tables.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct MonomialEvaluator {
    exps: Vec<Vec<u32>>,
    max_exp: Vec<u32>,
}

impl MonomialEvaluator {
    pub(crate) fn new(indices: &[MultiIndex], n: usize) -> Self {
        let mut max_exp = vec![0u32; n];
        for a in indices {
            for (mx, &e) in max_exp.iter_mut().zip(&a.exponents) {
                *mx = (*mx).max(e);
            }
        }
        Self {
            exps: indices.iter().map(|a| a.exponents.clone()).collect(),
            max_exp,
        }
    }

    fn powers(&self, z: &[Complex64]) -> Vec<Vec<Complex64>> {
        z.iter()
            .zip(&self.max_exp)
            .map(|(c, &mx)| {
                let mut p = Vec::with_capacity(mx as usize + 1);
                p.push(Complex64::one());
                for e in 1..=mx as usize {
                    p.push(p[e - 1] * c);
                }
                p
            })
            .collect()
    }

    pub(crate) fn values_into(&self, z: &[Complex64], out: &mut [Complex64]) {
        let pw = self.powers(z);
        for (o, e) in out.iter_mut().zip(&self.exps) {
            let mut v = Complex64::one();
            for (j, &a) in e.iter().enumerate() {
                if a > 0 {
                    v *= pw[j][a as usize];
                }
            }
            *o = v;
        }
    }

    pub(crate) fn values(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::zero(); self.exps.len()];
        self.values_into(z, &mut out);
        out
    }

    /// `∂z^α/∂z_k`, row-major `d × n`.
    pub(crate) fn jacobian(&self, z: &[Complex64]) -> DMatrix<Complex64> {
        let n = z.len();
        let pw = self.powers(z);
        DMatrix::from_fn(self.exps.len(), n, |i, k| {
            let e = &self.exps[i];
            if e[k] == 0 {
                return Complex64::zero();
            }
            let mut v = Complex64::new(e[k] as f64, 0.0);
            for (j, &a) in e.iter().enumerate() {
                let a = if j == k { a - 1 } else { a };
                if a > 0 {
                    v *= pw[j][a as usize];
                }
            }
            v
        })
    }
}

/// Orthonormalizing coefficients: a lower-triangular `C` with `C G C^* = I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CoeffMatrix {
    Diagonal(Vec<f64>),
    Lower(DMatrix<Complex64>),
}

impl CoeffMatrix {
    pub fn dim(&self) -> usize {
        match self {
            CoeffMatrix::Diagonal(v) => v.len(),
            CoeffMatrix::Lower(c) => c.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match self {
            CoeffMatrix::Diagonal(v) => {
                let d = v.len();
                DMatrix::from_fn(d, d, |i, j| {
                    if i == j {
                        Complex64::new(v[i], 0.0)
                    } else {
                        Complex64::zero()
                    }
                })
            }
            CoeffMatrix::Lower(c) => c.clone(),
        }
    }

    fn apply(&self, raw: &[Complex64]) -> Vec<Complex64> {
        match self {
            CoeffMatrix::Diagonal(v) => raw.iter().zip(v).map(|(r, c)| r * *c).collect(),
            CoeffMatrix::Lower(c) => (0..c.nrows())
                .map(|i| (0..=i).map(|j| c[(i, j)] * raw[j]).sum())
                .collect(),
        }
    }
}

/// Orthonormal basis `f = C · (z^{α_j})_j` of one Fourier level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierBasis {
    pub level: u32,
    pub n: usize,
    pub weights: Vec<u32>,
    pub indices: Vec<MultiIndex>,
    pub coeff: CoeffMatrix,
    pub measure: Measure,
    pub condition_number: f64,
    #[serde(skip)]
    evaluator: Option<MonomialEvaluator>,
}

impl FourierBasis {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// Basis of level `m` on `X` under the given measure. Quadrature Gram
    /// matrices are assembled diagonally when `ρ` is torus-invariant.
    pub fn build(manifold: &Manifold, m: u32, source: &MeasureSource<'_>) -> Result<Self> {
        Self::build_with_gram(manifold, m, source).map(|(b, _)| b)
    }

    /// As [`FourierBasis::build`], also returning the Gram matrix.
    pub fn build_with_gram(
        manifold: &Manifold,
        m: u32,
        source: &MeasureSource<'_>,
    ) -> Result<(Self, GramMatrix)> {
        let indices = enumerate_multiindices(manifold.weights(), m);
        let g = gram_matrix(&indices, manifold, source, GramMode::for_manifold(manifold))?;
        let mut b = orthonormalize(indices, &g)?;
        b.level = m;
        b.n = manifold.n();
        b.weights = manifold.weights().as_slice().to_vec();
        Ok((b, g))
    }

    fn evaluator(&self) -> MonomialEvaluator {
        self.evaluator
            .clone()
            .unwrap_or_else(|| MonomialEvaluator::new(&self.indices, self.n))
    }

    /// Raw monomial values `z^{α_j}(x)`.
    pub fn eval_monomials(&self, x: &SurfacePoint) -> Vec<Complex64> {
        match &self.evaluator {
            Some(e) => e.values(&x.coords),
            None => self.evaluator().values(&x.coords),
        }
    }

    /// `(f_1(x), …, f_d(x))`.
    pub fn eval(&self, x: &SurfacePoint) -> Vec<Complex64> {
        self.coeff.apply(&self.eval_monomials(x))
    }

    /// Holomorphic Jacobian `∂f_j/∂z_k`, `d × n`.
    pub fn eval_jacobian(&self, x: &SurfacePoint) -> DMatrix<Complex64> {
        let raw = match &self.evaluator {
            Some(e) => e.jacobian(&x.coords),
            None => self.evaluator().jacobian(&x.coords),
        };
        match &self.coeff {
            CoeffMatrix::Diagonal(v) => {
                let mut j = raw;
                for (i, c) in v.iter().enumerate() {
                    j.row_mut(i).scale_mut(*c);
                }
                j
            }
            CoeffMatrix::Lower(c) => c * raw,
        }
    }

    /// Reassembles a basis from stored parts.
    pub fn from_parts(
        level: u32,
        n: usize,
        weights: Vec<u32>,
        indices: Vec<MultiIndex>,
        coeff: CoeffMatrix,
        measure: Measure,
        condition_number: f64,
    ) -> Result<Self> {
        if coeff.dim() != indices.len() {
            return Err(Error::Cache(format!(
                "coefficient matrix is {0}×{0} for {1} indices",
                coeff.dim(),
                indices.len()
            )));
        }
        let evaluator = Some(MonomialEvaluator::new(&indices, n));
        Ok(Self {
            level,
            n,
            weights,
            indices,
            coeff,
            measure,
            condition_number,
            evaluator,
        })
    }

    /// Restores the evaluator after deserialization.
    pub fn prepared(mut self) -> Self {
        self.evaluator = Some(MonomialEvaluator::new(&self.indices, self.n));
        self
    }
}

/// Cholesky whitening of `G`. A diagonal `G` gives `C = diag(1/√G_jj)`;
/// otherwise `G` is Jacobi-scaled before factoring.
pub fn orthonormalize(indices: Vec<MultiIndex>, g: &GramMatrix) -> Result<FourierBasis> {
    let d = indices.len();
    if g.dim() != d {
        return Err(Error::Precondition(format!(
            "Gram matrix is {}×{} for {d} indices",
            g.dim(),
            g.dim()
        )));
    }
    let n = indices.first().map_or(0, |a| a.exponents.len());
    let level = indices.first().map_or(0, |a| a.weighted_degree);
    if let Some(a) = indices.iter().find(|a| a.weighted_degree != level) {
        return Err(Error::Precondition(format!(
            "mixed levels: {a} has weighted degree {} ≠ {level}",
            a.weighted_degree
        )));
    }
    let coeff = if is_diagonal(&g.matrix) {
        let mut v = Vec::with_capacity(d);
        for i in 0..d {
            let gii = g.matrix[(i, i)].re;
            if !(gii > 0.0) {
                return Err(Error::RankDeficient { pivot: i, value: gii });
            }
            v.push(1.0 / gii.sqrt());
        }
        CoeffMatrix::Diagonal(v)
    } else {
        let mut scale = Vec::with_capacity(d);
        for i in 0..d {
            let gii = g.matrix[(i, i)].re;
            if !(gii > 0.0) {
                return Err(Error::RankDeficient { pivot: i, value: gii });
            }
            scale.push(1.0 / gii.sqrt());
        }
        let scaled = DMatrix::from_fn(d, d, |i, j| g.matrix[(i, j)] * (scale[i] * scale[j]));
        let l = cholesky_lower(&scaled)?;
        let mut c = invert_lower(&l);
        for (j, s) in scale.iter().enumerate() {
            c.column_mut(j).scale_mut(*s);
        }
        CoeffMatrix::Lower(c)
    };
    let evaluator = Some(MonomialEvaluator::new(&indices, n));
    Ok(FourierBasis {
        level,
        n,
        weights: Vec::new(),
        indices,
        coeff,
        measure: g.measure.clone(),
        condition_number: g.condition_number,
        evaluator,
    })
}
