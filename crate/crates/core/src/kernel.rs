//! The level-`m` Szegő kernel `S_m(x, y) = Σ_j f_j(x) conj(f_j(y))` and the
//! diagnostics built on it: diagonal expansion fits, exact vanishing on
//! singular strata, off-diagonal decay and consecutive-level ratios.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{CoeffMatrix, FourierBasis, Measure, MeasureSource};
use crate::error::{Error, Result};
use crate::geometry::{Manifold, SurfacePoint, ZERO_TOLERANCE};
use crate::integrate::{draw_rng, random_unit_vector};
use crate::linalg::{least_squares, line_fit, pairwise_sum};

/// Basis values at a singular point must be below this (times scale).
pub const VANISHING_TOLERANCE: f64 = 1e-12;
/// Ratio denominators below this (times scale) are undefined.
pub const RATIO_DENOMINATOR_FLOOR: f64 = 1e-14;
/// Log-ratios below this are treated as underflow in decay fits.
const DECAY_UNDERFLOW: f64 = -700.0;
/// `|S_m(x, y)|` below this fraction of `Σ_j |f_j(x)||f_j(y)|` has lost its
/// significant digits to cancellation.
const DECAY_CANCELLATION: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelEvaluation {
    pub level: u32,
    pub value: Complex64,
    pub x: SurfacePoint,
    pub y: SurfacePoint,
}

/// `Σ_j a_j conj(b_j)` by pairwise summation.
pub fn kernel_from_values(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let terms: Vec<Complex64> = a.iter().zip(b).map(|(u, v)| u * v.conj()).collect();
    pairwise_sum(&terms)
}

/// `Σ_j |a_j|²` by pairwise summation.
pub fn diagonal_from_values(a: &[Complex64]) -> f64 {
    let terms: Vec<f64> = a.iter().map(|u| u.norm_sqr()).collect();
    pairwise_sum(&terms)
}

pub fn szego_kernel(b: &FourierBasis, x: &SurfacePoint, y: &SurfacePoint) -> KernelEvaluation {
    let fx = b.eval(x);
    let value = if x.coords == y.coords {
        Complex64::new(diagonal_from_values(&fx), 0.0)
    } else {
        kernel_from_values(&fx, &b.eval(y))
    };
    KernelEvaluation {
        level: b.level,
        value,
        x: x.clone(),
        y: y.clone(),
    }
}

/// `S_m(x, x)`.
pub fn szego_diagonal(b: &FourierBasis, x: &SurfacePoint) -> f64 {
    diagonal_from_values(&b.eval(x))
}

/// Certificate that every basis element vanishes at a point of `X_k`, `k ∤ m`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VanishingCertificate {
    pub level: u32,
    pub stratum_order: u32,
    pub max_abs: f64,
    pub scale: f64,
    pub pass: bool,
}

/// `max_j |f_j(x₀)|` for `x₀ ∈ X_k` with `k ∤ m`. Invariance under the
/// stabilizer forces `f(x₀) = e^{2πim/k} f(x₀)`, hence zero.
pub fn stratum_vanishing_check(
    b: &FourierBasis,
    x0: &SurfacePoint,
    manifold: &Manifold,
) -> Result<VanishingCertificate> {
    let k = manifold.stratum_order(x0, ZERO_TOLERANCE)?;
    if k <= 1 || b.level % k == 0 {
        return Err(Error::Precondition(format!(
            "vanishing needs stratum order k > 1 with k ∤ m; got k = {k}, m = {}",
            b.level
        )));
    }
    let max_abs = b.eval(x0).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = coefficient_scale(&b.coeff);
    Ok(VanishingCertificate {
        level: b.level,
        stratum_order: k,
        max_abs,
        scale,
        pass: max_abs <= VANISHING_TOLERANCE * scale,
    })
}

/// Largest absolute row sum of the coefficient matrix, at least 1.
fn coefficient_scale(c: &CoeffMatrix) -> f64 {
    let s = match c {
        CoeffMatrix::Diagonal(v) => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
        CoeffMatrix::Lower(m) => m
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max),
    };
    s.max(1.0)
}

/// Cyclotomic polynomial `Φ_k` with integer coefficients, lowest degree first.
fn cyclotomic(k: u32) -> Vec<i64> {
    // x^k − 1 divided by Φ_d for every proper divisor d.
    let mut p = vec![0i64; k as usize + 1];
    p[0] = -1;
    p[k as usize] = 1;
    for d in 1..k {
        if k % d == 0 {
            p = divide_monic(&p, &cyclotomic(d)).0;
        }
    }
    p
}

/// Quotient and remainder of `p / q` for monic `q`.
fn divide_monic(p: &[i64], q: &[i64]) -> (Vec<i64>, Vec<i64>) {
    let dq = q.len() - 1;
    let mut r = p.to_vec();
    if r.len() <= dq {
        return (vec![0], r);
    }
    let mut quot = vec![0i64; r.len() - dq];
    for i in (0..quot.len()).rev() {
        let c = r[i + dq];
        quot[i] = c;
        for (j, &qj) in q.iter().enumerate() {
            r[i + j] -= c * qj;
        }
    }
    r.truncate(dq);
    (quot, r)
}

/// `Σ_{s=1}^{k} e^{2πi(s−1)m/k}` evaluated exactly in `ℤ[ζ_k]`: the sum is
/// reduced modulo the cyclotomic polynomial and must leave an integer.
pub fn root_of_unity_selector(k: u32, m: u32) -> Result<i64> {
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    let mut counts = vec![0i64; k as usize];
    for s in 0..k as u64 {
        counts[((s * m as u64) % k as u64) as usize] += 1;
    }
    let phi = cyclotomic(k);
    let (_, mut rem) = divide_monic(&counts, &phi);
    while rem.len() > 1 && rem.last() == Some(&0) {
        rem.pop();
    }
    if rem.len() > 1 {
        return Err(Error::Precondition(format!(
            "selector sum for k = {k}, m = {m} is not an integer: {rem:?}"
        )));
    }
    Ok(rem.first().copied().unwrap_or(0))
}

/// `k · [k | m]`.
pub fn selector_closed_form(k: u32, m: u32) -> i64 {
    if m % k == 0 {
        k as i64
    } else {
        0
    }
}

/// Two-term fit of the diagonal `S_m(x, x) ≈ c_lead m^{n−1} + c_next m^{n−2}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub point: SurfacePoint,
    pub stratum_order: u32,
    pub measure: Measure,
    pub levels: Vec<u32>,
    pub values: Vec<f64>,
    /// Monte-Carlo standard errors of the diagonal values.
    pub stderr: Option<Vec<f64>>,
    pub c_lead: f64,
    pub c_next: f64,
    pub levi_determinant: f64,
    /// `(k/2π) π^{−(n−1)} |det L_x|`.
    pub predicted: f64,
    pub relative_error: f64,
    pub rms_relative_residual: f64,
}

/// `(k/2π) π^{−(n−1)} |det L|`.
pub fn predicted_leading(n: usize, k: u32, levi_determinant: f64) -> f64 {
    k as f64 / (2.0 * std::f64::consts::PI)
        * std::f64::consts::PI.powi(-(n as i32 - 1))
        * levi_determinant.abs()
}

/// Diagonal values and their propagated MC errors at the given levels.
pub fn diagonal_series(
    manifold: &Manifold,
    x: &SurfacePoint,
    levels: &[u32],
    source: &MeasureSource<'_>,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let rows: Vec<Result<(f64, Option<f64>)>> = levels
        .par_iter()
        .map(|&m| {
            let (b, g) = FourierBasis::build_with_gram(manifold, m, source)?;
            let value = szego_diagonal(&b, x);
            let err = match (&b.coeff, &g.stderr) {
                // dS = Σ |z^α(x)|² / G_αα² · dG_αα
                (CoeffMatrix::Diagonal(_), Some(se)) => {
                    let raw = b.eval_monomials(x);
                    let var: f64 = raw
                        .iter()
                        .enumerate()
                        .map(|(i, v)| {
                            let gii = g.matrix[(i, i)].re;
                            (v.norm_sqr() / (gii * gii) * se[(i, i)]).powi(2)
                        })
                        .sum();
                    Some(var.sqrt())
                }
                _ => None,
            };
            Ok((value, err))
        })
        .collect();
    let mut values = Vec::with_capacity(levels.len());
    let mut errs = Vec::with_capacity(levels.len());
    for r in rows {
        let (v, e) = r?;
        values.push(v);
        errs.push(e);
    }
    let stderr = errs.iter().all(|e| e.is_some()).then(|| errs.into_iter().flatten().collect());
    Ok((values, stderr))
}

/// Fits the diagonal over `{m ∈ [m_min, m_max] : k | m}`, `k` the stratum
/// order of `x`.
pub fn fit_expansion(
    manifold: &Manifold,
    x: &SurfacePoint,
    m_min: u32,
    m_max: u32,
    source: &MeasureSource<'_>,
) -> Result<ExpansionFit> {
    let k = manifold.stratum_order(x, ZERO_TOLERANCE)?;
    let levels: Vec<u32> = (m_min.max(1)..=m_max).filter(|m| m % k == 0).collect();
    if levels.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} admissible levels in [{m_min}, {m_max}] for stratum order {k}; need 4",
            levels.len()
        )));
    }
    let n = manifold.n();
    let (values, stderr) = diagonal_series(manifold, x, &levels, source)?;
    let p = n as i32 - 1;
    let a = DMatrix::from_fn(levels.len(), 2, |i, j| (levels[i] as f64).powi(p - j as i32));
    let y = DVector::from_column_slice(&values);
    let c = least_squares(&a, &y);
    let fitted = &a * &c;
    let rms = (values
        .iter()
        .zip(fitted.iter())
        .map(|(v, f)| ((v - f) / v).powi(2))
        .sum::<f64>()
        / values.len() as f64)
        .sqrt();
    let levi = manifold.levi_form(x)?;
    let predicted = predicted_leading(n, k, levi.determinant);
    Ok(ExpansionFit {
        point: x.clone(),
        stratum_order: k,
        measure: source.measure(),
        levels,
        values,
        stderr,
        c_lead: c[0],
        c_next: c[1],
        levi_determinant: levi.determinant.abs(),
        predicted,
        relative_error: (c[0] - predicted).abs() / predicted,
        rms_relative_residual: rms,
    })
}

/// `log(|S_m(x, y)| / S_m(x, x))` against `m` with a straight-line fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayProfile {
    pub levels: Vec<u32>,
    pub log_ratios: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub quotient_distance: f64,
    /// The series stopped early because `|S_m(x, y)|` underflowed.
    pub underflow: bool,
    /// The series stopped early because the kernel sum cancelled below
    /// working precision.
    pub cancellation: bool,
    /// First level excluded from the fit.
    pub truncated_at: Option<u32>,
}

pub fn decay_profile(
    manifold: &Manifold,
    x: &SurfacePoint,
    y: &SurfacePoint,
    levels: &[u32],
    source: &MeasureSource<'_>,
) -> Result<DecayProfile> {
    let qd = manifold.quotient_distance(x, y);
    if qd <= 10.0 * manifold.surface_tolerance() {
        return Err(Error::Precondition(format!(
            "decay needs points on distinct orbits; quotient distance {qd:e}"
        )));
    }
    let rows: Vec<Result<(f64, f64)>> = levels
        .par_iter()
        .map(|&m| {
            let b = FourierBasis::build(manifold, m, source)?;
            let fx = b.eval(x);
            let fy = b.eval(y);
            let off = kernel_from_values(&fx, &fy).norm();
            let magnitude: f64 = fx.iter().zip(&fy).map(|(a, c)| a.norm() * c.norm()).sum();
            Ok(((off / diagonal_from_values(&fx)).ln(), off / magnitude))
        })
        .collect();
    let mut used = Vec::new();
    let mut logs = Vec::new();
    let mut underflow = false;
    let mut cancellation = false;
    let mut truncated_at = None;
    for (&m, r) in levels.iter().zip(rows) {
        let (v, retained) = r?;
        if !v.is_finite() || v < DECAY_UNDERFLOW {
            underflow = true;
        } else if !(retained >= DECAY_CANCELLATION) {
            cancellation = true;
        }
        if underflow || cancellation {
            truncated_at = Some(m);
            break;
        }
        used.push(m);
        logs.push(v);
    }
    if used.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} usable levels before underflow",
            used.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|&m| m as f64).collect();
    let (slope, intercept, r2) = line_fit(&xs, &logs);
    Ok(DecayProfile {
        levels: used,
        log_ratios: logs,
        slope,
        intercept,
        r_squared: r2,
        quotient_distance: qd,
        underflow,
        cancellation,
        truncated_at,
    })
}

/// `S_{k(m+1)}(x, x₀) / S_{km}(x, x₀)` split into real and imaginary parts.
pub fn ratio_diagnostic(
    lower: &FourierBasis,
    upper: &FourierBasis,
    x: &SurfacePoint,
    x0: &SurfacePoint,
) -> Result<(f64, f64)> {
    let fx_lo = lower.eval(x);
    let f0_lo = lower.eval(x0);
    let den = kernel_from_values(&fx_lo, &f0_lo);
    let scale = (diagonal_from_values(&fx_lo) * diagonal_from_values(&f0_lo)).sqrt();
    let threshold = RATIO_DENOMINATOR_FLOOR * scale;
    if !(den.norm() > threshold) {
        return Err(Error::UndefinedRatio {
            denominator: den.norm(),
            threshold,
        });
    }
    let num = kernel_from_values(&upper.eval(x), &upper.eval(x0));
    let r = num / den;
    Ok((r.re, r.im))
}

/// Parameters of the consecutive-level ratio search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioConfig {
    pub max_multiplier: u32,
    pub radii: Vec<f64>,
    pub points: usize,
    pub sigma: f64,
    /// Bound on `|I|`.
    pub imag_bound: f64,
    /// Orbit half-width of the neighbourhood; 0 samples the transverse slice.
    pub theta_halfwidth: f64,
    pub seed: u64,
}

impl Default for RatioConfig {
    fn default() -> Self {
        Self {
            max_multiplier: 60,
            radii: vec![0.3, 0.1, 0.03],
            points: 50,
            sigma: 0.05,
            imag_bound: 0.01,
            theta_halfwidth: 0.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioRow {
    pub multiplier: u32,
    pub radius: f64,
    pub max_real_defect: f64,
    pub max_imag: f64,
    pub undefined: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioReport {
    pub stratum_order: u32,
    pub config: RatioConfig,
    pub rows: Vec<RatioRow>,
    /// First `(multiplier, radius)` at which every sampled point passes.
    pub first_pass: Option<(u32, f64)>,
}

/// Points `e^{iθ}·π(x₀ + v)` with `v` uniform in the ball of radius `r` in
/// the holomorphic tangent space at `x₀`, `π` the radial projection onto `X`
/// and `|θ| ≤ theta_halfwidth`.
pub fn slice_neighbourhood(
    manifold: &Manifold,
    x0: &SurfacePoint,
    radius: f64,
    count: usize,
    theta_halfwidth: f64,
    seed: u64,
) -> Result<Vec<SurfacePoint>> {
    let frame = manifold.holomorphic_tangent_frame(x0)?;
    let dim = 2 * frame.len();
    (0..count)
        .map(|i| {
            let mut rng = draw_rng(seed, i as u64);
            let dir = random_unit_vector(&mut rng, frame.len());
            let rad = radius * rng.random::<f64>().powf(1.0 / dim as f64);
            let theta = if theta_halfwidth > 0.0 {
                rng.random_range(-theta_halfwidth..=theta_halfwidth)
            } else {
                0.0
            };
            let mut v = x0.coords.clone();
            for (c, f) in dir.iter().zip(&frame) {
                for (vj, fj) in v.iter_mut().zip(f) {
                    *vj += c * fj * rad;
                }
            }
            let p = manifold.project_radial(&v)?;
            Ok(manifold.act(theta, &p))
        })
        .collect()
}

/// Scans multipliers `m = 1..=max` and radii for the first neighbourhood on
/// which `|1 − R| < σ` and `|I| < imag_bound` at every sampled point.
pub fn ratio_report(
    manifold: &Manifold,
    x0: &SurfacePoint,
    source: &MeasureSource<'_>,
    config: &RatioConfig,
) -> Result<RatioReport> {
    let k = manifold.stratum_order(x0, ZERO_TOLERANCE)?;
    let neighbourhoods: Vec<Vec<SurfacePoint>> = config
        .radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            slice_neighbourhood(
                manifold,
                x0,
                r,
                config.points,
                config.theta_halfwidth,
                config.seed.wrapping_add(i as u64),
            )
        })
        .collect::<Result<_>>()?;
    let bases: Vec<FourierBasis> = (1..=config.max_multiplier + 1)
        .into_par_iter()
        .map(|j| FourierBasis::build(manifold, k * j, source))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut first_pass = None;
    for m in 1..=config.max_multiplier {
        let lower = &bases[m as usize - 1];
        let upper = &bases[m as usize];
        for (&radius, pts) in config.radii.iter().zip(&neighbourhoods) {
            let mut real_defect = 0.0f64;
            let mut imag = 0.0f64;
            let mut undefined = 0;
            for x in pts {
                match ratio_diagnostic(lower, upper, x, x0) {
                    Ok((r, i)) => {
                        real_defect = real_defect.max((1.0 - r).abs());
                        imag = imag.max(i.abs());
                    }
                    Err(Error::UndefinedRatio { .. }) => undefined += 1,
                    Err(e) => return Err(e),
                }
            }
            let pass = undefined == 0 && real_defect < config.sigma && imag < config.imag_bound;
            if pass && first_pass.is_none() {
                first_pass = Some((m, radius));
            }
            rows.push(RatioRow {
                multiplier: m,
                radius,
                max_real_defect: real_defect,
                max_imag: imag,
                undefined,
                pass,
            });
        }
    }
    Ok(RatioReport {
        stratum_order: k,
        config: config.clone(),
        rows,
        first_pass,
    })
}
