//! Surface sampling and Monte-Carlo integration on `X`.
//!
//! Every draw `i` uses its own ChaCha stream derived from `(seed, i)`, so
//! sample sets are identical for any thread count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{Manifold, ManifoldKind, SurfacePoint};
use crate::linalg::pairwise_sum;

/// Uniform unit vector in `ℂⁿ ≅ ℝ^{2n}` from normalized Gaussians.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// RNG for draw `index` of a sampling run.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMethod {
    SphereUniform,
    ImplicitProjection,
}

/// Points of `X` with surface-measure quadrature weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub points: Vec<SurfacePoint>,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub method: SampleMethod,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sum of weights: the (estimated) surface area.
    pub fn area(&self) -> f64 {
        pairwise_sum(&self.weights)
    }
}

/// Uniform points on `S^{2n−1}` with equal weights `2πⁿ/(n−1)!/count`.
pub fn sample_sphere(n: usize, count: usize, seed: u64) -> SampleSet {
    let w = Manifold::sphere_area(n) / count as f64;
    let points = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(seed, i as u64);
            let coords = random_unit_vector(&mut rng, n);
            let residual = (coords.iter().map(|c| c.norm_sqr()).sum::<f64>() - 1.0).abs();
            SurfacePoint { coords, residual }
        })
        .collect();
    SampleSet {
        points,
        weights: vec![w; count],
        seed,
        method: SampleMethod::SphereUniform,
    }
}

/// Radial projection of uniform directions onto a star-shaped `X`.
///
/// A point `t·u` carries weight `area(S^{2n−1})/count · t^{2n−1} · |∇ρ| / |u·∇ρ|`,
/// the Jacobian of the cone map from the unit sphere onto `X`.
pub fn sample_hypersurface(m: &Manifold, count: usize, seed: u64) -> Result<SampleSet> {
    let n = m.n();
    let base = Manifold::sphere_area(n) / count as f64;
    let draws: Vec<Result<(SurfacePoint, f64)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(seed, i as u64);
            let u = random_unit_vector(&mut rng, n);
            let (x, t) = m.radial_point(&u)?;
            let g = m.d_rho(&x.coords);
            let grad_norm = 2.0 * g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let radial = 2.0 * g.iter().zip(&u).map(|(g, u)| (g * u).re).sum::<f64>();
            let jac = t.powi(2 * n as i32 - 1) * grad_norm / radial.abs();
            Ok((x, base * jac))
        })
        .collect();
    let mut points = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for d in draws {
        let (x, w) = d?;
        points.push(x);
        weights.push(w);
    }
    Ok(SampleSet {
        points,
        weights,
        seed,
        method: SampleMethod::ImplicitProjection,
    })
}

/// Default backend for a manifold: exact-uniform on spheres, radial
/// projection otherwise.
pub fn sample_manifold(m: &Manifold, count: usize, seed: u64) -> Result<SampleSet> {
    match m.kind() {
        ManifoldKind::Sphere => Ok(sample_sphere(m.n(), count, seed)),
        ManifoldKind::Hypersurface => sample_hypersurface(m, count, seed),
    }
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: Complex64,
    pub stderr: f64,
}

/// `∫_X f · density dS` estimated from a sample set.
pub fn integrate_surface<F>(
    f: F,
    samples: &SampleSet,
    density: Option<&(dyn Fn(&SurfacePoint) -> f64 + Sync)>,
) -> Estimate
where
    F: Fn(&SurfacePoint) -> Complex64 + Sync,
{
    let count = samples.len() as f64;
    let ys: Vec<Complex64> = samples
        .points
        .par_iter()
        .zip(&samples.weights)
        .map(|(x, &w)| {
            let d = density.map_or(1.0, |rho| rho(x));
            f(x) * (w * d * count)
        })
        .collect();
    estimate_from_terms(&ys)
}

/// Mean and standard error of per-sample terms `Y_i`.
pub fn estimate_from_terms(ys: &[Complex64]) -> Estimate {
    let count = ys.len() as f64;
    let mean = pairwise_sum(ys) / count;
    let dev: Vec<f64> = ys.iter().map(|y| (y - mean).norm_sqr()).collect();
    let var = if ys.len() > 1 {
        pairwise_sum(&dev) / (count - 1.0)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        stderr: (var / count).sqrt(),
    }
}

/// Sample set with compliant-measure weights `w_i · λ(x_i)` folded in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub samples: SampleSet,
    /// Effective weights including the volume density.
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Compliant measure `dv_X = λ dS` on `X`.
    pub fn compliant(m: &Manifold, count: usize, seed: u64) -> Result<Self> {
        let samples = sample_manifold(m, count, seed)?;
        let density: Vec<Result<f64>> = samples
            .points
            .par_iter()
            .map(|x| m.volume_density(x))
            .collect();
        let mut weights = Vec::with_capacity(count);
        for (w, d) in samples.weights.iter().zip(density) {
            weights.push(w * d?);
        }
        Ok(Self { samples, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> &[SurfacePoint] {
        &self.samples.points
    }

    pub fn volume(&self) -> f64 {
        pairwise_sum(&self.weights)
    }
}
