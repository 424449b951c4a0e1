//! Equivariant maps `Φ : X → ℂ^N` assembled from orthonormal bases of
//! several Fourier levels, with sampled immersion and separation
//! certificates.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{dimension, FourierBasis, MeasureSource};
use crate::error::{Error, Result};
use crate::geometry::{realify, Manifold, SurfacePoint, ZERO_TOLERANCE};
use crate::integrate::{draw_rng, random_unit_vector};
use crate::linalg::singular_values;

/// Smallest singular value below which the Jacobian counts as degenerate.
pub const IMMERSION_FLOOR: f64 = 1e-6;
/// Image distance below which a checked pair counts as unseparated.
pub const SEPARATION_FLOOR: f64 = 1e-8;
/// Default ambient separation threshold for checked pairs.
pub const SEPARATION_DELTA: f64 = 0.05;
/// Near-stratum samples lie within this distance of a singular stratum.
pub const NEAR_STRATUM_RADIUS: f64 = 0.05;
/// Random draws per candidate order when confirming strata.
const STRATA_SEARCH: usize = 64;

/// Levels, dimensions and weights of an embedding, without any bases.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingPlan {
    pub m: u32,
    pub m0: Option<u32>,
    pub strata: Vec<u32>,
    pub levels: Vec<u32>,
    pub dims: Vec<u64>,
    pub total_dim: u64,
    pub min_weight: u32,
    pub warnings: Vec<String>,
}

/// Levels `{k·m, k·(m+1) : k ∈ strata} ∪ extra`, sorted and deduplicated.
pub fn plan_levels(strata: &BTreeSet<u32>, m: u32, extra: &[u32]) -> Vec<u32> {
    let mut levels: BTreeSet<u32> = BTreeSet::new();
    for &k in strata {
        levels.insert(k * m);
        levels.insert(k * (m + 1));
    }
    levels.extend(extra.iter().copied());
    levels.into_iter().collect()
}

pub fn plan_embedding(
    manifold: &Manifold,
    strata: &BTreeSet<u32>,
    m: u32,
    m0: Option<u32>,
    extra: &[u32],
) -> Result<EmbeddingPlan> {
    if m == 0 {
        return Err(Error::InvalidSpec("embedding parameter m must be at least 1".into()));
    }
    if extra.contains(&0) {
        return Err(Error::InvalidSpec("extra levels must be positive".into()));
    }
    let levels = plan_levels(strata, m, extra);
    let dims: Vec<u64> = levels.iter().map(|&l| dimension(manifold.weights(), l)).collect();
    let mut warnings = Vec::new();
    for (l, d) in levels.iter().zip(&dims) {
        if *d == 0 {
            let msg = format!("level {l} has no monomials; block kept empty");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let min_weight = levels
        .iter()
        .zip(&dims)
        .filter(|(_, d)| **d > 0)
        .map(|(l, _)| *l)
        .min()
        .ok_or_else(|| Error::InvalidSpec("every embedding block is empty".into()))?;
    if let Some(m0) = m0 {
        if min_weight <= m0 {
            return Err(Error::MinWeight { min_weight, m0 });
        }
    }
    Ok(EmbeddingPlan {
        m,
        m0,
        strata: strata.iter().copied().collect(),
        total_dim: dims.iter().sum(),
        levels,
        dims,
        min_weight,
        warnings,
    })
}

/// Confirmed stratum orders of `X`.
pub fn confirmed_strata(manifold: &Manifold) -> BTreeSet<u32> {
    manifold.strata_orders(STRATA_SEARCH, 0).confirmed
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingMap {
    pub plan: EmbeddingPlan,
    pub blocks: Vec<FourierBasis>,
    pub coordinate_weights: Vec<u32>,
}

impl EmbeddingMap {
    pub fn from_plan(manifold: &Manifold, plan: EmbeddingPlan, source: &MeasureSource<'_>) -> Result<Self> {
        let blocks: Vec<FourierBasis> = plan
            .levels
            .par_iter()
            .map(|&l| FourierBasis::build(manifold, l, source))
            .collect::<Result<_>>()?;
        let coordinate_weights = blocks
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.level, b.dim()))
            .collect();
        Ok(Self {
            plan,
            blocks,
            coordinate_weights,
        })
    }

    /// Blocks at exactly the given levels, bypassing the stratum plan.
    pub fn from_levels(manifold: &Manifold, m: u32, levels: &[u32], source: &MeasureSource<'_>) -> Result<Self> {
        let mut levels = levels.to_vec();
        levels.sort_unstable();
        levels.dedup();
        let dims: Vec<u64> = levels.iter().map(|&l| dimension(manifold.weights(), l)).collect();
        let min_weight = levels
            .iter()
            .zip(&dims)
            .filter(|(_, d)| **d > 0)
            .map(|(l, _)| *l)
            .min()
            .unwrap_or(0);
        let plan = EmbeddingPlan {
            m,
            m0: None,
            strata: Vec::new(),
            total_dim: dims.iter().sum(),
            levels,
            dims,
            min_weight,
            warnings: Vec::new(),
        };
        Self::from_plan(manifold, plan, source)
    }

    pub fn total_dim(&self) -> usize {
        self.coordinate_weights.len()
    }

    pub fn min_weight(&self) -> u32 {
        self.plan.min_weight
    }

    pub fn levels(&self) -> Vec<u32> {
        self.blocks.iter().map(|b| b.level).collect()
    }

    pub fn evaluate(&self, x: &SurfacePoint) -> Vec<Complex64> {
        self.blocks.iter().flat_map(|b| b.eval(x)).collect()
    }

    /// Holomorphic Jacobian `∂Φ_j/∂z_k`, `N × n`.
    pub fn jacobian(&self, x: &SurfacePoint) -> DMatrix<Complex64> {
        let n = x.dim();
        let mut out = DMatrix::<Complex64>::zeros(self.total_dim(), n);
        let mut row = 0;
        for b in &self.blocks {
            let j = b.eval_jacobian(x);
            out.view_mut((row, 0), (j.nrows(), n)).copy_from(&j);
            row += j.nrows();
        }
        out
    }
}

/// Builds `Φ_m` on the confirmed strata of `X`.
pub fn build_embedding(
    manifold: &Manifold,
    m: u32,
    m0: Option<u32>,
    extra: &[u32],
    source: &MeasureSource<'_>,
) -> Result<EmbeddingMap> {
    let plan = plan_embedding(manifold, &confirmed_strata(manifold), m, m0, extra)?;
    EmbeddingMap::from_plan(manifold, plan, source)
}

/// `max_j |Φ_j(e^{iθ}x) − e^{i w_j θ} Φ_j(x)| / max(1, max_j |Φ_j(x)|)`.
pub fn check_equivariance(map: &EmbeddingMap, manifold: &Manifold, x: &SurfacePoint, theta: f64) -> f64 {
    let base = map.evaluate(x);
    let moved = map.evaluate(&manifold.act(theta, x));
    let scale = base.iter().map(|v| v.norm()).fold(1.0, f64::max);
    moved
        .iter()
        .zip(&base)
        .zip(&map.coordinate_weights)
        .map(|((a, b), &w)| (a - b * Complex64::from_polar(1.0, w as f64 * theta)).norm())
        .fold(0.0, f64::max)
        / scale
}

/// `max_j |dΦ(T)_j − i w_j Φ_j(x)| / max(1, max_j |Φ_j(x)|)`.
pub fn reeb_eigen_residual(map: &EmbeddingMap, manifold: &Manifold, x: &SurfacePoint) -> f64 {
    let jac = map.jacobian(x);
    let t = manifold.reeb_vector(x);
    let phi = map.evaluate(x);
    let scale = phi.iter().map(|v| v.norm()).fold(1.0, f64::max);
    (0..jac.nrows())
        .map(|j| {
            let dt: Complex64 = (0..jac.ncols()).map(|k| jac[(j, k)] * t[k]).sum();
            let want = Complex64::new(0.0, map.coordinate_weights[j] as f64) * phi[j];
            (dt - want).norm()
        })
        .fold(0.0, f64::max)
        / scale
}

/// Where a stratified sample was drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum PointClass {
    Regular,
    Singular { order: u32 },
    NearSingular { order: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratifiedPoint {
    pub class: PointClass,
    pub point: SurfacePoint,
}

/// Point supported exactly on `support`.
fn point_on_support(manifold: &Manifold, support: &[usize], rng: &mut impl Rng) -> Result<SurfacePoint> {
    let u = random_unit_vector(rng, manifold.n());
    let v: Vec<Complex64> = (0..manifold.n())
        .map(|j| if support.contains(&j) { u[j] } else { Complex64::new(0.0, 0.0) })
        .collect();
    manifold.project_radial(&v)
}

/// A point of `X_k` pushed off its support by at most `radius`.
fn point_near_support(
    manifold: &Manifold,
    support: &[usize],
    radius: f64,
    rng: &mut impl Rng,
) -> Result<SurfacePoint> {
    let base = point_on_support(manifold, support, rng)?;
    let n = manifold.n();
    let w = random_unit_vector(rng, n);
    let r = radius * rng.random::<f64>().max(1e-3);
    let off: Vec<usize> = (0..n).filter(|j| !support.contains(j)).collect();
    let norm = off.iter().map(|&j| w[j].norm_sqr()).sum::<f64>().sqrt();
    let mut v = base.coords.clone();
    for &j in &off {
        v[j] += w[j] / norm * r;
    }
    manifold.project_radial(&v)
}

/// Singular supports `(order, support)` of `X`.
fn singular_supports(manifold: &Manifold, strata: &BTreeSet<u32>) -> Vec<(u32, Vec<usize>)> {
    strata
        .iter()
        .filter(|&&k| k > 1)
        .flat_map(|&k| manifold.supports_with_order(k).into_iter().map(move |s| (k, s)))
        .collect()
}

/// Stratified sample: 40% regular, 40% on singular strata, 20% within
/// [`NEAR_STRATUM_RADIUS`] of a singular stratum. Without singular strata
/// every sample is regular.
pub fn stratified_points(manifold: &Manifold, count: usize, seed: u64) -> Result<Vec<StratifiedPoint>> {
    let supports = singular_supports(manifold, &confirmed_strata(manifold));
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(seed, i as u64);
            let slot = i % 5;
            if supports.is_empty() || slot < 2 {
                let u = random_unit_vector(&mut rng, manifold.n());
                return Ok(StratifiedPoint {
                    class: PointClass::Regular,
                    point: manifold.project_radial(&u)?,
                });
            }
            let (k, support) = &supports[(i / 5) % supports.len()];
            if slot < 4 {
                Ok(StratifiedPoint {
                    class: PointClass::Singular { order: *k },
                    point: point_on_support(manifold, support, &mut rng)?,
                })
            } else {
                Ok(StratifiedPoint {
                    class: PointClass::NearSingular { order: *k },
                    point: point_near_support(manifold, support, NEAR_STRATUM_RADIUS, &mut rng)?,
                })
            }
        })
        .collect()
}

/// Orthonormal real frame of `T_x X`: `f_a`, `i f_a` from the holomorphic
/// tangent frame and the normalized component of `T` orthogonal to them.
pub fn real_tangent_frame(manifold: &Manifold, x: &SurfacePoint) -> Result<Vec<Vec<Complex64>>> {
    let hol = manifold.holomorphic_tangent_frame(x)?;
    let mut frame: Vec<Vec<Complex64>> = Vec::with_capacity(2 * hol.len() + 1);
    for f in &hol {
        frame.push(f.clone());
        frame.push(f.iter().map(|c| c * Complex64::i()).collect());
    }
    let mut t = manifold.reeb_vector(x);
    for f in &frame {
        let proj: f64 = f.iter().zip(&t).map(|(a, b)| (a.conj() * b).re).sum();
        for (tj, fj) in t.iter_mut().zip(f) {
            *tj -= fj * proj;
        }
    }
    let norm = t.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::SingularPoint(norm));
    }
    frame.push(t.into_iter().map(|c| c / norm).collect());
    Ok(frame)
}

/// Singular values of `dΦ` on `T_x X`, descending.
pub fn tangent_singular_values(map: &EmbeddingMap, manifold: &Manifold, x: &SurfacePoint) -> Result<Vec<f64>> {
    let jac = map.jacobian(x);
    let frame = real_tangent_frame(manifold, x)?;
    let cols: Vec<Vec<f64>> = frame
        .iter()
        .map(|v| {
            let image: Vec<Complex64> = (0..jac.nrows())
                .map(|j| (0..jac.ncols()).map(|k| jac[(j, k)] * v[k]).sum())
                .collect();
            realify(&image)
        })
        .collect();
    let rows = 2 * jac.nrows();
    let real = DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r]);
    Ok(singular_values(&real))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImmersionSample {
    pub index: usize,
    pub class: PointClass,
    pub point: SurfacePoint,
    pub singular_values: Vec<f64>,
    pub smallest: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImmersionReport {
    pub samples: Vec<ImmersionSample>,
    pub min_singular_value: f64,
    pub argmin: usize,
    /// Samples whose smallest singular value is below [`IMMERSION_FLOOR`].
    pub failures: Vec<usize>,
    pub max_reeb_residual: f64,
    pub pass: bool,
}

pub fn immersion_report(map: &EmbeddingMap, manifold: &Manifold, count: usize, seed: u64) -> Result<ImmersionReport> {
    let pts = stratified_points(manifold, count, seed)?;
    let rows: Vec<Result<(ImmersionSample, f64)>> = pts
        .into_par_iter()
        .enumerate()
        .map(|(index, sp)| {
            let sv = tangent_singular_values(map, manifold, &sp.point)?;
            let smallest = sv.last().copied().unwrap_or(0.0);
            let reeb = reeb_eigen_residual(map, manifold, &sp.point);
            Ok((
                ImmersionSample {
                    index,
                    class: sp.class,
                    point: sp.point,
                    singular_values: sv,
                    smallest,
                },
                reeb,
            ))
        })
        .collect();
    let mut samples = Vec::with_capacity(rows.len());
    let mut max_reeb = 0.0f64;
    for r in rows {
        let (s, reeb) = r?;
        max_reeb = max_reeb.max(reeb);
        samples.push(s);
    }
    let (argmin, min_sv) = samples
        .iter()
        .map(|s| s.smallest)
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let failures: Vec<usize> = samples
        .iter()
        .filter(|s| !(s.smallest > IMMERSION_FLOOR))
        .map(|s| s.index)
        .collect();
    Ok(ImmersionReport {
        pass: failures.is_empty() && !samples.is_empty(),
        samples,
        min_singular_value: min_sv,
        argmin,
        failures,
        max_reeb_residual: max_reeb,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    SameOrbit,
    CrossStratum,
    NearStratum,
    Random,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairRecord {
    pub index: usize,
    pub kind: PairKind,
    pub x: SurfacePoint,
    pub y: SurfacePoint,
    pub order_x: u32,
    pub order_y: u32,
    pub ambient_distance: f64,
    pub quotient_distance: f64,
    pub image_distance: f64,
    /// Levels whose blocks agree at `x` and `y` to within the floor.
    pub unseparated_levels: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairSummary {
    pub kind: PairKind,
    pub ambient_distance: f64,
    pub quotient_distance: f64,
    pub image_distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationReport {
    pub pairs: Vec<PairSummary>,
    pub delta: f64,
    pub floor: f64,
    /// Pairs with ambient distance above `delta`.
    pub checked: usize,
    pub min_image_distance: f64,
    pub violations: Vec<PairRecord>,
    pub pass: bool,
}

fn sample_pair(
    manifold: &Manifold,
    supports: &[(u32, Vec<usize>)],
    i: usize,
    seed: u64,
) -> Result<(PairKind, SurfacePoint, SurfacePoint)> {
    let mut rng = draw_rng(seed, i as u64);
    let n = manifold.n();
    let regular = |rng: &mut _| manifold.project_radial(&random_unit_vector(rng, n));
    let pick = |rng: &mut rand_chacha::ChaCha8Rng| -> Option<(u32, Vec<usize>)> {
        (!supports.is_empty()).then(|| supports[rng.random_range(0..supports.len())].clone())
    };
    let slot = i % 10;
    match slot {
        0..=2 => {
            let x = match (slot, pick(&mut rng)) {
                (0, _) | (_, None) => regular(&mut rng)?,
                (_, Some((_, s))) => point_on_support(manifold, &s, &mut rng)?,
            };
            let k = manifold.stratum_order(&x, ZERO_TOLERANCE)?;
            // Half-period shifts are the pairs a single level cannot separate.
            let theta = if k > 1 && slot == 2 {
                std::f64::consts::PI / k as f64 * (1 + 2 * rng.random_range(0..k)) as f64
            } else {
                rng.random_range(0.0..std::f64::consts::TAU)
            };
            Ok((PairKind::SameOrbit, x.clone(), manifold.act(theta, &x)))
        }
        3..=5 => match pick(&mut rng) {
            Some((_, s)) => {
                let x = point_on_support(manifold, &s, &mut rng)?;
                let y = match pick(&mut rng) {
                    Some((_, s2)) if slot == 5 => point_on_support(manifold, &s2, &mut rng)?,
                    _ => regular(&mut rng)?,
                };
                Ok((PairKind::CrossStratum, x, y))
            }
            None => Ok((PairKind::CrossStratum, regular(&mut rng)?, regular(&mut rng)?)),
        },
        6..=7 => match pick(&mut rng) {
            Some((_, s)) => {
                let x = point_near_support(manifold, &s, NEAR_STRATUM_RADIUS, &mut rng)?;
                let y = if slot == 6 {
                    point_near_support(manifold, &s, NEAR_STRATUM_RADIUS, &mut rng)?
                } else {
                    let theta = rng.random_range(0.0..std::f64::consts::TAU);
                    manifold.act(theta, &x)
                };
                Ok((PairKind::NearStratum, x, y))
            }
            None => Ok((PairKind::NearStratum, regular(&mut rng)?, regular(&mut rng)?)),
        },
        _ => Ok((PairKind::Random, regular(&mut rng)?, regular(&mut rng)?)),
    }
}

fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt()
}

/// Samples `pair_count` stratified pairs; every pair of distinct points with
/// ambient distance above `delta` must have image distance above `floor`.
pub fn separation_report(
    map: &EmbeddingMap,
    manifold: &Manifold,
    pair_count: usize,
    delta: f64,
    floor: f64,
    seed: u64,
) -> Result<SeparationReport> {
    let supports = singular_supports(manifold, &confirmed_strata(manifold));
    let rows: Vec<Result<(PairSummary, Option<PairRecord>)>> = (0..pair_count)
        .into_par_iter()
        .map(|i| {
            let (kind, x, y) = sample_pair(manifold, &supports, i, seed)?;
            let fx = map.evaluate(&x);
            let fy = map.evaluate(&y);
            let ambient = distance(&x.coords, &y.coords);
            let image = distance(&fx, &fy);
            let quotient = manifold.quotient_distance(&x, &y);
            let summary = PairSummary {
                kind,
                ambient_distance: ambient,
                quotient_distance: quotient,
                image_distance: image,
            };
            let violation = (ambient > delta && !(image > floor)).then(|| {
                let mut offset = 0;
                let mut unseparated = Vec::new();
                for b in &map.blocks {
                    let d = b.dim();
                    if distance(&fx[offset..offset + d], &fy[offset..offset + d]) <= floor {
                        unseparated.push(b.level);
                    }
                    offset += d;
                }
                PairRecord {
                    index: i,
                    kind,
                    order_x: manifold.stratum_order(&x, ZERO_TOLERANCE).unwrap_or(0),
                    order_y: manifold.stratum_order(&y, ZERO_TOLERANCE).unwrap_or(0),
                    x: x.clone(),
                    y: y.clone(),
                    ambient_distance: ambient,
                    quotient_distance: quotient,
                    image_distance: image,
                    unseparated_levels: unseparated,
                }
            });
            Ok((summary, violation))
        })
        .collect();
    let mut pairs = Vec::with_capacity(pair_count);
    let mut violations = Vec::new();
    for r in rows {
        let (s, v) = r?;
        pairs.push(s);
        violations.extend(v);
    }
    let checked: Vec<&PairSummary> = pairs.iter().filter(|p| p.ambient_distance > delta).collect();
    let min_image = checked
        .iter()
        .map(|p| p.image_distance)
        .fold(f64::INFINITY, f64::min);
    Ok(SeparationReport {
        checked: checked.len(),
        pass: violations.is_empty(),
        pairs,
        delta,
        floor,
        min_image_distance: min_image,
        violations,
    })
}

/// Image distance between two specific points.
pub fn pair_image_distance(map: &EmbeddingMap, x: &SurfacePoint, y: &SurfacePoint) -> f64 {
    distance(&map.evaluate(x), &map.evaluate(y))
}

/// Result of increasing `m` until both certificates pass.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub tried: Vec<(u32, bool, bool)>,
    pub found: Option<u32>,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub m_start: u32,
    pub m_max: u32,
    pub extra: Vec<u32>,
    pub samples: usize,
    pub pairs: usize,
    pub seed: u64,
}

pub fn search_embedding(manifold: &Manifold, config: &SearchConfig, source: &MeasureSource<'_>) -> Result<SearchOutcome> {
    let mut tried = Vec::new();
    for m in config.m_start.max(1)..=config.m_max {
        let map = build_embedding(manifold, m, None, &config.extra, source)?;
        let imm = immersion_report(&map, manifold, config.samples, config.seed)?;
        let sep = separation_report(&map, manifold, config.pairs, SEPARATION_DELTA, SEPARATION_FLOOR, config.seed)?;
        tried.push((m, imm.pass, sep.pass));
        if imm.pass && sep.pass {
            return Ok(SearchOutcome { tried, found: Some(m) });
        }
    }
    Ok(SearchOutcome { tried, found: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ManifoldSpec;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn weighted() -> Manifold {
        Manifold::new(&ManifoldSpec::sphere(&[1, 2])).unwrap()
    }

    #[test]
    fn plan_examples() {
        let s = Manifold::new(&ManifoldSpec::sphere(&[1, 1])).unwrap();
        let p = plan_embedding(&s, &confirmed_strata(&s), 4, None, &[]).unwrap();
        assert_eq!(p.levels, vec![4, 5]);
        let w = weighted();
        let p = plan_embedding(&w, &confirmed_strata(&w), 4, None, &[]).unwrap();
        assert_eq!(p.levels, vec![4, 5, 8, 10]);
        assert_eq!(p.dims, vec![3, 3, 5, 6]);
        assert_eq!(p.total_dim, 17);
        let e = Manifold::new(&ManifoldSpec::example2()).unwrap();
        let p = plan_embedding(&e, &confirmed_strata(&e), 4, None, &[]).unwrap();
        assert_eq!(p.levels, vec![4, 5, 8, 10, 24, 30]);
        assert_eq!(p.dims, vec![3, 3, 7, 9, 35, 51]);
    }

    #[test]
    fn min_weight_law() {
        let w = weighted();
        let p = plan_embedding(&w, &confirmed_strata(&w), 101, Some(100), &[]).unwrap();
        assert_eq!(p.min_weight, 101);
        assert!(matches!(
            plan_embedding(&w, &confirmed_strata(&w), 100, Some(100), &[]),
            Err(Error::MinWeight { min_weight: 100, m0: 100 })
        ));
        assert!(matches!(
            plan_embedding(&w, &confirmed_strata(&w), 101, Some(100), &[50]),
            Err(Error::MinWeight { .. })
        ));
    }

    #[test]
    fn empty_block_is_kept_with_warning() {
        let m = Manifold::new(&ManifoldSpec::sphere(&[2, 3])).unwrap();
        let p = plan_embedding(&m, &confirmed_strata(&m), 2, None, &[1]).unwrap();
        assert!(p.levels.contains(&1));
        assert_eq!(p.dims[0], 0);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn evaluation_norm_is_sum_of_diagonals() {
        let w = weighted();
        let map = build_embedding(&w, 4, None, &[], &MeasureSource::RoundExact).unwrap();
        assert_eq!(map.total_dim(), 17);
        let x = w.project_radial(&[Complex64::new(0.3, 0.4), c(0.8)]).unwrap();
        let phi = map.evaluate(&x);
        let norm: f64 = phi.iter().map(|v| v.norm_sqr()).sum();
        let diag: f64 = map.blocks.iter().map(|b| crate::kernel::szego_diagonal(b, &x)).sum();
        assert!((norm - diag).abs() < 1e-12 * diag);
        assert!(check_equivariance(&map, &w, &x, 0.0) == 0.0);
        assert!(check_equivariance(&map, &w, &x, 1.234) < 1e-12);
        assert!(reeb_eigen_residual(&map, &w, &x) < 1e-10);
    }

    #[test]
    fn half_period_pair_needs_odd_block() {
        let w = weighted();
        let p = w.point(vec![c(0.0), Complex64::new(0.6, 0.8)]).unwrap();
        let q = w.act(std::f64::consts::FRAC_PI_2, &p);
        let even = EmbeddingMap::from_levels(&w, 4, &[4, 8], &MeasureSource::RoundExact).unwrap();
        assert!(pair_image_distance(&even, &p, &q) < 1e-12);
        let full = build_embedding(&w, 4, None, &[], &MeasureSource::RoundExact).unwrap();
        assert!(pair_image_distance(&full, &p, &q) > 0.1);
        assert_eq!(pair_image_distance(&full, &p, &p), 0.0);
    }

    #[test]
    fn stratified_quotas() {
        let w = weighted();
        let pts = stratified_points(&w, 100, 3).unwrap();
        let regular = pts.iter().filter(|p| p.class == PointClass::Regular).count();
        let singular = pts
            .iter()
            .filter(|p| matches!(p.class, PointClass::Singular { .. }))
            .count();
        assert_eq!((regular, singular), (40, 40));
        for p in &pts {
            if let PointClass::Singular { order } = p.class {
                assert_eq!(w.stratum_order(&p.point, ZERO_TOLERANCE).unwrap(), order);
            }
        }
    }

    #[test]
    fn real_frame_is_orthonormal_and_tangent() {
        let e = Manifold::new(&ManifoldSpec::example2()).unwrap();
        let x = e
            .project_radial(&[Complex64::new(0.3, 0.1), c(0.5), Complex64::new(0.2, -0.6)])
            .unwrap();
        let frame = real_tangent_frame(&e, &x).unwrap();
        assert_eq!(frame.len(), 5);
        let g = e.real_gradient(&x.coords);
        for (a, fa) in frame.iter().enumerate() {
            let normal: f64 = fa.iter().zip(&g).map(|(v, n)| (v.conj() * n).re).sum();
            assert!(normal.abs() < 1e-10);
            for (b, fb) in frame.iter().enumerate() {
                let ip: f64 = fa.iter().zip(fb).map(|(p, q)| (p.conj() * q).re).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-10);
            }
        }
    }
}
