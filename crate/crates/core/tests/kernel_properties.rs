//! Kernel identities: closed forms on round spheres, reproducing property,
//! trace identity and independence of the orthonormal basis.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use szego::basis::{
    enumerate_multiindices, gram_quadrature, orthonormalize, FourierBasis, GramMode, MeasureSource,
};
use szego::integrate::{estimate_from_terms, random_unit_vector, sample_sphere, Quadrature};
use szego::kernel::{decay_profile, kernel_from_values, szego_diagonal, szego_kernel};
use szego::{Manifold, ManifoldSpec, SurfacePoint};

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn random_point(m: &Manifold, rng: &mut ChaCha8Rng) -> SurfacePoint {
    m.project_radial(&random_unit_vector(rng, m.n())).unwrap()
}

fn inner(x: &SurfacePoint, y: &SurfacePoint) -> Complex64 {
    x.coords.iter().zip(&y.coords).map(|(a, b)| a * b.conj()).sum()
}

/// On the unit sphere in ℂⁿ, `S_m(x, y) = binom(m+n−1, n−1) (n−1)!/(2πⁿ) ⟨x, y⟩^m`.
fn sphere_closed_form(n: usize, m: u32, x: &SurfacePoint, y: &SurfacePoint) -> Complex64 {
    let factorial: f64 = (1..n).map(|k| k as f64).product();
    let c = binomial(m as u64 + n as u64 - 1, n as u64 - 1) * factorial / (2.0 * PI.powi(n as i32));
    inner(x, y).powu(m) * c
}

#[test]
fn round_sphere_kernels_match_the_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for n in [2usize, 3] {
        let s = Manifold::new(&ManifoldSpec::sphere(&vec![1; n])).unwrap();
        for m in [0u32, 1, 5, 17, 30] {
            let b = FourierBasis::build(&s, m, &MeasureSource::RoundExact).unwrap();
            for _ in 0..5 {
                let x = random_point(&s, &mut rng);
                let y = random_point(&s, &mut rng);
                let got = szego_kernel(&b, &x, &y).value;
                let want = sphere_closed_form(n, m, &x, &y);
                let scale = sphere_closed_form(n, m, &x, &x).re;
                assert!((got - want).norm() <= 1e-12 * scale, "n={n} m={m}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn five_sphere_diagonal() {
    let s = Manifold::new(&ManifoldSpec::sphere(&[1, 1, 1])).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for m in (20..=60).step_by(10) {
        let b = FourierBasis::build(&s, m, &MeasureSource::RoundExact).unwrap();
        let want = binomial(m as u64 + 2, 2) / PI.powi(3);
        for _ in 0..3 {
            let got = szego_diagonal(&b, &random_point(&s, &mut rng));
            assert!((got - want).abs() <= 1e-12 * want, "m={m}: {got} vs {want}");
        }
    }
}

#[test]
fn hermitian_symmetry_and_cauchy_schwarz() {
    let e = Manifold::new(&ManifoldSpec::example2()).unwrap();
    let q = Quadrature::compliant(&e, 5000, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for m in [6u32, 7, 12] {
        let b = FourierBasis::build(&e, m, &MeasureSource::Compliant(&q)).unwrap();
        for _ in 0..10 {
            let x = random_point(&e, &mut rng);
            let y = random_point(&e, &mut rng);
            let sxy = szego_kernel(&b, &x, &y).value;
            let syx = szego_kernel(&b, &y, &x).value;
            assert!((sxy - syx.conj()).norm() <= 1e-12 * sxy.norm().max(1.0));
            let bound = szego_diagonal(&b, &x) * szego_diagonal(&b, &y);
            assert!(sxy.norm_sqr() <= bound * (1.0 + 1e-12));
        }
    }
}

#[test]
fn kernel_does_not_depend_on_the_orthonormal_basis() {
    let e = Manifold::new(&ManifoldSpec::example2()).unwrap();
    let q = Quadrature::compliant(&e, 8000, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for m in [6u32, 9, 12] {
        let forward = enumerate_multiindices(e.weights(), m);
        let mut backward = forward.clone();
        backward.reverse();
        let a = orthonormalize(forward.clone(), &gram_quadrature(&forward, &q, GramMode::Full)).unwrap();
        let b = orthonormalize(backward.clone(), &gram_quadrature(&backward, &q, GramMode::Full)).unwrap();
        for _ in 0..5 {
            let x = random_point(&e, &mut rng);
            let y = random_point(&e, &mut rng);
            let sa = kernel_from_values(&a.eval(&x), &a.eval(&y));
            let sb = kernel_from_values(&b.eval(&x), &b.eval(&y));
            let scale = (szego_diagonal(&a, &x) * szego_diagonal(&a, &y)).sqrt();
            assert!((sa - sb).norm() <= 1e-10 * scale, "m={m}: {sa} vs {sb}");
        }
    }
}

#[test]
fn diagonal_integrates_to_the_dimension() {
    let e = Manifold::new(&ManifoldSpec::example2()).unwrap();
    let q = Quadrature::compliant(&e, 20_000, 40).unwrap();
    // An independent quadrature for the trace.
    let check = Quadrature::compliant(&e, 40_000, 41).unwrap();
    for m in [6u32, 8] {
        let b = FourierBasis::build(&e, m, &MeasureSource::Compliant(&q)).unwrap();
        let ys: Vec<Complex64> = check
            .points()
            .iter()
            .zip(&check.weights)
            .map(|(x, &w)| Complex64::new(szego_diagonal(&b, x) * w * check.len() as f64, 0.0))
            .collect();
        let est = estimate_from_terms(&ys);
        let d = b.dim() as f64;
        // The basis carries its own quadrature error, a few percent at this size.
        assert!((est.value.re - d).abs() <= 5.0 * est.stderr + 0.05 * d, "m={m}: {} vs {d}", est.value.re);
    }
}

#[test]
fn kernel_reproduces_basis_functions() {
    let s = Manifold::new(&ManifoldSpec::sphere(&[1, 2])).unwrap();
    let samples = sample_sphere(2, 200_000, 77);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in [3u32, 6] {
        let b = FourierBasis::build(&s, m, &MeasureSource::RoundExact).unwrap();
        let x = random_point(&s, &mut rng);
        let fx = b.eval(&x);
        for j in 0..b.dim() {
            let ys: Vec<Complex64> = samples
                .points
                .iter()
                .zip(&samples.weights)
                .map(|(y, &w)| {
                    let fy = b.eval(y);
                    kernel_from_values(&fx, &fy) * fy[j] * w * samples.len() as f64
                })
                .collect();
            let est = estimate_from_terms(&ys);
            assert!((est.value - fx[j]).norm() <= 5.0 * est.stderr, "m={m} j={j}");
        }
    }
}

#[test]
fn decay_slope_grows_with_orbit_separation() {
    let s = Manifold::new(&ManifoldSpec::sphere(&[1, 1])).unwrap();
    let x = s.point(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
    let levels: Vec<u32> = (5..=30).collect();
    let mut last = 0.0;
    for t in [0.2f64, 0.4, 0.6, 0.8, 1.0] {
        let y = s.project_radial(&[Complex64::new(t.cos(), 0.0), Complex64::new(t.sin(), 0.0)]).unwrap();
        let p = decay_profile(&s, &x, &y, &levels, &MeasureSource::RoundExact).unwrap();
        assert!(p.slope < last, "slope {} at t = {t}", p.slope);
        assert!((p.slope - t.cos().ln()).abs() <= 0.02 * t.cos().ln().abs());
        last = p.slope;
    }
}
