use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use szego::basis::{dimension, enumerate_multiindices, FourierBasis, MeasureSource};
use szego::fourier::{circle_average, orbit_components, OrbitQuadrature};
use szego::geometry::WeightVector;
use szego::integrate::random_unit_vector;
use szego::kernel::{root_of_unity_selector, selector_closed_form, szego_kernel};
use szego::{Manifold, ManifoldSpec, SurfacePoint};

fn weights() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..=6, 2..=4)
}

fn sphere_point(m: &Manifold, seed: u64) -> SurfacePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    m.project_radial(&random_unit_vector(&mut rng, m.n())).unwrap()
}

/// `Σ c_k z^{a_k} z̄^{b_k}` with small exponents.
#[derive(Clone, Debug)]
struct TestPoly(Vec<(Complex64, Vec<u32>, Vec<u32>)>);

impl TestPoly {
    fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .map(|(c, a, b)| {
                z.iter()
                    .zip(a.iter().zip(b))
                    .fold(*c, |acc, (zj, (&p, &q))| acc * zj.powu(p) * zj.conj().powu(q))
            })
            .sum()
    }

    fn degrees(&self, w: &[u32]) -> Vec<i64> {
        let mut d: Vec<i64> = self
            .0
            .iter()
            .map(|(_, a, b)| a.iter().zip(b).zip(w).map(|((&p, &q), &wj)| (p as i64 - q as i64) * wj as i64).sum())
            .collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

fn test_poly(n: usize) -> impl Strategy<Value = TestPoly> {
    let term = (
        -1.0f64..1.0,
        -1.0f64..1.0,
        prop::collection::vec(0u32..=3, n),
        prop::collection::vec(0u32..=2, n),
    )
        .prop_map(|(re, im, a, b)| (Complex64::new(re, im), a, b));
    prop::collection::vec(term, 1..=4).prop_map(TestPoly)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_count_equals_dimension(w in weights(), m in 0u32..=25) {
        let (wv, _) = WeightVector::new(&w).unwrap();
        let idx = enumerate_multiindices(&wv, m);
        prop_assert_eq!(idx.len() as u64, dimension(&wv, m));
        for a in &idx {
            prop_assert_eq!(a.weighted_degree(), m);
        }
    }

    #[test]
    fn basis_values_are_equivariant(w in weights(), m in 0u32..=12, seed in any::<u64>(), theta in 0.0f64..6.3) {
        let s = Manifold::new(&ManifoldSpec::sphere(&w)).unwrap();
        let b = FourierBasis::build(&s, m, &MeasureSource::RoundExact).unwrap();
        let x = sphere_point(&s, seed);
        let phase = Complex64::from_polar(1.0, m as f64 * theta);
        let fx = b.eval(&x);
        let fy = b.eval(&s.act(theta, &x));
        let scale = fx.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for (a, c) in fx.iter().zip(&fy) {
            prop_assert!((c - a * phase).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn kernel_is_invariant_under_the_diagonal_action(seed in any::<u64>(), theta in 0.0f64..6.3, m in 1u32..=10) {
        let s = Manifold::new(&ManifoldSpec::sphere(&[1, 2])).unwrap();
        let b = FourierBasis::build(&s, m, &MeasureSource::RoundExact).unwrap();
        let x = sphere_point(&s, seed);
        let y = sphere_point(&s, seed ^ 0x9e37);
        let a = szego_kernel(&b, &x, &y).value;
        let c = szego_kernel(&b, &s.act(theta, &x), &s.act(theta, &y)).value;
        prop_assert!((a - c).norm() <= 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn circle_average_is_idempotent(p in test_poly(2), seed in any::<u64>(), m in -6i64..=8) {
        let s = Manifold::new(&ManifoldSpec::sphere(&[1, 2])).unwrap();
        let x = sphere_point(&s, seed);
        let q = OrbitQuadrature::for_max_level(12);
        let once = |y: &SurfacePoint| circle_average(|z: &SurfacePoint| p.eval(&z.coords), y, m, &s, &q);
        let a = once(&x);
        let b = circle_average(once, &x, m, &s, &q);
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn components_sum_back_to_the_function(p in test_poly(2), seed in any::<u64>()) {
        let s = Manifold::new(&ManifoldSpec::sphere(&[1, 2])).unwrap();
        let x = sphere_point(&s, seed);
        let q = OrbitQuadrature::for_max_level(12);
        let degrees = p.degrees(&[1, 2]);
        let comps = orbit_components(|z: &SurfacePoint| p.eval(&z.coords), &x, &degrees, &s, &q);
        let total: Complex64 = comps.iter().sum();
        let u = p.eval(&x.coords);
        prop_assert!((total - u).norm() <= 1e-12 * u.norm().max(1.0));
    }

    #[test]
    fn selector_matches_divisibility(k in 1u32..=12, m in 0u32..=200) {
        let exact = root_of_unity_selector(k, m).unwrap();
        prop_assert_eq!(exact, selector_closed_form(k, m));
        prop_assert_eq!(exact, if m % k == 0 { k as i64 } else { 0 });
    }
}
