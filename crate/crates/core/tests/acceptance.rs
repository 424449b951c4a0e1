//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! numbers and wall time against its budget.
//!
//! Exits non-zero when a criterion fails for any reason other than the
//! documented isotropy obstruction in the immersion check (see README).

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use szego::basis::{dimension, FourierBasis, MeasureSource};
use szego::embedding::{
    build_embedding, check_equivariance, confirmed_strata, immersion_report, pair_image_distance,
    plan_embedding, separation_report, EmbeddingMap, PointClass, SEPARATION_DELTA, SEPARATION_FLOOR,
};
use szego::fourier::{circle_average, parseval_defect, OrbitQuadrature};
use szego::integrate::{random_unit_vector, Quadrature};
use szego::kernel::{
    decay_profile, fit_expansion, ratio_report, root_of_unity_selector, selector_closed_form,
    stratum_vanishing_check, RatioConfig,
};
use szego::{Manifold, ManifoldSpec, SurfacePoint};

struct Outcome {
    pass: bool,
    /// Failure explained by a documented obstruction.
    known: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            known: false,
            detail,
        }
    }
}

fn sphere(w: &[u32]) -> Manifold {
    Manifold::new(&ManifoldSpec::sphere(w)).unwrap()
}

fn example2() -> Manifold {
    Manifold::new(&ManifoldSpec::example2()).unwrap()
}

fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn random_point(m: &Manifold, rng: &mut ChaCha8Rng) -> SurfacePoint {
    m.project_radial(&random_unit_vector(rng, m.n())).unwrap()
}

/// The three preset manifolds with their default embedding parameter.
fn presets() -> Vec<(&'static str, Manifold, u32)> {
    vec![
        ("S3", sphere(&[1, 1]), 2),
        ("w(1,2)", sphere(&[1, 2]), 4),
        ("example2", example2(), 4),
    ]
}

const EMBED_SAMPLES: usize = 50_000;

fn embedding_for(m: &Manifold, level: u32, q: &Option<Quadrature>) -> EmbeddingMap {
    build_embedding(m, level, None, &[], &source(m, q)).unwrap()
}

/// Round-exact on spheres of any weights, compliant quadrature otherwise.
fn source<'a>(m: &Manifold, q: &'a Option<Quadrature>) -> MeasureSource<'a> {
    match (m.kind(), q) {
        (szego::ManifoldKind::Sphere, _) | (_, None) => MeasureSource::RoundExact,
        (_, Some(q)) => MeasureSource::Compliant(q),
    }
}

fn quadrature_for(m: &Manifold, samples: usize, seed: u64) -> Option<Quadrature> {
    (m.kind() != szego::ManifoldKind::Sphere).then(|| Quadrature::compliant(m, samples, seed).unwrap())
}

fn c1_leading_coefficient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut pass = true;
    let mut detail = Vec::new();
    let cases: [(usize, fn(f64) -> f64); 2] = [
        (2, |m| (m + 1.0) / (2.0 * PI * PI)),
        (3, |m| (m + 1.0) * (m + 2.0) / 2.0 / PI.powi(3)),
    ];
    for (n, closed) in cases {
        let s = sphere(&vec![1; n]);
        let x = random_point(&s, &mut rng);
        let fit = fit_expansion(&s, &x, 20, 60, &MeasureSource::RoundExact).unwrap();
        let target = 1.0 / (2.0 * PI.powi(n as i32));
        let rel = (fit.c_lead - target).abs() / target;
        let closed_err = fit
            .levels
            .iter()
            .zip(&fit.values)
            .map(|(&m, v)| (v - closed(m as f64)).abs() / closed(m as f64))
            .fold(0.0, f64::max);
        pass &= rel < 0.01 && closed_err < 1e-10;
        detail.push(format!(
            "S{}: c_lead={:.6e} target={:.6e} rel={:.1e} closed-form max rel dev={:.1e}",
            2 * n - 1,
            fit.c_lead,
            target,
            rel,
            closed_err
        ));
    }
    Outcome::new(pass, detail.join("; "))
}

fn c2_stratum_vanishing() -> Outcome {
    let cases = [
        (sphere(&[1, 2]), vec![real(0.0), real(1.0)], 2u32),
        (sphere(&[1, 2, 6]), vec![real(0.0), real(0.0), real(1.0)], 6u32),
    ];
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut pass = true;
    for (m, coords, k) in &cases {
        let x0 = m.point(coords.clone()).unwrap();
        for level in (1..=60u32).filter(|l| l % k != 0) {
            let b = FourierBasis::build(m, level, &MeasureSource::RoundExact).unwrap();
            let cert = stratum_vanishing_check(&b, &x0, m).unwrap();
            pass &= cert.pass && cert.max_abs <= 1e-12 && cert.stratum_order == *k;
            worst = worst.max(cert.max_abs);
            count += 1;
        }
    }
    Outcome::new(pass, format!("{count} levels checked, max |f_j(x0)| = {worst:e}"))
}

fn c3_selector() -> Outcome {
    let mut bad = 0;
    for k in 1..=12 {
        for m in 0..=200 {
            if root_of_unity_selector(k, m).unwrap() != selector_closed_form(k, m) {
                bad += 1;
            }
        }
    }
    Outcome::new(bad == 0, format!("12 x 201 exact sums, {bad} mismatches"))
}

fn c4_factor_k() -> Outcome {
    let w = sphere(&[1, 2]);
    let x0 = w.point(vec![real(0.0), real(1.0)]).unwrap();
    let q = Quadrature::compliant(&w, 200_000, 2024).unwrap();
    let fit = fit_expansion(&w, &x0, 20, 60, &MeasureSource::Compliant(&q)).unwrap();
    let pass = fit.stratum_order == 2 && fit.relative_error <= 0.10;
    Outcome::new(
        pass,
        format!(
            "k={} |det L|={:.4} fitted c1={:.6e} predicted={:.6e} rel={:.3}",
            fit.stratum_order, fit.levi_determinant, fit.c_lead, fit.predicted, fit.relative_error
        ),
    )
}

fn c5_equivariance() -> Outcome {
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for (name, m, level) in presets() {
        let q = quadrature_for(&m, EMBED_SAMPLES, 11);
        let map = embedding_for(&m, level, &q);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut local = 0.0f64;
        for _ in 0..200 {
            let x = random_point(&m, &mut rng);
            let theta = rng.random_range(0.0..2.0 * PI);
            local = local.max(check_equivariance(&map, &m, &x, theta));
        }
        worst = worst.max(local);
        detail.push(format!("{name}: {local:.1e}"));
    }
    Outcome::new(worst <= 1e-10, format!("max scaled residual {}", detail.join(", ")))
}

fn c6_min_weight() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for m0 in [10u32, 100] {
        for (name, m, _) in presets() {
            let min_weight = if m.kind() == szego::ManifoldKind::Sphere {
                build_embedding(&m, m0 + 1, Some(m0), &[], &MeasureSource::RoundExact)
                    .map(|e| *e.coordinate_weights.iter().min().unwrap())
            } else {
                plan_embedding(&m, &confirmed_strata(&m), m0 + 1, Some(m0), &[]).map(|p| p.min_weight)
            };
            match min_weight {
                Ok(w) => {
                    pass &= w > m0;
                    detail.push(format!("{name}/m0={m0}: {w}"));
                }
                Err(e) => {
                    pass = false;
                    detail.push(format!("{name}/m0={m0}: {e}"));
                }
            }
        }
    }
    Outcome::new(pass, detail.join(", "))
}

fn c7_immersion() -> Outcome {
    let mut pass = true;
    let mut known = true;
    let mut detail = Vec::new();
    for (name, m, level) in presets() {
        let q = quadrature_for(&m, EMBED_SAMPLES, 13);
        let map = embedding_for(&m, level, &q);
        let reports: Vec<_> = [1u64, 2, 3]
            .iter()
            .map(|&seed| immersion_report(&map, &m, 100, seed).unwrap())
            .collect();
        let mins: Vec<f64> = reports.iter().map(|r| r.min_singular_value).collect();
        let mean = mins.iter().sum::<f64>() / 3.0;
        let stable = mins.iter().all(|v| (v - mean).abs() <= 0.2 * mean);
        let ok = reports.iter().all(|r| r.pass) && stable;
        if !ok {
            pass = false;
            // Documented obstruction: every block level is ≢ 1 (mod 6), so the
            // z1-derivative vanishes identically on the order-6 stratum.
            let levels = map.levels();
            let obstructed = levels.iter().all(|l| l % 6 != 1)
                && reports.iter().all(|r| {
                    r.failures.iter().all(|&i| {
                        r.samples[i].class == PointClass::Singular { order: 6 }
                    })
                });
            known &= name == "example2" && obstructed;
        }
        let classes: BTreeSet<String> = reports
            .iter()
            .flat_map(|r| r.failures.iter().map(|&i| format!("{:?}", r.samples[i].class)))
            .collect();
        detail.push(format!(
            "{name} m={level} levels={:?}: min sv per seed {:.3e}/{:.3e}/{:.3e}{}{}",
            map.levels(),
            mins[0],
            mins[1],
            mins[2],
            if stable { "" } else { " (unstable)" },
            if classes.is_empty() {
                String::new()
            } else {
                format!(" failures at {classes:?}")
            }
        ));
    }
    if !pass && known {
        let e = example2();
        let q = quadrature_for(&e, EMBED_SAMPLES, 13);
        let map = build_embedding(&e, 4, None, &[7], &source(&e, &q)).unwrap();
        let r = immersion_report(&map, &e, 100, 1).unwrap();
        detail.push(format!(
            "with extra level 7 (≡ 1 mod 6): min sv {:.3e}, pass={}",
            r.min_singular_value, r.pass
        ));
    }
    Outcome {
        pass,
        known: !pass && known,
        detail: detail.join("; "),
    }
}

fn c8_separation() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, m, level) in presets() {
        let q = quadrature_for(&m, EMBED_SAMPLES, 17);
        let map = embedding_for(&m, level, &q);
        let r = separation_report(&map, &m, 10_000, SEPARATION_DELTA, SEPARATION_FLOOR, 8).unwrap();
        pass &= r.pass;
        detail.push(format!(
            "{name}: {} checked, {} violations, min image dist {:.3e}",
            r.checked,
            r.violations.len(),
            r.min_image_distance
        ));
    }
    let w = sphere(&[1, 2]);
    let p = w.point(vec![real(0.0), Complex64::from_polar(1.0, 0.4)]).unwrap();
    let q = w.act(PI / 2.0, &p);
    let even = EmbeddingMap::from_levels(&w, 4, &[4, 8], &MeasureSource::RoundExact).unwrap();
    let full = build_embedding(&w, 4, None, &[], &MeasureSource::RoundExact).unwrap();
    let d_even = pair_image_distance(&even, &p, &q);
    let d_full = pair_image_distance(&full, &p, &q);
    let detected = d_even <= SEPARATION_FLOOR && d_full > SEPARATION_FLOOR;
    pass &= detected;
    detail.push(format!(
        "half-period pair: even blocks {{4,8}} dist {d_even:.1e} (violation={}), with {{5,10}} dist {d_full:.3}",
        d_even <= SEPARATION_FLOOR
    ));
    Outcome::new(pass, detail.join("; "))
}

fn c9_decay() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    let s = sphere(&[1, 1]);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let levels: Vec<u32> = (5..=40).collect();
    let mut worst = 0.0f64;
    let mut fitted = Vec::new();
    for _ in 0..5 {
        let x = random_point(&s, &mut rng);
        let y = random_point(&s, &mut rng);
        let ip: Complex64 = x.coords.iter().zip(&y.coords).map(|(a, b)| a * b.conj()).sum();
        let p = decay_profile(&s, &x, &y, &levels, &MeasureSource::RoundExact).unwrap();
        let rel = (p.slope - ip.norm().ln()).abs() / ip.norm().ln().abs();
        worst = worst.max(rel);
        fitted.push(p.levels.len());
    }
    pass &= worst <= 0.02;
    detail.push(format!(
        "S3: max rel slope error {worst:.1e} over 5 pairs (levels fitted {fitted:?})"
    ));

    let w = sphere(&[1, 2]);
    let x = w.project_radial(&[real(0.9), real(0.3)]).unwrap();
    let y = w.project_radial(&[real(0.3), real(0.9)]).unwrap();
    let p = decay_profile(&w, &x, &y, &levels, &MeasureSource::RoundExact).unwrap();
    pass &= p.slope < 0.0 && p.r_squared >= 0.99;
    detail.push(format!("w(1,2): slope {:.4} R2 {:.5}", p.slope, p.r_squared));

    let e = example2();
    let q = Quadrature::compliant(&e, 40_000, 19).unwrap();
    let x = e.project_radial(&[real(0.9), real(0.3), real(0.2)]).unwrap();
    let y = e.project_radial(&[real(0.2), real(0.4), real(0.9)]).unwrap();
    // Multiples of lcm(weights) = 6 avoid the residue-class oscillation.
    let lv: Vec<u32> = (6..=42).step_by(6).collect();
    let p = decay_profile(&e, &x, &y, &lv, &MeasureSource::Compliant(&q)).unwrap();
    pass &= p.slope < 0.0 && p.r_squared >= 0.99;
    detail.push(format!("example2: slope {:.4} R2 {:.5}", p.slope, p.r_squared));
    Outcome::new(pass, detail.join("; "))
}

fn c10_ratio() -> Outcome {
    let w = sphere(&[1, 2]);
    let x0 = w.point(vec![real(0.0), real(1.0)]).unwrap();
    let q = Quadrature::compliant(&w, 200_000, 2025).unwrap();
    let cfg = RatioConfig {
        seed: 10,
        ..RatioConfig::default()
    };
    let r = ratio_report(&w, &x0, &MeasureSource::Compliant(&q), &cfg).unwrap();
    match r.first_pass {
        Some((m, radius)) => {
            let row = r
                .rows
                .iter()
                .find(|row| row.multiplier == m && row.radius == radius)
                .unwrap();
            Outcome::new(
                true,
                format!(
                    "first pass m={m} radius={radius}: max|1-R|={:.4} max|I|={:.1e}",
                    row.max_real_defect, row.max_imag
                ),
            )
        }
        None => Outcome::new(false, "no (m, radius) satisfied both bounds".into()),
    }
}

fn c11_projector() -> Outcome {
    let w = sphere(&[1, 2, 3]);
    let weights = [1i64, 2, 3];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_keep = 0.0f64;
    let mut worst_kill = 0.0f64;
    for _ in 0..100 {
        let a: Vec<u32> = (0..3).map(|_| rng.random_range(0..4)).collect();
        let b: Vec<u32> = (0..3).map(|_| rng.random_range(0..3)).collect();
        let degree: i64 = (0..3).map(|j| weights[j] * (a[j] as i64 - b[j] as i64)).sum();
        let u = |p: &SurfacePoint| -> Complex64 {
            (0..3)
                .map(|j| p.coords[j].powu(a[j]) * p.coords[j].conj().powu(b[j]))
                .product()
        };
        let x = random_point(&w, &mut rng);
        let q = OrbitQuadrature::for_max_level(30);
        worst_keep = worst_keep.max((circle_average(u, &x, degree, &w, &q) - u(&x)).norm());
        for other in (degree - 5..=degree + 5).filter(|&o| o != degree) {
            worst_kill = worst_kill.max(circle_average(u, &x, other, &w, &q).norm());
        }
    }
    let span = |p: &SurfacePoint| -> Complex64 {
        let c = &p.coords;
        c[0] * Complex64::new(0.3, -1.0) + c[1] * c[2] * 2.0 - c[0].powu(3) * c[2] + c[1].powu(4)
    };
    let levels: Vec<i64> = (0..=8).collect();
    let q = OrbitQuadrature::for_max_level(8);
    let mut worst_parseval = 0.0f64;
    for _ in 0..20 {
        let x = random_point(&w, &mut rng);
        worst_parseval = worst_parseval.max(parseval_defect(span, &x, &levels, &w, &q));
    }
    let pass = worst_keep <= 1e-12 && worst_kill <= 1e-12 && worst_parseval <= 1e-12;
    Outcome::new(
        pass,
        format!(
            "100 monomials: reproduce {worst_keep:.1e}, annihilate {worst_kill:.1e}; Parseval defect {worst_parseval:.1e}"
        ),
    )
}

fn c12_dimensions() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for w in [vec![1u32, 1], vec![1, 2], vec![1, 2, 6]] {
        let (wv, _) = szego::WeightVector::new(&w).unwrap();
        let l = wv.lcm();
        let m = 200 / l * l;
        let n = w.len();
        let fact: u64 = (1..n as u64).product();
        let ratio = dimension(&wv, m) as f64 * fact as f64 * wv.product() as f64
            / (m as f64).powi(n as i32 - 1);
        pass &= (0.9..=1.1).contains(&ratio);
        detail.push(format!("{w:?} m={m}: d={} ratio={ratio:.4}", dimension(&wv, m)));
    }
    Outcome::new(pass, detail.join(", "))
}

fn main() {
    let criteria: Vec<(u32, &str, u64, fn() -> Outcome)> = vec![
        (1, "leading coefficient on S3/S5", 10, c1_leading_coefficient),
        (2, "stratum vanishing", 5, c2_stratum_vanishing),
        (3, "root-of-unity selector", 1, c3_selector),
        (4, "factor-k diagonal on w(1,2)", 60, c4_factor_k),
        (5, "equivariance", 5, c5_equivariance),
        (6, "minimal weight", 5, c6_min_weight),
        (7, "immersion certificate", 60, c7_immersion),
        (8, "separation certificate", 120, c8_separation),
        (9, "off-diagonal decay", 10, c9_decay),
        (10, "consecutive-level ratio", 30, c10_ratio),
        (11, "orbit projector exactness", 5, c11_projector),
        (12, "dimension asymptotics", 1, c12_dimensions),
    ];
    let filter: Option<u32> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut unexpected = 0;
    for (id, name, budget, run) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let status = match (outcome.pass, outcome.known) {
            (true, _) if in_time => "PASS",
            (true, _) => "PASS (over budget)",
            (false, true) => "FAIL (known obstruction)",
            (false, false) => "FAIL",
        };
        println!(
            "[{status}] criterion {id:>2} {name}: {} [{:.2}s / {budget}s]",
            outcome.detail,
            elapsed.as_secs_f64()
        );
        if !outcome.pass && !outcome.known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}
