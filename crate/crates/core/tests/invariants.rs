//! Seeded checks too heavy or too statistical for property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use so3spline::kernels::{apply_lm, ChebSeries, KernelOrder};
use so3spline::rotations::{ball_volume, distance, haar_quadrature, random_rotation, QuadratureRule, Rotation};
use so3spline::rotations::{BALL_VOLUME_LOWER, BALL_VOLUME_UPPER};
use so3spline::wigner::{band_offset, eval_all, fourier_synthesize, polynomial_dimension, FourierCoefficients, C64};

#[test]
fn ball_volume_lies_between_cubic_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 200_000;
    let center = random_rotation(&mut rng);
    let samples: Vec<Rotation> = (0..n).map(|_| random_rotation(&mut rng)).collect();
    for rho in [0.2, 0.5, 1.0] {
        let hits = samples.iter().filter(|x| distance(x, &center) <= rho).count();
        let p = hits as f64 / n as f64;
        let sigma = (ball_volume(rho) * (1.0 - ball_volume(rho)) / n as f64).sqrt();
        let r3 = rho * rho * rho;
        assert!(p >= BALL_VOLUME_LOWER * r3 - 3.0 * sigma, "ρ={rho}: {p}");
        assert!(p <= BALL_VOLUME_UPPER * r3 + 3.0 * sigma, "ρ={rho}: {p}");
        assert!((p - ball_volume(rho)).abs() <= 4.0 * sigma);
    }
}

#[test]
fn product_rule_integrates_every_wigner_function_up_to_its_degree() {
    for n in [0usize, 1, 2, 5, 8] {
        let rule = haar_quadrature(n);
        assert_eq!(rule.exactness(), n);
        let mut acc = vec![C64::new(0.0, 0.0); polynomial_dimension(n)];
        for (x, &w) in rule.nodes().iter().zip(rule.weights()) {
            for (a, d) in acc.iter_mut().zip(eval_all(n, x).unwrap()) {
                *a += d * w;
            }
        }
        assert!((acc[0] - C64::new(1.0, 0.0)).norm() <= 1e-12);
        assert!(acc[1..].iter().all(|v| v.norm() <= 1e-12), "n={n}");
    }
}

#[test]
fn rule_is_not_exact_one_degree_higher() {
    // D^{n+1}_{k,m} with |m| = n+1 aliases on n+1 equispaced φ2 nodes
    let n = 4;
    let rule = haar_quadrature(n);
    let l = n + 1;
    let mut worst = 0.0f64;
    let mut acc = vec![C64::new(0.0, 0.0); polynomial_dimension(l)];
    for (x, &w) in rule.nodes().iter().zip(rule.weights()) {
        for (a, d) in acc.iter_mut().zip(eval_all(l, x).unwrap()) {
            *a += d * w;
        }
    }
    for v in &acc[band_offset(l)..] {
        worst = worst.max(v.norm());
    }
    assert!(worst > 1e-3);
}

#[test]
fn discrete_green_reproduction() {
    // ∫ k_m(x, α) (L_m f)(α) dμ(α) = Σ_{ℓ>ℓ₀} f̂ parts of f; with α = x·β the
    // kernel is a class function of β integrated by the radial factor
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for m in [2u32, 3] {
        let order = KernelOrder::new(m).unwrap();
        let series = ChebSeries::new(order, 400);
        let band = 6;
        let mut f = FourierCoefficients::zeros(band);
        for l in (order.cpd_order() + 1)..=band {
            for v in f.band_mut(l) {
                *v = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        let lf = apply_lm(order, &f);
        let base = QuadratureRule::axis_angle(256, 2 * band);
        for _ in 0..20 {
            let x = random_rotation(&mut rng);
            let rule = base.translated(&x);
            let got: C64 = rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .map(|(a, w)| fourier_synthesize(&lf, a) * (series.eval(&x, a) * w))
                .sum();
            let want = fourier_synthesize(&f, &x);
            assert!((got - want).norm() <= 1e-3, "m={m}: {got} vs {want}");
        }
    }
}
