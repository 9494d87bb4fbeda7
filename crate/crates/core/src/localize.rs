//! Local polynomial reproduction on SO(3): least-norm coefficient kernels,
//! the kernel replacement error, and the quasi-interpolation operator
//! `T_Ξ f = Σ_ξ A_ξ k_m(·, ξ)` with `A_ξ = ∫ (L_m f)(α) a(ξ, α) dμ(α)`.
//!
//! Coefficient kernels are real. The local system `B a = 𝖣_α` is closed
//! under conjugation (`D^ℓ_{−k,−m} = ± conj D^ℓ_{k,m}`), so it is solved in a
//! real orthonormal basis of Π_L and its least-norm solution is real.

use crate::error::{Error, Result};
use crate::fit::SplineModel;
use crate::kernels::{apply_lm, kernel_of_half_sine, KernelOrder};
use crate::rotations::{distance, half_distance_cos_sin, random_rotation, PointSet, QuadratureRule, Rotation};
use crate::wigner::{band_offset, degree_cap, eval_all_unchecked, fourier_synthesize, polynomial_dimension};
use crate::wigner::{FourierCoefficients, C64};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::OnceLock;

/// Relative cutoff on the diagonal of `R` in the QR factorization of `Bᵀ`.
pub const RANK_CUTOFF: f64 = 1e-10;

/// CKC2 tolerance on `|Σ_ξ a(ξ,α) D(ξ) − D(α)|`.
pub const PRECISION_TOLERANCE: f64 = 1e-8;

/// Radius constant `c` in `ρ*(L, h) = c·L²·h`, calibrated on a quasi-uniform
/// 500-point reference set at `L = 4` (see [`calibrate_radius`]) and frozen.
pub const CALIBRATED_RADIUS_CONSTANT: f64 = 4.0 / 16.0;

/// Candidate values of `c·L²` tried by [`calibrate_radius`]: the doubling
/// grid first, then the integers between the last failing and first passing
/// doubling value.
pub const CALIBRATION_GRID: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

/// The radius rule `ρ*(L, h) = c·L²·h`, capped at π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusRule {
    constant: f64,
}

impl RadiusRule {
    pub fn new(constant: f64) -> Result<Self> {
        if !(constant.is_finite() && constant > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius constant must be positive and finite, got {constant}"
            )));
        }
        Ok(Self { constant })
    }

    pub fn calibrated() -> Self {
        Self {
            constant: CALIBRATED_RADIUS_CONSTANT,
        }
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn radius(&self, precision: usize, fill_distance: f64) -> f64 {
        (self.constant * (precision * precision).max(1) as f64 * fill_distance).min(PI)
    }
}

impl Default for RadiusRule {
    fn default() -> Self {
        Self::calibrated()
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0 && radius <= PI) {
        return Err(Error::InvalidArgument(format!("radius must lie in (0, π], got {radius}")));
    }
    Ok(())
}

/// Indices of `centers` within `radius` of `alpha`, ascending.
///
/// Fails with [`Error::Density`] when the ball holds no center.
pub fn local_centers(centers: &PointSet, alpha: &Rotation, radius: f64) -> Result<Vec<usize>> {
    check_radius(radius)?;
    let found = centers.within(alpha, radius);
    if found.is_empty() {
        return Err(Error::Density {
            local: 0,
            rank: 0,
            required: 1,
            radius,
        });
    }
    Ok(found)
}

/// Real orthonormal basis of Π_L under the normalized Haar inner product:
/// `√(2ℓ+1)·√2·(Re, Im) D^ℓ_{k,m}` for `(k, m)` before `(−k, −m)` in flat
/// order, and `√(2ℓ+1)·D^ℓ_{0,0}`. Output length is `dim Π_L`.
pub fn real_basis(precision: usize, x: &Rotation) -> Vec<f64> {
    let d = eval_all_unchecked(precision, x);
    let mut out = Vec::with_capacity(d.len());
    for l in 0..=precision {
        let band = &d[band_offset(l)..band_offset(l + 1)];
        let middle = band.len() / 2;
        let scale = ((2 * l + 1) as f64).sqrt();
        for v in &band[..middle] {
            out.push(scale * std::f64::consts::SQRT_2 * v.re);
            out.push(scale * std::f64::consts::SQRT_2 * v.im);
        }
        out.push(scale * band[middle].re);
    }
    out
}

/// Sparse coefficient kernel column `a(·, α)`: center indices and weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalWeights {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl LocalWeights {
    /// `‖a(·, α)‖₁`.
    pub fn l1_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The weights zero-extended to all `len` centers.
    pub fn dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (&i, &w) in self.indices.iter().zip(&self.weights) {
            out[i] = w;
        }
        out
    }
}

// Least-norm solution of `B a = r` where `rows` holds the columns of `B`
// (one basis vector per local center).
fn least_norm(rows: &[&[f64]], rhs: &[f64], radius: f64) -> Result<Vec<f64>> {
    let (n, dim) = (rows.len(), rhs.len());
    if n < dim {
        return Err(Error::Density {
            local: n,
            rank: n,
            required: dim,
            radius,
        });
    }
    let bt = DMatrix::from_fn(n, dim, |i, j| rows[i][j]);
    let qr = bt.clone().qr();
    let r = qr.r();
    let diag_max = (0..dim).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let rank = (0..dim).filter(|&i| r[(i, i)].abs() > RANK_CUTOFF * diag_max).count();
    let density = || Error::Density {
        local: n,
        rank,
        required: dim,
        radius,
    };
    if rank < dim {
        return Err(density());
    }
    // Bᵀ = QR ⇒ least-norm a = Q R⁻ᵀ r = Bᵀ R⁻¹ R⁻ᵀ r. The second form avoids
    // forming Q; one correction step (corrected semi-normal equations)
    // restores the accuracy of the orthogonal form.
    let semi_normal = |r_vec: &DVector<f64>| -> Option<DVector<f64>> {
        let z = r.tr_solve_upper_triangular(r_vec)?;
        let z = r.solve_upper_triangular(&z)?;
        Some(&bt * z)
    };
    let target = DVector::from_column_slice(rhs);
    let mut a = semi_normal(&target).ok_or_else(density)?;
    let mut misfit = &target - bt.tr_mul(&a);
    a += semi_normal(&misfit).ok_or_else(density)?;
    misfit = &target - bt.tr_mul(&a);
    let scale = rhs.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let residual = misfit.amax();
    if !(residual <= 0.1 * PRECISION_TOLERANCE * scale) {
        return Err(Error::Density {
            local: n,
            rank: rank.saturating_sub(1),
            required: dim,
            radius,
        });
    }
    Ok(a.iter().copied().collect())
}

/// Least-norm weights reproducing Π_L at `alpha` from the centers within
/// `radius`: `a = B*(BB*)⁻¹𝖣_α`, zero outside the ball.
///
/// Fails with [`Error::Density`] when the local system is rank deficient.
pub fn coefficient_vector(centers: &PointSet, alpha: &Rotation, precision: usize, radius: f64) -> Result<LocalWeights> {
    CoefficientKernel::new(centers, precision, radius)?.weights(alpha)
}

/// A least-norm coefficient kernel on a fixed center set with cached basis
/// rows.
#[derive(Debug)]
pub struct CoefficientKernel<'a> {
    centers: &'a PointSet,
    precision: usize,
    radius: f64,
    rows: OnceLock<Vec<Vec<f64>>>,
}

impl<'a> CoefficientKernel<'a> {
    pub fn new(centers: &'a PointSet, precision: usize, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        if precision > degree_cap() {
            return Err(Error::UnsupportedDegree {
                degree: precision,
                cap: degree_cap(),
            });
        }
        Ok(Self {
            centers,
            precision,
            radius,
            rows: OnceLock::new(),
        })
    }

    /// Kernel with the rule radius `ρ*(L, h)` for the set's fill distance.
    pub fn with_rule(centers: &'a PointSet, precision: usize, rule: RadiusRule) -> Result<Self> {
        Self::new(centers, precision, rule.radius(precision, centers.fill_distance()))
    }

    pub fn centers(&self) -> &'a PointSet {
        self.centers
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn rows(&self) -> &[Vec<f64>] {
        self.rows.get_or_init(|| {
            self.centers
                .points()
                .iter()
                .map(|c| real_basis(self.precision, c))
                .collect()
        })
    }

    /// `a(·, alpha)`.
    pub fn weights(&self, alpha: &Rotation) -> Result<LocalWeights> {
        let indices = local_centers(self.centers, alpha, self.radius)?;
        let rows = self.rows();
        let local: Vec<&[f64]> = indices.iter().map(|&i| rows[i].as_slice()).collect();
        let weights = least_norm(&local, &real_basis(self.precision, alpha), self.radius)?;
        Ok(LocalWeights { indices, weights })
    }

    /// `max_{ℓ≤L,k,m} |Σ_ξ a(ξ,α) D^ℓ_{k,m}(ξ) − D^ℓ_{k,m}(α)|`.
    pub fn precision_residual(&self, alpha: &Rotation, a: &LocalWeights) -> f64 {
        let mut acc = eval_all_unchecked(self.precision, alpha);
        for v in acc.iter_mut() {
            *v = -*v;
        }
        for (&i, &w) in a.indices.iter().zip(&a.weights) {
            let d = eval_all_unchecked(self.precision, &self.centers.points()[i]);
            for (s, dv) in acc.iter_mut().zip(&d) {
                *s += dv * w;
            }
        }
        acc.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest amount by which a weighted center lies outside `B(α, ρ)`.
    pub fn support_violation(&self, alpha: &Rotation, a: &LocalWeights) -> f64 {
        a.indices
            .iter()
            .zip(&a.weights)
            .filter(|(_, w)| **w != 0.0)
            .map(|(&i, _)| (distance(&self.centers.points()[i], alpha) - self.radius).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Worst-case coefficient kernel conditions over Haar-random probes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CkcReport {
    pub precision: usize,
    pub radius: f64,
    pub probe_count: usize,
    /// Worst CKC2 residual over probes where the kernel exists.
    pub max_precision_residual: f64,
    /// Worst CKC1 violation in radians.
    pub max_support_violation: f64,
    /// Measured stability constant `K = max ‖a(·, α)‖₁`.
    pub stability: f64,
    /// Centers within the radius of each probe, in probe order.
    pub local_counts: Vec<usize>,
    /// Probes at which the local system was rank deficient.
    pub density_failures: usize,
}

impl CkcReport {
    /// All three conditions hold at every probe.
    pub fn passes(&self) -> bool {
        self.density_failures == 0
            && self.max_support_violation == 0.0
            && self.max_precision_residual <= PRECISION_TOLERANCE
    }
}

/// Evaluates CKC1–3 at `probe_count` Haar-random rotations drawn from `seed`.
/// Rank-deficient probes are counted, not raised.
pub fn verify_ckc(kernel: &CoefficientKernel, probe_count: usize, seed: u64) -> CkcReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CkcReport {
        precision: kernel.precision,
        radius: kernel.radius,
        probe_count,
        max_precision_residual: 0.0,
        max_support_violation: 0.0,
        stability: 0.0,
        local_counts: Vec::with_capacity(probe_count),
        density_failures: 0,
    };
    for _ in 0..probe_count {
        let alpha = random_rotation(&mut rng);
        report.local_counts.push(kernel.centers.within(&alpha, kernel.radius).len());
        match kernel.weights(&alpha) {
            Ok(a) => {
                report.max_precision_residual = report.max_precision_residual.max(kernel.precision_residual(&alpha, &a));
                report.max_support_violation = report.max_support_violation.max(kernel.support_violation(&alpha, &a));
                report.stability = report.stability.max(a.l1_norm());
            }
            Err(_) => report.density_failures += 1,
        }
    }
    report
}

/// Result of a radius calibration: the chosen constant and the probe
/// failures seen at each candidate `c·L²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusCalibration {
    pub rule: RadiusRule,
    pub trials: Vec<(f64, usize)>,
}

/// Smallest `c` on the calibration grid for which CKC2 is feasible at every
/// probe on `reference`.
pub fn calibrate_radius(reference: &PointSet, precision: usize, probe_count: usize, seed: u64) -> Result<RadiusCalibration> {
    let scale = (precision * precision).max(1) as f64;
    let h = reference.fill_distance();
    let mut trials = Vec::new();
    let try_value = |cl2: f64, trials: &mut Vec<(f64, usize)>| -> Result<bool> {
        let rule = RadiusRule::new(cl2 / scale)?;
        let kernel = CoefficientKernel::new(reference, precision, rule.radius(precision, h))?;
        let failures = verify_ckc(&kernel, probe_count, seed).density_failures;
        trials.push((cl2, failures));
        Ok(failures == 0)
    };
    let mut previous = 0.0f64;
    for &cl2 in &CALIBRATION_GRID {
        if try_value(cl2, &mut trials)? {
            let mut chosen = cl2;
            let mut candidate = previous.floor() + 1.0;
            while candidate < cl2 {
                if try_value(candidate, &mut trials)? {
                    chosen = candidate;
                    break;
                }
                candidate += 1.0;
            }
            return Ok(RadiusCalibration {
                rule: RadiusRule::new(chosen / scale)?,
                trials,
            });
        }
        previous = cl2;
    }
    Err(Error::Density {
        local: reference.len(),
        rank: 0,
        required: polynomial_dimension(precision),
        radius: RadiusRule::new(previous / scale)?.radius(precision, h),
    })
}

fn kernel_at(order: KernelOrder, x: &Rotation, y: &Rotation) -> f64 {
    kernel_of_half_sine(order, half_distance_cos_sin(x, y).1)
}

/// `e(x, α) = |k_m(x, α) − Σ_ξ a(ξ, α) k_m(x, ξ)|` for precomputed weights.
pub fn replacement_error(order: KernelOrder, centers: &PointSet, a: &LocalWeights, x: &Rotation, alpha: &Rotation) -> f64 {
    let copies: f64 = a
        .indices
        .iter()
        .zip(&a.weights)
        .map(|(&i, &w)| w * kernel_at(order, x, &centers.points()[i]))
        .sum();
    (kernel_at(order, x, alpha) - copies).abs()
}

/// The error kernel `e_{k_m}(x, α)`.
pub fn error_kernel_eval(order: KernelOrder, kernel: &CoefficientKernel, x: &Rotation, alpha: &Rotation) -> Result<f64> {
    let a = kernel.weights(alpha)?;
    Ok(replacement_error(order, kernel.centers, &a, x, alpha))
}

/// Near-field bound `(3/2)^{2m−1}·K·ρ^{2m−3}`, valid for `dist(x, α) ≤ 2ρ`.
pub fn near_field_bound(order: KernelOrder, stability: f64, radius: f64) -> f64 {
    1.5f64.powi(2 * order.m() as i32 - 1) * stability * radius.powi(order.exponent())
}

/// Taylor-remainder bound on `e(x, α)` with `k_m = ϑ_s(t)`, `ϑ_s = (1−t)^s`,
/// `t = cos²(dist/2)`:
/// `‖a‖₁/(L+1)!·|𝓘_x|^{L+1}·max_{𝓘_x}|ϑ_s^{(L+1)}|`, where `𝓘_x` spans the
/// `t`-values of `α` and the local centers.
///
/// Returns `None` when `ϑ_s` is not smooth on `𝓘_x` (the interval reaches 1).
pub fn taylor_bound(
    order: KernelOrder,
    centers: &PointSet,
    a: &LocalWeights,
    precision: usize,
    x: &Rotation,
    alpha: &Rotation,
) -> Option<f64> {
    let t_of = |y: &Rotation| half_distance_cos_sin(x, y).0.powi(2);
    let mut lo = t_of(alpha);
    let mut hi = lo;
    for &i in &a.indices {
        let t = t_of(&centers.points()[i]);
        lo = lo.min(t);
        hi = hi.max(t);
    }
    if hi >= 1.0 {
        return None;
    }
    let s = order.smoothness();
    let falling: f64 = (0..=precision).map(|j| s - j as f64).product();
    let factorial: f64 = (1..=precision + 1).map(|j| j as f64).product();
    // (1−t)^{s−L−1} has a negative exponent, so it peaks at the top of 𝓘_x
    let derivative = falling.abs() * (1.0 - hi).powf(s - precision as f64 - 1.0);
    Some(a.l1_norm() / factorial * (hi - lo).powi(precision as i32 + 1) * derivative)
}

/// The approximant `T_Ξ f` with the norms entering the coefficient bound
/// `‖A‖₁ ≤ K·‖L_m f‖₁`.
#[derive(Debug, Clone)]
pub struct Approximant {
    pub model: SplineModel,
    /// `Σ_ξ |A_ξ|`.
    pub coefficient_l1: f64,
    /// Largest `‖a(·, α)‖₁` over the quadrature nodes.
    pub stability: f64,
    /// `Σ_q w_q |L_m f(α_q)|` on the same rule.
    pub lm_l1: f64,
}

/// `A_ξ = Σ_q w_q (L_m f)(α_q) a(ξ, α_q)`; `β = 0`. Each node's kernel column
/// is computed once and folded in node order, so the result is independent
/// of scheduling.
pub fn build_approximant(
    f_coeffs: &FourierCoefficients,
    centers: &PointSet,
    order: KernelOrder,
    precision: usize,
    radius: f64,
    rule: &QuadratureRule,
) -> Result<Approximant> {
    let kernel = CoefficientKernel::new(centers, precision, radius)?;
    let lf = apply_lm(order, f_coeffs);
    let mut coeffs = vec![C64::new(0.0, 0.0); centers.len()];
    let (mut stability, mut lm_l1) = (0.0f64, 0.0);
    if f_coeffs.values().iter().any(|v| v.norm() > 0.0) {
        for (node, &w) in rule.nodes().iter().zip(rule.weights()) {
            let value = fourier_synthesize(&lf, node) * w;
            lm_l1 += value.norm();
            if value.norm() == 0.0 {
                continue;
            }
            let a = kernel.weights(node)?;
            stability = stability.max(a.l1_norm());
            for (&i, &ai) in a.indices.iter().zip(&a.weights) {
                coeffs[i] += value * ai;
            }
        }
    }
    let coefficient_l1 = coeffs.iter().map(|c| c.norm()).sum();
    let model = SplineModel::new(
        order,
        centers.points().to_vec(),
        coeffs,
        vec![C64::new(0.0, 0.0); polynomial_dimension(order.cpd_order())],
    )?;
    Ok(Approximant {
        model,
        coefficient_l1,
        stability,
        lm_l1,
    })
}

/// One level of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub centers: usize,
    pub fill_distance: f64,
    pub radius: f64,
    pub sup_error: f64,
    pub l2_error: f64,
    pub coefficient_l1: f64,
    pub stability: f64,
    pub lm_l1: f64,
}

/// Errors per level, rows by decreasing `h`, with least-squares log-log
/// orders `−d log(err)/d log(h)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub sup_order: f64,
    pub l2_order: f64,
}

pub const CONVERGENCE_CSV_HEADER: &str =
    "centers,fill_distance,radius,sup_error,l2_error,coefficient_l1,stability,lm_l1";

impl ConvergenceTable {
    /// Rows as CSV under [`CONVERGENCE_CSV_HEADER`], followed by
    /// `# sup_order,<v>` and `# l2_order,<v>` trailer lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CONVERGENCE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.centers, r.fill_distance, r.radius, r.sup_error, r.l2_error, r.coefficient_l1, r.stability, r.lm_l1
            );
        }
        let _ = writeln!(out, "# sup_order,{:e}", self.sup_order);
        let _ = writeln!(out, "# l2_order,{:e}", self.l2_order);
        out
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs [`build_approximant`] on each level with `ρ = rule(L, h)` and measures
/// `f − T_Ξ f` in sup norm over `probe_count` seeded Haar probes and in L₂
/// on the quadrature rule.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    order: KernelOrder,
    precision: usize,
    f_coeffs: &FourierCoefficients,
    levels: &[PointSet],
    rule: &QuadratureRule,
    radius_rule: RadiusRule,
    probe_count: usize,
    seed: u64,
) -> Result<ConvergenceTable> {
    if levels.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a convergence study needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    if levels.windows(2).any(|w| w[1].fill_distance() >= w[0].fill_distance()) {
        return Err(Error::InvalidArgument(
            "levels must have strictly decreasing fill distance".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes: Vec<Rotation> = (0..probe_count).map(|_| random_rotation(&mut rng)).collect();
    let exact_probes: Vec<C64> = probes.iter().map(|x| fourier_synthesize(f_coeffs, x)).collect();
    let exact_nodes: Vec<C64> = rule.nodes().iter().map(|x| fourier_synthesize(f_coeffs, x)).collect();

    let mut rows = Vec::with_capacity(levels.len());
    for level in levels {
        let h = level.fill_distance();
        let radius = radius_rule.radius(precision, h);
        let t = build_approximant(f_coeffs, level, order, precision, radius, rule)?;
        let sup_error = probes
            .iter()
            .zip(&exact_probes)
            .map(|(x, fx)| (fx - crate::fit::evaluate_model(&t.model, x)).norm())
            .fold(0.0, f64::max);
        let l2_error = rule
            .nodes()
            .iter()
            .zip(rule.weights())
            .zip(&exact_nodes)
            .map(|((x, w), fx)| w * (fx - crate::fit::evaluate_model(&t.model, x)).norm_sqr())
            .sum::<f64>()
            .sqrt();
        rows.push(ConvergenceRow {
            centers: level.len(),
            fill_distance: h,
            radius,
            sup_error,
            l2_error,
            coefficient_l1: t.coefficient_l1,
            stability: t.stability,
            lm_l1: t.lm_l1,
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.fill_distance).collect();
    let sup: Vec<f64> = rows.iter().map(|r| r.sup_error).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
    Ok(ConvergenceTable {
        sup_order: log_log_slope(&hs, &sup),
        l2_order: log_log_slope(&hs, &l2),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotations::{point_set_stats, sample_points, AxisAngle, SamplingMode};

    fn order(m: u32) -> KernelOrder {
        KernelOrder::new(m).unwrap()
    }

    #[test]
    fn real_basis_is_orthonormal() {
        let rule = crate::rotations::haar_quadrature(8);
        let dim = polynomial_dimension(3);
        let mut gram = DMatrix::<f64>::zeros(dim, dim);
        for (x, &w) in rule.nodes().iter().zip(rule.weights()) {
            let b = DVector::from_vec(real_basis(3, x));
            gram += &b * b.transpose() * w;
        }
        assert!((gram - DMatrix::identity(dim, dim)).amax() < 1e-12);
    }

    #[test]
    fn degree_zero_gives_uniform_weights() {
        let pts: Vec<Rotation> = (0..4)
            .map(|i| Rotation::from_axis_angle(AxisAngle::new([0.0, 0.0, 1.0], 0.1 * i as f64)).unwrap())
            .collect();
        let set = point_set_stats(pts, 10, 0).unwrap();
        let a = coefficient_vector(&set, &Rotation::IDENTITY, 0, 0.5).unwrap();
        assert_eq!(a.indices, vec![0, 1, 2, 3]);
        for w in &a.weights {
            assert!((w - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn small_ball_around_a_center_is_a_delta() {
        let set = sample_points(50, SamplingMode::QuasiUniform, 3).unwrap();
        let alpha = set.points()[7];
        let found = local_centers(&set, &alpha, 0.5 * set.separation()).unwrap();
        assert_eq!(found, vec![7]);
        assert_eq!(local_centers(&set, &alpha, PI).unwrap().len(), 50);
        let a = coefficient_vector(&set, &alpha, 0, 0.5 * set.separation()).unwrap();
        assert!((a.weights[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn empty_ball_is_a_density_error() {
        let set = sample_points(20, SamplingMode::QuasiUniform, 3).unwrap();
        let (_, d) = set.nearest(&Rotation::IDENTITY);
        assert!(matches!(
            local_centers(&set, &Rotation::IDENTITY, 0.5 * d),
            Err(Error::Density { local: 0, .. })
        ));
    }

    #[test]
    fn reproduces_polynomials_at_centers_and_probes() {
        let set = sample_points(500, SamplingMode::QuasiUniform, 1).unwrap();
        let kernel = CoefficientKernel::new(&set, 4, 2.6).unwrap();
        let alpha = set.points()[3];
        let a = kernel.weights(&alpha).unwrap();
        assert!(kernel.precision_residual(&alpha, &a) < 1e-10);
        let report = verify_ckc(&kernel, 10, 4);
        assert_eq!(report.density_failures, 0);
        assert!(report.max_precision_residual < PRECISION_TOLERANCE);
        assert_eq!(report.max_support_violation, 0.0);
    }

    #[test]
    fn undersized_radius_is_reported() {
        let set = sample_points(200, SamplingMode::QuasiUniform, 1).unwrap();
        let kernel = CoefficientKernel::new(&set, 4, 0.5).unwrap();
        let report = verify_ckc(&kernel, 5, 2);
        assert_eq!(report.density_failures, 5);
        assert!(!report.passes());
        assert!(matches!(kernel.weights(&Rotation::IDENTITY), Err(Error::Density { .. })));
    }

    #[test]
    fn replacement_error_bounds() {
        let set = sample_points(500, SamplingMode::QuasiUniform, 1).unwrap();
        let kernel = CoefficientKernel::new(&set, 4, 2.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = order(2);
        for _ in 0..10 {
            let alpha = random_rotation(&mut rng);
            let a = kernel.weights(&alpha).unwrap();
            for _ in 0..10 {
                let x = random_rotation(&mut rng);
                let e = replacement_error(m, &set, &a, &x, &alpha);
                assert!(e >= 0.0 && e <= 1.0 + a.l1_norm());
                if distance(&x, &alpha) <= 2.0 * kernel.radius() {
                    assert!(e <= near_field_bound(m, a.l1_norm(), kernel.radius()) * (1.0 + 1e-6));
                }
                if let Some(bound) = taylor_bound(m, &set, &a, 4, &x, &alpha) {
                    assert!(e <= bound * (1.0 + 1e-9) + 1e-14, "e {e} bound {bound}");
                }
            }
        }
    }

    #[test]
    fn zero_function_gives_zero_model() {
        let set = sample_points(100, SamplingMode::QuasiUniform, 1).unwrap();
        let rule = crate::rotations::haar_quadrature(4);
        let t = build_approximant(&FourierCoefficients::zeros(2), &set, order(2), 4, PI, &rule).unwrap();
        assert!(t.model.alpha().iter().all(|a| a.norm() == 0.0));
        assert_eq!(t.coefficient_l1, 0.0);
    }

    #[test]
    fn log_log_slope_recovers_power() {
        let xs = [1.0, 0.5, 0.25];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(4)).collect();
        assert!((log_log_slope(&xs, &ys) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn radius_rule_caps_at_pi() {
        let rule = RadiusRule::new(0.5).unwrap();
        assert_eq!(rule.radius(4, 1.0), PI);
        assert!((rule.radius(2, 0.1) - 0.2).abs() < 1e-15);
        assert!(RadiusRule::new(0.0).is_err());
    }
}
