//! Fitting with surface splines: the collocation saddle system, interpolation,
//! Tikhonov smoothing, least-squares projection and model evaluation.
//!
//! Models have the form `s = Σ_ξ α_ξ k_m(·, ξ) + Σ_{ℓ≤ℓ₀} β^ℓ_{ι,ν} D^ℓ_{ι,ν}`
//! with moment conditions `Σ_ξ α_ξ D^ℓ_{ι,ν}(ξ) = 0` for `ℓ ≤ ℓ₀`.

use crate::error::{Error, Result};
use crate::kernels::{cpd_data, kernel_cheb_coeff, kernel_eval, KernelOrder};
use crate::rotations::{cos_half_distance_euler, QuadratureRule, Rotation};
use crate::wigner::{band_offset, eval_all_unchecked, polynomial_dimension, FourierCoefficients, C64};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Systems whose condition estimate exceeds this are rejected.
pub const CONDITION_THRESHOLD: f64 = 1e14;

// Relative singular-value cutoff for the unisolvency rank test.
const RANK_TOLERANCE: f64 = 1e-10;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Collocation data for a center set: kernel matrix `A` and moment matrix `B`
/// whose row `r` holds the `r`-th Wigner-D function (flat order) at every center.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    order: KernelOrder,
    centers: Vec<Rotation>,
    kernel: DMatrix<f64>,
    moments: DMatrix<C64>,
}

/// Solution of the saddle system with its diagnostics.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub alpha: Vec<C64>,
    pub beta: Vec<C64>,
    pub condition_estimate: f64,
    /// `‖M·(α, β) − rhs‖₂ / ‖rhs‖₂` after refinement.
    pub relative_residual: f64,
}

impl SaddleSystem {
    pub fn order(&self) -> KernelOrder {
        self.order
    }

    pub fn centers(&self) -> &[Rotation] {
        &self.centers
    }

    /// `A_{ij} = k_m(ξ_i, ξ_j)`.
    pub fn kernel_matrix(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    /// `B`, of size `P × |Ξ|`.
    pub fn moment_matrix(&self) -> &DMatrix<C64> {
        &self.moments
    }

    /// `P = Σ_{ℓ≤ℓ₀} (2ℓ+1)²`.
    pub fn polynomial_count(&self) -> usize {
        self.moments.nrows()
    }

    /// The symmetric block matrix `[[A + λI, Bᵀ], [B, 0]]`.
    pub fn saddle_matrix(&self, lambda: f64) -> DMatrix<C64> {
        let n = self.centers.len();
        let p = self.polynomial_count();
        let mut m = DMatrix::from_element(n + p, n + p, zero());
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] = C64::new(self.kernel[(i, j)], 0.0);
            }
            m[(j, j)] += lambda;
            for r in 0..p {
                m[(n + r, j)] = self.moments[(r, j)];
                m[(j, n + r)] = self.moments[(r, j)];
            }
        }
        m
    }

    /// Orthonormal basis `Z` of `{a : B a = 0}`, of size `|Ξ| × (|Ξ| − P)`.
    pub fn null_space_basis(&self) -> DMatrix<C64> {
        let n = self.centers.len();
        let p = self.polynomial_count();
        let qr = self.moments.adjoint().qr();
        let mut q_adj = DMatrix::<C64>::identity(n, n);
        qr.q_tr_mul(&mut q_adj);
        q_adj.adjoint().columns(p, n - p).into_owned()
    }

    /// Solves `[[A + λI, Bᵀ], [B, 0]]·(α, β) = (y, 0)` by LU with partial
    /// pivoting and one step of iterative refinement.
    pub fn solve(&self, values: &[C64], lambda: f64) -> Result<SaddleSolution> {
        let n = self.centers.len();
        if values.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} values supplied for {n} centers",
                values.len()
            )));
        }
        let m = self.saddle_matrix(lambda);
        let mut rhs = DVector::from_element(m.nrows(), zero());
        for (r, v) in rhs.iter_mut().zip(values) {
            *r = *v;
        }
        let solved = solve_checked(m, &rhs, "collocation saddle system")?;
        let x = solved.solution;
        Ok(SaddleSolution {
            alpha: x.rows(0, n).iter().copied().collect(),
            beta: x.rows(n, self.polynomial_count()).iter().copied().collect(),
            condition_estimate: solved.condition_estimate,
            relative_residual: solved.relative_residual,
        })
    }
}

struct CheckedSolve {
    solution: DVector<C64>,
    condition_estimate: f64,
    relative_residual: f64,
}

fn one_norm(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn vec_one_norm(v: &DVector<C64>) -> f64 {
    v.iter().map(|c| c.norm()).sum()
}

/// Hager–Higham estimate of `‖M⁻¹‖₁` for complex symmetric `M`, using
/// `M⁻ᴴ y = conj(M⁻¹ conj(y))`.
fn inverse_one_norm_estimate(solve: &dyn Fn(&DVector<C64>) -> Option<DVector<C64>>, n: usize) -> Option<f64> {
    let mut x = DVector::from_element(n, C64::new(1.0 / n as f64, 0.0));
    let mut estimate = 0.0f64;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = solve(&x)?;
        estimate = estimate.max(vec_one_norm(&y));
        let signs = y.map(|v| if v.norm() == 0.0 { C64::new(1.0, 0.0) } else { v / v.norm() });
        let z = solve(&signs.map(|v| v.conj()))?.map(|v| v.conj());
        let (j, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        let ztx: f64 = z.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        if zmax <= ztx || j == last_j {
            break;
        }
        last_j = j;
        x = DVector::from_element(n, zero());
        x[j] = C64::new(1.0, 0.0);
    }
    // Higham's alternating test vector guards against an unlucky start
    let b = DVector::from_fn(n, |i, _| {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        C64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
    });
    let alt = 2.0 * vec_one_norm(&solve(&b)?) / (3.0 * n as f64);
    Some(estimate.max(alt))
}

fn solve_checked(m: DMatrix<C64>, rhs: &DVector<C64>, context: &str) -> Result<CheckedSolve> {
    let n = m.nrows();
    let norm = one_norm(&m);
    let lu = m.clone().lu();
    let singular = || Error::Conditioning {
        estimate: f64::INFINITY,
        threshold: CONDITION_THRESHOLD,
        context: format!("{context} is numerically singular"),
    };
    let solve = |b: &DVector<C64>| lu.solve(b).filter(|x| x.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
    let inv_norm = inverse_one_norm_estimate(&solve, n).ok_or_else(singular)?;
    let estimate = norm * inv_norm;
    if !(estimate <= CONDITION_THRESHOLD) {
        return Err(Error::Conditioning {
            estimate,
            threshold: CONDITION_THRESHOLD,
            context: context.to_string(),
        });
    }
    let mut x = solve(rhs).ok_or_else(singular)?;
    let r = rhs - &m * &x;
    if let Some(dx) = solve(&r) {
        x += dx;
    }
    let rhs_norm = rhs.norm().max(f64::MIN_POSITIVE);
    let relative_residual = (rhs - &m * &x).norm() / rhs_norm;
    Ok(CheckedSolve {
        solution: x,
        condition_estimate: estimate,
        relative_residual,
    })
}

/// Wigner-D values of degree `≤ degree` at every center, as a `dim × |Ξ|` matrix.
pub fn wigner_rows(centers: &[Rotation], degree: usize) -> DMatrix<C64> {
    let dim = polynomial_dimension(degree);
    let mut b = DMatrix::from_element(dim, centers.len(), zero());
    for (j, c) in centers.iter().enumerate() {
        for (r, v) in eval_all_unchecked(degree, c).into_iter().enumerate() {
            b[(r, j)] = v;
        }
    }
    b
}

fn numerical_rank(m: &DMatrix<C64>) -> usize {
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * top).count()
}

/// Checks that the rows of degree `≤ d` have full rank for every `d ≤ degree`.
pub fn check_unisolvent(centers: &[Rotation], degree: usize) -> Result<()> {
    let b = wigner_rows(centers, degree);
    for d in 0..=degree {
        let expected = polynomial_dimension(d);
        let rank = if expected > centers.len() {
            numerical_rank(&b.rows(0, expected).adjoint()).min(centers.len())
        } else {
            numerical_rank(&b.rows(0, expected).into_owned())
        };
        if rank < expected {
            return Err(Error::Unisolvency { degree: d, rank, expected });
        }
    }
    Ok(())
}

/// Kernel matrix `A` with entries `k_m(ξ_i, ξ_j)`.
pub fn kernel_matrix(centers: &[Rotation], order: KernelOrder) -> DMatrix<f64> {
    let n = centers.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = kernel_eval(order, &centers[i], &centers[j]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Kernel matrix built from Euler angles: `(1 − cos²(dist/2))^{(2m−3)/2}` with
/// the half-distance cosine in closed Euler form.
pub fn kernel_matrix_euler(centers: &[Rotation], order: KernelOrder) -> DMatrix<f64> {
    let angles: Vec<_> = centers.iter().map(|c| c.to_euler()).collect();
    let n = centers.len();
    DMatrix::from_fn(n, n, |i, j| {
        let c = cos_half_distance_euler(&angles[i], &angles[j]).min(1.0);
        (1.0 - c * c).max(0.0).powf(order.smoothness())
    })
}

/// Assembles `A` and `B` for `centers`, rejecting sets that are not unisolvent
/// for polynomials of degree `ℓ₀`.
pub fn assemble_system(centers: &[Rotation], order: KernelOrder) -> Result<SaddleSystem> {
    let l0 = order.cpd_order();
    check_unisolvent(centers, l0)?;
    Ok(SaddleSystem {
        order,
        centers: centers.to_vec(),
        kernel: kernel_matrix(centers, order),
        moments: wigner_rows(centers, l0),
    })
}

/// Fitted spline: kernel coefficients at the centers and polynomial
/// coefficients of degree `≤ ℓ₀` in flat `(ℓ, ι, ν)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineModel {
    order: KernelOrder,
    centers: Vec<Rotation>,
    alpha: Vec<C64>,
    beta: Vec<C64>,
}

impl SplineModel {
    pub fn new(order: KernelOrder, centers: Vec<Rotation>, alpha: Vec<C64>, beta: Vec<C64>) -> Result<Self> {
        if alpha.len() != centers.len() {
            return Err(Error::InvalidArgument(format!(
                "{} kernel coefficients for {} centers",
                alpha.len(),
                centers.len()
            )));
        }
        let p = polynomial_dimension(order.cpd_order());
        if beta.len() != p {
            return Err(Error::InvalidArgument(format!(
                "order {} needs {p} polynomial coefficients, got {}",
                order.m(),
                beta.len()
            )));
        }
        Ok(Self {
            order,
            centers,
            alpha,
            beta,
        })
    }

    pub fn zero(order: KernelOrder, centers: Vec<Rotation>) -> Self {
        let n = centers.len();
        Self {
            order,
            centers,
            alpha: vec![zero(); n],
            beta: vec![zero(); polynomial_dimension(order.cpd_order())],
        }
    }

    pub fn order(&self) -> KernelOrder {
        self.order
    }

    pub fn cpd_order(&self) -> usize {
        self.order.cpd_order()
    }

    pub fn centers(&self) -> &[Rotation] {
        &self.centers
    }

    pub fn alpha(&self) -> &[C64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[C64] {
        &self.beta
    }

    /// `‖Bα‖₂`, zero for a model satisfying the moment conditions.
    pub fn moment_residual(&self) -> f64 {
        let b = wigner_rows(&self.centers, self.cpd_order());
        (b * DVector::from_column_slice(&self.alpha)).norm()
    }

    /// `c·s`.
    pub fn scaled(&self, c: C64) -> Self {
        Self {
            alpha: self.alpha.iter().map(|a| a * c).collect(),
            beta: self.beta.iter().map(|b| b * c).collect(),
            ..self.clone()
        }
    }

    /// Sum of two models on the same centers and order.
    pub fn try_add(&self, other: &SplineModel) -> Result<Self> {
        if self.order != other.order || self.centers != other.centers {
            return Err(Error::InvalidArgument(
                "models can only be added when they share order and centers".into(),
            ));
        }
        Ok(Self {
            alpha: self.alpha.iter().zip(&other.alpha).map(|(a, b)| a + b).collect(),
            beta: self.beta.iter().zip(&other.beta).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }
}

/// `s(x) = Σ α_ξ k_m(x, ξ) + Σ β^ℓ_{ι,ν} D^ℓ_{ι,ν}(x)`.
pub fn evaluate_model(model: &SplineModel, x: &Rotation) -> C64 {
    let mut total = zero();
    for (a, c) in model.alpha.iter().zip(&model.centers) {
        if *a != zero() {
            total += a * kernel_eval(model.order, x, c);
        }
    }
    if model.beta.iter().any(|b| *b != zero()) {
        let d = eval_all_unchecked(model.cpd_order(), x);
        total += model.beta.iter().zip(&d).map(|(b, v)| b * v).sum::<C64>();
    }
    total
}

fn check_values(centers: &[Rotation], values: &[C64]) -> Result<()> {
    if centers.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} values supplied for {} centers",
            values.len(),
            centers.len()
        )));
    }
    Ok(())
}

/// The interpolant: `s(ξ) = y_ξ` at every center.
pub fn interpolate(centers: &[Rotation], values: &[C64], order: KernelOrder) -> Result<SplineModel> {
    check_values(centers, values)?;
    let system = assemble_system(centers, order)?;
    let sol = system.solve(values, 0.0)?;
    SplineModel::new(order, centers.to_vec(), sol.alpha, sol.beta)
}

/// Smoothing fit minimizing `Σ|s(ξ) − y_ξ|² + λ|s|²` with the native seminorm
/// `|s|² = σ·α*Aα`. The kernel block is `A + σλI`, which is `A + λI` for odd `m`.
pub fn tikhonov_fit(centers: &[Rotation], values: &[C64], lambda: f64, order: KernelOrder) -> Result<SplineModel> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "smoothing parameter must be positive and finite, got {lambda}"
        )));
    }
    check_values(centers, values)?;
    let system = assemble_system(centers, order)?;
    let sol = system.solve(values, cpd_data(order).sign_f64() * lambda)?;
    SplineModel::new(order, centers.to_vec(), sol.alpha, sol.beta)
}

/// Orthogonal projection onto `S_Ξ` in the discrete inner product
/// `⟨u, v⟩ = Σ_i w_i·conj(u(x_i))·v(x_i)`, given `values[i] = f(x_i)`.
///
/// The basis is `{Σ_ξ Z_ξj k_m(·, ξ)}_j ∪ {D^ℓ_{ι,ν}}_{ℓ≤ℓ₀}` with `Z` an
/// orthonormal basis of the moment null space.
pub fn least_squares_from_samples(
    centers: &[Rotation],
    order: KernelOrder,
    nodes: &[Rotation],
    weights: &[f64],
    values: &[C64],
) -> Result<SplineModel> {
    if nodes.len() != weights.len() || nodes.len() != values.len() {
        return Err(Error::InvalidArgument(
            "nodes, weights and values must have equal length".into(),
        ));
    }
    let system = assemble_system(centers, order)?;
    let z = system.null_space_basis();
    let n = centers.len();
    let p = system.polynomial_count();
    let kernel_part = DMatrix::from_fn(nodes.len(), n, |i, j| C64::new(kernel_eval(order, &nodes[i], &centers[j]), 0.0)) * &z;
    let poly_part = wigner_rows(nodes, order.cpd_order()).transpose();
    let mut basis = DMatrix::from_element(nodes.len(), n, zero());
    basis.columns_mut(0, n - p).copy_from(&kernel_part);
    basis.columns_mut(n - p, p).copy_from(&poly_part);

    let mut weighted = basis.clone();
    for (i, w) in weights.iter().enumerate() {
        weighted.row_mut(i).scale_mut(*w);
    }
    let gram = basis.adjoint() * &weighted;
    let rhs = weighted.adjoint() * DVector::from_column_slice(values);

    let eig = SymmetricEigen::new(gram.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v.abs())));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= CONDITION_THRESHOLD) {
        return Err(Error::Conditioning {
            estimate: cond,
            threshold: CONDITION_THRESHOLD,
            context: "least-squares Gram matrix".into(),
        });
    }
    let coeffs = gram.cholesky().map(|c| c.solve(&rhs)).ok_or(Error::Conditioning {
        estimate: f64::INFINITY,
        threshold: CONDITION_THRESHOLD,
        context: "least-squares Gram matrix is not positive definite".into(),
    })?;
    let alpha = &z * coeffs.rows(0, n - p);
    SplineModel::new(
        order,
        centers.to_vec(),
        alpha.iter().copied().collect(),
        coeffs.rows(n - p, p).iter().copied().collect(),
    )
}

/// Least-squares projection of `f` using `rule` as the inner product.
pub fn least_squares_fit<F>(centers: &[Rotation], mut f: F, order: KernelOrder, rule: &QuadratureRule) -> Result<SplineModel>
where
    F: FnMut(&Rotation) -> C64,
{
    let values: Vec<C64> = rule.nodes().iter().map(&mut f).collect();
    least_squares_from_samples(centers, order, rule.nodes(), rule.weights(), &values)
}

/// Fourier coefficients of a model through degree `band`, in closed form:
/// `ŝ^ℓ = k̃_m(ℓ)/√(2ℓ+1)·Σ_ξ α_ξ conj(D^ℓ(ξ))` plus `β/√(2ℓ+1)` for `ℓ ≤ ℓ₀`.
pub fn model_fourier_coefficients(model: &SplineModel, band: usize) -> FourierCoefficients {
    let mut out = FourierCoefficients::zeros(band);
    for (a, c) in model.alpha.iter().zip(&model.centers) {
        let d = eval_all_unchecked(band, c);
        for (o, v) in out.values_mut().iter_mut().zip(&d) {
            *o += a * v.conj();
        }
    }
    for l in 0..=band {
        let root = ((2 * l + 1) as f64).sqrt();
        let k = kernel_cheb_coeff(model.order, l);
        for v in out.band_mut(l) {
            *v *= k / root;
        }
    }
    let l0 = model.cpd_order().min(band);
    for (i, b) in model.beta.iter().enumerate().take(band_offset(l0 + 1)) {
        let l = crate::wigner::WignerIndex::from_flat(i).degree();
        out.values_mut()[i] += b / ((2 * l + 1) as f64).sqrt();
    }
    out
}

/// Native-space seminorm of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormReport {
    /// `Σ_{ℓ₀<ℓ≤N} (2ℓ+1)·Σ_{ι,ν} |ŝ^ℓ_{ι,ν}|²/|k̃_m(ℓ)|`.
    pub partial: f64,
    /// All bands: `σ·α*Aα`.
    pub total: f64,
    /// `total − partial`, the contribution of bands above `N`.
    pub tail: f64,
    pub band: usize,
}

/// Squared native seminorm of `model`, summed over `ℓ₀ < ℓ ≤ band` and in full.
pub fn native_seminorm(model: &SplineModel, band: usize) -> Result<SeminormReport> {
    let l0 = model.cpd_order();
    if band < l0 {
        return Err(Error::InvalidArgument(format!(
            "seminorm band {band} lies below the polynomial degree {l0}"
        )));
    }
    crate::wigner::eval_all(band, &Rotation::IDENTITY)?;
    let coeffs = model_fourier_coefficients(model, band);
    let mut partial = 0.0;
    for l in (l0 + 1)..=band {
        let k = kernel_cheb_coeff(model.order, l).abs();
        let e: f64 = coeffs.band(l).iter().map(|c| c.norm_sqr()).sum();
        partial += (2 * l + 1) as f64 * e / k;
    }
    let a = DVector::from_column_slice(&model.alpha);
    let kernel = kernel_matrix(&model.centers, model.order).map(|v| C64::new(v, 0.0));
    let total = cpd_data(model.order).sign_f64() * (a.adjoint() * kernel * &a)[(0, 0)].re;
    Ok(SeminormReport {
        partial,
        total,
        tail: total - partial,
        band,
    })
}
