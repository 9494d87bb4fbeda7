//! Surface-spline kernels `k_m(x, α) = sin(dist(x, α)/2)^{2m−3}`, their
//! character coefficients and the polyharmonic operator they invert.

use crate::error::{Error, Result};
use crate::rotations::{half_distance_cos_sin, Rotation};
use crate::wigner::{even_chebyshev_u, laplace_beltrami_eigenvalue, FourierCoefficients};
use std::f64::consts::PI;

/// Largest supported order; coefficient products stay far from overflow.
pub const MAX_ORDER: u32 = 12;

/// Default truncation degree for character-series evaluation.
pub const DEFAULT_SERIES_TRUNCATION: usize = 400;

/// Kernel order `m ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelOrder(u32);

impl KernelOrder {
    pub fn new(m: u32) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&m) {
            return Err(Error::InvalidArgument(format!(
                "kernel order must lie in 2..={MAX_ORDER}, got {m}"
            )));
        }
        Ok(Self(m))
    }

    pub fn m(&self) -> u32 {
        self.0
    }

    /// Power `2m − 3` of `sin(dist/2)`.
    pub fn exponent(&self) -> i32 {
        2 * self.0 as i32 - 3
    }

    /// Half-integer smoothness `s = (2m − 3)/2`.
    pub fn smoothness(&self) -> f64 {
        (2 * self.0 - 3) as f64 / 2.0
    }

    /// Order `ℓ₀ = m − 2` of conditional positive definiteness.
    pub fn cpd_order(&self) -> usize {
        self.0 as usize - 2
    }

    /// Roots `r_j = j² − 1/4`, `j < m`, of the operator polynomial.
    pub fn roots(&self) -> Vec<f64> {
        (0..self.0).map(|j| (j * j) as f64 - 0.25).collect()
    }

    /// `(2m−2)!/(−4)^{m−1}`, accumulated as a product of ratios.
    fn leading_factor(&self) -> f64 {
        (1..self.0).fold(1.0, |acc, j| acc * ((2 * j - 1) * (2 * j)) as f64 / -4.0)
    }
}

/// Conditional positive definiteness data: order `ℓ₀` and the sign `σ` that
/// makes `σ·a*Aa` positive on the moment-constrained subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CpdData {
    pub cpd_order: usize,
    pub sign: i8,
}

impl CpdData {
    pub fn sign_f64(&self) -> f64 {
        self.sign as f64
    }
}

/// `ℓ₀ = m − 2` and `σ = (−1)^{m−1}`, the sign of every `k̃_m(ℓ)` with `ℓ ≥ m − 1`.
pub fn cpd_data(order: KernelOrder) -> CpdData {
    CpdData {
        cpd_order: order.cpd_order(),
        sign: if order.m() % 2 == 0 { -1 } else { 1 },
    }
}

/// `k_m(x, α)`. Computed from `sin(dist/2)` directly so no arccos is involved.
pub fn kernel_eval(order: KernelOrder, x: &Rotation, alpha: &Rotation) -> f64 {
    let (_, s) = half_distance_cos_sin(x, alpha);
    kernel_of_half_sine(order, s)
}

pub(crate) fn kernel_of_half_sine(order: KernelOrder, s: f64) -> f64 {
    s.clamp(0.0, 1.0).powi(order.exponent())
}

/// Character coefficient `k̃_m(ℓ) = (2/π)(2m−2)!/(−4)^{m−1} ∏_{|j|<m} (ℓ+j+½)^{−1}`.
pub fn kernel_cheb_coeff(order: KernelOrder, degree: usize) -> f64 {
    let center = degree as f64 + 0.5;
    let m = order.m() as i64;
    let product = (-(m - 1)..m).fold(1.0, |acc, j| acc / (center + j as f64));
    2.0 / PI * order.leading_factor() * product
}

/// `Σ_{j=0}^{M} (−1)^j C(M, j)/(L + j)`.
pub fn alternating_binomial_sum(big_m: usize, big_l: f64) -> f64 {
    let mut binom = 1.0;
    let mut total = 0.0;
    for j in 0..=big_m {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom / (big_l + j as f64);
        binom *= (big_m - j) as f64 / (j + 1) as f64;
    }
    total
}

/// `M!/(L(L+1)⋯(L+M))`, the closed form of [`alternating_binomial_sum`].
pub fn rising_reciprocal(big_m: usize, big_l: f64) -> f64 {
    (0..=big_m).fold(1.0, |acc, j| acc * if j == 0 { 1.0 } else { j as f64 } / (big_l + j as f64))
}

/// `k̃_m(ℓ)` through the alternating binomial sum instead of the product.
/// Suffers cancellation for large `ℓ`; used as an independent cross-check.
pub fn kernel_cheb_coeff_by_differences(order: KernelOrder, degree: usize) -> f64 {
    let m = order.m() as usize;
    let shift = degree as f64 - m as f64 + 1.5;
    (-0.25f64).powi(m as i32 - 1) * 2.0 / PI * alternating_binomial_sum(2 * m - 2, shift)
}

/// Table `k̃_m(ℓ)`, `0 ≤ ℓ ≤ N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebSeries {
    order: KernelOrder,
    coeffs: Vec<f64>,
}

impl ChebSeries {
    pub fn new(order: KernelOrder, truncation: usize) -> Self {
        Self {
            order,
            coeffs: (0..=truncation).map(|l| kernel_cheb_coeff(order, l)).collect(),
        }
    }

    pub fn order(&self) -> KernelOrder {
        self.order
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Partial sum `Σ_{ℓ≤N} k̃_m(ℓ)·U_{2ℓ}(c)` at `c = cos(dist/2)`.
    pub fn eval_half_cosine(&self, c: f64) -> f64 {
        let u = even_chebyshev_u(self.truncation(), c.clamp(-1.0, 1.0));
        self.coeffs.iter().zip(&u).map(|(k, u)| k * u).sum()
    }

    pub fn eval(&self, x: &Rotation, alpha: &Rotation) -> f64 {
        self.eval_half_cosine(half_distance_cos_sin(x, alpha).0)
    }
}

/// `Σ_{ℓ≤N} k̃_m(ℓ)·𝔠_ℓ(α⁻¹x)`.
pub fn kernel_series_eval(order: KernelOrder, x: &Rotation, alpha: &Rotation, truncation: usize) -> f64 {
    ChebSeries::new(order, truncation).eval(x, alpha)
}

/// Symbol `p_m(ℓ(ℓ+1)) = π(−4)^{m−1}/(2m−2)! ∏_j (ℓ(ℓ+1) − r_j)` of `L_m` on band `ℓ`.
pub fn lm_symbol(order: KernelOrder, degree: usize) -> f64 {
    let nu = laplace_beltrami_eigenvalue(degree);
    let product: f64 = order.roots().iter().map(|r| nu - r).product();
    PI / order.leading_factor() * product
}

/// `L_m` applied in the Fourier domain: band `ℓ` is scaled by its symbol.
pub fn apply_lm(order: KernelOrder, coeffs: &FourierCoefficients) -> FourierCoefficients {
    let mut out = coeffs.clone();
    for l in 0..=coeffs.band_limit() {
        let p = lm_symbol(order, l);
        for v in out.band_mut(l) {
            *v *= p;
        }
    }
    out
}
