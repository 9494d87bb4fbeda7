//! Wigner-D functions, characters and the direct SO(3) Fourier transform.
//!
//! Band `ℓ` of a flat table stores `D^ℓ_{k,m}` at
//! `band_offset(ℓ) + (k+ℓ)(2ℓ+1) + (m+ℓ)`: degree, then first order, then
//! second order, all ascending.

use crate::error::{Error, Result};
use crate::rotations::{QuadratureRule, Rotation};
use nalgebra::{Complex, DMatrix};
use std::sync::atomic::{AtomicUsize, Ordering};

pub type C64 = Complex<f64>;

pub const DEFAULT_DEGREE_CAP: usize = 32;

static DEGREE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DEGREE_CAP);

/// Highest degree accepted by the matrix-valued evaluators.
pub fn degree_cap() -> usize {
    DEGREE_CAP.load(Ordering::Relaxed)
}

pub fn set_degree_cap(cap: usize) {
    DEGREE_CAP.store(cap, Ordering::Relaxed);
}

fn check_cap(degree: usize) -> Result<()> {
    let cap = degree_cap();
    if degree > cap {
        return Err(Error::UnsupportedDegree { degree, cap });
    }
    Ok(())
}

/// A valid `(ℓ, k, m)` triple with `|k|, |m| ≤ ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WignerIndex {
    degree: usize,
    k: i64,
    m: i64,
}

impl WignerIndex {
    pub fn new(degree: usize, k: i64, m: i64) -> Result<Self> {
        let l = degree as i64;
        if k.abs() > l || m.abs() > l {
            return Err(Error::InvalidArgument(format!(
                "Wigner index ({degree}, {k}, {m}) needs |k|, |m| <= {degree}"
            )));
        }
        Ok(Self { degree, k, m })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    /// Position in the flat table.
    pub fn flat(&self) -> usize {
        let l = self.degree as i64;
        band_offset(self.degree) + ((self.k + l) * (2 * l + 1) + self.m + l) as usize
    }

    /// Inverse of [`WignerIndex::flat`].
    pub fn from_flat(i: usize) -> Self {
        let mut degree = 0;
        while band_offset(degree + 1) <= i {
            degree += 1;
        }
        let w = 2 * degree + 1;
        let r = i - band_offset(degree);
        let l = degree as i64;
        Self {
            degree,
            k: (r / w) as i64 - l,
            m: (r % w) as i64 - l,
        }
    }
}

/// Number of entries in bands `0..ℓ`, i.e. `Σ_{j<ℓ} (2j+1)² = ℓ(4ℓ²−1)/3`.
pub const fn band_offset(degree: usize) -> usize {
    if degree == 0 {
        0
    } else {
        degree * (4 * degree * degree - 1) / 3
    }
}

/// Dimension of Π_n, the span of all `D^ℓ_{k,m}` with `ℓ ≤ n`.
pub const fn polynomial_dimension(n: usize) -> usize {
    band_offset(n + 1)
}

/// Laplace–Beltrami eigenvalue `ℓ(ℓ+1)` of band `ℓ`.
pub fn laplace_beltrami_eigenvalue(degree: usize) -> f64 {
    (degree * (degree + 1)) as f64
}

/// `U_n(t)` by its three-term recurrence; `t` is clamped after the range check.
pub fn chebyshev_u(n: usize, t: f64) -> Result<f64> {
    if !(t.abs() <= 1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "Chebyshev argument {t} lies outside [-1, 1]"
        )));
    }
    Ok(chebyshev_u_unchecked(n, t.clamp(-1.0, 1.0)))
}

pub(crate) fn chebyshev_u_unchecked(n: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * t);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// All `U_{2ℓ}(t)` for `ℓ ≤ n`.
pub(crate) fn even_chebyshev_u(n: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let (mut prev, mut cur) = (1.0, 2.0 * t);
    out.push(1.0);
    for _ in 0..n {
        // advance twice: U_{j+1} = 2t U_j − U_{j−1}
        let a = 2.0 * t * cur - prev;
        let b = 2.0 * t * a - cur;
        prev = a;
        cur = b;
        out.push(a);
    }
    out
}

/// Character `𝔠_ℓ(x) = Tr D^ℓ(x) = U_{2ℓ}(cos(ω(x)/2))`.
pub fn character(degree: usize, x: &Rotation) -> f64 {
    chebyshev_u_unchecked(2 * degree, x.half_angle_cos_sin().0)
}

/// Every `D^ℓ_{k,m}(x)` with `ℓ ≤ max_degree`, in flat order.
///
/// For fixed orders the Jacobi polynomial `P_s^{(μ,ν)}` and its normalization
/// advance in `s = ℓ − max(|k|,|m|)`, so all bands cost one pass.
pub fn eval_all(max_degree: usize, x: &Rotation) -> Result<Vec<C64>> {
    check_cap(max_degree)?;
    Ok(eval_all_unchecked(max_degree, x))
}

pub(crate) fn eval_all_unchecked(max_degree: usize, x: &Rotation) -> Vec<C64> {
    let e = x.to_euler();
    let big = max_degree as i64;
    let (half_s, half_c) = (0.5 * e.theta).sin_cos();
    let ct = e.theta.cos();
    // e^{−ikφ1}·i^k and e^{−imφ2}·i^{−m} for k, m ∈ [−L, L]
    let left: Vec<C64> = (-big..=big)
        .map(|k| C64::from_polar(1.0, -(k as f64) * (e.phi1 - std::f64::consts::FRAC_PI_2)))
        .collect();
    let right: Vec<C64> = (-big..=big)
        .map(|m| C64::from_polar(1.0, -(m as f64) * (e.phi2 + std::f64::consts::FRAC_PI_2)))
        .collect();
    let mut out = vec![C64::new(0.0, 0.0); polynomial_dimension(max_degree)];
    let pow = |b: f64, e: usize| if e == 0 { 1.0 } else { b.powi(e as i32) };

    for k in -big..=big {
        for m in -big..=big {
            let mu = (k - m).unsigned_abs() as usize;
            let nu = (k + m).unsigned_abs() as usize;
            let lmin = k.abs().max(m.abs()) as usize;
            let sign = if m >= k || (m - k) % 2 == 0 { 1.0 } else { -1.0 };
            let (a, b) = (mu as f64, nu as f64);
            // sqrt(s!(s+μ+ν)!/((s+μ)!(s+ν)!)) at s = 0 is sqrt(binom(μ+ν, μ))
            let mut norm = (1..=mu.min(nu))
                .map(|j| (mu.max(nu) + j) as f64 / j as f64)
                .product::<f64>()
                .sqrt();
            let base = sign * pow(half_s, mu) * pow(half_c, nu);
            let phase = left[(k + big) as usize] * right[(m + big) as usize];
            let (mut p_prev, mut p_cur) = (0.0, 1.0);
            for l in lmin..=max_degree {
                let s = l - lmin;
                if s == 1 {
                    p_prev = p_cur;
                    p_cur = (a + 1.0) + (a + b + 2.0) * 0.5 * (ct - 1.0);
                } else if s > 1 {
                    let n = s as f64;
                    let c = 2.0 * n + a + b;
                    let next = ((c - 1.0) * (c * (c - 2.0) * ct + a * a - b * b) * p_cur
                        - 2.0 * (n + a - 1.0) * (n + b - 1.0) * c * p_prev)
                        / (2.0 * n * (n + a + b) * (c - 2.0));
                    p_prev = p_cur;
                    p_cur = next;
                }
                if s > 0 {
                    let n = s as f64;
                    norm *= (n * (n + a + b) / ((n + a) * (n + b))).sqrt();
                }
                let li = l as i64;
                let idx = band_offset(l) + ((k + li) * (2 * li + 1) + m + li) as usize;
                out[idx] = phase * (base * norm * p_cur);
            }
        }
    }
    out
}

/// The `(2ℓ+1)×(2ℓ+1)` matrix `D^ℓ(x)`, rows `k` and columns `m` ascending.
pub fn wigner_d_matrix(degree: usize, x: &Rotation) -> Result<DMatrix<C64>> {
    check_cap(degree)?;
    let all = eval_all_unchecked(degree, x);
    let w = 2 * degree + 1;
    let band = &all[band_offset(degree)..];
    Ok(DMatrix::from_fn(w, w, |r, c| band[r * w + c]))
}

/// The single function value `D^ℓ_{k,m}(x)`.
pub fn wigner_d(index: WignerIndex, x: &Rotation) -> Result<C64> {
    check_cap(index.degree)?;
    Ok(eval_all_unchecked(index.degree, x)[index.flat()])
}

/// Banded table `f̂^ℓ_{k,m}`, `0 ≤ ℓ ≤ n`, in flat order.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    band_limit: usize,
    values: Vec<C64>,
    under_integrated: bool,
}

impl FourierCoefficients {
    pub fn zeros(band_limit: usize) -> Self {
        Self {
            band_limit,
            values: vec![C64::new(0.0, 0.0); polynomial_dimension(band_limit)],
            under_integrated: false,
        }
    }

    pub fn from_values(band_limit: usize, values: Vec<C64>) -> Result<Self> {
        if values.len() != polynomial_dimension(band_limit) {
            return Err(Error::InvalidArgument(format!(
                "band limit {band_limit} needs {} coefficients, got {}",
                polynomial_dimension(band_limit),
                values.len()
            )));
        }
        Ok(Self {
            band_limit,
            values,
            under_integrated: false,
        })
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    /// Set when the analysis rule was not exact to degree `2n`.
    pub fn under_integrated(&self) -> bool {
        self.under_integrated
    }

    pub fn get(&self, index: WignerIndex) -> C64 {
        if index.degree > self.band_limit {
            return C64::new(0.0, 0.0);
        }
        self.values[index.flat()]
    }

    pub fn set(&mut self, index: WignerIndex, value: C64) {
        assert!(index.degree <= self.band_limit, "index outside band");
        self.values[index.flat()] = value;
    }

    /// Coefficients of band `ℓ` as a row-major `(2ℓ+1)²` slice.
    pub fn band(&self, degree: usize) -> &[C64] {
        &self.values[band_offset(degree)..band_offset(degree + 1)]
    }

    pub fn band_mut(&mut self, degree: usize) -> &mut [C64] {
        &mut self.values[band_offset(degree)..band_offset(degree + 1)]
    }

    /// `Σ |f̂|²`, the squared L₂ norm under the symmetric normalization.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `f̂^ℓ_{k,m} = √(2ℓ+1) ∫ f · conj(D^ℓ_{k,m}) dμ` evaluated with `rule`.
pub fn fourier_analyze<F>(mut f: F, band_limit: usize, rule: &QuadratureRule) -> Result<FourierCoefficients>
where
    F: FnMut(&Rotation) -> C64,
{
    check_cap(band_limit)?;
    let mut out = FourierCoefficients::zeros(band_limit);
    for (x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let fx = f(x) * w;
        let d = eval_all_unchecked(band_limit, x);
        for (acc, dv) in out.values.iter_mut().zip(&d) {
            *acc += fx * dv.conj();
        }
    }
    for l in 0..=band_limit {
        let s = ((2 * l + 1) as f64).sqrt();
        for v in out.band_mut(l) {
            *v *= s;
        }
    }
    out.under_integrated = rule.exactness() < 2 * band_limit;
    Ok(out)
}

/// `Σ_ℓ Σ_{k,m} √(2ℓ+1) f̂^ℓ_{k,m} D^ℓ_{k,m}(x)`.
pub fn fourier_synthesize(coeffs: &FourierCoefficients, x: &Rotation) -> C64 {
    let d = eval_all_unchecked(coeffs.band_limit, x);
    let mut total = C64::new(0.0, 0.0);
    for l in 0..=coeffs.band_limit {
        let range = band_offset(l)..band_offset(l + 1);
        let band: C64 = coeffs.values[range.clone()].iter().zip(&d[range]).map(|(c, v)| c * v).sum();
        total += band * ((2 * l + 1) as f64).sqrt();
    }
    total
}
