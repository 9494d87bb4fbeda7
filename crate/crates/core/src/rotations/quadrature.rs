use super::{EulerAngles, Rotation};
use std::f64::consts::{PI, TAU};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending nodes.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    // (P_n(z), P_n'(z)) by the three-term recurrence
    let legendre = |z: f64| -> (f64, f64) {
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
    };
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Nodes and positive weights approximating the normalized Haar integral.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<Rotation>,
    weights: Vec<f64>,
    exactness: usize,
}

impl QuadratureRule {
    /// A rule from explicit nodes and weights with a declared exactness degree.
    pub fn new(nodes: Vec<Rotation>, weights: Vec<f64>, exactness: usize) -> Self {
        assert_eq!(nodes.len(), weights.len());
        Self {
            nodes,
            weights,
            exactness,
        }
    }

    /// Equal weights on the given nodes; exact only for constants.
    pub fn equal_weights(nodes: Vec<Rotation>) -> Self {
        let w = 1.0 / nodes.len() as f64;
        let weights = vec![w; nodes.len()];
        Self::new(nodes, weights, 0)
    }

    /// Product rule in axis-angle coordinates: a midpoint rule with `radial`
    /// nodes in the rotation angle and a product Gauss rule on the axis sphere
    /// exact for polynomials of degree `sphere_degree`. Class functions are
    /// integrated by the radial factor alone, which is exact for
    /// `U_{2ℓ}(cos(ω/2))`-expansions up to ℓ = 2·radial − 3.
    pub fn axis_angle(radial: usize, sphere_degree: usize) -> Self {
        let g = sphere_degree / 2 + 1;
        let naz = sphere_degree + 1;
        let (zs, zw) = gauss_legendre(g);
        let mut nodes = Vec::with_capacity(radial * g * naz);
        let mut weights = Vec::with_capacity(radial * g * naz);
        for i in 0..radial {
            let omega = (i as f64 + 0.5) * PI / radial as f64;
            let wr = 2.0 / radial as f64 * (0.5 * omega).sin().powi(2);
            let (s, c) = (0.5 * omega).sin_cos();
            for (z, wz) in zs.iter().zip(&zw) {
                let rho = (1.0 - z * z).max(0.0).sqrt();
                for a in 0..naz {
                    let psi = TAU * a as f64 / naz as f64;
                    let axis = [rho * psi.cos(), rho * psi.sin(), *z];
                    nodes.push(Rotation::from_quaternion_normalized([
                        c,
                        s * axis[0],
                        s * axis[1],
                        s * axis[2],
                    ]));
                    weights.push(wr * 0.5 * wz / naz as f64);
                }
            }
        }
        let exactness = (2 * radial).saturating_sub(2).min(sphere_degree / 2);
        Self::new(nodes, weights, exactness)
    }

    pub fn nodes(&self) -> &[Rotation] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Declared degree `n`: every element of Π_n is integrated exactly.
    pub fn exactness(&self) -> usize {
        self.exactness
    }

    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        F: FnMut(&Rotation) -> T,
        T: std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, &w)| f(x) * w)
            .sum()
    }

    /// The rule with every node left-multiplied by `x`; Haar invariance keeps
    /// weights and exactness.
    pub fn translated(&self, x: &Rotation) -> Self {
        Self::new(
            self.nodes.iter().map(|n| *x * *n).collect(),
            self.weights.clone(),
            self.exactness,
        )
    }
}

/// Product rule exact for all Wigner-D functions of degree `≤ n`: Gauss–Legendre
/// in `cos θ` with `⌊n/2⌋ + 1` nodes and `n + 1` uniform nodes in each of φ1, φ2.
pub fn haar_quadrature(n: usize) -> QuadratureRule {
    let g = n / 2 + 1;
    let nphi = n + 1;
    let (ts, tw) = gauss_legendre(g);
    let mut nodes = Vec::with_capacity(g * nphi * nphi);
    let mut weights = Vec::with_capacity(g * nphi * nphi);
    let wphi = 1.0 / (nphi * nphi) as f64;
    for (t, wt) in ts.iter().zip(&tw) {
        let theta = t.clamp(-1.0, 1.0).acos();
        for a in 0..nphi {
            let phi1 = TAU * a as f64 / nphi as f64;
            for b in 0..nphi {
                let phi2 = TAU * b as f64 / nphi as f64;
                nodes.push(Rotation::from_euler(EulerAngles::new(phi1, theta, phi2)));
                weights.push(0.5 * wt * wphi);
            }
        }
    }
    QuadratureRule::new(nodes, weights, n)
}
