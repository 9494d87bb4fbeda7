use super::{point_set_stats, PointSet, Rotation, DEFAULT_PROBES_PER_POINT};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Target mesh ratio for quasi-uniform sets.
pub const QUASI_UNIFORM_MESH_RATIO: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Independent Haar-distributed draws.
    Uniform,
    /// Farthest-point insertion from a Haar pool; every prefix is itself
    /// well spread, so nested refinement levels are prefixes of one set.
    QuasiUniform,
}

/// Haar-distributed rotation (Shoemake's subgroup algorithm).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random::<f64>() * TAU;
    let u3: f64 = rng.random::<f64>() * TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    Rotation::from_quaternion_normalized([b * u3.cos(), a * u2.sin(), a * u2.cos(), b * u3.sin()])
}

fn abs_dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]).abs()
}

/// Greedy farthest-point order of the first `count` pool elements.
fn farthest_points(pool: &[Rotation], count: usize) -> Vec<Rotation> {
    let quats: Vec<[f64; 4]> = pool.iter().map(|p| p.quaternion()).collect();
    // closeness[i] = max |⟨q_i, q_chosen⟩|; smaller means farther
    let mut closeness = vec![f64::NEG_INFINITY; pool.len()];
    let mut chosen = Vec::with_capacity(count);
    let mut next = 0usize;
    for _ in 0..count {
        chosen.push(pool[next]);
        let c = quats[next];
        let mut best = (f64::INFINITY, 0usize);
        for (i, q) in quats.iter().enumerate() {
            let v = closeness[i].max(abs_dot(q, &c));
            closeness[i] = v;
            if v < best.0 {
                best = (v, i);
            }
        }
        next = best.1;
    }
    chosen
}

/// Draws `count` rotations deterministically from `seed` and computes their
/// statistics with the default probe budget.
pub fn sample_points(count: usize, mode: SamplingMode, seed: u64) -> Result<PointSet> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!(
            "sample_points needs a count of at least 2 to form a point set, got {count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes = DEFAULT_PROBES_PER_POINT * count;
    match mode {
        SamplingMode::Uniform => {
            let points = (0..count).map(|_| random_rotation(&mut rng)).collect();
            point_set_stats(points, probes, seed ^ 0x9e37_79b9_7f4a_7c15)
        }
        SamplingMode::QuasiUniform => {
            let mut factor = 10;
            loop {
                let pool: Vec<Rotation> = (0..factor * count).map(|_| random_rotation(&mut rng)).collect();
                let set = point_set_stats(farthest_points(&pool, count), probes, seed ^ 0x9e37_79b9_7f4a_7c15)?;
                if set.mesh_ratio() <= QUASI_UNIFORM_MESH_RATIO || factor >= 80 {
                    return Ok(set);
                }
                factor *= 2;
            }
        }
    }
}
