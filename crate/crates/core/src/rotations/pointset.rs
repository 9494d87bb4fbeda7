use super::{distance, random_rotation, Rotation, SpatialIndex};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

/// Default probe budget for the fill distance: this many probes per center.
pub const DEFAULT_PROBES_PER_POINT: usize = 20;

// Number of best probes refined by local ascent, and ascent steps per probe.
const REFINED_PROBES: usize = 16;
const ASCENT_STEPS: usize = 60;

/// A finite center set with its separation distance `q`, probe-approximated
/// fill distance `h` (a lower bound of the true value) and mesh ratio `h/q`.
#[derive(Debug, Clone)]
pub struct PointSet {
    points: Vec<Rotation>,
    separation: f64,
    separation_pair: (usize, usize),
    fill: f64,
    index: OnceLock<SpatialIndex>,
}

impl PointSet {
    pub fn points(&self) -> &[Rotation] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Separation distance `q = min_{i<j} dist(ξi, ξj)`.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// The pair realizing the separation distance.
    pub fn separation_pair(&self) -> (usize, usize) {
        self.separation_pair
    }

    /// Fill distance `h` (probe lower bound).
    pub fn fill_distance(&self) -> f64 {
        self.fill
    }

    pub fn mesh_ratio(&self) -> f64 {
        self.fill / self.separation
    }

    /// Prefix `Ξ[..count]` with its own statistics.
    pub fn prefix(&self, count: usize, probe_count: usize, seed: u64) -> Result<PointSet> {
        point_set_stats(self.points[..count.min(self.len())].to_vec(), probe_count, seed)
    }

    pub(crate) fn index(&self) -> &SpatialIndex {
        self.index.get_or_init(|| SpatialIndex::new(&self.points))
    }

    /// Indices of centers within `radius` of `x`, ascending.
    pub fn within(&self, x: &Rotation, radius: f64) -> Vec<usize> {
        self.index().within(x, radius)
    }

    /// Nearest center to `x` and its distance.
    pub fn nearest(&self, x: &Rotation) -> (usize, f64) {
        self.index().nearest(x)
    }
}

fn separation(points: &[Rotation]) -> (f64, (usize, usize)) {
    // max |⟨qi, qj⟩| is the min distance; compare cosines, convert once.
    let quats: Vec<[f64; 4]> = points.iter().map(|p| p.quaternion()).collect();
    let mut best = (-1.0f64, (0usize, 1usize));
    for i in 0..quats.len() {
        let a = quats[i];
        for (j, b) in quats.iter().enumerate().skip(i + 1) {
            let c = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]).abs();
            if c > best.0 {
                best = (c, (i, j));
            }
        }
    }
    let (i, j) = best.1;
    (distance(&points[i], &points[j]), (i, j))
}

fn small_perturbation(rng: &mut ChaCha8Rng, step: f64) -> Rotation {
    let v: [f64; 3] = [
        rng.random::<f64>() - 0.5,
        rng.random::<f64>() - 0.5,
        rng.random::<f64>() - 0.5,
    ];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-300);
    let (s, c) = (0.5 * step).sin_cos();
    Rotation::from_quaternion_normalized([c, s * v[0] / n, s * v[1] / n, s * v[2] / n])
}

/// Computes separation distance exactly and the fill distance as the maximum,
/// over `probe_count` Haar-random probes refined by local ascent, of the
/// distance to the nearest center.
///
/// Fails with [`Error::DegenerateSet`] if two centers coincide.
pub fn point_set_stats(points: Vec<Rotation>, probe_count: usize, seed: u64) -> Result<PointSet> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "point set statistics need at least 2 points, got {}",
            points.len()
        )));
    }
    let (q, pair) = separation(&points);
    if q <= 0.0 {
        return Err(Error::DegenerateSet {
            first: pair.0,
            second: pair.1,
        });
    }
    let set = PointSet {
        points,
        separation: q,
        separation_pair: pair,
        fill: 0.0,
        index: OnceLock::new(),
    };
    let index = set.index();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes: Vec<(f64, Rotation)> = (0..probe_count.max(1))
        .map(|_| {
            let x = random_rotation(&mut rng);
            (index.nearest(&x).1, x)
        })
        .collect();
    probes.sort_by(|a, b| b.0.total_cmp(&a.0));
    probes.truncate(REFINED_PROBES);

    let mut fill = probes[0].0;
    for (mut best, mut x) in probes {
        let mut step = 0.5 * best.max(1e-3);
        for _ in 0..ASCENT_STEPS {
            let y = x * small_perturbation(&mut rng, step);
            let d = index.nearest(&y).1;
            if d > best {
                best = d;
                x = y;
            } else {
                step *= 0.85;
            }
        }
        fill = fill.max(best);
    }
    Ok(PointSet { fill, ..set })
}
