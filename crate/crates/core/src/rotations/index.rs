use super::{distance, Rotation};
use std::collections::HashMap;

/// Uniform grid over unit quaternions in R⁴ holding both `q` and `−q` for every
/// rotation, so that ball queries never have to wrap around the antipodal
/// identification. Rotation distance `d` corresponds to chord `2 sin(d/4)`.
#[derive(Debug, Clone)]
pub(crate) struct SpatialIndex {
    cell: f64,
    cells: HashMap<[i32; 4], Vec<u32>>,
    quats: Vec<[f64; 4]>,
    points: Vec<Rotation>,
}

// Chord beyond which a query scans everything.
const BRUTE_FORCE_CHORD: f64 = 0.9;

fn chord_for(d: f64) -> f64 {
    2.0 * (0.25 * d.clamp(0.0, std::f64::consts::PI)).sin()
}

impl SpatialIndex {
    pub(crate) fn new(points: &[Rotation]) -> Self {
        let n = points.len().max(1) as f64;
        let cell = (4.0 * std::f64::consts::PI.powi(2) / n).cbrt().clamp(0.02, 1.0);
        let mut cells: HashMap<[i32; 4], Vec<u32>> = HashMap::new();
        let mut quats = Vec::with_capacity(2 * points.len());
        for p in points {
            let q = p.quaternion();
            quats.push(q);
            quats.push(q.map(|c| -c));
        }
        for (j, q) in quats.iter().enumerate() {
            cells.entry(Self::key(q, cell)).or_default().push(j as u32);
        }
        Self {
            cell,
            cells,
            quats,
            points: points.to_vec(),
        }
    }

    fn key(q: &[f64; 4], cell: f64) -> [i32; 4] {
        q.map(|c| (c / cell).floor() as i32)
    }

    fn visit_chord(&self, q: &[f64; 4], chord: f64, mut f: impl FnMut(usize)) {
        let lo = q.map(|c| ((c - chord) / self.cell).floor() as i32);
        let hi = q.map(|c| ((c + chord) / self.cell).floor() as i32);
        let c2 = chord * chord;
        for i0 in lo[0]..=hi[0] {
            for i1 in lo[1]..=hi[1] {
                for i2 in lo[2]..=hi[2] {
                    for i3 in lo[3]..=hi[3] {
                        if let Some(list) = self.cells.get(&[i0, i1, i2, i3]) {
                            for &j in list {
                                let p = &self.quats[j as usize];
                                let d2: f64 = (0..4).map(|k| (p[k] - q[k]).powi(2)).sum();
                                if d2 <= c2 {
                                    f(j as usize / 2);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Indices of points with `dist(point, x) ≤ radius`, ascending.
    pub(crate) fn within(&self, x: &Rotation, radius: f64) -> Vec<usize> {
        let chord = chord_for(radius);
        let mut out = Vec::new();
        if chord >= BRUTE_FORCE_CHORD {
            for (i, p) in self.points.iter().enumerate() {
                if distance(p, x) <= radius {
                    out.push(i);
                }
            }
            return out;
        }
        // pad the chord slightly so the exact metric test decides membership
        let q = x.quaternion();
        self.visit_chord(&q, chord * (1.0 + 1e-9) + 1e-15, |i| {
            if distance(&self.points[i], x) <= radius {
                out.push(i);
            }
        });
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Nearest point and its distance.
    pub(crate) fn nearest(&self, x: &Rotation) -> (usize, f64) {
        let q = x.quaternion();
        let mut chord = self.cell;
        while chord < BRUTE_FORCE_CHORD {
            let mut best = (usize::MAX, f64::INFINITY);
            self.visit_chord(&q, chord, |i| {
                let d = distance(&self.points[i], x);
                if d < best.1 {
                    best = (i, d);
                }
            });
            if best.0 != usize::MAX {
                return best;
            }
            chord *= 2.0;
        }
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, distance(p, x)))
            .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }
}
