//! Deterministic, seeded sample sets for the estimate checkers: directions on
//! the Euclidean unit sphere, points in balls, and in-sector direction
//! bundles. Every consumer records the seed it used, so reports are
//! reproducible bit for bit.

use crate::weights::{QuasiconicSector, Weights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Standard normal deviate via Box–Muller.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// `count` directions on the unit sphere. In one dimension these alternate
/// `±1`; in two they form a uniform angular grid (offset sub-cell by the
/// seed, so distinct seeds give distinct grids without losing resolution);
/// in higher dimensions they are seeded Gaussian directions.
pub fn unit_sphere_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(n >= 1);
    match n {
        1 => (0..count)
            .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }])
            .collect(),
        2 => {
            let offset = (seed as f64 * GOLDEN).fract();
            (0..count)
                .map(|i| {
                    let theta =
                        std::f64::consts::TAU * ((i as f64 + 0.5 + offset) / count as f64);
                    vec![theta.cos(), theta.sin()]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let v: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    out.push(v.into_iter().map(|x| x / norm).collect());
                }
            }
            out
        }
    }
}

/// `count` points in the Euclidean ball of radius `radius` around `center`.
pub fn ball_points(center: &[f64], radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = center.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-12 {
            continue;
        }
        let r = radius * rng.gen_range(0.0f64..1.0).powf(1.0 / n as f64);
        out.push(
            center
                .iter()
                .zip(&v)
                .map(|(&c, &x)| c + r * x / norm)
                .collect(),
        );
    }
    out
}

/// Directions on the unit q-quasisphere inside a sector: the anchor itself
/// first, then seeded perturbations of it projected back to the quasisphere
/// and filtered by sector membership.
pub fn sector_directions(
    weights: &Weights,
    sector: &QuasiconicSector,
    count: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut out = vec![sector.anchor().to_vec()];
    if count <= 1 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sector.anchor().len();
    let mut attempts = 0usize;
    while out.len() < count && attempts < 64 * count {
        attempts += 1;
        let v: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-12 {
            continue;
        }
        let r = sector.radius() * rng.gen_range(0.0f64..1.0).powf(1.0 / n as f64);
        let candidate: Vec<f64> = sector
            .anchor()
            .iter()
            .zip(&v)
            .map(|(&a, &x)| a + r * x / norm)
            .collect();
        let Some(unit) = weights.unit_q(&candidate) else {
            continue;
        };
        if sector.contains(&unit).unwrap_or(false) {
            out.push(unit);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_directions_are_unit() {
        for n in 1..=4 {
            for dir in unit_sphere_directions(n, 64, 7) {
                let norm: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = unit_sphere_directions(3, 32, 42);
        let b = unit_sphere_directions(3, 32, 42);
        assert_eq!(a, b);
        let c = unit_sphere_directions(3, 32, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn ball_points_stay_inside() {
        let center = [1.0, -2.0];
        for p in ball_points(&center, 0.5, 128, 3) {
            let d: f64 = p
                .iter()
                .zip(&center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(d <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn two_dim_grid_covers_circle() {
        let dirs = unit_sphere_directions(2, 4096, 0);
        // Max angular gap is one cell.
        let mut angles: Vec<f64> = dirs.iter().map(|d| d[1].atan2(d[0])).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cell = std::f64::consts::TAU / 4096.0;
        for w in angles.windows(2) {
            assert!(w[1] - w[0] < 1.5 * cell);
        }
    }
}
