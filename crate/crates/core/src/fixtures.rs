//! Deterministic synthetic test images.
//!
//! Each image is a piecewise-smooth luminance field (a few discs and
//! half-planes with their own gradients over a smooth background) mapped to
//! every channel with a channel-specific gain and offset, which makes the
//! channels strongly correlated like natural colour images. Samples are
//! rounded to integers in `0..=255`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::Image3;

/// Seeds of the bundled fixtures.
pub const FIXTURE_SEEDS: [u64; 3] = [11, 23, 37];

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub seed: u64,
    pub image: Image3<f64>,
}

enum Region {
    Disc { cx: f64, cy: f64, r: f64 },
    HalfPlane { nx: f64, ny: f64, c: f64 },
}

impl Region {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Region::Disc { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
            Region::HalfPlane { nx, ny, c } => nx * x + ny * y >= c,
        }
    }
}

struct Piece {
    region: Region,
    level: f64,
    gx: f64,
    gy: f64,
}

/// An `nx x ny x nz` piecewise-smooth image in `0..=255`.
pub fn piecewise_smooth(nx: usize, ny: usize, nz: usize, seed: u64) -> Image3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (fx, fy) = (nx as f64, ny as f64);

    let base = rng.random_range(70.0..130.0);
    let (bgx, bgy) = (rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0));
    let (wx, wy) = (rng.random_range(1.0..3.0), rng.random_range(1.0..3.0));
    let wave = rng.random_range(5.0..15.0);

    let pieces: Vec<Piece> = (0..5)
        .map(|n| {
            let region = if n % 2 == 0 {
                Region::Disc {
                    cx: rng.random_range(0.0..fx),
                    cy: rng.random_range(0.0..fy),
                    r: rng.random_range(0.1..0.35) * fx.min(fy),
                }
            } else {
                let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let (px, py) = (
                    rng.random_range(0.2..0.8) * fx,
                    rng.random_range(0.2..0.8) * fy,
                );
                Region::HalfPlane {
                    nx: t.cos(),
                    ny: t.sin(),
                    c: t.cos() * px + t.sin() * py,
                }
            };
            Piece {
                region,
                level: rng.random_range(-60.0..60.0),
                gx: rng.random_range(-20.0..20.0),
                gy: rng.random_range(-20.0..20.0),
            }
        })
        .collect();

    let gains: Vec<f64> = (0..nz).map(|_| rng.random_range(0.75..1.15)).collect();
    let offsets: Vec<f64> = (0..nz).map(|_| rng.random_range(-15.0..15.0)).collect();
    let tilts: Vec<(f64, f64)> = (0..nz)
        .map(|_| (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)))
        .collect();

    let luminance = |x: f64, y: f64| {
        let (u, v) = (x / fx, y / fy);
        let mut l = base
            + bgx * u
            + bgy * v
            + wave
                * (std::f64::consts::TAU * wx * u).sin()
                * (std::f64::consts::TAU * wy * v).cos();
        // later pieces paint over earlier ones
        for p in &pieces {
            if p.region.contains(x, y) {
                l = 128.0 + p.level + p.gx * u + p.gy * v;
            }
        }
        l
    };

    Image3::from_fn(nx, ny, nz, |i, j, s| {
        let (x, y) = (i as f64 + 0.5, j as f64 + 0.5);
        let (u, v) = (x / fx, y / fy);
        let v = gains[s] * luminance(x, y) + offsets[s] + tilts[s].0 * u + tilts[s].1 * v;
        v.round().clamp(0.0, 255.0)
    })
}

/// The bundled 64x64x3 fixtures.
pub fn synthetic_suite() -> Vec<Fixture> {
    FIXTURE_SEEDS
        .iter()
        .map(|&seed| Fixture {
            name: format!("synthetic-{seed}"),
            seed,
            image: piecewise_smooth(64, 64, 3, seed),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let a = piecewise_smooth(32, 24, 3, 5);
        assert_eq!(a, piecewise_smooth(32, 24, 3, 5));
        assert_ne!(a, piecewise_smooth(32, 24, 3, 6));
        assert!(a
            .as_slice()
            .iter()
            .all(|&v| (0.0..=255.0).contains(&v) && v.fract() == 0.0));
    }

    #[test]
    fn channels_are_correlated() {
        let img = piecewise_smooth(64, 64, 3, FIXTURE_SEEDS[0]);
        let (a, b) = (img.plane(0), img.plane(1));
        let mean = |p: &[f64]| p.iter().sum::<f64>() / p.len() as f64;
        let (ma, mb) = (mean(a), mean(b));
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        assert!(cov / (va * vb).sqrt() > 0.9);
    }

    #[test]
    fn suite_shape() {
        let suite = synthetic_suite();
        assert_eq!(suite.len(), 3);
        assert!(suite.iter().all(|f| f.image.dims() == [64, 64, 3]));
    }
}
