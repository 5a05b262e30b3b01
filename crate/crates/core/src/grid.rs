//! Deterministic sample points in the tangential polydisc.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 0x6A65_7471;
pub const DEFAULT_SAMPLES: usize = 9;
pub const DEFAULT_RADIUS: f64 = 0.6;
pub const SEED_ENV: &str = "JETQ_SEED";

/// Seed from `JETQ_SEED` (decimal or `0x` hex), else the default.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| {
            let s = s.trim();
            match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
                Some(hex) => u64::from_str_radix(hex, 16).ok(),
                None => s.parse().ok(),
            }
        })
        .unwrap_or(DEFAULT_SEED)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGrid {
    pub count: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid {
            count: DEFAULT_SAMPLES,
            radius: DEFAULT_RADIUS,
            seed: DEFAULT_SEED,
        }
    }
}

impl SampleGrid {
    /// Up to five points on the real diagonal ray `t*(1,..,1)`, `t` in `[0, radius]`,
    /// followed by seeded uniform points of the polydisc.
    pub fn points(&self, tangential_dim: usize) -> Vec<Vec<Complex64>> {
        if tangential_dim == 0 {
            return vec![Vec::new()];
        }
        let axis = self.count.min(5);
        let mut out: Vec<Vec<Complex64>> = (0..axis)
            .map(|k| {
                let t = if axis == 1 {
                    0.0
                } else {
                    self.radius * k as f64 / (axis - 1) as f64
                };
                vec![Complex64::new(t, 0.0); tangential_dim]
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in axis..self.count {
            out.push(
                (0..tangential_dim)
                    .map(|_| {
                        let r = self.radius * rng.gen::<f64>().sqrt();
                        let theta = std::f64::consts::TAU * rng.gen::<f64>();
                        Complex64::from_polar(r, theta)
                    })
                    .collect(),
            );
        }
        out
    }
}
