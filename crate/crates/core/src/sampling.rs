//! Deterministic sampling of evaluation points.
//!
//! All batch runs draw their points up front from a seeded stream, so a
//! run is reproducible bit-for-bit regardless of worker count.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::jet::table::EvalPoint;
use crate::metric::MetricSpec;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub seed: u64,
    pub count: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            seed: 42,
            count: 100,
        }
    }
}

pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> SeededRng {
        SeededRng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.random_range(lo..hi)
    }

    /// Complex number with modulus in `[rmin, rmax]`, uniform phase.
    pub fn complex_annulus(&mut self, rmin: f64, rmax: f64) -> Complex64 {
        let r = self.uniform(rmin, rmax);
        let phi = self.uniform(0.0, std::f64::consts::TAU);
        Complex64::from_polar(r, phi)
    }

    pub fn vector(&mut self, len: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..len).map(|_| self.uniform(lo, hi)).collect()
    }
}

/// Sample a base chart position inside the metric's sampling radius.
pub fn sample_base(spec: &MetricSpec, rng: &mut SeededRng) -> Vec<f64> {
    let dim = 2 * spec.n;
    let scale = spec.domain.sample_z / (dim as f64).sqrt();
    rng.vector(dim, -scale, scale)
}

/// Sample a fiber vector respecting the metric's degeneracy floors.
pub fn sample_fiber(spec: &MetricSpec, rng: &mut SeededRng) -> Vec<f64> {
    let dim = 2 * spec.n;
    let floor = spec.domain.min_fiber_component;
    loop {
        let y = rng.vector(dim, -1.0, 1.0);
        let norm: f64 = y.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 0.3 {
            continue;
        }
        if floor > 0.0 {
            let ok = (0..spec.n).all(|a| {
                let m = (y[a] * y[a] + y[spec.n + a] * y[spec.n + a]).sqrt();
                m >= floor
            });
            if !ok {
                continue;
            }
        }
        return y;
    }
}

pub fn sample_point(spec: &MetricSpec, rng: &mut SeededRng) -> EvalPoint {
    EvalPoint {
        x: sample_base(spec, rng),
        y: sample_fiber(spec, rng),
    }
}

/// Pre-draw a deterministic batch of points.
pub fn sample_points(spec: &MetricSpec, cfg: &SamplingConfig) -> Vec<EvalPoint> {
    let mut rng = SeededRng::new(cfg.seed);
    (0..cfg.count).map(|_| sample_point(spec, &mut rng)).collect()
}
