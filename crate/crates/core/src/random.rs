//! Seeded random band-limited fields.
//!
//! The generator is ChaCha8 keyed by the seed, so a seed names the same field
//! on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use crate::field::{Grid, ScalarField, SpectralField};

/// Zero-mean random field with modes `|k_i| ≤ kmax` (capped below Nyquist).
///
/// Coefficients are complex Gaussians damped by `1/(1 + |k|²)`; the result is
/// rescaled so that `max|h̃| = amplitude`.
pub fn random_smooth_field(grid: Grid, slope: [f64; 2], seed: u64, kmax: usize, amplitude: f64) -> ScalarField {
    let n = grid.n();
    let kmax = kmax.min(n / 2 - 1) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n * n];
    let idx = |k1: i64, k2: i64| {
        k1.rem_euclid(n as i64) as usize * n + k2.rem_euclid(n as i64) as usize
    };
    for k1 in 0..=kmax {
        for k2 in -kmax..=kmax {
            if k1 == 0 && k2 <= 0 {
                continue;
            }
            let w = 1.0 / (1.0 + (k1 * k1 + k2 * k2) as f64);
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let c = Complex64::new(re, im) * w;
            coeffs[idx(k1, k2)] = c;
            coeffs[idx(-k1, -k2)] = c.conj();
        }
    }
    let f = ScalarField::from_spectrum(&SpectralField { grid, coeffs }, slope);
    let m = f.max_abs();
    if m == 0.0 {
        return f;
    }
    let values = f.values().iter().map(|v| v * amplitude / m).collect();
    ScalarField::from_samples(grid, values, slope).expect("length matches grid")
}
