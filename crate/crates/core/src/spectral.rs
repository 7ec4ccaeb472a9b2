//! Two-dimensional FFTs on square grids with a shared plan cache.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub(crate) struct Plan2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

pub(crate) fn plan(n: usize) -> Arc<Plan2> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plan2>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plan2 {
                n,
                fwd: planner.plan_fft_forward(n),
                inv: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

impl Plan2 {
    fn run(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, n);
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, n);
    }

    /// Coefficients `c_k = n⁻² Σ_j f_j e^{−2πi k·j/n}`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd);
        let s = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|c| *c *= s);
    }

    /// Synthesis `f_j = Σ_k c_k e^{2πi k·j/n}`.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv);
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Signed wavenumber of FFT index `i` on an `n`-point axis; Nyquist is `−n/2`.
#[inline]
pub(crate) fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[inline]
pub(crate) fn is_nyquist(i: usize, n: usize) -> bool {
    i == n / 2
}

pub(crate) fn forward_real(values: &[f64], n: usize) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(n).forward(&mut data);
    data
}

pub(crate) fn inverse_real(mut coeffs: Vec<Complex64>, n: usize) -> Vec<f64> {
    plan(n).inverse(&mut coeffs);
    coeffs.into_iter().map(|c| c.re).collect()
}

/// Samples on an `m`-grid of the band-limited function with `n`-grid coefficients.
pub(crate) fn pad_synthesize(coeffs: &[Complex64], n: usize, m: usize) -> Vec<f64> {
    debug_assert!(m >= n);
    let mut big = vec![Complex64::new(0.0, 0.0); m * m];
    for i1 in 0..n {
        if is_nyquist(i1, n) {
            continue;
        }
        let j1 = wavenumber(i1, n).rem_euclid(m as i64) as usize;
        for i2 in 0..n {
            if is_nyquist(i2, n) {
                continue;
            }
            let j2 = wavenumber(i2, n).rem_euclid(m as i64) as usize;
            big[j1 * m + j2] = coeffs[i1 * n + i2];
        }
    }
    inverse_real(big, m)
}

/// Coefficients of `m`-grid samples restricted to the non-Nyquist modes of an `n`-grid.
pub(crate) fn analyze_truncate(values: &[f64], m: usize, n: usize) -> Vec<Complex64> {
    let big = forward_real(values, m);
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i1 in 0..n {
        if is_nyquist(i1, n) {
            continue;
        }
        let j1 = wavenumber(i1, n).rem_euclid(m as i64) as usize;
        for i2 in 0..n {
            if is_nyquist(i2, n) {
                continue;
            }
            let j2 = wavenumber(i2, n).rem_euclid(m as i64) as usize;
            out[i1 * n + i2] = big[j1 * m + j2];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let n = 16;
        let v: Vec<f64> = (0..n * n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let back = inverse_real(forward_real(&v, n), n);
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_on_expected_index() {
        let n = 8;
        let v: Vec<f64> = (0..n * n)
            .map(|idx| {
                let (i1, i2) = (idx / n, idx % n);
                (2.0 * std::f64::consts::PI * (i1 as f64 + 2.0 * i2 as f64) / n as f64).cos()
            })
            .collect();
        let c = forward_real(&v, n);
        let at = |k1: i64, k2: i64| {
            let i1 = k1.rem_euclid(n as i64) as usize;
            let i2 = k2.rem_euclid(n as i64) as usize;
            c[i1 * n + i2]
        };
        assert!((at(1, 2).re - 0.5).abs() < 1e-14);
        assert!((at(-1, -2).re - 0.5).abs() < 1e-14);
        let total: f64 = c.iter().map(|z| z.norm()).sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn padding_interpolates_band_limited_data() {
        let n = 8;
        let m = 16;
        let f = |x1: f64, x2: f64| (x1 + 2.0 * x2).sin() + 0.3 * (3.0 * x1).cos();
        let h = 2.0 * std::f64::consts::PI;
        let v: Vec<f64> = (0..n * n)
            .map(|i| f(h * (i / n) as f64 / n as f64, h * (i % n) as f64 / n as f64))
            .collect();
        let padded = pad_synthesize(&forward_real(&v, n), n, m);
        for i in 0..m * m {
            let x1 = h * (i / m) as f64 / m as f64;
            let x2 = h * (i % m) as f64 / m as f64;
            assert!((padded[i] - f(x1, x2)).abs() < 1e-12);
        }
        let back = analyze_truncate(&padded, m, n);
        let orig = forward_real(&v, n);
        for (a, b) in back.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
