//! Periodic fields on `Ω = [0, L]²` and their spectral operators.
//!
//! Samples are stored row-major with the first index along `x1`:
//! `values[i1 * n + i2] = h̃(i1·dx, i2·dx)`. Coefficients follow
//! `h̃(x) = Σ_k h_k exp(2πi k·x / L)` with `k ∈ {−n/2, …, n/2 − 1}²`.
//!
//! Derivatives use the multipliers `2πi k_j / L` with the Nyquist row and
//! column zeroed. The nonlocal kernel `∫ (x−y)/|x−y|³ · ∇h(y) dy` acts on
//! mode `k` as the multiplier `m(k) = 4π²|k|/L`: inserting it into
//! `∫_Ω h (kernel * ∇h) = L² Σ_k m(k)|h_k|²` reproduces the seminorm identity
//! `4π² L Σ_k |k||h_k|²`, and [`oracle`] checks the pointwise form against a
//! brute-force image sum.

pub mod oracle;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{self, is_nyquist, wavenumber};

/// Square periodic grid with `n` points per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two and at least 8 (got {n})"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("L must be positive (got {length})")));
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let h = self.spacing();
        ((idx / self.n) as f64 * h, (idx % self.n) as f64 * h)
    }

    /// Grid with the same period and `factor` times the points.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n: self.n * factor,
            length: self.length,
        }
    }

    /// Wavevector of coefficient index `idx`, in integer units.
    pub fn wavevector(&self, idx: usize) -> (i64, i64) {
        (wavenumber(idx / self.n, self.n), wavenumber(idx % self.n, self.n))
    }

    /// True when either index is a Nyquist index.
    pub fn touches_nyquist(&self, idx: usize) -> bool {
        is_nyquist(idx / self.n, self.n) || is_nyquist(idx % self.n, self.n)
    }

    fn angular(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.length
    }
}

/// Height deviation `h̃` on a grid plus the mean slope `B`.
///
/// The full height is `h(x) = h̃(x) + B·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    slope: [f64; 2],
}

impl ScalarField {
    /// Wraps samples that already have zero mean.
    pub fn new(grid: Grid, values: Vec<f64>, slope: [f64; 2]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tolerance = 1e-10 * scale.max(f64::MIN_POSITIVE);
        if mean.abs() > tolerance {
            return Err(Error::NonZeroMean { mean, tolerance });
        }
        Ok(Self { grid, values, slope })
    }

    /// Wraps samples after removing their mean.
    pub fn from_samples(grid: Grid, mut values: Vec<f64>, slope: [f64; 2]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        Ok(Self { grid, values, slope })
    }

    /// Samples `f(x1, x2)` and removes the mean.
    pub fn from_fn(grid: Grid, slope: [f64; 2], f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let (x1, x2) = grid.point(i);
                f(x1, x2)
            })
            .collect();
        Self::from_samples(grid, values, slope).expect("length matches grid")
    }

    pub fn zeros(grid: Grid, slope: [f64; 2]) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            slope,
        }
    }

    /// Field with coefficients `coeffs`; the zero mode is dropped.
    pub fn from_spectrum(spec: &SpectralField, slope: [f64; 2]) -> Self {
        let mut c = spec.coeffs.clone();
        c[0] = Complex64::new(0.0, 0.0);
        let values = spectral::inverse_real(c, spec.grid.n);
        Self::from_samples(spec.grid, values, slope).expect("length matches grid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slope(&self) -> [f64; 2] {
        self.slope
    }

    pub fn with_slope(mut self, slope: [f64; 2]) -> Self {
        self.slope = slope;
        self
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Full height `h̃ + B·x` at grid point `idx`.
    pub fn height(&self, idx: usize) -> f64 {
        let (x1, x2) = self.grid.point(idx);
        self.values[idx] + self.slope[0] * x1 + self.slope[1] * x2
    }

    /// `self + s·other` with this field's slope.
    pub fn axpy(&self, s: f64, other: &ScalarField) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + s * b)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
            slope: self.slope,
        })
    }

    /// Cyclic shift by whole grid points.
    pub fn shifted(&self, s1: usize, s2: usize) -> Self {
        let n = self.grid.n;
        let mut values = vec![0.0; n * n];
        for i1 in 0..n {
            for i2 in 0..n {
                values[i1 * n + i2] = self.values[((i1 + s1) % n) * n + (i2 + s2) % n];
            }
        }
        Self {
            grid: self.grid,
            values,
            slope: self.slope,
        }
    }

    /// `∇h = ∇h̃ + B` at every grid point.
    pub fn full_gradient(&self) -> VectorField {
        let mut g = gradient(self);
        g.x.iter_mut().for_each(|v| *v += self.slope[0]);
        g.y.iter_mut().for_each(|v| *v += self.slope[1]);
        g
    }
}

/// Two real component arrays on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            x: vec![0.0; grid.len()],
            y: vec![0.0; grid.len()],
        }
    }

    pub fn magnitude_max(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// `∫_Ω |v|²` by the periodic rectangle rule.
    pub fn l2_norm_sq(&self) -> f64 {
        let s: f64 = self.x.iter().zip(&self.y).map(|(a, b)| a * a + b * b).sum();
        s * self.grid.spacing().powi(2)
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &VectorField) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Fourier coefficients of a zero-mean field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn of(f: &ScalarField) -> Self {
        Self {
            grid: f.grid,
            coeffs: spectral::forward_real(&f.values, f.grid.n),
        }
    }

    /// Coefficient `h_k` for `k = (k1, k2)`.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.grid.n as i64;
        let i1 = k1.rem_euclid(n) as usize;
        let i2 = k2.rem_euclid(n) as usize;
        self.coeffs[i1 * self.grid.n + i2]
    }

    /// Applies `mult(k1, k2)` to every coefficient.
    pub fn map(&self, mult: impl Fn(i64, i64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let (k1, k2) = self.grid.wavevector(i);
                c * mult(k1, k2)
            })
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn to_values(&self) -> Vec<f64> {
        spectral::inverse_real(self.coeffs.clone(), self.grid.n)
    }
}

fn derivative_multiplier(grid: &Grid, k: i64) -> Complex64 {
    if k == -(grid.n as i64) / 2 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, grid.angular(k))
    }
}

/// Spectral gradient `∇h̃` (without the mean slope).
pub fn gradient(f: &ScalarField) -> VectorField {
    let spec = SpectralField::of(f);
    let g = f.grid;
    let dx = spec.map(|k1, _| derivative_multiplier(&g, k1));
    let dy = spec.map(|_, k2| derivative_multiplier(&g, k2));
    VectorField {
        grid: g,
        x: dx.to_values(),
        y: dy.to_values(),
    }
}

/// Spectral divergence. The result has zero mean and zero slope.
pub fn divergence(v: &VectorField) -> ScalarField {
    let g = v.grid;
    let sx = spectral::forward_real(&v.x, g.n);
    let sy = spectral::forward_real(&v.y, g.n);
    let coeffs = sx
        .iter()
        .zip(&sy)
        .enumerate()
        .map(|(i, (a, b))| {
            let (k1, k2) = g.wavevector(i);
            a * derivative_multiplier(&g, k1) + b * derivative_multiplier(&g, k2)
        })
        .collect();
    ScalarField::from_spectrum(&SpectralField { grid: g, coeffs }, [0.0, 0.0])
}

/// Spectral Laplacian with symbol `−(2π|k|/L)²`.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = f.grid;
    let spec = SpectralField::of(f).map(|k1, k2| {
        let q2 = g.angular(k1).powi(2) + g.angular(k2).powi(2);
        Complex64::new(-q2, 0.0)
    });
    ScalarField::from_spectrum(&spec, [0.0, 0.0])
}

/// `Σ_{k≠0} |k| |h_k|²`.
pub fn h_half_seminorm_sq(f: &ScalarField) -> f64 {
    let spec = SpectralField::of(f);
    spec.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (k1, k2) = f.grid.wavevector(i);
            ((k1 * k1 + k2 * k2) as f64).sqrt() * c.norm_sqr()
        })
        .sum()
}

/// Unsigned nonlocal energy `2π² c1 L Σ|k||h_k|²`.
pub fn nonlocal_energy(f: &ScalarField, c1: f64) -> f64 {
    2.0 * PI * PI * c1 * f.grid.length * h_half_seminorm_sq(f)
}

/// `∫ (x−y)/|x−y|³ · ∇h(y) dy` as the multiplier `4π²|k|/L`.
pub fn nonlocal_kernel_apply(f: &ScalarField) -> ScalarField {
    let g = f.grid;
    let spec = SpectralField::of(f).map(|k1, k2| {
        let k = ((k1 * k1 + k2 * k2) as f64).sqrt();
        Complex64::new(4.0 * PI * PI * k / g.length, 0.0)
    });
    ScalarField::from_spectrum(&spec, [0.0, 0.0])
}

/// `∫_Ω f g` by the periodic rectangle rule.
pub fn inner_product(f: &ScalarField, g: &ScalarField) -> f64 {
    assert_eq!(f.grid, g.grid, "inner product of fields on different grids");
    let s: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
    s * f.grid.spacing().powi(2)
}

pub fn l2_norm_sq(f: &ScalarField) -> f64 {
    inner_product(f, f)
}

/// `‖∇h̃‖²_{L²} = 4π² Σ |k|² |h_k|²`, Nyquist modes included.
pub fn gradient_l2_norm_sq(f: &ScalarField) -> f64 {
    let spec = SpectralField::of(f);
    spec.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (k1, k2) = f.grid.wavevector(i);
            (k1 * k1 + k2 * k2) as f64 * c.norm_sqr()
        })
        .sum::<f64>()
        * 4.0
        * PI
        * PI
}

/// Maximum Nyquist-mode magnitude; zero for band-limited fields.
pub fn nyquist_content(f: &ScalarField) -> f64 {
    let spec = SpectralField::of(f);
    spec.coeffs
        .iter()
        .enumerate()
        .filter(|(i, _)| f.grid.touches_nyquist(*i))
        .fold(0.0, |m, (_, c)| m.max(c.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_smooth_field;
    use proptest::prelude::*;

    fn grid(n: usize, l: f64) -> Grid {
        Grid::new(n, l).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(12, 1.0).is_err());
        assert!(Grid::new(4, 1.0).is_err());
        assert!(Grid::new(16, 0.0).is_err());
        assert!(Grid::new(16, 2.0).is_ok());
    }

    #[test]
    fn mean_invariant_enforced() {
        let g = grid(8, 1.0);
        assert!(matches!(
            ScalarField::new(g, vec![1.0; 64], [0.0, 0.0]),
            Err(Error::NonZeroMean { .. })
        ));
        let f = ScalarField::from_samples(g, vec![1.0; 64], [0.0, 0.0]).unwrap();
        assert_eq!(f.max_abs(), 0.0);
    }

    #[test]
    fn flat_profile_gradient_is_slope() {
        let f = ScalarField::zeros(grid(16, 1.0), [1.0, 0.0]);
        let g = f.full_gradient();
        assert!(g.x.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(g.y.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn single_mode_derivative() {
        let l = 3.0;
        let g = grid(32, l);
        let f = ScalarField::from_fn(g, [0.0, 0.0], |x, _| (2.0 * PI * x / l).sin());
        let d = gradient(&f);
        for i in 0..g.len() {
            let (x, _) = g.point(i);
            assert!((d.x[i] - 2.0 * PI / l * (2.0 * PI * x / l).cos()).abs() < 1e-12);
            assert!(d.y[i].abs() < 1e-12);
        }
    }

    fn centered_fd(f: &ScalarField) -> VectorField {
        let g = *f.grid();
        let n = g.n();
        let h = g.spacing();
        let v = f.values();
        let at = |i: usize, j: usize| v[(i % n) * n + j % n];
        let mut out = VectorField::zeros(g);
        for i in 0..n {
            for j in 0..n {
                out.x[i * n + j] = (at(i + 1, j) - at(i + n - 1, j)) / (2.0 * h);
                out.y[i * n + j] = (at(i, j + 1) - at(i, j + n - 1)) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn gradient_matches_finite_differences_at_second_order() {
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let g = grid(n, 1.0);
            let f = ScalarField::from_fn(g, [0.0, 0.0], |x, y| {
                (2.0 * PI * (x + 2.0 * y)).sin() + 0.5 * (4.0 * PI * x).cos() * (2.0 * PI * y).sin()
            });
            let a = gradient(&f);
            let b = centered_fd(&f);
            let e = a.sub(&b).unwrap().magnitude_max();
            errs.push(e);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.1, "order {order}");
        }
    }

    #[test]
    fn divergence_of_constant_is_zero() {
        let g = grid(16, 1.0);
        let v = VectorField {
            grid: g,
            x: vec![2.0; g.len()],
            y: vec![-1.0; g.len()],
        };
        assert!(divergence(&v).max_abs() < 1e-14);
    }

    #[test]
    fn divergence_of_gradient_is_laplacian() {
        let g = grid(32, 2.0);
        let f = random_smooth_field(g, [0.0, 0.0], 9, 6, 1.0);
        let a = divergence(&gradient(&f));
        let b = laplacian(&f);
        let diff = a.axpy(-1.0, &b).unwrap().max_abs();
        assert!(diff < 1e-10 * b.max_abs());
    }

    #[test]
    fn divergence_matches_finite_differences() {
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let g = grid(n, 1.0);
            let vx = ScalarField::from_fn(g, [0.0, 0.0], |x, y| (2.0 * PI * (x - y)).sin());
            let vy = ScalarField::from_fn(g, [0.0, 0.0], |x, y| (2.0 * PI * x).cos() * (4.0 * PI * y).cos());
            let v = VectorField {
                grid: g,
                x: vx.values().to_vec(),
                y: vy.values().to_vec(),
            };
            let fdx = centered_fd(&vx);
            let fdy = centered_fd(&vy);
            let fd: Vec<f64> = fdx.x.iter().zip(&fdy.y).map(|(a, b)| a + b).collect();
            let d = divergence(&v);
            let e = d
                .values()
                .iter()
                .zip(&fd)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            errs.push(e);
        }
        for w in errs.windows(2) {
            assert!(((w[0] / w[1]).log2() - 2.0).abs() < 0.1);
        }
    }

    #[test]
    fn seminorm_single_modes() {
        let g = grid(16, 1.0);
        assert_eq!(h_half_seminorm_sq(&ScalarField::zeros(g, [0.0, 0.0])), 0.0);
        let f = ScalarField::from_fn(g, [0.0, 0.0], |_, y| (2.0 * PI * y).cos());
        assert!((h_half_seminorm_sq(&f) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn seminorm_of_meander_mode() {
        let l = 2.0;
        let (a, b, m) = (0.7, 1.3, 3.0);
        let omega = 2.0 * PI * m / l;
        let f = ScalarField::from_fn(grid(64, l), [b, 0.0], |_, y| a * b * (omega * y).sin());
        let expected = a * a * b * b * omega * l / (4.0 * PI);
        assert!((h_half_seminorm_sq(&f) / expected - 1.0).abs() < 1e-12);
        let e = nonlocal_energy(&f, 2.5);
        let closed = 2.5 * PI * l * l / 2.0 * a * a * b * b * omega;
        assert!((e / closed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonlocal_energy_is_resolution_independent() {
        let f = |n| ScalarField::from_fn(grid(n, 1.0), [0.0, 0.0], |x, _| (2.0 * PI * x).cos());
        let a = nonlocal_energy(&f(16), 1.0);
        let b = nonlocal_energy(&f(256), 1.0);
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn kernel_on_single_mode() {
        let l = 1.5;
        let g = grid(32, l);
        let f = ScalarField::from_fn(g, [0.0, 0.0], |x, _| (2.0 * PI * x / l).cos());
        let k = nonlocal_kernel_apply(&f);
        for i in 0..g.len() {
            let expected = 4.0 * PI * PI / l * f.values()[i];
            assert!((k.values()[i] - expected).abs() < 1e-11);
        }
        assert!(nonlocal_kernel_apply(&ScalarField::zeros(g, [0.0, 0.0])).max_abs() == 0.0);
    }

    #[test]
    fn kernel_energy_consistency() {
        let g = grid(32, 2.0);
        let f = random_smooth_field(g, [0.0, 0.0], 3, 8, 1.0);
        let c1 = 1.7;
        let quad = 0.5 * c1 * inner_product(&f, &nonlocal_kernel_apply(&f));
        let e = nonlocal_energy(&f, c1);
        assert!((quad / e - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gradient_norm_identity() {
        let g = grid(32, 1.0);
        let f = random_smooth_field(g, [0.0, 0.0], 5, 8, 1.0);
        let direct = gradient(&f).l2_norm_sq();
        assert!((direct / gradient_l2_norm_sq(&f) - 1.0).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn parseval(seed in 0u64..10_000, l in 0.5f64..5.0) {
            let g = grid(16, l);
            let f = random_smooth_field(g, [0.0, 0.0], seed, 6, 1.0);
            let spec = SpectralField::of(&f);
            let lhs = l2_norm_sq(&f);
            let rhs = l * l * spec.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>();
            prop_assert!((lhs / rhs - 1.0).abs() < 1e-10);
        }

        #[test]
        fn seminorm_sandwich(seed in 0u64..10_000, l in 0.5f64..5.0, kmax in 1usize..8) {
            let f = random_smooth_field(grid(16, l), [0.0, 0.0], seed, kmax, 1.0);
            let lhs = h_half_seminorm_sq(&f);
            let rhs = gradient_l2_norm_sq(&f) / (4.0 * PI * PI);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }

        #[test]
        fn transform_round_trip(seed in 0u64..10_000) {
            let g = grid(32, 1.0);
            let f = random_smooth_field(g, [0.0, 0.0], seed, 15, 1.0);
            let back = SpectralField::of(&f).to_values();
            for (a, b) in f.values().iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-12 * f.max_abs());
            }
        }

        #[test]
        fn kernel_linear_and_positive(s1 in 0u64..1000, s2 in 0u64..1000, t in -3.0f64..3.0) {
            let g = grid(16, 1.0);
            let f = random_smooth_field(g, [0.0, 0.0], s1, 6, 1.0);
            let h = random_smooth_field(g, [0.0, 0.0], s2, 6, 1.0);
            let lhs = nonlocal_kernel_apply(&f.axpy(t, &h).unwrap());
            let rhs = nonlocal_kernel_apply(&f).axpy(t, &nonlocal_kernel_apply(&h)).unwrap();
            let scale = lhs.max_abs().max(1.0);
            prop_assert!(lhs.axpy(-1.0, &rhs).unwrap().max_abs() < 1e-11 * scale);
            prop_assert!(inner_product(&f, &nonlocal_kernel_apply(&f)) >= 0.0);
        }
    }
}
