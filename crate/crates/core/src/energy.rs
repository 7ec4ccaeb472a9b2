//! Total energy, chemical potential and the divergence-potential formulation.
//!
//! `E[h] = −2π² c1 L [h̃]² + ∫_Ω Ψ(∇h)`. The local integral is taken on a grid
//! refined by [`PAD`] with the band-limited interpolant of `∇h`, and the flux
//! `ζ(∇h)` is projected back with the adjoint of that interpolation. The
//! chemical potential is therefore the exact gradient of the discrete energy.
//! All minus signs live here; [`crate::field`] returns unsigned quantities.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::coefficients::Coefficients;
use crate::field::{self, Grid, ScalarField, SpectralField, VectorField};
use crate::local_energy::{psi_parts, radial_curvatures, zeta_factor};
use crate::spectral;

/// Oversampling factor of the local quadrature.
pub const PAD: usize = 2;

/// Energy split into its nonlocal and local parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `−2π² c1 L [h̃]²`.
    pub nonlocal: f64,
    /// `a c1 ∫ |∇h| log(|∇h| + γ0)`.
    pub local_log: f64,
    /// `a c2 ∫ |∇h|`.
    pub local_linear: f64,
    /// `a c3 ∫ |∇h|³`.
    pub local_cubic: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(nonlocal: f64, local_log: f64, local_linear: f64, local_cubic: f64) -> Self {
        Self {
            nonlocal,
            local_log,
            local_linear,
            local_cubic,
            total: nonlocal + local_log + local_linear + local_cubic,
        }
    }

    pub fn local(&self) -> f64 {
        self.local_log + self.local_linear + self.local_cubic
    }
}

/// Spectral state shared by energy evaluation and time stepping.
pub(crate) struct LocalEvaluation {
    pub log: f64,
    pub linear: f64,
    pub cubic: f64,
    /// Coefficients of `−∇·ζ(∇h)` on the base grid.
    pub mu_hat: Option<Vec<Complex64>>,
    pub max_slope: f64,
    pub max_curvature: f64,
}

pub(crate) fn derivative_symbol(grid: &Grid, k: i64) -> f64 {
    if k == -(grid.n() as i64) / 2 {
        0.0
    } else {
        2.0 * PI * k as f64 / grid.length()
    }
}

/// Evaluates the local energy from coefficients `h_hat`, optionally with `−∇·ζ`.
pub(crate) fn evaluate_local(
    grid: &Grid,
    h_hat: &[Complex64],
    slope: [f64; 2],
    c: &Coefficients,
    with_flux: bool,
) -> LocalEvaluation {
    let n = grid.n();
    let m = PAD * n;
    let mut gx_hat = vec![Complex64::new(0.0, 0.0); n * n];
    let mut gy_hat = vec![Complex64::new(0.0, 0.0); n * n];
    for (i, h) in h_hat.iter().enumerate() {
        let (k1, k2) = grid.wavevector(i);
        gx_hat[i] = h * Complex64::new(0.0, derivative_symbol(grid, k1));
        gy_hat[i] = h * Complex64::new(0.0, derivative_symbol(grid, k2));
    }
    let mut gx = spectral::pad_synthesize(&gx_hat, n, m);
    let mut gy = spectral::pad_synthesize(&gy_hat, n, m);

    let (mut log, mut linear, mut cubic) = (0.0, 0.0, 0.0);
    let mut max_slope = 0.0f64;
    let mut max_curvature = 0.0f64;
    for (px, py) in gx.iter_mut().zip(gy.iter_mut()) {
        *px += slope[0];
        *py += slope[1];
        let r = px.hypot(*py);
        let (l, li, cu) = psi_parts(r, c);
        log += l;
        linear += li;
        cubic += cu;
        max_slope = max_slope.max(r);
        if with_flux {
            let (rad, tan) = radial_curvatures(r, c);
            max_curvature = max_curvature.max(rad.max(tan));
            let s = zeta_factor(r, c);
            *px *= s;
            *py *= s;
        }
    }
    let area = grid.length() * grid.length() / (m * m) as f64;

    let mu_hat = with_flux.then(|| {
        let zx = spectral::analyze_truncate(&gx, m, n);
        let zy = spectral::analyze_truncate(&gy, m, n);
        (0..n * n)
            .map(|i| {
                let (k1, k2) = grid.wavevector(i);
                let div = zx[i] * Complex64::new(0.0, derivative_symbol(grid, k1))
                    + zy[i] * Complex64::new(0.0, derivative_symbol(grid, k2));
                -div
            })
            .collect()
    });

    LocalEvaluation {
        log: log * area,
        linear: linear * area,
        cubic: cubic * area,
        mu_hat,
        max_slope,
        max_curvature,
    }
}

/// `Σ_{k≠0} |k||h_k|²` from coefficients.
pub(crate) fn seminorm_sq_hat(grid: &Grid, h_hat: &[Complex64]) -> f64 {
    h_hat
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (k1, k2) = grid.wavevector(i);
            ((k1 * k1 + k2 * k2) as f64).sqrt() * c.norm_sqr()
        })
        .sum()
}

pub(crate) fn breakdown_from_hat(grid: &Grid, h_hat: &[Complex64], slope: [f64; 2], c: &Coefficients) -> (EnergyBreakdown, LocalEvaluation) {
    let local = evaluate_local(grid, h_hat, slope, c, true);
    let nonlocal = -2.0 * PI * PI * c.c1 * grid.length() * seminorm_sq_hat(grid, h_hat);
    (EnergyBreakdown::new(nonlocal, local.log, local.linear, local.cubic), local)
}

/// `E[h]` for `h = h̃ + B·x`.
pub fn total_energy(f: &ScalarField, c: &Coefficients) -> EnergyBreakdown {
    let spec = SpectralField::of(f);
    let local = evaluate_local(f.grid(), &spec.coeffs, f.slope(), c, false);
    let nonlocal = -field::nonlocal_energy(f, c.c1);
    EnergyBreakdown::new(nonlocal, local.log, local.linear, local.cubic)
}

/// Nonlocal part of `μ`: `−c1 ∫ (x−y)/|x−y|³ · ∇h(y) dy`.
pub fn nonlocal_potential(f: &ScalarField, c: &Coefficients) -> ScalarField {
    let k = field::nonlocal_kernel_apply(f);
    let values = k.values().iter().map(|v| -c.c1 * v).collect();
    ScalarField::from_samples(*f.grid(), values, [0.0, 0.0]).expect("length matches grid")
}

/// Local part of `μ`: `−∇·ζ(∇h)`.
pub fn local_potential(f: &ScalarField, c: &Coefficients) -> ScalarField {
    let spec = SpectralField::of(f);
    let local = evaluate_local(f.grid(), &spec.coeffs, f.slope(), c, true);
    let coeffs = local.mu_hat.expect("flux requested");
    ScalarField::from_spectrum(&SpectralField { grid: *f.grid(), coeffs }, [0.0, 0.0])
}

/// `μ = −c1·kernel(h) − ∇·ζ(∇h)` with zero mean.
pub fn chemical_potential(f: &ScalarField, c: &Coefficients) -> ScalarField {
    nonlocal_potential(f, c)
        .axpy(1.0, &local_potential(f, c))
        .expect("same grid")
}

/// `C = −min_p {a c3 |p + B|³ − c1 L |p|²}` in `E ≥ (c1/2) L ‖∇h̃‖² − C L²`.
pub fn coercivity_constant(c: &Coefficients, slope: [f64; 2], length: f64) -> f64 {
    // The worst direction is p antiparallel to B, leaving a cubic in s = |p|
    // whose minimizer satisfies 3 a c3 (s − b)² = 2 c1 L s with s > b.
    let b = slope[0].hypot(slope[1]);
    let (k3, k1) = (c.a * c.c3, c.c1 * length);
    let u = (2.0 * k1 + (4.0 * k1 * k1 + 24.0 * k3 * k1 * b).sqrt()) / (6.0 * k3);
    let s = b + u;
    -(k3 * u * u * u - k1 * s * s)
}

/// Quadrature rule for the line integrals in [`build_u_from_h_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineIntegral {
    /// Exact integration of the trigonometric interpolant.
    #[default]
    Spectral,
    /// Cumulative trapezoid along grid lines.
    Trapezoid,
}

/// A potential `u` with `∇·u = h̃`, zero-mean components, periodic on `Ω`.
pub fn build_u_from_h(f: &ScalarField) -> VectorField {
    build_u_from_h_with(f, LineIntegral::Spectral)
}

/// [`build_u_from_h`] with an explicit line-integral rule.
///
/// `u1 = ½∫₀^{x1} (h̃ − m1(x2)) ds + ½ ⟨∫₀^{x1} h̃ ds⟩_{x2} − n1` where `m1(x2)`
/// is the mean of `h̃` over `x1`, and symmetrically for `u2`.
pub fn build_u_from_h_with(f: &ScalarField, rule: LineIntegral) -> VectorField {
    match rule {
        LineIntegral::Spectral => build_u_spectral(f),
        LineIntegral::Trapezoid => {
            let closed = build_u_closed(f);
            let n = f.grid().n();
            let open = |v: &[f64]| {
                (0..n * n)
                    .map(|idx| v[(idx / n) * (n + 1) + idx % n])
                    .collect::<Vec<_>>()
            };
            VectorField {
                grid: *f.grid(),
                x: open(&closed.x),
                y: open(&closed.y),
            }
        }
    }
}

fn build_u_spectral(f: &ScalarField) -> VectorField {
    let g = *f.grid();
    let n = g.n();
    let spec = SpectralField::of(f);
    let idx = |k1: i64, k2: i64| k1.rem_euclid(n as i64) as usize * n + k2.rem_euclid(n as i64) as usize;
    let zero = Complex64::new(0.0, 0.0);
    let mut u1 = vec![zero; n * n];
    let mut u2 = vec![zero; n * n];
    for (i, h) in spec.coeffs.iter().enumerate() {
        if g.touches_nyquist(i) {
            continue;
        }
        let (k1, k2) = g.wavevector(i);
        if k1 != 0 {
            let c = 0.5 * h / Complex64::new(0.0, 2.0 * PI * k1 as f64 / g.length());
            let w = if k2 == 0 { 2.0 } else { 1.0 };
            u1[i] += w * c;
            u1[idx(0, k2)] -= w * c;
        }
        if k2 != 0 {
            let c = 0.5 * h / Complex64::new(0.0, 2.0 * PI * k2 as f64 / g.length());
            let w = if k1 == 0 { 2.0 } else { 1.0 };
            u2[i] += w * c;
            u2[idx(k1, 0)] -= w * c;
        }
    }
    u1[0] = zero;
    u2[0] = zero;
    VectorField {
        grid: g,
        x: spectral::inverse_real(u1, n),
        y: spectral::inverse_real(u2, n),
    }
}

/// Trapezoid-rule potential on the closed `(n+1)²` lattice including `x = L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedVectorField {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ClosedVectorField {
    /// Largest jump between opposite edges of `Ω`.
    pub fn seam_mismatch(&self) -> f64 {
        let m = self.n + 1;
        let mut worst = 0.0f64;
        for t in 0..m {
            for v in [&self.x, &self.y] {
                worst = worst.max((v[t] - v[self.n * m + t]).abs());
                worst = worst.max((v[t * m] - v[t * m + self.n]).abs());
            }
        }
        worst
    }
}

/// The cumulative-trapezoid construction evaluated on nodes `0..=n` per axis.
pub fn build_u_closed(f: &ScalarField) -> ClosedVectorField {
    let g = *f.grid();
    let n = g.n();
    let dx = g.spacing();
    let v = f.values();
    let at = |i: usize, j: usize| v[(i % n) * n + j % n];
    let m = n + 1;

    // Cumulative integrals along the first axis (`along_x = true`) or the second.
    let cumulative = |along_x: bool| -> (Vec<f64>, Vec<f64>) {
        let val = |s: usize, t: usize| if along_x { at(s, t) } else { at(t, s) };
        let mut centered = vec![0.0; m * m];
        let mut raw = vec![0.0; m * m];
        for t in 0..m {
            let mean = (0..n).map(|s| val(s, t)).sum::<f64>() / n as f64;
            let (mut acc_c, mut acc_r) = (0.0, 0.0);
            for s in 1..m {
                let (a, b) = (val(s - 1, t), val(s, t));
                acc_c += 0.5 * dx * ((a - mean) + (b - mean));
                acc_r += 0.5 * dx * (a + b);
                centered[s * m + t] = acc_c;
                raw[s * m + t] = acc_r;
            }
        }
        (centered, raw)
    };

    let assemble = |along_x: bool| -> Vec<f64> {
        let (centered, raw) = cumulative(along_x);
        let transverse: Vec<f64> = (0..m)
            .map(|s| (0..n).map(|t| raw[s * m + t]).sum::<f64>() / n as f64)
            .collect();
        let mut u = vec![0.0; m * m];
        for s in 0..m {
            for t in 0..m {
                u[s * m + t] = 0.5 * centered[s * m + t] + 0.5 * transverse[s];
            }
        }
        let mean = (0..n)
            .flat_map(|s| (0..n).map(move |t| (s, t)))
            .map(|(s, t)| u[s * m + t])
            .sum::<f64>()
            / (n * n) as f64;
        u.iter_mut().for_each(|x| *x -= mean);
        if along_x {
            u
        } else {
            let mut tr = vec![0.0; m * m];
            for s in 0..m {
                for t in 0..m {
                    tr[t * m + s] = u[s * m + t];
                }
            }
            tr
        }
    };

    ClosedVectorField {
        n,
        x: assemble(true),
        y: assemble(false),
    }
}

/// `F[u] = E[∇·u + B·x]`.
pub fn total_energy_u(u: &VectorField, slope: [f64; 2], c: &Coefficients) -> EnergyBreakdown {
    let h = field::divergence(u).with_slope(slope);
    total_energy(&h, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gradient, inner_product, Grid};
    use crate::local_energy::psi;
    use crate::random::random_smooth_field;
    use proptest::prelude::*;

    fn grid(n: usize, l: f64) -> Grid {
        Grid::new(n, l).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn flat_surface_energy() {
        let c = Coefficients::nondimensional(1.0, 0.5, 2.0, 0.1).unwrap();
        let l = 1.7;
        let b = [0.4, -0.3];
        let e = total_energy(&ScalarField::zeros(grid(16, l), b), &c);
        assert_eq!(e.nonlocal, 0.0);
        assert!(rel(e.total, l * l * psi(b, &c)) < 1e-13);
        let u = VectorField::zeros(grid(16, l));
        assert!(rel(total_energy_u(&u, b, &c).total, l * l * psi(b, &c)) < 1e-13);
    }

    #[test]
    fn meander_nonlocal_part() {
        let c = Coefficients::unit(0.01).unwrap();
        let (a, b, l) = (0.8, 1.0, 1.0);
        let omega = 2.0 * PI / l;
        let f = ScalarField::from_fn(grid(64, l), [b, 0.0], |_, y| a * b * (omega * y).sin());
        let e = total_energy(&f, &c);
        let closed = -c.c1 * PI * l * l / 2.0 * a * a * b * b * omega;
        assert!(rel(e.nonlocal, closed) < 1e-10);
    }

    #[test]
    fn breakdown_sign_invariants() {
        let c = Coefficients::from_physical(&crate::coefficients::PhysicalParams::zhu2009()).unwrap();
        let f = random_smooth_field(grid(32, 1e-7), [0.0175, 0.0], 4, 6, 1e-10);
        let e = total_energy(&f, &c);
        assert!(e.nonlocal <= 0.0 && e.local_cubic >= 0.0);
        assert!(e.local_log + e.local_linear >= -1e-9 * e.local_linear.abs());
        let sum = e.nonlocal + e.local_log + e.local_linear + e.local_cubic;
        assert!(rel(e.total, sum) < 1e-12);
    }

    #[test]
    fn flat_profile_has_zero_potential() {
        let c = Coefficients::unit(0.3).unwrap();
        let mu = chemical_potential(&ScalarField::zeros(grid(16, 1.0), [0.7, 0.2]), &c);
        assert!(mu.max_abs() < 1e-14);
    }

    #[test]
    fn variational_identity() {
        let c = Coefficients::unit(0.05).unwrap();
        let g = grid(32, 1.0);
        for seed in 0..4 {
            let f = random_smooth_field(g, [0.5, 0.2], seed, 6, 0.05);
            let v = random_smooth_field(g, [0.0, 0.0], 100 + seed, 6, 0.05);
            let mu = chemical_potential(&f, &c);
            let eps = 1e-4;
            let ep = total_energy(&f.axpy(eps, &v).unwrap(), &c).total;
            let em = total_energy(&f.axpy(-eps, &v).unwrap(), &c).total;
            let fd = (ep - em) / (2.0 * eps);
            let exact = inner_product(&mu, &v);
            assert!(rel(fd, exact) < 1e-6, "{fd} vs {exact}");
        }
    }

    #[test]
    fn nonlocal_potential_is_linear() {
        let c = Coefficients::unit(0.3).unwrap();
        let g = grid(16, 1.0);
        let f = random_smooth_field(g, [0.0, 0.0], 1, 5, 1.0);
        let h = random_smooth_field(g, [0.0, 0.0], 2, 5, 1.0);
        let lhs = nonlocal_potential(&f.axpy(1.0, &h).unwrap(), &c);
        let rhs = nonlocal_potential(&f, &c).axpy(1.0, &nonlocal_potential(&h, &c)).unwrap();
        assert!(lhs.axpy(-1.0, &rhs).unwrap().max_abs() < 1e-12 * lhs.max_abs());
    }

    #[test]
    fn coercivity_constant_is_the_minimum() {
        let c = Coefficients::unit(0.2).unwrap();
        let (b, l) = ([0.6, 0.8], 1.3);
        let cc = coercivity_constant(&c, b, l);
        let mut worst = f64::INFINITY;
        for i in 0..200_000 {
            let s = i as f64 * 1e-4;
            let v = c.a * c.c3 * (s - 1.0).abs().powi(3) - c.c1 * l * s * s;
            worst = worst.min(v);
        }
        assert!(rel(-worst, cc) < 1e-6);
    }

    #[test]
    fn u_of_zero_is_zero() {
        let u = build_u_from_h(&ScalarField::zeros(grid(16, 1.0), [1.0, 0.0]));
        assert!(u.magnitude_max() == 0.0);
        let u = build_u_from_h_with(&ScalarField::zeros(grid(16, 1.0), [1.0, 0.0]), LineIntegral::Trapezoid);
        assert!(u.magnitude_max() == 0.0);
    }

    #[test]
    fn spectral_u_reproduces_h() {
        let g = grid(32, 2.0);
        let f = random_smooth_field(g, [0.3, 0.0], 11, 8, 1.0);
        let u = build_u_from_h(&f);
        let d = field::divergence(&u);
        assert!(d.axpy(-1.0, &f).unwrap().max_abs() < 1e-12);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&u.x).abs() < 1e-14 && mean(&u.y).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_u_is_periodic_and_second_order() {
        let mut errs = Vec::new();
        for n in [16, 32, 64, 128] {
            let g = grid(n, 1.0);
            let f = ScalarField::from_fn(g, [0.0, 0.0], |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
            let closed = build_u_closed(&f);
            assert!(closed.seam_mismatch() < 1e-14);
            let u = build_u_from_h_with(&f, LineIntegral::Trapezoid);
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            assert!(mean(&u.x).abs() < 1e-15 && mean(&u.y).abs() < 1e-15);
            errs.push(field::divergence(&u).axpy(-1.0, &f).unwrap().max_abs());
        }
        for w in errs.windows(2) {
            assert!(((w[0] / w[1]).log2() - 2.0).abs() < 0.15, "{errs:?}");
        }
    }

    #[test]
    fn gauge_invariance() {
        let c = Coefficients::unit(0.2).unwrap();
        let g = grid(32, 1.0);
        let f = random_smooth_field(g, [0.5, 0.5], 3, 6, 0.1);
        let u = build_u_from_h(&f);
        let phi = random_smooth_field(g, [0.0, 0.0], 4, 6, 1.0);
        let gp = gradient(&phi);
        let w = VectorField {
            grid: g,
            x: gp.y.iter().map(|v| -v).collect(),
            y: gp.x.clone(),
        };
        let e1 = total_energy_u(&u, f.slope(), &c).total;
        let e2 = total_energy_u(&u.add(&w).unwrap(), f.slope(), &c).total;
        assert!(rel(e2, e1) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn coercivity(seed in 0u64..5000, amp in 0.01f64..3.0, b1 in -1.0f64..1.0, b2 in -1.0f64..1.0, a in 0.05f64..1.0) {
            let c = Coefficients::unit(a).unwrap();
            let g = grid(16, 1.0);
            let f = random_smooth_field(g, [b1, b2], seed, 6, amp);
            let e = total_energy(&f, &c).total;
            let l = g.length();
            let bound = 0.5 * c.c1 * l * field::gradient_l2_norm_sq(&f) - coercivity_constant(&c, f.slope(), l) * l * l;
            prop_assert!(e >= bound - 1e-10 * e.abs().max(bound.abs()));
        }

        #[test]
        fn midpoint_uniqueness(s1 in 0u64..5000, s2 in 0u64..5000, amp in 0.01f64..2.0, b1 in -1.0f64..1.0) {
            let c = Coefficients::unit(1.0).unwrap();
            let g = grid(16, 1.0);
            prop_assume!(g.length() / c.a < c.beta);
            let h1 = random_smooth_field(g, [b1, 0.3], s1, 5, amp);
            let h2 = random_smooth_field(g, [b1, 0.3], s2, 5, amp * 0.7);
            let mid = ScalarField::from_samples(g, h1.values().iter().zip(h2.values()).map(|(a, b)| 0.5 * (a + b)).collect(), h1.slope()).unwrap();
            let d = h1.axpy(-1.0, &h2).unwrap();
            let lambda = c.contraction_rate(g.length());
            let lhs = total_energy(&mid, &c).total + lambda / 8.0 * field::gradient_l2_norm_sq(&d);
            let e1 = total_energy(&h1, &c).total;
            let e2 = total_energy(&h2, &c).total;
            let rhs = 0.5 * (e1 + e2);
            prop_assert!(lhs <= rhs + 1e-8 * rhs.abs());
        }

        #[test]
        fn translation_invariance(seed in 0u64..5000, s1 in 0usize..16, s2 in 0usize..16) {
            let c = Coefficients::unit(0.1).unwrap();
            let f = random_smooth_field(grid(16, 1.0), [0.4, 0.1], seed, 6, 0.5);
            let e1 = total_energy(&f, &c).total;
            let e2 = total_energy(&f.shifted(s1, s2), &c).total;
            prop_assert!(rel(e2, e1) < 1e-12);
        }

        #[test]
        fn potential_has_zero_mean(seed in 0u64..5000) {
            let c = Coefficients::unit(0.1).unwrap();
            let f = random_smooth_field(grid(16, 1.0), [0.4, 0.1], seed, 6, 0.5);
            let mu = chemical_potential(&f, &c);
            prop_assert!(mu.mean().abs() * f.grid().length().powi(2) <= 1e-10 * mu.max_abs().max(1.0));
        }
    }
}
