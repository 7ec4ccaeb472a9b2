//! Local densities `Ψ0`, `Ψ`, the flux `ζ = ∇Ψ`, Hessians and convexity audits.
//!
//! Both densities are radial. Since `c1 log γ0 + c2 = 0`, the regularized
//! density is evaluated as `Ψ(p) = a c1 r log(1 + r/γ0) + a c3 r³`, which keeps
//! full relative accuracy when `c2` is large and `r` is small.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::coefficients::Coefficients;
use crate::error::{Error, Result};

/// A slope vector `p = ∇h` at one point.
pub type Slope = [f64; 2];

/// Which local density to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    /// `Ψ`, with `γ0` inside the logarithm.
    Regularized,
    /// `Ψ0`.
    Original,
}

impl Density {
    pub fn radial(self, r: f64, c: &Coefficients) -> f64 {
        match self {
            Density::Regularized => psi_radial(r, c),
            Density::Original => psi0_radial(r, c),
        }
    }
}

/// Second derivatives of a density at a slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianSample {
    pub p: Slope,
    pub h: [[f64; 2]; 2],
    pub eigmin: f64,
    pub eigmax: f64,
}

impl HessianSample {
    fn new(p: Slope, h11: f64, h12: f64, h22: f64) -> Self {
        let mid = 0.5 * (h11 + h22);
        let rad = (0.5 * (h11 - h22)).hypot(h12);
        Self {
            p,
            h: [[h11, h12], [h12, h22]],
            eigmin: mid - rad,
            eigmax: mid + rad,
        }
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        self.eigmin.abs().max(self.eigmax.abs())
    }
}

/// `log(1 + r/γ0)`, equal to `log(r + γ0) + c2/c1`.
pub fn log_ratio(r: f64, c: &Coefficients) -> f64 {
    let x = r / c.gamma0;
    if x.is_finite() {
        x.ln_1p()
    } else {
        r.ln() - c.ln_gamma0()
    }
}

fn norm(p: Slope) -> f64 {
    p[0].hypot(p[1])
}

/// `Ψ0` as a function of `r = |p|`; `Ψ0(0) = 0`.
pub fn psi0_radial(r: f64, c: &Coefficients) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    c.a * (c.c1 * r * r.ln() + c.c2 * r + c.c3 * r * r * r)
}

/// `Ψ` as a function of `r = |p|`.
pub fn psi_radial(r: f64, c: &Coefficients) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    c.a * (c.c1 * r * log_ratio(r, c) + c.c3 * r * r * r)
}

/// `Ψ0(p) = a c1 |p| log|p| + a c2 |p| + a c3 |p|³`.
pub fn psi0(p: Slope, c: &Coefficients) -> f64 {
    psi0_radial(norm(p), c)
}

/// `Ψ(p) = a c1 |p| log(|p| + γ0) + a c2 |p| + a c3 |p|³`.
pub fn psi(p: Slope, c: &Coefficients) -> f64 {
    psi_radial(norm(p), c)
}

/// The three terms of `Ψ` at radius `r`: `(log, linear, cubic)`.
pub fn psi_parts(r: f64, c: &Coefficients) -> (f64, f64, f64) {
    if r == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let ln = if c.gamma0 > 0.0 {
        (r + c.gamma0).ln()
    } else {
        r.ln()
    };
    (c.a * c.c1 * r * ln, c.a * c.c2 * r, c.a * c.c3 * r * r * r)
}

/// `|ζ(p)| / |p|`, so that `ζ(p) = zeta_factor(|p|)·p`.
pub fn zeta_factor(r: f64, c: &Coefficients) -> f64 {
    let g = c.gamma0;
    if r < 1e-4 * g || r == 0.0 {
        return c.a * (2.0 * c.c1 / g + (3.0 * c.c3 - 1.5 * c.c1 / (g * g)) * r);
    }
    c.a * (c.c1 * log_ratio(r, c) / r + c.c1 / (r + g) + 3.0 * c.c3 * r)
}

/// `ζ(p) = ∇Ψ(p)`, with `ζ(0) = 0`.
pub fn zeta(p: Slope, c: &Coefficients) -> Slope {
    let r = norm(p);
    if r == 0.0 {
        return [0.0, 0.0];
    }
    let s = zeta_factor(r, c);
    [s * p[0], s * p[1]]
}

/// Radial and tangential curvatures `(Ψ''(r), Ψ'(r)/r)`, the eigenvalues of `Hess Ψ`.
pub fn radial_curvatures(r: f64, c: &Coefficients) -> (f64, f64) {
    let g = c.gamma0;
    let tangential = zeta_factor(r, c);
    if r == 0.0 {
        return (tangential, tangential);
    }
    let radial = c.a * (c.c1 / (r + g) + c.c1 * g / ((r + g) * (r + g)) + 6.0 * c.c3 * r);
    (radial, tangential)
}

/// Hessian of `Ψ` from its closed-form second derivatives.
pub fn hessian_psi(p: Slope, c: &Coefficients) -> Result<HessianSample> {
    let r = norm(p);
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    let (p1, p2) = (p[0], p[1]);
    let (c1, c3, g) = (c.c1, c.c3, c.gamma0);
    let l = log_ratio(r, c);
    let r2 = r * r;
    let r3 = r2 * r;
    let rg = r + g;
    let diag = |u: f64, v: f64| c1 * v * v / r3 * l + c1 / rg + c1 * g * u * u / (r2 * rg * rg) + 3.0 * c3 * r + 3.0 * c3 * u * u / r;
    let h11 = c.a * diag(p1, p2);
    let h22 = c.a * diag(p2, p1);
    let h12 = c.a * p1 * p2 * (-c1 * l / r3 + c1 * g / (r2 * rg * rg) + 3.0 * c3 / r);
    Ok(HessianSample::new(p, h11, h12, h22))
}

/// Hessian of `Ψ0` from its closed-form second derivatives.
pub fn hessian_psi0(p: Slope, c: &Coefficients) -> Result<HessianSample> {
    let r = norm(p);
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    let (p1, p2) = (p[0], p[1]);
    let (c1, c2, c3) = (c.c1, c.c2, c.c3);
    let r3 = r * r * r;
    let lin = c1 * r.ln() + c2;
    let diag = |u: f64, v: f64| c1 / r + lin * v * v / r3 + 3.0 * c3 * r + 3.0 * c3 * u * u / r;
    let h11 = c.a * diag(p1, p2);
    let h22 = c.a * diag(p2, p1);
    let h12 = c.a * p1 * p2 * (-lin / r3 + 3.0 * c3 / r);
    Ok(HessianSample::new(p, h11, h12, h22))
}

/// Log-radial × angular sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub radii: usize,
    pub angles: usize,
}

impl AuditSpec {
    /// `|p|` from `10⁻³γ0` to `10³`, 100 radii × 100 angles.
    pub fn default_for(c: &Coefficients) -> Self {
        let r_min = if c.gamma0 > 0.0 { 1e-3 * c.gamma0 } else { 1e-12 };
        Self {
            r_min: r_min.min(1e-3),
            r_max: 1e3,
            radii: 100,
            angles: 100,
        }
    }

    /// Same range with roughly `samples` points.
    pub fn with_samples(mut self, samples: usize) -> Self {
        let side = (samples as f64).sqrt().ceil().max(2.0) as usize;
        self.radii = side;
        self.angles = side;
        self
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let radii = crate::quad::log_space(self.r_min, self.r_max, self.radii);
        let angles = self.angles;
        radii.into_iter().flat_map(move |r| {
            (0..angles).map(move |j| (r, 2.0 * PI * j as f64 / angles as f64))
        })
    }
}

/// One audit sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub r: f64,
    pub phi: f64,
    pub eigmin_psi: f64,
    pub eigmin_psi0: f64,
    pub norm_psi: f64,
}

/// A slope where `Ψ0` fails to be convex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub p: Slope,
    pub eigmin: f64,
}

/// Summary of a convexity audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub spec: AuditSpec,
    pub samples: usize,
    /// Minimum of `eigmin(Hess Ψ)`.
    pub min_eigmin_psi: f64,
    /// Minimum of `eigmin(Hess Ψ)/‖Hess Ψ‖`.
    pub min_relative_eigmin_psi: f64,
    /// `a c1 β`.
    pub margin: f64,
    /// Minimum of `(eigmin(Hess Ψ) − a c1 β)/‖Hess Ψ‖`.
    pub min_relative_margin_slack: f64,
    pub psi_convex: bool,
    pub psi_strictly_convex: bool,
    /// Minimum of `eigmin(Hess Ψ0)`.
    pub min_eigmin_psi0: f64,
    /// Axis witness closest to the convex region.
    pub psi0_axis_witness: Option<Witness>,
    /// Full-scan witness with the most negative eigenvalue.
    pub psi0_scan_witness: Option<Witness>,
    /// Largest `t` with `∂₁₁Ψ0((0, t)) < 0`, by bisection.
    pub psi0_axis_boundary: Option<f64>,
}

/// Relative tolerance for sampled convexity checks.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

/// Samples both Hessians on the audit grid.
pub fn audit_rows(c: &Coefficients, spec: &AuditSpec) -> Vec<AuditRow> {
    spec.points()
        .map(|(r, phi)| {
            let p = [r * phi.cos(), r * phi.sin()];
            let h = hessian_psi(p, c).expect("audit radii are positive");
            let h0 = hessian_psi0(p, c).expect("audit radii are positive");
            AuditRow {
                r,
                phi,
                eigmin_psi: h.eigmin,
                eigmin_psi0: h0.eigmin,
                norm_psi: h.norm(),
            }
        })
        .collect()
}

/// `∂₁₁Ψ0((0, t))/a = (c1/t) log t + (c1 + c2)/t + 3 c3 t`.
pub fn psi0_axis_curvature(t: f64, c: &Coefficients) -> f64 {
    (c.c1 * t.ln() + c.c1 + c.c2) / t + 3.0 * c.c3 * t
}

fn axis_boundary(c: &Coefficients, lo: f64, hi: f64) -> Option<f64> {
    let f = |t: f64| psi0_axis_curvature(t, c);
    if f(lo) >= 0.0 {
        return None;
    }
    // The curvature is negative near zero and positive for large t; walk up
    // to the first sign change, then bisect in log t.
    let grid = crate::quad::log_space(lo, hi, 4000);
    let k = grid.windows(2).position(|w| f(w[0]) < 0.0 && f(w[1]) >= 0.0)?;
    let (mut a, mut b) = (grid[k].ln(), grid[k + 1].ln());
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m.exp()) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some(a.exp())
}

/// Samples `Hess Ψ` and `Hess Ψ0` and searches for a nonconvexity witness of `Ψ0`.
pub fn convexity_audit(c: &Coefficients, spec: &AuditSpec) -> AuditReport {
    let rows = audit_rows(c, spec);
    let margin = c.convexity_margin();
    let mut min_eig = f64::INFINITY;
    let mut min_rel = f64::INFINITY;
    let mut min_slack = f64::INFINITY;
    let mut min_eig0 = f64::INFINITY;
    let mut scan_witness: Option<Witness> = None;
    for row in &rows {
        min_eig = min_eig.min(row.eigmin_psi);
        min_rel = min_rel.min(row.eigmin_psi / row.norm_psi);
        min_slack = min_slack.min((row.eigmin_psi - margin) / row.norm_psi);
        if row.eigmin_psi0 < min_eig0 {
            min_eig0 = row.eigmin_psi0;
            if row.eigmin_psi0 < 0.0 {
                scan_witness = Some(Witness {
                    p: [row.r * row.phi.cos(), row.r * row.phi.sin()],
                    eigmin: row.eigmin_psi0,
                });
            }
        }
    }

    let axis = crate::quad::log_space(spec.r_min, spec.r_max, spec.radii * 10);
    let axis_witness = axis
        .iter()
        .rev()
        .map(|&t| (t, hessian_psi0([0.0, t], c).expect("positive radius")))
        .find(|(_, h)| h.eigmin < 0.0)
        .map(|(t, h)| Witness {
            p: [0.0, t],
            eigmin: h.eigmin,
        });

    AuditReport {
        spec: *spec,
        samples: rows.len(),
        min_eigmin_psi: min_eig,
        min_relative_eigmin_psi: min_rel,
        margin,
        min_relative_margin_slack: min_slack,
        psi_convex: min_rel >= -AUDIT_TOLERANCE,
        psi_strictly_convex: min_slack >= -AUDIT_TOLERANCE,
        min_eigmin_psi0: min_eig0,
        psi0_axis_witness: axis_witness,
        psi0_scan_witness: scan_witness,
        psi0_axis_boundary: axis_boundary(c, spec.r_min, spec.r_max),
    }
}
