//! Meandering and bunching profile families, energy scaling scans and the
//! bunching/meandering transition scan.
//!
//! The meandering family is `h = B(x + A sin ωy)` with `ω = 2πm/L`; the one-bunch
//! family is a linear ramp of density `ρ` and height `H` centred in the cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::coefficients::{Coefficients, PhysicalParams};
use crate::energy::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField};
use crate::local_energy::{log_ratio, psi_parts, Density};
use crate::quad::{golden_section, graded_breaks, linear_fit, GaussLegendre};

/// Gauss–Legendre order used on every panel.
const GL_ORDER: usize = 16;

/// Default number of quadrature panels for the meander integral.
pub const DEFAULT_PANELS: usize = 48;

/// Relative tolerance of the golden-section search over `A`.
pub const AMPLITUDE_TOLERANCE: f64 = 1e-8;

/// `h(x, y) = B (x + A sin ωy)` on `[0, L]²`, `ω = 2πm/L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanderProfile {
    pub amplitude: f64,
    pub modes: u32,
    pub slope: f64,
    pub length: f64,
}

impl MeanderProfile {
    pub fn new(amplitude: f64, modes: u32, slope: f64, length: f64) -> Result<Self> {
        let p = Self {
            amplitude,
            modes,
            slope,
            length,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProfile(m));
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return bad(format!("amplitude must be non-negative, got {}", self.amplitude));
        }
        if self.modes == 0 {
            return bad("mode number m must be positive".into());
        }
        if !(self.slope.is_finite() && self.slope > 0.0) {
            return bad(format!("mean slope must be positive, got {}", self.slope));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return bad(format!("cell length must be positive, got {}", self.length));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.modes as f64 / self.length
    }

    /// Height including the mean slope.
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        self.slope * (x + self.amplitude * (self.omega() * y).sin())
    }

    /// `h̃ = AB sin ωy` sampled on `grid`, with slope `(B, 0)`.
    pub fn realize(&self, grid: Grid) -> Result<ScalarField> {
        if (grid.length() - self.length).abs() > 1e-12 * self.length {
            return Err(Error::InvalidProfile(format!(
                "grid length {} differs from profile length {}",
                grid.length(),
                self.length
            )));
        }
        if 4 * self.modes as usize > grid.n() {
            return Err(Error::InvalidProfile(format!(
                "mode {} is not resolved on an n = {} grid",
                self.modes,
                grid.n()
            )));
        }
        let (w, ab) = (self.omega(), self.amplitude * self.slope);
        Ok(ScalarField::from_fn(grid, [self.slope, 0.0], |_, y| ab * (w * y).sin()))
    }
}

/// `−(c1 π L²/2) A² B² ω`.
pub fn meander_nonlocal(p: &MeanderProfile, c: &Coefficients) -> f64 {
    let ab = p.amplitude * p.slope;
    -0.5 * c.c1 * PI * p.length * p.length * ab * ab * p.omega()
}

/// `(2/π) ∫₀^{π/2} g(r, sin² t) dt` with `r = B √(1 + A²ω² sin² t)`, on panels
/// graded toward `t = 0`.
fn meander_average(p: &MeanderProfile, panels: usize, mut g: impl FnMut(f64, f64) -> f64) -> f64 {
    let aw = p.amplitude * p.omega();
    let first = if aw > 1.0 { 0.05 / aw } else { FRAC_PI_2 };
    let breaks = graded_breaks(0.0, FRAC_PI_2, first, panels);
    let gl = GaussLegendre::new(GL_ORDER);
    let s = gl.integrate_panels(&breaks, |t| {
        let st = t.sin();
        let r = p.slope * (aw * st).hypot(1.0);
        g(r, st * st)
    });
    2.0 / PI * s
}

/// Energy of the meandering profile.
///
/// The nonlocal part is exact; the local part reduces to a one-dimensional
/// integral in `y` evaluated with `panels` Gauss–Legendre panels.
pub fn meander_energy(p: &MeanderProfile, c: &Coefficients, panels: usize, density: Density) -> Result<EnergyBreakdown> {
    p.validate()?;
    let area = p.length * p.length;
    let nonlocal = meander_nonlocal(p, c);
    match density {
        Density::Regularized => {
            let mut parts = [0.0; 3];
            for (k, part) in parts.iter_mut().enumerate() {
                *part = area
                    * meander_average(p, panels, |r, _| {
                        let (l, lin, cub) = psi_parts(r, c);
                        [l, lin, cub][k]
                    });
            }
            Ok(EnergyBreakdown::new(nonlocal, parts[0], parts[1], parts[2]))
        }
        Density::Original => {
            let log = area * meander_average(p, panels, |r, _| c.a * c.c1 * r * r.ln());
            let lin = area * meander_average(p, panels, |r, _| c.a * c.c2 * r);
            let cub = area * meander_average(p, panels, |r, _| c.a * c.c3 * r * r * r);
            Ok(EnergyBreakdown::new(nonlocal, log, lin, cub))
        }
    }
}

/// Dominant-balance amplitude `c1 π² / (4 c3 ω² B a)`.
pub fn dominant_balance_amplitude(c: &Coefficients, omega: f64, slope: f64, a: f64) -> f64 {
    c.c1 * PI * PI / (4.0 * c.c3 * omega * omega * slope * a)
}

/// Minimizer of the meander energy over `A` in `[A*/10, 10 A*]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyMinimum {
    pub amplitude: f64,
    pub amplitude_balance: f64,
    pub energy: EnergyBreakdown,
}

pub fn minimize_meander_amplitude(
    c: &Coefficients,
    modes: u32,
    slope: f64,
    length: f64,
    panels: usize,
    density: Density,
) -> Result<FamilyMinimum> {
    let base = MeanderProfile::new(0.0, modes, slope, length)?;
    let star = dominant_balance_amplitude(c, base.omega(), slope, c.a);
    let energy_at = |amplitude: f64| {
        meander_energy(&MeanderProfile { amplitude, ..base }, c, panels, density).map(|e| e.total)
    };
    let mut failure = None;
    let (amplitude, _) = golden_section(star / 10.0, star * 10.0, AMPLITUDE_TOLERANCE, |x| {
        energy_at(x).unwrap_or_else(|e| {
            failure = Some(e);
            f64::INFINITY
        })
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let energy = meander_energy(&MeanderProfile { amplitude, ..base }, c, panels, density)?;
    Ok(FamilyMinimum {
        amplitude,
        amplitude_balance: star,
        energy,
    })
}

/// Relative residual of the first-order condition `∂E/∂A = 0`:
/// `c1 π L/(a ω) = ∫₀^L (c1 log(|∇h|+γ0)/|∇h| + c1/(|∇h|+γ0) + c2/|∇h| + 3 c3 |∇h|) cos² ωy dy`.
pub fn critical_point_residual(p: &MeanderProfile, c: &Coefficients, panels: usize) -> Result<f64> {
    p.validate()?;
    let lhs = c.c1 * PI * p.length / (c.a * p.omega());
    let rhs = p.length
        * meander_average(p, panels, |r, cos2| {
            (c.c1 * log_ratio(r, c) / r + c.c1 / (r + c.gamma0) + 3.0 * c.c3 * r) * cos2
        });
    Ok((lhs - rhs) / lhs)
}

/// One row of the upper-bound scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub a: f64,
    pub energy: f64,
    pub amplitude: f64,
    pub amplitude_balance: f64,
    /// Family energy at the same `A` with `Ψ0` in place of `Ψ`.
    pub energy_original: f64,
    pub lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Slope of `log(−E)` against `log a` over the last two decades.
    pub slope: f64,
    /// `−E a²` at the smallest `a`.
    pub prefactor: f64,
    /// `c1³ π⁵ L² / (96 c3² ω³)`.
    pub reference_prefactor: f64,
    /// `|E_Ψ − E_Ψ0| / |E_Ψ|` at the smallest `a`.
    pub regularization_gap: f64,
}

/// Leading upper-bound constant `c1³ π⁵ L² / (96 c3² ω³)`.
pub fn upper_bound_prefactor(c: &Coefficients, omega: f64, length: f64) -> f64 {
    c.c1.powi(3) * PI.powi(5) * length * length / (96.0 * c.c3 * c.c3 * omega.powi(3))
}

/// Minimizes the meander family for each `a` and fits the `a⁻²` law.
///
/// `c1, c2, c3` are held fixed and only `a` varies.
pub fn upper_bound_scaling_scan(
    c: &Coefficients,
    modes: u32,
    slope: f64,
    length: f64,
    a_list: &[f64],
) -> Result<ScalingReport> {
    if a_list.len() < 3 {
        return Err(Error::InvalidSweep("need at least 3 values of a".into()));
    }
    if a_list.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidSweep("a values must be positive".into()));
    }
    if a_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidSweep("a values must be strictly decreasing".into()));
    }
    let a_min = *a_list.last().unwrap();
    if a_list[0] / a_min < 999.0 {
        return Err(Error::InvalidSweep("a values must span at least 3 decades".into()));
    }
    let rows = a_list
        .par_iter()
        .map(|&a| {
            let ca = c.with_a(a)?;
            let m = minimize_meander_amplitude(&ca, modes, slope, length, DEFAULT_PANELS, Density::Regularized)?;
            let profile = MeanderProfile::new(m.amplitude, modes, slope, length)?;
            let original = meander_energy(&profile, &ca, DEFAULT_PANELS, Density::Original)?;
            Ok(ScalingRow {
                a,
                energy: m.energy.total,
                amplitude: m.amplitude,
                amplitude_balance: m.amplitude_balance,
                energy_original: original.total,
                lower_bound: lower_bound_constant(&ca, slope, length).full,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(r) = rows.iter().find(|r| !(r.energy < 0.0)) {
        return Err(Error::InvalidSweep(format!(
            "family minimum is not negative at a = {:e}; the a⁻² regime has not been reached",
            r.a
        )));
    }
    let tail: Vec<&ScalingRow> = rows.iter().filter(|r| r.a <= 100.0 * a_min * (1.0 + 1e-9)).collect();
    let xs: Vec<f64> = tail.iter().map(|r| r.a.ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|r| (-r.energy).ln()).collect();
    let (fit_slope, _) = linear_fit(&xs, &ys);
    let last = rows.last().unwrap();
    let omega = 2.0 * PI * modes as f64 / length;
    Ok(ScalingReport {
        slope: fit_slope,
        prefactor: -last.energy * last.a * last.a,
        reference_prefactor: upper_bound_prefactor(c, omega, length),
        regularization_gap: ((last.energy - last.energy_original) / last.energy).abs(),
        rows,
    })
}

/// The a-independent lower bound on `E` for mean slope `|B|` on a cell of side `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    /// `c1³ L⁵ / (54 c3²)`, the coefficient of `−a⁻²`.
    pub leading: f64,
    /// `−c1³L⁵/(54c3²)a⁻² − c1²L⁴|B|/(3c3)a⁻¹ − 2c1L³|B|² − 5ac3|B|³L²`.
    pub full: f64,
    /// `c1 L/(3 c3 a) + 2|B|`, where the pointwise bound is smallest.
    pub radial_minimizer: f64,
}

pub fn lower_bound_constant(c: &Coefficients, slope: f64, length: f64) -> LowerBound {
    let (c1, c3, a, b, l) = (c.c1, c.c3, c.a, slope.abs(), length);
    let leading = c1.powi(3) * l.powi(5) / (54.0 * c3 * c3);
    let full = -leading / (a * a)
        - c1 * c1 * l.powi(4) * b / (3.0 * c3 * a)
        - 2.0 * c1 * l.powi(3) * b * b
        - 5.0 * a * c3 * b.powi(3) * l * l;
    LowerBound {
        leading,
        full,
        radial_minimizer: c1 * l / (3.0 * c3 * a) + 2.0 * b,
    }
}

/// `g(r) = −(c1 L/2) r² + a c3 r³ − 3 a c3 |B| r²`.
pub fn lower_bound_pointwise(r: f64, c: &Coefficients, slope: f64, length: f64) -> f64 {
    let ac3 = c.a * c.c3;
    -0.5 * c.c1 * length * r * r + ac3 * r.powi(3) - 3.0 * ac3 * slope.abs() * r * r
}

/// One bunch of height `H` and step density `ρ` centred in `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BunchProfile {
    pub height: f64,
    pub rho: f64,
    pub length: f64,
}

impl BunchProfile {
    pub fn new(height: f64, rho: f64, length: f64) -> Result<Self> {
        let p = Self { height, rho, length };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.height.is_finite() && self.rho.is_finite() && self.length.is_finite();
        if !finite || self.height <= 0.0 || self.rho <= 0.0 || self.length <= 0.0 {
            return Err(Error::InvalidProfile(format!(
                "bunch needs positive H, ρ, L (got {}, {}, {})",
                self.height, self.rho, self.length
            )));
        }
        if !self.fits() {
            return Err(Error::InvalidProfile(format!(
                "bunch width H/ρ = {:e} exceeds the cell length {:e}",
                self.width(),
                self.length
            )));
        }
        Ok(())
    }

    /// `H/ρ`.
    pub fn width(&self) -> f64 {
        self.height / self.rho
    }

    pub fn fits(&self) -> bool {
        self.width() <= self.length
    }

    pub fn height_at(&self, x: f64) -> f64 {
        let half = 0.5 * self.height;
        (self.rho * (x - 0.5 * self.length)).clamp(-half, half)
    }

    /// The bunch as a surface varying in `x1`, with slope `(H/L, 0)`.
    pub fn realize(&self, grid: Grid) -> Result<ScalarField> {
        if (grid.length() - self.length).abs() > 1e-12 * self.length {
            return Err(Error::InvalidProfile(format!(
                "grid length {} differs from profile length {}",
                grid.length(),
                self.length
            )));
        }
        let b = self.height / self.length;
        let half = 0.5 * self.length;
        Ok(ScalarField::from_fn(grid, [b, 0.0], |x, _| self.height_at(x) - b * (x - half)))
    }
}

/// Step density `√(c1 H/(2 c3)) a^{−1/2}`.
pub fn bunch_density(c: &Coefficients, height: f64) -> f64 {
    (c.c1 * height / (2.0 * c.c3 * c.a)).sqrt()
}

/// `c1 L H² log(πH/(Lρ)) + a L H (c1 log ρ + c2 + c3 ρ²)`, evaluated whether or
/// not the bunch fits in the cell.
pub fn bunch_energy_closed(height: f64, rho: f64, length: f64, c: &Coefficients) -> f64 {
    let lead = c.c1 * length * height * height * (PI * height / (length * rho)).ln();
    lead + c.a * length * height * (c.c1 * rho.ln() + c.c2 + c.c3 * rho * rho)
}

pub fn bunch_energy_1p1(p: &BunchProfile, c: &Coefficients) -> Result<f64> {
    p.validate()?;
    Ok(bunch_energy_closed(p.height, p.rho, p.length, c))
}

/// `c1 L ρ² ∫∫ log|sin(π(x−y)/L)| dx dy` over `[−w, w]²`, `w = H/(2ρ)`.
///
/// The square reduces exactly to `2∫₀^{2w} (2w − s) log sin(πs/L) ds`, which is
/// integrated on panels graded toward the logarithmic endpoints.
pub fn bunch_nonlocal_oracle(p: &BunchProfile, c: &Coefficients, panels: usize) -> Result<f64> {
    p.validate()?;
    let span = p.width();
    let l = p.length;
    let gl = GaussLegendre::new(GL_ORDER);
    let f = |s: f64| (span - s) * (PI * s / l).sin().ln();
    let first = 1e-14 * span.min(0.5 * l);
    let mid = span.min(0.5 * l);
    let mut integral = gl.integrate_panels(&graded_breaks(0.0, mid, first, panels), f);
    if span > mid {
        let tail: Vec<f64> = graded_breaks(0.0, span - mid, 1e-14 * l, panels)
            .into_iter()
            .rev()
            .map(|t| span - t)
            .collect();
        integral += gl.integrate_panels(&tail, f);
    }
    Ok(c.c1 * l * p.rho * p.rho * 2.0 * integral)
}

/// Parameter varied by a transition scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "vary", rename_all = "snake_case")]
pub enum TransitionSweep {
    /// Vary the step spacing `l_t` (in units of `a`) at fixed `N` and `ε0`.
    StepSpacing {
        n_steps: u32,
        eps0: f64,
        lt_over_a: Vec<f64>,
    },
    /// Vary the misfit `ε0` at fixed `N` and `l_t/a`.
    Misfit {
        n_steps: u32,
        lt_over_a: f64,
        eps0: Vec<f64>,
    },
}

impl TransitionSweep {
    /// `l_t ∈ [2a, 400a]` at `N = 15`, `ε0 = 0.012`, 41 log-spaced points.
    pub fn default_step_spacing() -> Self {
        TransitionSweep::StepSpacing {
            n_steps: 15,
            eps0: 0.012,
            lt_over_a: crate::quad::log_space(2.0, 400.0, 41),
        }
    }

    /// `ε0 ∈ [1e−3, 0.03]` at `N = 10`, `l_t = 80a`, 41 log-spaced points.
    pub fn default_misfit() -> Self {
        TransitionSweep::Misfit {
            n_steps: 10,
            lt_over_a: 80.0,
            eps0: crate::quad::log_space(1e-3, 0.03, 41),
        }
    }

    pub fn parameter_name(&self) -> &'static str {
        match self {
            TransitionSweep::StepSpacing { .. } => "lt_over_a",
            TransitionSweep::Misfit { .. } => "eps0",
        }
    }

    fn points(&self) -> Vec<(f64, u32, f64, f64)> {
        match self {
            TransitionSweep::StepSpacing { n_steps, eps0, lt_over_a } => {
                lt_over_a.iter().map(|&lt| (lt, *n_steps, *eps0, lt)).collect()
            }
            TransitionSweep::Misfit { n_steps, lt_over_a, eps0 } => {
                eps0.iter().map(|&e| (e, *n_steps, e, *lt_over_a)).collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (n, values) = match self {
            TransitionSweep::StepSpacing { n_steps, lt_over_a, .. } => (*n_steps, lt_over_a),
            TransitionSweep::Misfit { n_steps, eps0, .. } => (*n_steps, eps0),
        };
        if n == 0 {
            return Err(Error::InvalidSweep("number of steps N must be positive".into()));
        }
        if values.is_empty() {
            return Err(Error::InvalidSweep("sweep range is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSweep("sweep values must be finite".into()));
        }
        if let TransitionSweep::StepSpacing { lt_over_a, .. } = self {
            if lt_over_a.iter().any(|v| *v <= 0.0) {
                return Err(Error::InvalidSweep("l_t must be positive".into()));
            }
        }
        if let TransitionSweep::Misfit { lt_over_a, .. } = self {
            if !(*lt_over_a > 0.0 && lt_over_a.is_finite()) {
                return Err(Error::InvalidSweep("l_t must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Energy densities at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub parameter: f64,
    pub n_steps: u32,
    pub eps0: f64,
    pub lt: f64,
    pub length: f64,
    pub height: f64,
    pub slope: f64,
    pub omega: f64,
    pub amplitude: f64,
    pub rho: f64,
    /// `E_{2+1}/L²` [J/m²].
    pub e_meander: f64,
    /// `E_{1+1}/L²` [J/m²].
    pub e_bunch: f64,
    /// Whether `H/ρ ≤ L`.
    pub bunch_fits: bool,
}

impl TransitionRow {
    pub fn difference(&self) -> f64 {
        self.e_meander - self.e_bunch
    }

    pub fn bunching_favored(&self) -> bool {
        self.e_bunch < self.e_meander
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedPoint {
    pub parameter: f64,
    pub reason: String,
}

/// Sign change of `E_{2+1} − E_{1+1}` between two consecutive rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Log-linear interpolation of the zero.
    pub parameter: f64,
    /// True when bunching is favored below the crossing.
    pub bunching_below: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub parameter: String,
    pub rows: Vec<TransitionRow>,
    pub rejected: Vec<RejectedPoint>,
    pub crossings: Vec<Crossing>,
}

impl TransitionReport {
    /// Favored mechanism at the smallest parameter, if any row was computed.
    pub fn bunching_favored_at_small_end(&self) -> Option<bool> {
        self.rows.first().map(TransitionRow::bunching_favored)
    }

    pub fn crossing_summary(&self) -> String {
        match self.crossings.as_slice() {
            [] => "no crossing in range".into(),
            cs => cs
                .iter()
                .map(|x| format!("{} = {:.6e}", self.parameter, x.parameter))
                .collect::<Vec<_>>()
                .join(", "),
        }
    }
}

/// Energy densities of the meandering and one-bunch surfaces at one point.
///
/// `L = N l_t`, `H = N a`, `B = a/l_t`, `ω = 2π/L`; the meander uses the
/// dominant-balance amplitude and the bunch uses `ρ = √(c1H/(2c3)) a^{−1/2}`.
pub fn transition_point(material: &PhysicalParams, n_steps: u32, eps0: f64, lt_over_a: f64) -> Result<TransitionRow> {
    if !(eps0 > 0.0) {
        return Err(Error::Degenerate(format!(
            "eps0 = {eps0:e}: without misfit both nonlocal gains vanish"
        )));
    }
    let c = Coefficients::from_physical(&PhysicalParams { eps0, ..*material })?;
    let a = c.a;
    let lt = lt_over_a * a;
    let length = n_steps as f64 * lt;
    let height = n_steps as f64 * a;
    let slope = a / lt;
    let profile0 = MeanderProfile::new(0.0, 1, slope, length)?;
    let omega = profile0.omega();
    let amplitude = dominant_balance_amplitude(&c, omega, slope, a);
    let profile = MeanderProfile { amplitude, ..profile0 };
    let e21 = meander_energy(&profile, &c, DEFAULT_PANELS, Density::Regularized)?.total;
    let rho = bunch_density(&c, height);
    let e11 = bunch_energy_closed(height, rho, length, &c);
    let area = length * length;
    Ok(TransitionRow {
        parameter: 0.0,
        n_steps,
        eps0,
        lt,
        length,
        height,
        slope,
        omega,
        amplitude,
        rho,
        e_meander: e21 / area,
        e_bunch: e11 / area,
        bunch_fits: height / rho <= length,
    })
}

/// Evaluates every sweep point in parallel; rows come back sorted by the
/// swept parameter.
pub fn transition_scan(sweep: &TransitionSweep, material: &PhysicalParams) -> Result<TransitionReport> {
    sweep.validate()?;
    material.validate()?;
    let mut points = sweep.points();
    points.sort_by(|x, y| x.0.total_cmp(&y.0));
    let results: Vec<(f64, Result<TransitionRow>)> = points
        .par_iter()
        .map(|&(param, n, eps0, lt)| {
            (
                param,
                transition_point(material, n, eps0, lt).map(|r| TransitionRow { parameter: param, ..r }),
            )
        })
        .collect();
    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for (parameter, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => rejected.push(RejectedPoint {
                parameter,
                reason: e.to_string(),
            }),
        }
    }
    let crossings = rows
        .windows(2)
        .filter(|w| w[0].bunching_favored() != w[1].bunching_favored())
        .map(|w| {
            let (d0, d1) = (w[0].difference(), w[1].difference());
            let t = d0 / (d0 - d1);
            let (x0, x1) = (w[0].parameter.ln(), w[1].parameter.ln());
            Crossing {
                parameter: (x0 + t * (x1 - x0)).exp(),
                bunching_below: w[0].bunching_favored(),
            }
        })
        .collect();
    Ok(TransitionReport {
        parameter: sweep.parameter_name().into(),
        rows,
        rejected,
        crossings,
    })
}
