//! Stabilized semi-implicit time stepping of `h_t = Δμ`.
//!
//! On mode `k ≠ 0` with `q = 2π|k|/L`, the nonlocal part of `Δμ` is the linear
//! term `2π c1 q³ ĥ` and is taken implicitly together with a biharmonic
//! stabilizer `κ q⁴`. The local flux is explicit:
//!
//! ```text
//! ĥⁿ⁺¹ = [ĥⁿ + dt (−q² μ̂_locⁿ + κ q⁴ ĥⁿ)] / [1 + dt (κ q⁴ − 2π c1 q³)]
//! ```
//!
//! The zero mode is frozen, Nyquist modes are projected out and every update is
//! projected back onto real fields.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::coefficients::Coefficients;
use crate::energy::{breakdown_from_hat, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, SpectralField};
use crate::spectral;

/// Stabilization constant of the IMEX splitting.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kappa {
    /// `max(3 a c3 max(1, max|∇h|), max eigenvalue of Hess Ψ)`, refreshed every step.
    #[default]
    Auto,
    /// `3 a c3 max(1, max|∇h|)`, refreshed every step.
    SlopeScaled,
    Fixed(f64),
}

/// Time-step control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtControl {
    Fixed,
    /// Halve `dt` on an energy increase beyond `1e−12 |E|` or a non-finite step.
    #[default]
    Adaptive,
}

/// Maximum number of halvings per step in adaptive mode.
pub const MAX_HALVINGS: usize = 20;

/// Relative energy increase tolerated by the adaptive control.
pub const ENERGY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub kappa: Kappa,
    #[serde(default)]
    pub dt_control: DtControl,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Upper bound on accepted steps.
    #[serde(default)]
    pub max_steps: Option<usize>,
}

fn default_record_every() -> usize {
    1
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            kappa: Kappa::Auto,
            dt_control: DtControl::Adaptive,
            record_every: 1,
            max_steps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive (got {})", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!("t_end must be non-negative (got {})", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be at least 1".into()));
        }
        if let Kappa::Fixed(k) = self.kappa {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::InvalidConfig(format!("kappa must be non-negative (got {k})")));
            }
        }
        Ok(())
    }
}

/// Diagnostics at one recorded step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub time: f64,
    pub energy: EnergyBreakdown,
    /// Mean of `h̃` on the grid.
    pub mass: f64,
    pub max_slope: f64,
    /// `‖hⁿ⁺¹ − hⁿ‖_{L²}/dt` for the last step; zero at the start.
    pub rate: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub records: Vec<TraceRecord>,
    pub steps: usize,
    pub halvings: usize,
}

struct Evaluation {
    energy: EnergyBreakdown,
    mu_local: Vec<Complex64>,
    max_slope: f64,
    max_curvature: f64,
}

/// Owns the spectral state of one simulation.
pub struct Stepper {
    grid: Grid,
    slope: [f64; 2],
    coeffs: Coefficients,
    h_hat: Vec<Complex64>,
    eval: Evaluation,
    time: f64,
    steps: usize,
    last_rate: f64,
}

impl Stepper {
    pub fn new(f: &ScalarField, c: &Coefficients) -> Self {
        let grid = *f.grid();
        let mut h_hat = SpectralField::of(f).coeffs;
        h_hat[0] = Complex64::new(0.0, 0.0);
        for (i, h) in h_hat.iter_mut().enumerate() {
            if grid.touches_nyquist(i) {
                *h = Complex64::new(0.0, 0.0);
            }
        }
        let eval = evaluate(&grid, &h_hat, f.slope(), c);
        Self {
            grid,
            slope: f.slope(),
            coeffs: *c,
            h_hat,
            eval,
            time: 0.0,
            steps: 0,
            last_rate: 0.0,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn energy(&self) -> EnergyBreakdown {
        self.eval.energy
    }

    pub fn max_slope(&self) -> f64 {
        self.eval.max_slope
    }

    /// Grid mean of `h̃` before any re-centering.
    pub fn mass(&self) -> f64 {
        let v = spectral::inverse_real(self.h_hat.clone(), self.grid.n());
        v.iter().sum::<f64>() / v.len() as f64
    }

    pub fn field(&self) -> ScalarField {
        let v = spectral::inverse_real(self.h_hat.clone(), self.grid.n());
        ScalarField::from_samples(self.grid, v, self.slope).expect("length matches grid")
    }

    fn record(&self, dt: f64) -> TraceRecord {
        TraceRecord {
            step: self.steps,
            time: self.time,
            energy: self.eval.energy,
            mass: self.mass(),
            max_slope: self.eval.max_slope,
            rate: self.last_rate,
            dt,
        }
    }

    fn symbols(&self, i: usize) -> (f64, f64) {
        let (k1, k2) = self.grid.wavevector(i);
        let w = 2.0 * PI / self.grid.length();
        let q2 = w * w * (k1 * k1 + k2 * k2) as f64;
        (q2, q2.sqrt())
    }

    /// `‖Δμ‖_{L²}` of the current state.
    pub fn residual(&self) -> f64 {
        let c1 = self.coeffs.c1;
        let s: f64 = self
            .h_hat
            .iter()
            .zip(&self.eval.mu_local)
            .enumerate()
            .map(|(i, (h, m))| {
                let (q2, q) = self.symbols(i);
                let mu = m - h * (2.0 * PI * c1 * q);
                (mu * q2).norm_sqr()
            })
            .sum();
        self.grid.length() * s.sqrt()
    }

    /// Stabilizer for the current state.
    pub fn kappa(&self, mode: Kappa) -> f64 {
        let slope_scaled = 3.0 * self.coeffs.a * self.coeffs.c3 * self.eval.max_slope.max(1.0);
        match mode {
            Kappa::Auto => slope_scaled.max(self.eval.max_curvature),
            Kappa::SlopeScaled => slope_scaled,
            Kappa::Fixed(k) => k,
        }
    }

    fn candidate(&self, dt: f64, kappa: f64) -> Result<Vec<Complex64>> {
        let c1 = self.coeffs.c1;
        let mut out = vec![Complex64::new(0.0, 0.0); self.h_hat.len()];
        out[0] = self.h_hat[0];
        for i in 1..self.h_hat.len() {
            if self.grid.touches_nyquist(i) {
                continue;
            }
            let (q2, q) = self.symbols(i);
            let q4 = q2 * q2;
            let den = 1.0 + dt * (kappa * q4 - 2.0 * PI * c1 * q2 * q);
            if !(den > 0.0) {
                return Err(Error::StepRejected(format!(
                    "implicit denominator {den:e} is not positive at dt = {dt:e}"
                )));
            }
            let num = self.h_hat[i] + dt * (-q2 * self.eval.mu_local[i] + kappa * q4 * self.h_hat[i]);
            let v = num / den;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::StepRejected(format!("non-finite update at dt = {dt:e}")));
            }
            out[i] = v;
        }
        hermitian_project(&mut out, self.grid.n());
        Ok(out)
    }

    /// One step of size at most `dt`; returns the step size used.
    pub fn advance(&mut self, dt: f64, kappa_mode: Kappa, control: DtControl) -> Result<(f64, usize)> {
        let kappa = self.kappa(kappa_mode);
        let e_old = self.eval.energy.total;
        let mut trial = dt;
        for halvings in 0..=MAX_HALVINGS {
            let outcome = self.candidate(trial, kappa).and_then(|hat| {
                let ev = evaluate(&self.grid, &hat, self.slope, &self.coeffs);
                if ev.energy.total.is_finite() {
                    Ok((hat, ev))
                } else {
                    Err(Error::StepRejected(format!("non-finite energy at dt = {trial:e}")))
                }
            });
            match (outcome, control) {
                (Ok((hat, ev)), DtControl::Fixed) => {
                    self.accept(hat, ev, trial);
                    return Ok((trial, halvings));
                }
                (Ok((hat, ev)), DtControl::Adaptive) => {
                    if ev.energy.total <= e_old + ENERGY_TOLERANCE * e_old.abs() {
                        self.accept(hat, ev, trial);
                        return Ok((trial, halvings));
                    }
                }
                (Err(e), DtControl::Fixed) => return Err(e),
                (Err(_), DtControl::Adaptive) => {}
            }
            trial *= 0.5;
        }
        Err(Error::StepRejected(format!(
            "energy still increases after {MAX_HALVINGS} halvings (dt = {trial:e}, t = {})",
            self.time
        )))
    }

    fn accept(&mut self, hat: Vec<Complex64>, ev: Evaluation, dt: f64) {
        let diff: f64 = hat.iter().zip(&self.h_hat).map(|(a, b)| (a - b).norm_sqr()).sum();
        self.last_rate = self.grid.length() * diff.sqrt() / dt;
        self.h_hat = hat;
        self.eval = ev;
        self.time += dt;
        self.steps += 1;
    }
}

/// Keeps only the part of `hat` that synthesizes a real field.
fn hermitian_project(hat: &mut [Complex64], n: usize) {
    for i1 in 0..n {
        for i2 in 0..n {
            let i = i1 * n + i2;
            let j = ((n - i1) % n) * n + (n - i2) % n;
            if i < j {
                let m = 0.5 * (hat[i] + hat[j].conj());
                hat[i] = m;
                hat[j] = m.conj();
            } else if i == j {
                hat[i].im = 0.0;
            }
        }
    }
}

fn evaluate(grid: &Grid, h_hat: &[Complex64], slope: [f64; 2], c: &Coefficients) -> Evaluation {
    let (energy, local) = breakdown_from_hat(grid, h_hat, slope, c);
    Evaluation {
        energy,
        mu_local: local.mu_hat.expect("flux requested"),
        max_slope: local.max_slope,
        max_curvature: local.max_curvature,
    }
}

/// `0.1 / max_k |κ q⁴ − 2π c1 q³|` for the state `f`.
pub fn suggested_dt(f: &ScalarField, c: &Coefficients, kappa: Kappa) -> f64 {
    let s = Stepper::new(f, c);
    let k = s.kappa(kappa);
    let worst = (0..f.grid().len())
        .filter(|&i| !f.grid().touches_nyquist(i))
        .map(|i| {
            let (q2, q) = s.symbols(i);
            (k * q2 * q2 - 2.0 * PI * c.c1 * q2 * q).abs()
        })
        .fold(0.0, f64::max);
    0.1 / worst
}

/// One step of size `cfg.dt` under `cfg`'s controls.
pub fn step(f: &ScalarField, cfg: &EvolutionConfig, c: &Coefficients) -> Result<ScalarField> {
    cfg.validate()?;
    let mut s = Stepper::new(f, c);
    s.advance(cfg.dt, cfg.kappa, cfg.dt_control)?;
    Ok(s.field())
}

/// Integrates to `cfg.t_end` (or `cfg.max_steps`), recording every `record_every` steps.
pub fn evolve(f0: &ScalarField, cfg: &EvolutionConfig, c: &Coefficients) -> Result<(ScalarField, EvolutionTrace)> {
    evolve_observed(f0, cfg, c, |_, _| Ok(()))
}

/// [`evolve`], calling `observer` with the stepper at every recorded step.
///
/// An error from the observer stops the run and is returned.
pub fn evolve_observed(
    f0: &ScalarField,
    cfg: &EvolutionConfig,
    c: &Coefficients,
    mut observer: impl FnMut(&Stepper, &TraceRecord) -> Result<()>,
) -> Result<(ScalarField, EvolutionTrace)> {
    cfg.validate()?;
    let mut s = Stepper::new(f0, c);
    let mut trace = EvolutionTrace::default();
    let mut dt = cfg.dt;
    let mut push = |s: &Stepper, rec: TraceRecord, trace: &mut EvolutionTrace| {
        observer(s, &rec)?;
        trace.records.push(rec);
        Ok::<(), Error>(())
    };
    push(&s, s.record(0.0), &mut trace)?;
    let max_steps = cfg.max_steps.unwrap_or(usize::MAX);
    let mut last_used = 0.0;
    loop {
        let remaining = cfg.t_end - s.time();
        if remaining <= 1e-12 * cfg.t_end || s.steps() >= max_steps {
            break;
        }
        let (used, halvings) = s.advance(dt.min(remaining), cfg.kappa, cfg.dt_control)?;
        trace.halvings += halvings;
        last_used = used;
        if halvings > 0 {
            dt = used;
        }
        if s.steps().is_multiple_of(cfg.record_every) {
            push(&s, s.record(used), &mut trace)?;
        }
    }
    if trace.records.last().map(|r| r.step) != Some(s.steps()) {
        push(&s, s.record(last_used), &mut trace)?;
    }
    trace.steps = s.steps();
    Ok((s.field(), trace))
}

/// Settings for [`relax`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    pub dt: f64,
    /// Stop when `‖Δμ‖_{L²}` drops below this.
    pub tol: f64,
    pub max_steps: usize,
    pub kappa: Kappa,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxReport {
    pub steps: usize,
    pub time: f64,
    pub residual: f64,
    pub energy: EnergyBreakdown,
    pub converged: bool,
}

/// Energy descent along the flow until the steady-state residual is below `tol`.
pub fn relax(f0: &ScalarField, c: &Coefficients, opts: &RelaxOptions) -> Result<(ScalarField, RelaxReport)> {
    let mut s = Stepper::new(f0, c);
    let mut dt = opts.dt;
    while s.residual() > opts.tol && s.steps() < opts.max_steps {
        let (used, halvings) = s.advance(dt, opts.kappa, DtControl::Adaptive)?;
        if halvings > 0 {
            dt = used;
        }
    }
    let residual = s.residual();
    Ok((
        s.field(),
        RelaxReport {
            steps: s.steps(),
            time: s.time(),
            residual,
            energy: s.energy(),
            converged: residual <= opts.tol,
        },
    ))
}

/// `‖Δμ‖_{L²}` with `μ` from [`crate::energy::chemical_potential`].
pub fn steady_state_residual(f: &ScalarField, c: &Coefficients) -> f64 {
    let mu = crate::energy::chemical_potential(f, c);
    crate::field::l2_norm_sq(&crate::field::laplacian(&mu)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::total_energy;
    use crate::local_energy::hessian_psi;
    use crate::random::random_smooth_field;

    fn grid(n: usize, l: f64) -> Grid {
        Grid::new(n, l).unwrap()
    }

    #[test]
    fn flat_state_is_stationary() {
        let c = Coefficients::unit(0.1).unwrap();
        let f = ScalarField::zeros(grid(16, 1.0), [1.0, 0.3]);
        let cfg = EvolutionConfig::new(1e-3, 0.05);
        let (out, trace) = evolve(&f, &cfg, &c).unwrap();
        assert_eq!(out.max_abs(), 0.0);
        assert_eq!(trace.steps, 50);
    }

    #[test]
    fn rejects_bad_config() {
        let c = Coefficients::unit(0.1).unwrap();
        let f = ScalarField::zeros(grid(16, 1.0), [1.0, 0.0]);
        assert!(evolve(&f, &EvolutionConfig::new(0.0, 1.0), &c).is_err());
        assert!(evolve(&f, &EvolutionConfig::new(1.0, -1.0), &c).is_err());
    }

    #[test]
    fn fixed_dt_rejects_unstable_denominator() {
        let c = Coefficients::unit(0.01).unwrap();
        let f = random_smooth_field(grid(16, 1.0), [1.0, 0.0], 1, 4, 0.01);
        let cfg = EvolutionConfig {
            kappa: Kappa::Fixed(0.0),
            dt_control: DtControl::Fixed,
            ..EvolutionConfig::new(1.0, 1.0)
        };
        assert!(matches!(step(&f, &cfg, &c), Err(Error::StepRejected(_))));
    }

    #[test]
    fn linear_dispersion() {
        let a = 0.15;
        let c = Coefficients::unit(a).unwrap();
        let b = 1.0;
        let l = 1.0;
        let m = 1;
        let q = 2.0 * PI * m as f64 / l;
        let h22 = hessian_psi([b, 0.0], &c).unwrap().h[1][1];
        let sigma = 2.0 * PI * c.c1 * q.powi(3) - h22 * q.powi(4);
        assert!(sigma > 0.0);
        let eps = 1e-8;
        let f = ScalarField::from_fn(grid(32, l), [b, 0.0], |_, y| eps * (q * y).cos());
        let t_end = 1.0 / sigma;
        let cfg = EvolutionConfig {
            dt_control: DtControl::Fixed,
            ..EvolutionConfig::new(t_end / 2000.0, t_end)
        };
        let (out, _) = evolve(&f, &cfg, &c).unwrap();
        let amp = SpectralField::of(&out).coeff(0, m).norm() * 2.0;
        let measured = (amp / eps).ln() / t_end;
        assert!(((measured - sigma) / sigma).abs() < 0.05, "{measured} vs {sigma}");
    }

    #[test]
    fn mass_is_conserved_and_energy_decreases() {
        let c = Coefficients::unit(0.1).unwrap();
        let f = random_smooth_field(grid(32, 1.0), [0.8, 0.2], 5, 6, 0.1);
        let cfg = EvolutionConfig::new(1e-4, 1e-2);
        let (_, trace) = evolve(&f, &cfg, &c).unwrap();
        let scale = f.max_abs();
        for w in trace.records.windows(2) {
            assert!(w[1].energy.total <= w[0].energy.total + 1e-12 * w[0].energy.total.abs());
            assert!(w[1].time > w[0].time);
        }
        for r in &trace.records {
            assert!(r.mass.abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn initial_energy_rate_matches_dissipation() {
        // dE/dt = −‖∇μ‖² along the flow.
        let c = Coefficients::unit(0.1).unwrap();
        let f = random_smooth_field(grid(32, 1.0), [0.8, 0.2], 9, 4, 0.02);
        let mu = crate::energy::chemical_potential(&f, &c);
        let g = crate::field::gradient(&mu).l2_norm_sq();
        let e0 = total_energy(&f, &c).total;
        let dt = 1e-10;
        let cfg = EvolutionConfig {
            dt_control: DtControl::Fixed,
            kappa: Kappa::Fixed(0.0),
            ..EvolutionConfig::new(dt, dt)
        };
        let f1 = step(&f, &cfg, &c).unwrap();
        let rate = (total_energy(&f1, &c).total - e0) / dt;
        assert!(((rate + g) / g).abs() < 1e-3, "{rate} vs {}", -g);
    }

    #[test]
    fn relax_reaches_flat_state_in_convex_regime() {
        let c = Coefficients::unit(1.0).unwrap();
        let g = grid(16, 1.0);
        assert!(g.length() / c.a < c.beta);
        let f = random_smooth_field(g, [0.5, 0.1], 3, 4, 0.05);
        let opts = RelaxOptions {
            dt: 1e-4,
            tol: 1e-8,
            max_steps: 20_000,
            kappa: Kappa::Auto,
        };
        let (out, report) = relax(&f, &c, &opts).unwrap();
        assert!(report.converged);
        assert!(out.max_abs() < 1e-6 * f.max_abs());
        assert!(steady_state_residual(&out, &c) < 1e-6);
    }
}
