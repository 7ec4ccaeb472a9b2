//! Material parameters and the model coefficients derived from them.
//!
//! The local density is `Ψ(p) = a c1 |p| log(|p| + γ0) + a c2 |p| + a c3 |p|³`
//! and the nonlocal misfit energy carries the prefactor `c1`. Physical inputs
//! are SI; the nondimensional constructor takes `c1, c2, c3, a` directly.

use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

/// Physical material parameters in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Step line energy density [J/m²].
    pub g1: f64,
    /// Force-dipole strength [J/m²].
    pub g3: f64,
    /// Lattice constant (step height) [m].
    pub a: f64,
    /// Poisson ratio.
    pub nu: f64,
    /// Shear modulus [Pa].
    #[serde(rename = "G")]
    pub shear_modulus: f64,
    /// Step core size [m].
    pub r_c: f64,
    /// Lattice misfit.
    pub eps0: f64,
}

impl PhysicalParams {
    /// Si(001) parameters with a 1.2% misfit.
    pub fn zhu2009() -> Self {
        let a = 0.27e-9;
        Self {
            g1: 0.03,
            g3: 8.58,
            a,
            nu: 0.25,
            shear_modulus: 3.8e10,
            r_c: a,
            eps0: 0.012,
        }
    }

    /// Si(113) at 983 K.
    pub fn si113() -> Self {
        Self {
            g1: 0.3382,
            g3: 5767.8,
            ..Self::zhu2009()
        }
    }

    /// Si(111) at 1223 K.
    pub fn si111() -> Self {
        Self {
            g1: 0.1778,
            g3: 0.8011,
            ..Self::zhu2009()
        }
    }

    /// Looks up a shipped preset by name.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "zhu2009" => Some(Self::zhu2009()),
            "si113" => Some(Self::si113()),
            "si111" => Some(Self::si111()),
            _ => None,
        }
    }

    pub const PRESETS: [&'static str; 3] = ["zhu2009", "si113", "si111"];

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidMaterial(msg.to_string()));
        let all = [
            self.g1,
            self.g3,
            self.a,
            self.nu,
            self.shear_modulus,
            self.r_c,
            self.eps0,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if self.g1 < 0.0 {
            return bad("g1 must be non-negative");
        }
        if self.g3 <= 0.0 {
            return bad("g3 must be positive");
        }
        if self.a <= 0.0 {
            return bad("a must be positive");
        }
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return bad("nu must lie in (0, 0.5)");
        }
        if self.shear_modulus <= 0.0 {
            return bad("G must be positive");
        }
        if self.r_c <= 0.0 {
            return bad("r_c must be positive");
        }
        Ok(())
    }

    /// Misfit stress `σ0 = 2G(1+ν)ε0/(1−ν)`.
    pub fn sigma0(&self) -> f64 {
        2.0 * self.shear_modulus * (1.0 + self.nu) * self.eps0 / (1.0 - self.nu)
    }
}

/// Which branch of the piecewise `β` definition was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaBranch {
    /// `√(c1/(3c3)) ≥ γ0`: `β = 2√(3c3/c1) − (3c3/c1)γ0`.
    Interior,
    /// Otherwise `β = 1/γ0`.
    Boundary,
}

/// Returns `β` and the branch used.
pub fn beta_for(c1: f64, c3: f64, gamma0: f64) -> (f64, BetaBranch) {
    let ratio = 3.0 * c3 / c1;
    if (c1 / (3.0 * c3)).sqrt() >= gamma0 {
        (2.0 * ratio.sqrt() - ratio * gamma0, BetaBranch::Interior)
    } else {
        (1.0 / gamma0, BetaBranch::Boundary)
    }
}

/// Coefficients of the energy. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `exp(−c2/c1)`, may underflow to zero; see [`Coefficients::ln_gamma0`].
    pub gamma0: f64,
    pub beta: f64,
    pub beta_branch: BetaBranch,
    pub a: f64,
    /// Misfit stress when built from physical parameters.
    pub sigma0: Option<f64>,
}

impl Coefficients {
    /// Derives the coefficients from physical parameters.
    pub fn from_physical(p: &PhysicalParams) -> Result<Self> {
        p.validate()?;
        let sigma0 = p.sigma0();
        let c1 = (1.0 - p.nu) * sigma0 * sigma0 / (2.0 * PI * p.shear_modulus);
        if c1 <= 0.0 {
            return Err(Error::Degenerate(format!(
                "c1 = {c1:e}; the model needs a nonzero misfit (eps0 = {})",
                p.eps0
            )));
        }
        let c2 = p.g1 / p.a + c1 * (2.0 * PI * p.r_c / (E * p.a)).ln();
        let c3 = p.g3 / (3.0 * p.a);
        let mut c = Self::nondimensional(c1, c2, c3, p.a)?;
        c.sigma0 = Some(sigma0);
        Ok(c)
    }

    /// Builds coefficients from free numbers `c1, c2, c3, a`.
    pub fn nondimensional(c1: f64, c2: f64, c3: f64, a: f64) -> Result<Self> {
        if !(c1.is_finite() && c2.is_finite() && c3.is_finite() && a.is_finite()) {
            return Err(Error::Degenerate("coefficients must be finite".into()));
        }
        if c1 <= 0.0 || c3 <= 0.0 {
            return Err(Error::Degenerate(format!(
                "c1 and c3 must be positive (c1 = {c1:e}, c3 = {c3:e})"
            )));
        }
        if a <= 0.0 {
            return Err(Error::Degenerate(format!("a must be positive (a = {a:e})")));
        }
        let gamma0 = (-c2 / c1).exp();
        let (beta, beta_branch) = beta_for(c1, c3, gamma0);
        Ok(Self {
            c1,
            c2,
            c3,
            gamma0,
            beta,
            beta_branch,
            a,
            sigma0: None,
        })
    }

    /// `c1 = c2 = c3 = 1`.
    pub fn unit(a: f64) -> Result<Self> {
        Self::nondimensional(1.0, 1.0, 1.0, a)
    }

    /// Same `c1, c2, c3` with a different lattice constant.
    pub fn with_a(&self, a: f64) -> Result<Self> {
        let mut c = Self::nondimensional(self.c1, self.c2, self.c3, a)?;
        c.sigma0 = self.sigma0;
        Ok(c)
    }

    /// `log γ0 = −c2/c1`, exact even when `γ0` underflows.
    pub fn ln_gamma0(&self) -> f64 {
        -self.c2 / self.c1
    }

    /// Convexity margin `a c1 β` of `Ψ`.
    pub fn convexity_margin(&self) -> f64 {
        self.a * self.c1 * self.beta
    }

    /// Contraction rate `a c1 β − c1 L` of the flow on a cell of side `L`.
    pub fn contraction_rate(&self, length: f64) -> f64 {
        self.a * self.c1 * self.beta - self.c1 * length
    }
}
