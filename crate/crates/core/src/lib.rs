//! Spectral numerics for a continuum model of stepped epitaxial surfaces
//! under elastic interaction.
//!
//! The surface height on the periodic cell `Ω = [0, L]²` is
//! `h(x) = h̃(x) + B·x` with zero-mean `h̃`. The energy is
//!
//! ```text
//! E[h] = −2π² c1 L [h̃]²_{H^{1/2}} + ∫_Ω Ψ(∇h) dx,
//! Ψ(p) = a c1 |p| log(|p| + γ0) + a c2 |p| + a c3 |p|³,
//! ```
//!
//! and the surface evolves by the conservative flow `h_t = Δμ` with
//! `μ = δE/δh`.
//!
//! * [`coefficients`] derives `c1, c2, c3, γ0, β` from material parameters.
//! * [`field`] holds periodic grids, spectral derivatives and the seminorm.
//! * [`local_energy`] has the densities, the flux `ζ = ∇Ψ` and convexity audits.
//! * [`energy`] assembles `E`, `μ` and the divergence-potential form `F[u]`.
//! * [`evolution`] integrates the flow with a stabilized IMEX scheme.
//! * [`experiments`] runs the meandering, bunching and transition studies.

pub mod coefficients;
pub mod energy;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod field;
pub mod local_energy;
pub mod quad;
pub mod random;
mod spectral;

pub use coefficients::{beta_for, BetaBranch, Coefficients, PhysicalParams};
pub use energy::{
    build_u_from_h, build_u_from_h_with, chemical_potential, total_energy, total_energy_u,
    EnergyBreakdown, LineIntegral,
};
pub use error::{Error, Result};
pub use field::{Grid, ScalarField, SpectralField, VectorField};
pub use random::random_smooth_field;
