use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "stepflow", version, about = "Energies, gradient flow and scaling studies of stepped surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the derived coefficient table as JSON.
    Coeffs(CoeffsArgs),
    /// Print the energy breakdown of a surface as JSON.
    Energy(EnergyArgs),
    /// Run the gradient flow and write a trace.
    Evolve(EvolveArgs),
    /// Sample the Hessians of Ψ and Ψ0.
    ConvexityAudit(AuditArgs),
    /// Minimize the meander family over a range of a and fit the a⁻² law.
    ScalingSweep(ScalingArgs),
    /// Compare meandering and bunching energies along a parameter sweep.
    TransitionScan(TransitionArgs),
    /// Run the fast invariant suite.
    Selfcheck,
    /// Write one of the example surfaces as CSV.
    Profile(ProfileArgs),
}

#[derive(Debug, Args)]
pub struct CoefficientFlags {
    /// zhu2009, si113, si111 or unit.
    #[arg(long, default_value = "zhu2009")]
    pub preset: String,
    /// Override the lattice constant a, keeping c1, c2, c3.
    #[arg(long)]
    pub a: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[command(flatten)]
    pub coefficients: CoefficientFlags,
    /// JSON coefficient source, e.g. {"preset": "si113"}.
    #[arg(long, conflicts_with_all = ["preset", "a"])]
    pub config: Option<PathBuf>,
    /// Also write coefficients.json and a manifest into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("surface").required(true).args(["field", "config"])))]
pub struct EnergyArgs {
    /// Binary snapshot.
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[command(flatten)]
    pub coefficients: CoefficientFlags,
    #[arg(long, conflicts_with_all = ["preset", "a"])]
    pub config: Option<PathBuf>,
    /// Also write energy.json and a manifest into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Trace CSV.
    #[arg(long, default_value = "trace.csv")]
    pub out: PathBuf,
    /// Directory for field snapshots.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub coefficients: CoefficientFlags,
    /// Approximate number of sampled slopes.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, conflicts_with_all = ["preset", "a", "samples"])]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "audit")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    /// Source of c1, c2, c3; a is swept.
    #[arg(long, default_value = "unit")]
    pub preset: String,
    #[arg(long, default_value_t = 1)]
    pub modes: u32,
    #[arg(long, default_value_t = 1.0)]
    pub slope: f64,
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
    #[arg(long, default_value_t = 1e-1)]
    pub a_max: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub a_min: f64,
    #[arg(long, default_value_t = 13)]
    pub points: usize,
    #[arg(long, conflicts_with_all = ["preset", "modes", "slope", "length", "a_max", "a_min", "points"])]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "scaling")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Vary {
    Lt,
    Eps0,
    Both,
}

#[derive(Debug, Args)]
pub struct TransitionArgs {
    #[arg(long, value_enum, default_value_t = Vary::Both)]
    pub vary: Vary,
    /// Material preset (zhu2009, si113 or si111).
    #[arg(long, default_value = "zhu2009")]
    pub preset: String,
    /// Number of steps N.
    #[arg(long)]
    pub n_steps: Option<u32>,
    /// Fixed misfit of the l_t sweep.
    #[arg(long)]
    pub eps0: Option<f64>,
    /// Fixed l_t/a of the misfit sweep.
    #[arg(long)]
    pub lt_over_a: Option<f64>,
    /// Lower end of the swept range.
    #[arg(long, requires = "to")]
    pub from: Option<f64>,
    /// Upper end of the swept range.
    #[arg(long, requires = "from")]
    pub to: Option<f64>,
    /// Log-spaced points in the swept range.
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    #[arg(long, conflicts_with_all = ["vary", "preset", "n_steps", "eps0", "lt_over_a", "from", "to", "points"])]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "transition")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileKind {
    /// `h = x + 6π sin y` on `[0, 12π]²`.
    Meander,
    /// One bunch with `H = 12π`, `ρ = 4` on `[0, 12π]²`.
    Bunch,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(value_enum)]
    pub kind: ProfileKind,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    /// CSV with columns x1, x2, h.
    #[arg(long)]
    pub out: PathBuf,
}
