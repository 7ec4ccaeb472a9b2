//! JSON run configurations.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use stepflow::evolution::EvolutionConfig;
use stepflow::experiments::{BunchProfile, MeanderProfile, TransitionSweep};
use stepflow::{random_smooth_field, Coefficients, Grid, PhysicalParams, ScalarField};

use crate::error::{CliError, CliResult};
use crate::output::read_snapshot;

/// Names accepted by `--preset`.
pub const PRESET_NAMES: [&str; 4] = ["zhu2009", "si113", "si111", "unit"];

/// Where the coefficients come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSource {
    /// A shipped material or `unit` (`c1 = c2 = c3 = a = 1`).
    Preset(String),
    /// SI material parameters.
    Physical(PhysicalParams),
    Nondimensional { c1: f64, c2: f64, c3: f64, a: f64 },
}

impl CoefficientSource {
    pub fn resolve(&self) -> CliResult<Coefficients> {
        let c = match self {
            CoefficientSource::Preset(name) if name == "unit" => Coefficients::unit(1.0)?,
            CoefficientSource::Preset(name) => Coefficients::from_physical(&material_preset(name)?)?,
            CoefficientSource::Physical(p) => Coefficients::from_physical(p)?,
            CoefficientSource::Nondimensional { c1, c2, c3, a } => Coefficients::nondimensional(*c1, *c2, *c3, *a)?,
        };
        Ok(c)
    }

    /// `--preset` plus an optional `--a` override, which turns the source
    /// into an explicit nondimensional set.
    pub fn from_flags(preset: &str, a: Option<f64>) -> CliResult<Self> {
        let base = CoefficientSource::Preset(preset.to_string());
        let c = base.resolve()?;
        Ok(match a {
            None => base,
            Some(a) => CoefficientSource::Nondimensional {
                c1: c.c1,
                c2: c.c2,
                c3: c.c3,
                a,
            },
        })
    }
}

pub fn material_preset(name: &str) -> CliResult<PhysicalParams> {
    PhysicalParams::preset(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown preset `{name}` (expected one of {})",
            PRESET_NAMES.join(", ")
        ))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
}

impl GridSpec {
    pub fn build(&self) -> CliResult<Grid> {
        Ok(Grid::new(self.n, self.length)?)
    }
}

/// Initial surface `h̃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialField {
    Flat,
    /// Smooth random field from a seeded ChaCha8 stream.
    Random { seed: u64, kmax: usize, amplitude: f64 },
    /// Binary snapshot; relative paths are taken from the config file's directory.
    Snapshot { path: PathBuf },
    /// `h̃ = A B sin(2πm y/L)` with `B` the first slope component.
    Meander { amplitude: f64, modes: u32 },
    /// One bunch of height `H` and step density `ρ` across the cell; the
    /// slope is `(H/L, 0)`.
    Bunch { height: f64, rho: f64 },
}

/// A surface: grid, mean slope and `h̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceConfig {
    pub grid: Option<GridSpec>,
    pub slope: Option<[f64; 2]>,
    pub initial: InitialField,
}

impl SurfaceConfig {
    pub fn seed(&self) -> Option<u64> {
        match self.initial {
            InitialField::Random { seed, .. } => Some(seed),
            _ => None,
        }
    }

    /// Makes a relative snapshot path absolute against `base_dir`.
    pub fn anchor(initial: &mut InitialField, base_dir: &Path) {
        if let InitialField::Snapshot { path } = initial {
            if path.is_relative() {
                let joined = base_dir.join(&*path);
                *path = std::path::absolute(&joined).unwrap_or(joined);
            }
        }
    }

    pub fn build(&self, base_dir: &Path) -> CliResult<ScalarField> {
        if let InitialField::Snapshot { path } = &self.initial {
            let path = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
            let f = read_snapshot(&path)?;
            if let Some(g) = self.grid {
                if g.n != f.grid().n() || (g.length - f.grid().length()).abs() > 1e-12 * g.length {
                    return Err(CliError::Config(format!(
                        "grid in config ({} × {}, L = {}) does not match snapshot {}",
                        g.n,
                        g.n,
                        g.length,
                        path.display()
                    )));
                }
            }
            if let Some(s) = self.slope {
                if s != f.slope() {
                    return Err(CliError::Config(format!(
                        "slope in config {s:?} does not match snapshot {}",
                        path.display()
                    )));
                }
            }
            return Ok(f);
        }
        let grid = self
            .grid
            .ok_or_else(|| CliError::Config("field `grid` is required unless the initial field is a snapshot".into()))?
            .build()?;
        if let InitialField::Bunch { height, rho } = self.initial {
            let f = BunchProfile::new(height, rho, grid.length())?.realize(grid)?;
            if let Some(s) = self.slope {
                if s != f.slope() {
                    return Err(CliError::Config(format!(
                        "slope {s:?} does not match the bunch slope {:?}",
                        f.slope()
                    )));
                }
            }
            return Ok(f);
        }
        let slope = self.slope.ok_or_else(|| {
            CliError::Config("field `slope` is required unless the initial field is a snapshot or a bunch".into())
        })?;
        Ok(match &self.initial {
            InitialField::Flat => ScalarField::zeros(grid, slope),
            InitialField::Random { seed, kmax, amplitude } => {
                if *kmax == 0 || !(*amplitude >= 0.0) {
                    return Err(CliError::Config("random field needs kmax ≥ 1 and amplitude ≥ 0".into()));
                }
                random_smooth_field(grid, slope, *seed, *kmax, *amplitude)
            }
            InitialField::Meander { amplitude, modes } => {
                MeanderProfile::new(*amplitude, *modes, slope[0], grid.length())?.realize(grid)?
            }
            InitialField::Snapshot { .. } | InitialField::Bunch { .. } => unreachable!("handled above"),
        })
    }
}

/// `stepflow energy --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub coefficients: CoefficientSource,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub slope: Option<[f64; 2]>,
    pub initial: InitialField,
}

impl EnergyConfig {
    pub fn surface(&self) -> SurfaceConfig {
        SurfaceConfig {
            grid: self.grid,
            slope: self.slope,
            initial: self.initial.clone(),
        }
    }
}

/// `stepflow evolve --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub coefficients: CoefficientSource,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub slope: Option<[f64; 2]>,
    pub initial: InitialField,
    pub evolution: EvolutionConfig,
    /// Write a snapshot every this many steps (0: first and last only).
    #[serde(default)]
    pub snapshot_every: usize,
}

impl RunConfig {
    pub fn surface(&self) -> SurfaceConfig {
        SurfaceConfig {
            grid: self.grid,
            slope: self.slope,
            initial: self.initial.clone(),
        }
    }
}

/// `stepflow scaling-sweep --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    /// `c1, c2, c3` are taken from here; `a` is swept.
    pub coefficients: CoefficientSource,
    pub modes: u32,
    pub slope: f64,
    pub length: f64,
    /// Strictly decreasing.
    pub a_values: Vec<f64>,
}

/// `stepflow transition-scan --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    pub material: PhysicalParams,
    pub sweeps: Vec<TransitionSweep>,
}

/// Reads `path` as JSON. A run manifest is accepted too, in which case its
/// recorded `config` is used.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let is_manifest = value.get("command").is_some() && value.get("config").is_some();
    if is_manifest {
        let inner = value["config"].clone();
        return serde_json::from_value(inner)
            .map_err(|e| CliError::Config(format!("{} (manifest `config`): {e}", path.display())));
    }
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_round_trip() {
        let text = r#"{
            "coefficients": {"nondimensional": {"c1": 1, "c2": 1, "c3": 1, "a": 0.1}},
            "grid": {"n": 16, "length": 1.0},
            "slope": [1.0, 0.0],
            "initial": {"random": {"seed": 4, "kmax": 3, "amplitude": 0.01}},
            "evolution": {"dt": 1e-4, "t_end": 1e-3}
        }"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.surface().seed(), Some(4));
        assert_eq!(cfg.snapshot_every, 0);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"coefficients": {"preset": "unit"}, "grd": {"n": 16, "length": 1.0}, "initial": "flat"}"#;
        let err = serde_json::from_str::<EnergyConfig>(text).unwrap_err().to_string();
        assert!(err.contains("grd"), "{err}");
    }

    #[test]
    fn presets_resolve() {
        for name in PRESET_NAMES {
            CoefficientSource::Preset(name.into()).resolve().unwrap();
        }
        assert!(CoefficientSource::Preset("si100".into()).resolve().is_err());
        let s = CoefficientSource::from_flags("unit", Some(0.25)).unwrap();
        assert_eq!(s.resolve().unwrap().a, 0.25);
    }
}
