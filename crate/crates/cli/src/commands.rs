//! Subcommand implementations.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use stepflow::evolution::evolve_observed;
use stepflow::experiments::{
    transition_scan, upper_bound_scaling_scan, BunchProfile, Crossing, MeanderProfile, RejectedPoint,
    TransitionReport, TransitionSweep,
};
use stepflow::local_energy::{audit_rows, convexity_audit, psi, psi0, AuditSpec};
use stepflow::quad::log_space;
use stepflow::{total_energy, Coefficients, EnergyBreakdown, Grid, ScalarField};

use crate::cli::{AuditArgs, CoeffsArgs, EnergyArgs, EvolveArgs, ProfileArgs, ProfileKind, ScalingArgs, TransitionArgs, Vary};
use crate::config::{
    config_dir, load_json, material_preset, CoefficientSource, EnergyConfig, InitialField, RunConfig, ScalingConfig,
    SurfaceConfig, TransitionConfig,
};
use crate::error::{CliError, CliResult};
use crate::output::{fmt, write_field_csv, write_json, write_snapshot, CsvWriter, RunRecord};

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

/// The coefficient table printed by `coeffs`.
#[derive(Debug, Serialize)]
pub struct CoefficientTable {
    #[serde(flatten)]
    pub coefficients: Coefficients,
    pub ln_gamma0: f64,
    /// `a c1 β`.
    pub convexity_margin: f64,
}

impl CoefficientTable {
    pub fn new(c: Coefficients) -> Self {
        Self {
            ln_gamma0: c.ln_gamma0(),
            convexity_margin: c.convexity_margin(),
            coefficients: c,
        }
    }
}

pub fn coeffs(args: &CoeffsArgs) -> CliResult<()> {
    let source = match &args.config {
        Some(path) => load_json::<CoefficientSource>(path)?,
        None => CoefficientSource::from_flags(&args.coefficients.preset, args.coefficients.a)?,
    };
    let c = source.resolve()?;
    let table = CoefficientTable::new(c);
    print_json(&table)?;
    if let Some(dir) = &args.out {
        let mut run = RunRecord::start("coeffs", &source)?.coefficients(c);
        let path = dir.join("coefficients.json");
        write_json(&path, &table)?;
        run.add(&path);
        run.finish()?;
    }
    Ok(())
}

pub fn energy(args: &EnergyArgs) -> CliResult<()> {
    let (cfg, base) = match (&args.config, &args.field) {
        (Some(path), _) => (load_json::<EnergyConfig>(path)?, config_dir(path)),
        (None, Some(field)) => (
            EnergyConfig {
                coefficients: CoefficientSource::from_flags(&args.coefficients.preset, args.coefficients.a)?,
                grid: None,
                slope: None,
                initial: InitialField::Snapshot { path: field.clone() },
            },
            PathBuf::new(),
        ),
        (None, None) => return Err(CliError::Config("either --field or --config is required".into())),
    };
    let mut cfg = cfg;
    SurfaceConfig::anchor(&mut cfg.initial, &base);
    let c = cfg.coefficients.resolve()?;
    let surface = cfg.surface();
    let f = surface.build(&base)?;
    let e = total_energy(&f, &c);
    print_json(&e)?;
    if let Some(dir) = &args.out {
        let mut run = RunRecord::start("energy", &cfg)?
            .coefficients(c)
            .grid(f.grid())
            .seed(surface.seed());
        let path = dir.join("energy.json");
        write_json(&path, &e)?;
        run.add(&path);
        run.finish()?;
    }
    Ok(())
}

pub const TRACE_HEADER: [&str; 9] = [
    "t", "E_total", "E_nonlocal", "E_log", "E_lin", "E_cubic", "mass", "max_slope", "dt",
];

fn energy_cells(e: &EnergyBreakdown) -> [f64; 5] {
    [e.total, e.nonlocal, e.local_log, e.local_linear, e.local_cubic]
}

/// Writes `snapshot_<step>.bin` and `.csv` into `dir`.
fn snapshot_pair(dir: &Path, step: usize, f: &ScalarField, run: &mut RunRecord) -> CliResult<()> {
    let bin = dir.join(format!("snapshot_{step:08}.bin"));
    let csv = dir.join(format!("snapshot_{step:08}.csv"));
    write_snapshot(&bin, f)?;
    write_field_csv(&csv, f)?;
    run.add(&bin);
    run.add(&csv);
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvolveSummary {
    steps: usize,
    halvings: usize,
    time: f64,
    energy_start: EnergyBreakdown,
    energy_end: EnergyBreakdown,
}

pub fn evolve(args: &EvolveArgs) -> CliResult<()> {
    let mut cfg: RunConfig = load_json(&args.config)?;
    let base = config_dir(&args.config);
    SurfaceConfig::anchor(&mut cfg.initial, &base);
    let c = cfg.coefficients.resolve()?;
    let surface = cfg.surface();
    let f0 = surface.build(&base)?;
    cfg.evolution.validate()?;
    let mut run = RunRecord::start("evolve", &cfg)?
        .coefficients(c)
        .grid(f0.grid())
        .seed(surface.seed());
    let mut trace = CsvWriter::create(&args.out, &TRACE_HEADER)?;
    let every = cfg.snapshot_every;
    let mut last_snapshot = None;
    let mut failure: Option<CliError> = None;
    let result = evolve_observed(&f0, &cfg.evolution, &c, |s, rec| {
        let mut write = || -> CliResult<()> {
            let e = energy_cells(&rec.energy);
            trace.row(&[rec.time, e[0], e[1], e[2], e[3], e[4], rec.mass, rec.max_slope, rec.dt])?;
            if let Some(dir) = &args.snapshots {
                if rec.step == 0 || (every > 0 && rec.step % every == 0) {
                    snapshot_pair(dir, rec.step, &s.field(), &mut run)?;
                    last_snapshot = Some(rec.step);
                }
            }
            Ok(())
        };
        write().map_err(|e| {
            failure = Some(e);
            stepflow::Error::InvalidConfig("output failed".into())
        })
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (last, record) = result?;
    trace.finish()?;
    run.add(&args.out);
    if let Some(dir) = &args.snapshots {
        if last_snapshot != Some(record.steps) {
            snapshot_pair(dir, record.steps, &last, &mut run)?;
        }
    }
    run.finish()?;
    let first = record.records.first().expect("initial record");
    let end = record.records.last().expect("final record");
    print_json(&EvolveSummary {
        steps: record.steps,
        halvings: record.halvings,
        time: end.time,
        energy_start: first.energy,
        energy_end: end.energy,
    })
}

/// `convexity-audit --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub coefficients: CoefficientSource,
    pub samples: usize,
}

/// Half-width of the density surface written next to the audit.
pub const DENSITY_EXTENT: f64 = 0.2;
const DENSITY_POINTS: usize = 101;

pub fn convexity_audit_cmd(args: &AuditArgs) -> CliResult<()> {
    let cfg = match &args.config {
        Some(path) => load_json::<AuditConfig>(path)?,
        None => AuditConfig {
            coefficients: CoefficientSource::from_flags(&args.coefficients.preset, args.coefficients.a)?,
            samples: args.samples,
        },
    };
    if cfg.samples < 4 {
        return Err(CliError::Config(format!("samples must be at least 4 (got {})", cfg.samples)));
    }
    let c = cfg.coefficients.resolve()?;
    let spec = AuditSpec::default_for(&c).with_samples(cfg.samples);
    let report = convexity_audit(&c, &spec);
    let mut run = RunRecord::start("convexity-audit", &cfg)?.coefficients(c);

    let json = args.out.join("audit.json");
    write_json(&json, &report)?;
    run.add(&json);

    let csv = args.out.join("audit.csv");
    let mut w = CsvWriter::create(&csv, &["r", "phi", "eigmin_psi", "eigmin_psi0"])?;
    for row in audit_rows(&c, &spec) {
        w.row(&[row.r, row.phi, row.eigmin_psi, row.eigmin_psi0])?;
    }
    w.finish()?;
    run.add(&csv);

    let surface = args.out.join("density.csv");
    let mut w = CsvWriter::create(&surface, &["p1", "p2", "psi0", "psi"])?;
    let step = 2.0 * DENSITY_EXTENT / (DENSITY_POINTS - 1) as f64;
    for i in 0..DENSITY_POINTS {
        for j in 0..DENSITY_POINTS {
            let p = [-DENSITY_EXTENT + i as f64 * step, -DENSITY_EXTENT + j as f64 * step];
            w.row(&[p[0], p[1], psi0(p, &c), psi(p, &c)])?;
        }
    }
    w.finish()?;
    run.add(&surface);
    run.finish()?;
    print_json(&report)
}

pub fn scaling_sweep(args: &ScalingArgs) -> CliResult<()> {
    let cfg = match &args.config {
        Some(path) => load_json::<ScalingConfig>(path)?,
        None => {
            if args.points < 3 {
                return Err(CliError::Config(format!("--points must be at least 3 (got {})", args.points)));
            }
            ScalingConfig {
                coefficients: CoefficientSource::Preset(args.preset.clone()),
                modes: args.modes,
                slope: args.slope,
                length: args.length,
                a_values: log_space(args.a_max, args.a_min, args.points),
            }
        }
    };
    let c = cfg.coefficients.resolve()?;
    let report = upper_bound_scaling_scan(&c, cfg.modes, cfg.slope, cfg.length, &cfg.a_values)?;
    let mut run = RunRecord::start("scaling-sweep", &cfg)?.coefficients(c);

    let csv = args.out.join("scaling.csv");
    let mut w = CsvWriter::create(
        &csv,
        &["a", "energy", "amplitude", "amplitude_balance", "energy_original", "lower_bound"],
    )?;
    for r in &report.rows {
        w.row(&[r.a, r.energy, r.amplitude, r.amplitude_balance, r.energy_original, r.lower_bound])?;
    }
    w.finish()?;
    run.add(&csv);

    let summary = ScalingSummary {
        slope: report.slope,
        prefactor: report.prefactor,
        reference_prefactor: report.reference_prefactor,
        regularization_gap: report.regularization_gap,
        fit_a_max: 100.0 * cfg.a_values.last().copied().unwrap_or(0.0),
        points: report.rows.len(),
    };
    let json = args.out.join("scaling.json");
    write_json(&json, &summary)?;
    run.add(&json);
    run.finish()?;
    print_json(&summary)
}

#[derive(Debug, Serialize)]
struct ScalingSummary {
    /// Fitted slope of `log(−E)` against `log a`.
    slope: f64,
    /// `−E a²` at the smallest `a`.
    prefactor: f64,
    reference_prefactor: f64,
    regularization_gap: f64,
    /// The fit uses `a ≤ fit_a_max`.
    fit_a_max: f64,
    points: usize,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    parameter: String,
    csv: String,
    points: usize,
    crossings: Vec<Crossing>,
    rejected: Vec<RejectedPoint>,
    bunching_favored_at_small_end: Option<bool>,
}

fn transition_sweeps(args: &TransitionArgs) -> CliResult<Vec<TransitionSweep>> {
    if args.points < 2 {
        return Err(CliError::Config(format!("--points must be at least 2 (got {})", args.points)));
    }
    if args.vary == Vary::Both && args.from.is_some() {
        return Err(CliError::Config("--from/--to need a single --vary lt|eps0".into()));
    }
    let range = |lo: f64, hi: f64| -> CliResult<Vec<f64>> {
        let (lo, hi) = (args.from.unwrap_or(lo), args.to.unwrap_or(hi));
        if !(lo > 0.0 && hi > lo) {
            return Err(CliError::Config(format!("sweep range must satisfy 0 < from < to (got {lo}, {hi})")));
        }
        Ok(log_space(lo, hi, args.points))
    };
    let mut sweeps = Vec::new();
    if matches!(args.vary, Vary::Lt | Vary::Both) {
        sweeps.push(TransitionSweep::StepSpacing {
            n_steps: args.n_steps.unwrap_or(15),
            eps0: args.eps0.unwrap_or(0.012),
            lt_over_a: range(2.0, 400.0)?,
        });
    }
    if matches!(args.vary, Vary::Eps0 | Vary::Both) {
        sweeps.push(TransitionSweep::Misfit {
            n_steps: args.n_steps.unwrap_or(10),
            lt_over_a: args.lt_over_a.unwrap_or(80.0),
            eps0: range(1e-3, 0.03)?,
        });
    }
    Ok(sweeps)
}

pub const TRANSITION_HEADER: [&str; 17] = [
    "parameter",
    "n_steps",
    "eps0",
    "lt",
    "length",
    "height",
    "slope",
    "omega",
    "amplitude",
    "rho",
    "e_meander",
    "e_bunch",
    "difference",
    "ratio",
    "bunch_fits",
    "bunching_favored",
    "parameter_name",
];

fn write_transition_csv(path: &Path, report: &TransitionReport) -> CliResult<()> {
    let mut w = CsvWriter::create(path, &TRANSITION_HEADER)?;
    for r in &report.rows {
        let mut cells: Vec<String> = [r.parameter].iter().map(|&x| fmt(x)).collect();
        cells.push(r.n_steps.to_string());
        cells.extend(
            [
                r.eps0,
                r.lt,
                r.length,
                r.height,
                r.slope,
                r.omega,
                r.amplitude,
                r.rho,
                r.e_meander,
                r.e_bunch,
                r.difference(),
                r.e_meander / r.e_bunch,
            ]
            .iter()
            .map(|&x| fmt(x)),
        );
        cells.push(u8::from(r.bunch_fits).to_string());
        cells.push(u8::from(r.bunching_favored()).to_string());
        cells.push(report.parameter.clone());
        w.row_text(&cells)?;
    }
    w.finish()
}

pub fn transition(args: &TransitionArgs) -> CliResult<()> {
    let cfg = match &args.config {
        Some(path) => load_json::<TransitionConfig>(path)?,
        None => TransitionConfig {
            material: material_preset(&args.preset)?,
            sweeps: transition_sweeps(args)?,
        },
    };
    if cfg.sweeps.is_empty() {
        return Err(CliError::Config("`sweeps` must not be empty".into()));
    }
    let c = Coefficients::from_physical(&cfg.material)?;
    let mut run = RunRecord::start("transition-scan", &cfg)?.coefficients(c);
    let mut summaries = Vec::new();
    for sweep in &cfg.sweeps {
        let report = transition_scan(sweep, &cfg.material)?;
        let name = format!("transition_{}.csv", report.parameter);
        let path = args.out.join(&name);
        write_transition_csv(&path, &report)?;
        run.add(&path);
        summaries.push(SweepSummary {
            parameter: report.parameter.clone(),
            csv: name,
            points: report.rows.len(),
            bunching_favored_at_small_end: report.bunching_favored_at_small_end(),
            crossings: report.crossings,
            rejected: report.rejected,
        });
    }
    let json = args.out.join("transition.json");
    write_json(&json, &summaries)?;
    run.add(&json);
    run.finish()?;
    print_json(&summaries)
}

/// Side of the example cells, `12π`.
pub const EXAMPLE_LENGTH: f64 = 12.0 * PI;

pub fn example_profile(kind: ProfileKind, n: usize) -> CliResult<ScalarField> {
    let grid = Grid::new(n, EXAMPLE_LENGTH)?;
    let f = match kind {
        ProfileKind::Meander => MeanderProfile::new(6.0 * PI, 6, 1.0, EXAMPLE_LENGTH)?.realize(grid)?,
        ProfileKind::Bunch => BunchProfile::new(EXAMPLE_LENGTH, 4.0, EXAMPLE_LENGTH)?.realize(grid)?,
    };
    Ok(f)
}

#[derive(Debug, Serialize)]
struct ProfileConfig {
    kind: String,
    n: usize,
}

pub fn profile(args: &ProfileArgs) -> CliResult<()> {
    let f = example_profile(args.kind, args.n)?;
    let kind = match args.kind {
        ProfileKind::Meander => "meander",
        ProfileKind::Bunch => "bunch",
    };
    let mut run = RunRecord::start("profile", &ProfileConfig { kind: kind.into(), n: args.n })?.grid(f.grid());
    let mut w = CsvWriter::create(&args.out, &["x1", "x2", "h"])?;
    for idx in 0..f.grid().len() {
        let (x1, x2) = f.grid().point(idx);
        w.row(&[x1, x2, f.height(idx)])?;
    }
    w.finish()?;
    run.add(&args.out);
    run.finish()?;
    Ok(())
}
