//! Fast invariant suite behind `stepflow selfcheck`.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use stepflow::energy::{build_u_from_h, chemical_potential, total_energy, total_energy_u};
use stepflow::evolution::{evolve, EvolutionConfig};
use stepflow::experiments::{
    bunch_nonlocal_oracle, lower_bound_constant, meander_energy, transition_scan, BunchProfile, MeanderProfile,
    TransitionSweep, DEFAULT_PANELS,
};
use stepflow::field::{h_half_seminorm_sq, inner_product};
use stepflow::local_energy::{convexity_audit, psi, AuditSpec, Density};
use stepflow::{random_smooth_field, Coefficients, Grid, PhysicalParams, ScalarField};

use crate::output::{parse_snapshot, snapshot_bytes};

type Check = (bool, String);
type Named = (&'static str, fn() -> Check);

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn coefficients() -> Check {
    match Coefficients::from_physical(&PhysicalParams::zhu2009()) {
        Ok(c) => (
            rel(c.c1, 7.2575e6) < 1e-3 && rel(c.gamma0, 9.7109e-8) < 5e-3,
            format!("c1 = {:.5e}, gamma0 = {:.5e}", c.c1, c.gamma0),
        ),
        Err(e) => (false, e.to_string()),
    }
}

fn seminorm() -> Check {
    let (l, a, b) = (1.0, 0.4, 1.2);
    let w = 2.0 * PI * 2.0 / l;
    let f = ScalarField::from_fn(Grid::new(64, l).unwrap(), [b, 0.0], |_, y| a * b * (w * y).sin());
    let exact = a * a * b * b * w * l / (4.0 * PI);
    let err = rel(h_half_seminorm_sq(&f), exact);
    (err < 1e-10, format!("rel err {err:.1e}"))
}

fn convexity() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, c) in [
        ("zhu2009", Coefficients::from_physical(&PhysicalParams::zhu2009()).unwrap()),
        ("unit", Coefficients::unit(1.0).unwrap()),
    ] {
        let r = convexity_audit(&c, &AuditSpec::default_for(&c));
        ok &= r.psi_convex && r.psi_strictly_convex && r.psi0_axis_witness.is_some();
        parts.push(format!("{name}: {} samples, Psi0 witness {}", r.samples, r.psi0_axis_witness.is_some()));
    }
    (ok, parts.join("; "))
}

fn variational() -> Check {
    let c = Coefficients::unit(0.05).unwrap();
    let g = Grid::new(32, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..3u64 {
        let f = random_smooth_field(g, [0.6, -0.3], seed, 6, 0.05);
        let v = random_smooth_field(g, [0.0, 0.0], 500 + seed, 6, 0.05);
        let eps = 1e-4;
        let ep = total_energy(&f.axpy(eps, &v).unwrap(), &c).total;
        let em = total_energy(&f.axpy(-eps, &v).unwrap(), &c).total;
        let fd = (ep - em) / (2.0 * eps);
        worst = worst.max(rel(fd, inner_product(&chemical_potential(&f, &c), &v)));
    }
    (worst < 1e-6, format!("max rel err {worst:.1e}"))
}

fn u_formulation() -> Check {
    let c = Coefficients::unit(0.1).unwrap();
    let f = random_smooth_field(Grid::new(32, 1.0).unwrap(), [0.4, 0.9], 11, 5, 0.1);
    let err = rel(total_energy_u(&build_u_from_h(&f), f.slope(), &c).total, total_energy(&f, &c).total);
    (err < 1e-8, format!("F[u] vs E[h] rel err {err:.1e}"))
}

fn dissipation() -> Check {
    let c = Coefficients::unit(0.1).unwrap();
    let f = random_smooth_field(Grid::new(32, 1.0).unwrap(), [1.0, 0.5], 3, 6, 0.05);
    let cfg = EvolutionConfig {
        max_steps: Some(100),
        ..EvolutionConfig::new(1e-4, 1e9)
    };
    match evolve(&f, &cfg, &c) {
        Ok((_, t)) => {
            let up = t
                .records
                .windows(2)
                .filter(|w| w[1].energy.total > w[0].energy.total + 1e-12 * w[0].energy.total.abs())
                .count();
            let drift = t.records.iter().map(|r| r.mass.abs()).fold(0.0, f64::max);
            (
                up == 0 && drift <= 1e-10 * f.max_abs(),
                format!("{} steps, {up} increases, max |mass| {drift:.1e}", t.steps),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

fn family_consistency() -> Check {
    let c = Coefficients::unit(0.01).unwrap();
    let (b, l) = (0.7, 2.0);
    let flat = MeanderProfile::new(0.0, 1, b, l).unwrap();
    let e = meander_energy(&flat, &c, DEFAULT_PANELS, Density::Regularized).unwrap().total;
    let err = rel(e, l * l * psi([b, 0.0], &c));
    (err < 1e-12, format!("flat member vs L^2 Psi((B,0)) rel err {err:.1e}"))
}

fn bunch_oracle() -> Check {
    let c = Coefficients::unit(1.0).unwrap();
    let l = 1.0;
    let p = BunchProfile::new(1e-3, 1.0, l).unwrap();
    let expansion = c.c1 * l * p.height * p.height * ((PI * p.height / (l * p.rho)).ln() - 1.5);
    match bunch_nonlocal_oracle(&p, &c, 40) {
        Ok(v) => {
            let err = rel(v, expansion);
            (err < 1e-5, format!("oracle vs small-width expansion rel err {err:.1e}"))
        }
        Err(e) => (false, e.to_string()),
    }
}

fn lower_bound() -> Check {
    let g = Grid::new(32, 1.0).unwrap();
    let mut ok = true;
    for (i, a) in [1e-1, 1e-2].into_iter().enumerate() {
        let c = Coefficients::unit(a).unwrap();
        let lb = lower_bound_constant(&c, 1.0, 1.0).full;
        for seed in 0..3u64 {
            let f = random_smooth_field(g, [1.0, 0.0], 70 + 10 * i as u64 + seed, 5, 0.3 * (seed + 1) as f64);
            ok &= lb <= total_energy(&f, &c).total;
        }
    }
    (ok, "lower bound below 6 random surfaces".into())
}

fn transition() -> Check {
    let m = PhysicalParams::zhu2009();
    let mut ok = true;
    let mut parts = Vec::new();
    for sweep in [TransitionSweep::default_step_spacing(), TransitionSweep::default_misfit()] {
        match transition_scan(&sweep, &m) {
            Ok(r) => {
                ok &= r.crossings.len() == 1 && r.bunching_favored_at_small_end() == Some(true);
                parts.push(format!("{}: {}", r.parameter, r.crossing_summary()));
            }
            Err(e) => {
                ok = false;
                parts.push(e.to_string());
            }
        }
    }
    (ok, parts.join("; "))
}

fn snapshot_format() -> Check {
    let f = random_smooth_field(Grid::new(16, 3.0).unwrap(), [0.5, 0.25], 5, 4, 0.1);
    let ok = parse_snapshot(&snapshot_bytes(&f), Path::new("selfcheck")).map(|b| b == f).unwrap_or(false);
    (ok, "binary snapshot round trip".into())
}

/// Runs every check and prints one line each; returns the number of failures.
pub fn run() -> usize {
    let checks: [Named; 11] = [
        ("coefficients", coefficients),
        ("seminorm", seminorm),
        ("convexity", convexity),
        ("variational", variational),
        ("u-formulation", u_formulation),
        ("dissipation", dissipation),
        ("family", family_consistency),
        ("bunch-oracle", bunch_oracle),
        ("lower-bound", lower_bound),
        ("transition", transition),
        ("snapshot", snapshot_format),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let (ok, detail) = check();
        println!(
            "{} {name} ({:.2}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!ok);
    }
    failed
}
