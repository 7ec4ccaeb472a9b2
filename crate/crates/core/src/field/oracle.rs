//! Brute-force image sum for the nonlocal kernel, used to check the multiplier.
//!
//! The periodic field is extended to the plane and
//! `∫ (x−y)/|x−y|³ · ∇h(y) dy` is summed over grid points `y` in a square of
//! `truncation_radius` periods around `x`, excluding the cell at `y = x`.
//! The linear Taylor term of `∇h` about `x` is integrated exactly over the
//! square and its lattice sum is subtracted, which removes the `O(dx)` bias of
//! the excluded cell.

use std::f64::consts::SQRT_2;

use super::{gradient, ScalarField};

/// Oracle value of the bare kernel integral at grid point `point`.
pub fn nonlocal_quadrature_oracle(f: &ScalarField, point: (usize, usize), truncation_radius: usize) -> f64 {
    let g = *f.grid();
    let n = g.n();
    let dx = g.spacing();
    let grad = gradient(f);
    let half = (truncation_radius * n + n / 2) as i64;
    let (p1, p2) = (point.0 as i64, point.1 as i64);
    let wrap = |i: i64| i.rem_euclid(n as i64) as usize;

    let mut sum = 0.0;
    let mut inv_dist = 0.0;
    for j1 in -half..=half {
        let row = wrap(p1 + j1) * n;
        for j2 in -half..=half {
            if j1 == 0 && j2 == 0 {
                continue;
            }
            let idx = row + wrap(p2 + j2);
            let r2 = (j1 * j1 + j2 * j2) as f64;
            let r = r2.sqrt();
            let dot = j1 as f64 * grad.x[idx] + j2 as f64 * grad.y[idx];
            sum -= dot / (r2 * r);
            inv_dist += 1.0 / r;
        }
    }

    let v = f.values();
    let at = |a: i64, b: i64| v[wrap(a) * n + wrap(b)];
    let lap = (at(p1 + 1, p2) + at(p1 - 1, p2) + at(p1, p2 + 1) + at(p1, p2 - 1) - 4.0 * at(p1, p2)) / (dx * dx);
    let side = (2 * half + 1) as f64 * dx;
    let square_integral = 4.0 * side * (1.0 + SQRT_2).ln();
    sum - 0.5 * lap * (square_integral - dx * inv_dist)
}
