//! Independent reference implementations used by the integration suites.

#![allow(dead_code)]

use reglab::maximal::{MaximalQuery, Mode};
use reglab::{CellField, Grid};

/// Radii `ρ_k` and full-plane lattice counts of every squared distance `m = a² + b²`
/// up to the grid's squared diameter, in increasing order.
pub fn oracle_radii(grid: &Grid) -> Vec<(u64, f64, f64)> {
    let cap = ((grid.nx - 1) * (grid.nx - 1) + (grid.ny - 1) * (grid.ny - 1)) as u64;
    let mut ms: Vec<u64> = Vec::new();
    let side = (cap as f64).sqrt() as u64 + 1;
    for a in 0..=side {
        for b in 0..=side {
            let m = a * a + b * b;
            if m <= cap {
                ms.push(m);
            }
        }
    }
    ms.sort_unstable();
    ms.dedup();
    let s = side as i64;
    ms.into_iter()
        .map(|m| {
            let mut count = 0u64;
            for a in -s..=s {
                for b in -s..=s {
                    if ((a * a + b * b) as u64) <= m {
                        count += 1;
                    }
                }
            }
            let rho = if m == 0 { 0.5 * grid.h } else { grid.h * (m as f64).sqrt() };
            (m, rho, count as f64)
        })
        .collect()
}

/// Exhaustive maximal functions of `|f|`: for every cell, every admissible radius is
/// visited and the ball sum is accumulated in `(distance², cell index)` order.
pub fn oracle_maximal(f: &CellField, queries: &[MaximalQuery]) -> Vec<Vec<f64>> {
    let g = f.grid;
    let radii = oracle_radii(&g);
    let n = g.num_cells();
    let mut out = vec![vec![0.0; n]; queries.len()];
    let mut order: Vec<(u64, usize)> = Vec::with_capacity(n);
    for x in 0..n {
        let (xi, xj) = (x % g.nx, x / g.nx);
        order.clear();
        for c in 0..n {
            let (ci, cj) = (c % g.nx, c / g.nx);
            let (di, dj) = (ci as i64 - xi as i64, cj as i64 - xj as i64);
            order.push(((di * di + dj * dj) as u64, c));
        }
        order.sort_unstable();
        let mut pos = 0;
        let mut sum = 0.0f64;
        for &(m, rho, count) in &radii {
            while pos < order.len() && order[pos].0 <= m {
                sum += f.values[order[pos].1].abs();
                pos += 1;
            }
            for (q, query) in queries.iter().enumerate() {
                let admissible = match query.mode {
                    Mode::Full => true,
                    Mode::Cutoff(r) => rho < r,
                    Mode::Tail(r) => rho >= r,
                };
                if admissible {
                    let v = sum * (rho.powf(query.alpha) / count);
                    if v > out[q][x] {
                        out[q][x] = v;
                    }
                }
            }
        }
    }
    out
}

/// `cap_p(B̄_r, B_R)` in the plane for the radial minimizer.
pub fn radial_capacity(p: f64, r: f64, big_r: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    if p == 2.0 {
        two_pi / (big_r / r).ln()
    } else {
        let e = (p - 2.0) / (p - 1.0);
        two_pi * ((big_r.powf(e) - r.powf(e)) / e).abs().powf(1.0 - p)
    }
}
