//! Variational p-capacity of cell sets and the uniform thickness certificate.
//!
//! Every cell set of a finite grid is compact, so only the compact-set capacity
//! `cap_p(K, B) = inf { ∑ |∇φ|^p hⁿ : φ = 1 on K, φ = 0 off B }` is needed. Nodes of
//! `K` cells are fixed to 1, nodes touching a cell outside `B` are fixed to 0, and the
//! remaining nodes are eliminated by minimization.

use serde::Serialize;

use crate::domain::DiscreteDomain;
use crate::error::{Error, Result};
use crate::field::{gradient, norm, GridFunction};
use crate::grid::{CellSet, Grid, DIM};
use crate::operator::OperatorSpec;
use crate::solver::{Variational, DEFAULT_TOL};

/// Capacity of `k` relative to `b`, both on the same grid.
pub fn p_capacity(k: &CellSet, b: &CellSet, p: f64) -> Result<f64> {
    if k.grid != b.grid {
        return Err(Error::ShapeMismatch("K and B live on different grids".into()));
    }
    if !k.is_subset(b) {
        return Err(Error::InvalidNesting);
    }
    let op = OperatorSpec::canonical(p)?;
    if k.is_empty() {
        return Ok(0.0);
    }
    let g = k.grid;
    let in_b = b.to_mask();
    let mut phi = vec![0.0; g.num_nodes()];
    for &c in k.members() {
        for n in g.cell_nodes(c) {
            phi[n] = 1.0;
        }
    }
    let mut free = Vec::new();
    for n in 0..g.num_nodes() {
        let inside = g.node_cells(n).iter().all(|c| c.is_some_and(|c| in_b[c]));
        if !inside {
            if phi[n] == 1.0 {
                // K reaches the edge of B: no admissible function exists.
                return Err(Error::InvalidNesting);
            }
        } else if phi[n] == 0.0 {
            free.push(n);
        }
    }
    let problem = Variational { op: &op, grid: g, cells: b.members().to_vec(), rhs: Vec::new(), free };
    let (values, _) = problem.minimize(phi, DEFAULT_TOL)?;
    let grad = gradient(&GridFunction { grid: g, values });
    Ok(b.members().iter().map(|&c| norm(grad.values[c]).powf(p)).sum::<f64>() * g.cell_volume())
}

/// Closed ball `B̄_r(x)` and open ball `B_{2r}(x)` as cell sets of `grid`.
pub fn condenser_balls(grid: &Grid, x: [f64; 2], r: f64) -> (CellSet, CellSet) {
    let closed = grid.ball(x, r);
    let open = grid.ball(x, 2.0 * r);
    let members = open
        .members()
        .iter()
        .copied()
        .filter(|&c| {
            let y = grid.cell_center(c);
            (y[0] - x[0]).hypot(y[1] - x[1]) < 2.0 * r
        })
        .collect();
    (closed, CellSet::new(*grid, members))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThicknessParams {
    /// Required lower bound on every capacity ratio, in `(0, 1]`.
    pub c0: f64,
    /// Largest radius scanned.
    pub r0: f64,
    /// Upper bound on the number of sampled exterior points.
    pub max_points: usize,
}

impl Default for ThicknessParams {
    fn default() -> Self {
        ThicknessParams { c0: 0.05, r0: 0.25, max_points: 200 }
    }
}

impl ThicknessParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0 <= 1.0 && self.r0 > 0.0 && self.max_points > 0) {
            return Err(Error::InvalidParams(format!("invalid thickness parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThicknessRow {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub cap_complement: f64,
    pub cap_ball: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThicknessReport {
    pub p: f64,
    pub params: ThicknessParams,
    pub rows: Vec<ThicknessRow>,
    /// Radii of the dyadic scale below the `4h` resolution floor.
    pub skipped_radii: Vec<f64>,
    /// Set when the scan was not run, with the reason.
    pub notice: Option<String>,
    /// Smallest ratio over all rows (`None` when no row was computed).
    pub min_ratio: Option<f64>,
    pub passed: bool,
}

/// Dyadic radii `r0·2^{-k}` at or above `4h`, ascending, and those in `[h, 4h)`.
pub fn dyadic_radii(r0: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
    let mut keep = Vec::new();
    let mut skip = Vec::new();
    let mut r = r0;
    while r >= h * (1.0 - 1e-12) {
        if r >= 4.0 * h * (1.0 - 1e-12) {
            keep.push(r);
        } else {
            skip.push(r);
        }
        r *= 0.5;
    }
    keep.reverse();
    skip.reverse();
    (keep, skip)
}

/// Cells outside Ω sharing an edge or corner with Ω, as `(i, j)` on the domain grid
/// (possibly negative or past the last column), at most `max_points` of them.
pub fn exterior_samples(dom: &DiscreteDomain, max_points: usize) -> Vec<(i64, i64)> {
    let g = dom.grid;
    let inside = |i: i64, j: i64| {
        i >= 0 && j >= 0 && (i as usize) < g.nx && (j as usize) < g.ny && dom.is_interior(g.cell_index(i as usize, j as usize))
    };
    let mut all = Vec::new();
    for j in -1..=g.ny as i64 {
        for i in -1..=g.nx as i64 {
            if inside(i, j) {
                continue;
            }
            let touches = (-1..=1).any(|dj| (-1..=1).any(|di| inside(i + di, j + dj)));
            if touches {
                all.push((i, j));
            }
        }
    }
    if all.len() <= max_points {
        return all;
    }
    (0..max_points).map(|t| all[t * all.len() / max_points]).collect()
}

/// Scan the capacity density of `ℝⁿ∖Ω` at sampled exterior points and dyadic radii.
pub fn thickness_certificate(dom: &DiscreteDomain, p: f64, params: &ThicknessParams) -> Result<ThicknessReport> {
    params.validate()?;
    OperatorSpec::canonical(p)?;
    let h = dom.h();
    let (radii, skipped) = dyadic_radii(params.r0, h);
    let mut report = ThicknessReport {
        p,
        params: *params,
        rows: Vec::new(),
        skipped_radii: skipped,
        notice: None,
        min_ratio: None,
        passed: true,
    };
    if p > DIM as f64 {
        report.notice =
            Some(format!("p = {p} exceeds the dimension {DIM}: every nonempty set is thick, scan skipped"));
        return Ok(report);
    }
    let points = exterior_samples(dom, params.max_points);
    let g = dom.grid;
    let interior = |i: i64, j: i64| {
        i >= 0 && j >= 0 && (i as usize) < g.nx && (j as usize) < g.ny && dom.is_interior(g.cell_index(i as usize, j as usize))
    };
    for &r in &radii {
        let half = (2.0 * r / h).ceil() as usize + 2;
        let side = 2 * half + 1;
        // Local grid centered on a cell center, aligned with the domain grid.
        let local = Grid::new(side, side, h, [-(half as f64 + 0.5) * h, -(half as f64 + 0.5) * h]);
        let (ball, outer) = condenser_balls(&local, [0.0, 0.0], r);
        let cap_ball = p_capacity(&ball, &outer, p)?;
        for &(pi, pj) in &points {
            let k: Vec<usize> = ball
                .members()
                .iter()
                .copied()
                .filter(|&c| {
                    let (li, lj) = local.cell_ij(c);
                    !interior(pi + li as i64 - half as i64, pj + lj as i64 - half as i64)
                })
                .collect();
            let cap_c = p_capacity(&CellSet::new(local, k), &outer, p).map_err(|e| match e {
                Error::NonConvergence { iterations, residual } => {
                    log::error!("capacity solve failed at cell ({pi}, {pj}), r = {r}");
                    Error::NonConvergence { iterations, residual }
                }
                other => other,
            })?;
            let ratio = cap_c / cap_ball;
            let pass = ratio >= params.c0;
            let x = g.origin[0] + (pi as f64 + 0.5) * h;
            let y = g.origin[1] + (pj as f64 + 0.5) * h;
            report.passed &= pass;
            report.min_ratio = Some(report.min_ratio.map_or(ratio, |m: f64| m.min(ratio)));
            report.rows.push(ThicknessRow { x, y, r, cap_complement: cap_c, cap_ball, ratio, pass });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, ShapeSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_set_has_zero_capacity() {
        let g = Grid::new(8, 8, 0.125, [0.0, 0.0]);
        let b = CellSet::from_mask(g, &[true; 64]);
        assert_eq!(p_capacity(&CellSet::empty(g), &b, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn nesting_is_checked() {
        let g = Grid::new(8, 8, 0.125, [0.0, 0.0]);
        let b = CellSet::new(g, vec![9, 10, 11]);
        let k = CellSet::new(g, vec![12]);
        assert!(matches!(p_capacity(&k, &b, 2.0), Err(Error::InvalidNesting)));
    }

    #[test]
    fn annulus_capacity_near_radial_value() {
        // h = r/16: coarse, but already within 10% of 2π/ln 2.
        let h = 1.0 / 16.0;
        let g = Grid::new(66, 66, h, [-33.0 * h, -33.0 * h]);
        let (k, b) = condenser_balls(&g, [0.0, 0.0], 1.0);
        let cap = p_capacity(&k, &b, 2.0).unwrap();
        let exact = 2.0 * std::f64::consts::PI / 2f64.ln();
        assert!((cap - exact).abs() < 0.1 * exact, "{cap}");
    }

    #[test]
    fn capacity_grows_with_the_compact_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = Grid::new(14, 14, 1.0 / 14.0, [0.0, 0.0]);
        let (_, b) = condenser_balls(&g, [0.5, 0.5], 0.24);
        for p in [1.5, 2.0, 3.0] {
            let inner: Vec<usize> = g.ball([0.5, 0.5], 0.3).members().to_vec();
            let k2: Vec<usize> = inner.iter().copied().filter(|_| rng.random::<f64>() < 0.6).collect();
            let k1: Vec<usize> = k2.iter().copied().filter(|_| rng.random::<f64>() < 0.5).collect();
            let c1 = p_capacity(&CellSet::new(g, k1), &b, p).unwrap();
            let c2 = p_capacity(&CellSet::new(g, k2), &b, p).unwrap();
            assert!(c1 <= c2 * (1.0 + 1e-9), "p = {p}: {c1} > {c2}");
        }
    }

    #[test]
    fn dyadic_scale_respects_resolution_floor() {
        let (keep, skip) = dyadic_radii(0.25, 1.0 / 64.0);
        assert_eq!(keep, vec![1.0 / 16.0, 0.125, 0.25]);
        assert_eq!(skip, vec![1.0 / 64.0, 1.0 / 32.0]);
    }

    #[test]
    fn square_certificate_is_translation_invariant() {
        let dom = build_domain(&ShapeSpec::Square { l: 1.0 }, 1.0 / 16.0).unwrap();
        let params = ThicknessParams { c0: 0.05, r0: 0.25, max_points: 12 };
        let a = thickness_certificate(&dom, 2.0, &params).unwrap();
        let b = thickness_certificate(&dom.translated(3, -2), 2.0, &params).unwrap();
        assert!(a.passed);
        let ra: Vec<f64> = a.rows.iter().map(|r| r.ratio).collect();
        let rb: Vec<f64> = b.rows.iter().map(|r| r.ratio).collect();
        assert_eq!(ra, rb);
        let strict = ThicknessParams { c0: 1.0, ..params };
        assert!(!thickness_certificate(&dom, 2.0, &strict).unwrap().passed);
        let skipped = thickness_certificate(&dom, 3.0, &params).unwrap();
        assert!(skipped.notice.is_some() && skipped.rows.is_empty());
    }
}
