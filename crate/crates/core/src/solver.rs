//! Damped Newton minimization of the discrete energy
//! `E(u) = ∑_cells [a(x)|∇u|^p/p − |F|^{p-2}F·∇u] hⁿ`
//! over node functions with prescribed values off a set of free nodes.
//!
//! The discrete gradient on a cell uses its lower-left, lower-right and
//! upper-left nodes, so the Euler-Lagrange equations at free nodes are exactly
//! the discrete weak form `∑ (A(x,∇u) − |F|^{p-2}F)·∇φ hⁿ = 0`.

use serde::Serialize;

use crate::domain::DiscreteDomain;
use crate::error::{Error, Result};
use crate::field::{gradient, norm, GridFunction, VectorField};
use crate::grid::{CellSet, Grid, DIM};
use crate::linalg::SkylineMatrix;
use crate::operator::{data_flux, OperatorSpec};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const MAX_NEWTON_STEPS: usize = 500;

/// Regularization levels for the Newton matrix, relative to the gradient scale of the data.
const DELTA_SCHEDULE: [f64; 3] = [1e-2, 1e-5, 1e-8];
/// Relative residual at which the schedule advances to the next level.
const STAGE_EXIT: [f64; 2] = [1e-3, 1e-6];
const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
/// A step reducing the residual by less than this factor counts as stalled.
const STALL_FACTOR: f64 = 0.9;

#[derive(Clone, Copy)]
enum Curvature {
    /// Regularized Jacobian of the flux.
    Newton,
    /// Its isotropic part `a (|ξ|²+δ²)^{(p−2)/2} I`.
    Isotropic,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final sup-norm residual divided by `scale`.
    pub residual: f64,
    /// Residual normalization `max(|F|^{p-1}, |A(x,∇u₀)|)·h^{n-1}`.
    pub scale: f64,
    pub unknowns: usize,
    /// Energy after each accepted step; entry 0 is the initial guess.
    pub energy_history: Vec<f64>,
    /// Relative residual after each accepted step; entry 0 is the initial guess.
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: GridFunction,
    pub report: SolveReport,
}

/// A minimization problem over node values restricted to `free` nodes.
pub(crate) struct Variational<'a> {
    pub op: &'a OperatorSpec,
    pub grid: Grid,
    /// Cells carrying energy.
    pub cells: Vec<usize>,
    /// Data flux `|F|^{p-2}F` per entry of `cells`; empty for the homogeneous equation.
    pub rhs: Vec<[f64; 2]>,
    /// Free node indices, ascending.
    pub free: Vec<usize>,
}

struct Prepared {
    coeff: Vec<f64>,
    /// Free index of each of a cell's (ll, lr, ul) nodes, `usize::MAX` when fixed.
    local: Vec<[usize; 3]>,
    first: Vec<usize>,
}

const FIXED: usize = usize::MAX;
/// Gradients of the three nodal basis functions on a cell, in units of `1/h`.
const BASIS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

impl Variational<'_> {
    fn prepare(&self) -> Prepared {
        let g = self.grid;
        let mut index = vec![FIXED; g.num_nodes()];
        for (k, &n) in self.free.iter().enumerate() {
            index[n] = k;
        }
        let coeff = self.cells.iter().map(|&c| self.op.coefficient(g.cell_center(c))).collect();
        let mut first: Vec<usize> = (0..self.free.len()).collect();
        let local: Vec<[usize; 3]> = self
            .cells
            .iter()
            .map(|&c| {
                let [ll, lr, ul, _] = g.cell_nodes(c);
                let loc = [index[ll], index[lr], index[ul]];
                for &a in &loc {
                    for &b in &loc {
                        if a != FIXED && b != FIXED && b < a {
                            first[a] = first[a].min(b);
                        }
                    }
                }
                loc
            })
            .collect();
        Prepared { coeff, local, first }
    }

    #[inline]
    fn cell_gradient(&self, u: &[f64], c: usize) -> [f64; 2] {
        let [ll, lr, ul, _] = self.grid.cell_nodes(c);
        let inv_h = 1.0 / self.grid.h;
        [(u[lr] - u[ll]) * inv_h, (u[ul] - u[ll]) * inv_h]
    }

    #[inline]
    fn rhs_at(&self, k: usize) -> [f64; 2] {
        if self.rhs.is_empty() {
            [0.0, 0.0]
        } else {
            self.rhs[k]
        }
    }

    fn energy(&self, prep: &Prepared, u: &[f64]) -> f64 {
        let mut e = 0.0;
        for (k, &c) in self.cells.iter().enumerate() {
            let xi = self.cell_gradient(u, c);
            let b = self.rhs_at(k);
            e += self.op.energy_density_with(prep.coeff[k], xi) - (b[0] * xi[0] + b[1] * xi[1]);
        }
        e * self.grid.cell_volume()
    }

    /// Energy gradient with respect to the free node values.
    fn residual(&self, prep: &Prepared, u: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.free.len()];
        let w = self.grid.cell_volume() / self.grid.h;
        for (k, &c) in self.cells.iter().enumerate() {
            let xi = self.cell_gradient(u, c);
            let a = self.op.flux_with(prep.coeff[k], xi);
            let b = self.rhs_at(k);
            let q = [a[0] - b[0], a[1] - b[1]];
            for (slot, phi) in prep.local[k].iter().zip(BASIS) {
                if *slot != FIXED {
                    r[*slot] += (q[0] * phi[0] + q[1] * phi[1]) * w;
                }
            }
        }
        r
    }

    fn hessian(&self, prep: &Prepared, u: &[f64], delta: f64, curvature: Curvature, m: &mut SkylineMatrix) {
        m.fill_zero();
        let w = self.grid.cell_volume() / (self.grid.h * self.grid.h);
        for (k, &c) in self.cells.iter().enumerate() {
            let xi = self.cell_gradient(u, c);
            let j = match curvature {
                Curvature::Newton => self.op.jacobian_with(prep.coeff[k], xi, delta),
                Curvature::Isotropic => self.op.isotropic_jacobian_with(prep.coeff[k], xi, delta),
            };
            let loc = prep.local[k];
            for a in 0..3 {
                if loc[a] == FIXED {
                    continue;
                }
                let ja = [
                    j[0][0] * BASIS[a][0] + j[1][0] * BASIS[a][1],
                    j[0][1] * BASIS[a][0] + j[1][1] * BASIS[a][1],
                ];
                for b in 0..3 {
                    if loc[b] == FIXED || loc[b] > loc[a] {
                        continue;
                    }
                    m.add(loc[a], loc[b], (ja[0] * BASIS[b][0] + ja[1] * BASIS[b][1]) * w);
                }
            }
        }
    }

    fn scales(&self, u: &[f64], prep: &Prepared) -> (f64, f64) {
        let p = self.op.p;
        let mut flux = 0.0f64;
        let mut grad = 0.0f64;
        for (k, &c) in self.cells.iter().enumerate() {
            let xi = self.cell_gradient(u, c);
            let b = norm(self.rhs_at(k));
            flux = flux.max(b).max(norm(self.op.flux_with(prep.coeff[k], xi)));
            grad = grad.max(norm(xi)).max(b.powf(1.0 / (p - 1.0)));
        }
        let flux = flux * self.grid.h.powi(DIM as i32 - 1);
        (if flux > 0.0 { flux } else { 1.0 }, if grad > 0.0 { grad } else { 1.0 })
    }

    /// Minimize starting from `u0`, whose values at non-free nodes are kept.
    pub fn minimize(&self, u0: Vec<f64>, tol: f64) -> Result<(Vec<f64>, SolveReport)> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParams(format!("tolerance {tol} must be positive")));
        }
        let prep = self.prepare();
        let mut u = u0;
        let (scale, gscale) = self.scales(&u, &prep);
        let sup = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
        let mut r = self.residual(&prep, &u);
        let mut rel = sup(&r);
        let mut energy = self.energy(&prep, &u);
        let mut report = SolveReport {
            iterations: 0,
            residual: rel,
            scale,
            unknowns: self.free.len(),
            energy_history: vec![energy],
            residual_history: vec![rel],
        };
        if self.free.is_empty() || rel <= tol {
            return Ok((u, report));
        }
        let mut m = SkylineMatrix::with_profile(prep.first.clone());
        let mut stage = if self.op.p == 2.0 { DELTA_SCHEDULE.len() - 1 } else { 0 };
        for it in 1..=MAX_NEWTON_STEPS {
            while stage < STAGE_EXIT.len() && rel <= STAGE_EXIT[stage] {
                stage += 1;
            }
            let delta = DELTA_SCHEDULE[stage] * gscale;
            self.hessian(&prep, &u, delta, Curvature::Newton, &mut m);
            let mut next = self.line_search(&prep, &u, &r, energy, &m, &sup)?;
            // For p < 2 the Newton map oscillates around flat regions; the
            // isotropic curvature majorizes the energy there and always descends.
            let stalled = next.as_ref().is_none_or(|(_, _, r_new)| sup(r_new) > STALL_FACTOR * rel);
            if self.op.p < 2.0 && stalled {
                self.hessian(&prep, &u, f64::EPSILON * gscale, Curvature::Isotropic, &mut m);
                if let Some(better) = self.line_search(&prep, &u, &r, energy, &m, &sup)? {
                    if next.as_ref().is_none_or(|n| better.1 <= n.1) {
                        next = Some(better);
                    }
                }
            }
            let Some((u_new, e_new, r_new)) = next else {
                report.iterations = it;
                return Err(Error::NonConvergence { iterations: it, residual: rel });
            };
            u = u_new;
            energy = e_new;
            r = r_new;
            rel = sup(&r);
            report.iterations = it;
            report.residual = rel;
            report.energy_history.push(energy);
            report.residual_history.push(rel);
            if rel <= tol {
                return Ok((u, report));
            }
        }
        Err(Error::NonConvergence { iterations: MAX_NEWTON_STEPS, residual: rel })
    }

    /// Step along `-m⁻¹ r`: Armijo backtracking on the energy, or, once the energy
    /// decrease is below its rounding error, a full step that lowers the residual.
    fn line_search(
        &self,
        prep: &Prepared,
        u: &[f64],
        r: &[f64],
        energy: f64,
        m: &SkylineMatrix,
        sup: &dyn Fn(&[f64]) -> f64,
    ) -> Result<Option<(Vec<f64>, f64, Vec<f64>)>> {
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let d = m.clone().factor()?.solve(&neg);
        let slope: f64 = r.iter().zip(&d).map(|(a, b)| a * b).sum();
        let mut trial = u.to_vec();
        let noise = 1e-13 * (energy.abs() + self.abs_energy(prep, u));
        if -slope < noise {
            self.step(u, &d, 1.0, &mut trial);
            let r_new = self.residual(prep, &trial);
            if sup(&r_new) < sup(r) {
                let e = self.energy(prep, &trial);
                return Ok(Some((trial, e, r_new)));
            }
        }
        let mut t = 1.0;
        for _ in 0..MAX_HALVINGS {
            self.step(u, &d, t, &mut trial);
            let e = self.energy(prep, &trial);
            if e <= energy + ARMIJO_C * t * slope {
                let r_new = self.residual(prep, &trial);
                return Ok(Some((trial, e, r_new)));
            }
            t *= 0.5;
        }
        Ok(None)
    }

    fn abs_energy(&self, prep: &Prepared, u: &[f64]) -> f64 {
        let mut e = 0.0;
        for (k, &c) in self.cells.iter().enumerate() {
            let xi = self.cell_gradient(u, c);
            let b = self.rhs_at(k);
            e += self.op.energy_density_with(prep.coeff[k], xi) + (b[0] * xi[0]).abs() + (b[1] * xi[1]).abs();
        }
        e * self.grid.cell_volume()
    }

    fn step(&self, u: &[f64], d: &[f64], t: f64, out: &mut [f64]) {
        out.copy_from_slice(u);
        for (k, &n) in self.free.iter().enumerate() {
            out[n] += t * d[k];
        }
    }
}

fn check_grid(name: &str, a: Grid, b: Grid) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!("{name} lives on {a:?}, expected {b:?}")));
    }
    Ok(())
}

/// Data flux `|F|^{p-2}F` on the listed cells.
fn rhs_on(p: f64, f: &VectorField, cells: &[usize]) -> Vec<[f64; 2]> {
    cells.iter().map(|&c| data_flux(p, f.values[c])).collect()
}

/// Solve the Dirichlet problem on Ω with data `F` and boundary values taken from `σ`.
pub fn solve_dirichlet(
    op: &OperatorSpec,
    f: &VectorField,
    sigma: &GridFunction,
    dom: &DiscreteDomain,
    tol: f64,
) -> Result<GridFunction> {
    solve_dirichlet_report(op, f, sigma, dom, tol).map(|s| s.u)
}

/// [`solve_dirichlet`] returning the convergence history as well.
pub fn solve_dirichlet_report(
    op: &OperatorSpec,
    f: &VectorField,
    sigma: &GridFunction,
    dom: &DiscreteDomain,
    tol: f64,
) -> Result<Solution> {
    op.validate()?;
    check_grid("F", f.grid, dom.grid)?;
    check_grid("sigma", sigma.grid, dom.grid)?;
    let cells = dom.cells().members().to_vec();
    let problem = Variational {
        op,
        grid: dom.grid,
        rhs: rhs_on(op.p, f, &cells),
        cells,
        free: dom.free_nodes().to_vec(),
    };
    let (values, report) = problem.minimize(sigma.values.clone(), tol)?;
    let u = dom.mask_nodes(&GridFunction { grid: dom.grid, values });
    Ok(Solution { u, report })
}

/// Nodes all of whose four cells belong to `cells`.
fn enclosed_nodes(grid: Grid, mask: &[bool]) -> Vec<usize> {
    (0..grid.num_nodes())
        .filter(|&k| grid.node_cells(k).iter().all(|c| c.is_some_and(|c| mask[c])))
        .collect()
}

fn homogeneous_on(
    op: &OperatorSpec,
    u: &GridFunction,
    sigma: &GridFunction,
    cells: &CellSet,
) -> Result<GridFunction> {
    op.validate()?;
    check_grid("sigma", sigma.grid, u.grid)?;
    let grid = u.grid;
    let free = enclosed_nodes(grid, &cells.to_mask());
    let problem = Variational { op, grid, cells: cells.members().to_vec(), rhs: Vec::new(), free };
    let (values, _) = problem.minimize(u.sub(sigma).values, DEFAULT_TOL)?;
    Ok(GridFunction { grid, values })
}

/// Solve `div A(x,∇w) = 0` in a ball compactly inside Ω with `w = u − σ` on the
/// ball's discrete boundary. Outside the ball `w = u − σ`.
pub fn solve_comparison_interior(
    op: &OperatorSpec,
    u: &GridFunction,
    sigma: &GridFunction,
    ball: &CellSet,
    dom: &DiscreteDomain,
) -> Result<GridFunction> {
    check_grid("u", u.grid, dom.grid)?;
    check_grid("ball", ball.grid, dom.grid)?;
    let g = dom.grid;
    for &c in ball.members() {
        let (i, j) = g.cell_ij(c);
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni >= g.nx as i64 || nj >= g.ny as i64 {
                    return Err(Error::BallNotInterior);
                }
                if !dom.is_interior(g.cell_index(ni as usize, nj as usize)) {
                    return Err(Error::BallNotInterior);
                }
            }
        }
    }
    homogeneous_on(op, u, sigma, ball)
}

/// Cells of `Ω ∩ B_{10R}(x₀)`.
pub fn boundary_region(dom: &DiscreteDomain, center: [f64; 2], radius: f64) -> CellSet {
    dom.grid.ball(center, 10.0 * radius).intersection(&dom.cells())
}

/// Solve `div A(x,∇w) = 0` on `Ω_{10R} = Ω ∩ B_{10R}(x₀)` for a boundary point `x₀`,
/// with `w = u − σ` on `∂Ω_{10R}` and outside it.
pub fn solve_comparison_boundary(
    op: &OperatorSpec,
    u: &GridFunction,
    sigma: &GridFunction,
    dom: &DiscreteDomain,
    center: [f64; 2],
    radius: f64,
) -> Result<GridFunction> {
    check_grid("u", u.grid, dom.grid)?;
    if !(radius > 0.0 && radius <= dom.diam()) {
        return Err(Error::InvalidParams(format!("radius {radius} must lie in (0, diam]")));
    }
    let h = dom.h();
    let near = dom.boundary_nodes().iter().any(|&k| {
        let x = dom.grid.node_position(k);
        (x[0] - center[0]).hypot(x[1] - center[1]) <= h * (1.0 + 1e-9)
    });
    if !near {
        return Err(Error::InvalidParams("boundary ball center must lie within h of the boundary".into()));
    }
    homogeneous_on(op, u, sigma, &boundary_region(dom, center, radius))
}

/// `∑_Ω (|∇u|^p/p − |F|^{p-2}F·∇u) hⁿ` weighted by `a(x)` for the weighted form.
pub fn discrete_energy(op: &OperatorSpec, u: &GridFunction, f: &VectorField, dom: &DiscreteDomain) -> f64 {
    let grad = gradient(u);
    let mut e = 0.0;
    for &c in dom.cells().members() {
        let a = op.coefficient(dom.grid.cell_center(c));
        let xi = grad.values[c];
        let b = data_flux(op.p, f.values[c]);
        e += op.energy_density_with(a, xi) - (b[0] * xi[0] + b[1] * xi[1]);
    }
    e * dom.grid.cell_volume()
}

/// Weak residual `∑ (A(x,∇u) − |F|^{p-2}F)·∇φ_k hⁿ` at every free node of Ω.
pub fn weak_residual(op: &OperatorSpec, u: &GridFunction, f: &VectorField, dom: &DiscreteDomain) -> Vec<f64> {
    let cells = dom.cells().members().to_vec();
    let problem =
        Variational { op, grid: dom.grid, rhs: rhs_on(op.p, f, &cells), cells, free: dom.free_nodes().to_vec() };
    let prep = problem.prepare();
    problem.residual(&prep, &u.values)
}

fn sum_pow(field: &VectorField, cells: &[usize], p: f64) -> f64 {
    cells.iter().map(|&c| norm(field.values[c]).powf(p)).sum::<f64>() * field.grid.cell_volume()
}

/// `∑|∇u|^p hⁿ / ∑(|F|^p + |∇σ|^p) hⁿ` over Ω.
pub fn energy_ratio(
    u: &GridFunction,
    f: &VectorField,
    sigma: &GridFunction,
    dom: &DiscreteDomain,
    p: f64,
) -> Result<f64> {
    let cells = dom.cells();
    let m = cells.members();
    let den = sum_pow(f, m, p) + sum_pow(&gradient(sigma), m, p);
    if den == 0.0 {
        return Err(Error::DegenerateData);
    }
    Ok(sum_pow(&gradient(u), m, p) / den)
}

/// Mean of `|v|^p` over the listed cells.
pub fn mean_pow(field: &VectorField, cells: &[usize], p: f64) -> f64 {
    if cells.is_empty() {
        return 0.0;
    }
    cells.iter().map(|&c| norm(field.values[c]).powf(p)).sum::<f64>() / cells.len() as f64
}

/// `(⨍_{B_{ρ/2}} |∇w|^Θ)^{1/Θ} / (⨍_{B_ρ} |∇w|^p)^{1/p}`.
pub fn reverse_holder_ratio(w: &GridFunction, center: [f64; 2], rho: f64, theta: f64, p: f64) -> Result<f64> {
    if !(theta > p && p > 1.0) {
        return Err(Error::InvalidParams(format!("need theta > p > 1, got theta = {theta}, p = {p}")));
    }
    let grad = gradient(w);
    let inner = w.grid.ball(center, 0.5 * rho);
    let outer = w.grid.ball(center, rho);
    if inner.is_empty() {
        return Err(Error::InvalidParams(format!("radius {rho} resolves no cell")));
    }
    let den = mean_pow(&grad, outer.members(), p);
    // Gradients at rounding level count as zero.
    let scale = outer.members().iter().fold(0.0f64, |m, &c| m.max(norm(grad.values[c])));
    if den == 0.0 || scale <= 1e-13 * w.max_abs() / w.grid.h {
        return Err(Error::DegenerateData);
    }
    let num = mean_pow(&grad, inner.members(), theta);
    Ok(num.powf(1.0 / theta) / den.powf(1.0 / p))
}

/// Discrete `H¹` error against a smooth exact solution: nodal values over the closure
/// of Ω plus cellwise gradients compared with `∇u*` at cell centers.
pub fn h1_error(
    u: &GridFunction,
    exact: impl Fn([f64; 2]) -> f64,
    exact_grad: impl Fn([f64; 2]) -> [f64; 2],
    dom: &DiscreteDomain,
) -> f64 {
    let g = dom.grid;
    let vol = g.cell_volume();
    let mut l2 = 0.0;
    for k in 0..g.num_nodes() {
        if dom.in_closure(k) {
            l2 += (u.values[k] - exact(g.node_position(k))).powi(2);
        }
    }
    let grad = gradient(u);
    let mut semi = 0.0;
    for &c in dom.cells().members() {
        let e = exact_grad(g.cell_center(c));
        semi += (grad.values[c][0] - e[0]).powi(2) + (grad.values[c][1] - e[1]).powi(2);
    }
    ((l2 + semi) * vol).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, ShapeSpec};
    use std::f64::consts::PI;

    fn unit_square(h: f64) -> DiscreteDomain {
        build_domain(&ShapeSpec::Square { l: 1.0 }, h).unwrap()
    }

    #[test]
    fn zero_data_gives_zero() {
        let dom = unit_square(1.0 / 8.0);
        let op = OperatorSpec::canonical(3.0).unwrap();
        let u = solve_dirichlet(&op, &VectorField::zeros(dom.grid), &GridFunction::zeros(dom.grid), &dom, 1e-8)
            .unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn affine_data_is_reproduced_from_a_perturbed_start() {
        let dom = unit_square(1.0 / 16.0);
        for p in [1.5, 2.0, 3.0] {
            let op = OperatorSpec::canonical(p).unwrap();
            let affine = GridFunction::from_fn(dom.grid, |x| 0.3 + 2.0 * x[0] - x[1]);
            let mut start = affine.clone();
            for &k in dom.free_nodes() {
                start.values[k] += 0.1 * ((k * 7919 % 13) as f64 / 13.0 - 0.5);
            }
            let u = solve_dirichlet(&op, &VectorField::zeros(dom.grid), &start, &dom, 1e-10).unwrap();
            assert!(u.sub(&affine).max_abs() < 1e-8, "p = {p}: {}", u.sub(&affine).max_abs());
        }
    }

    #[test]
    fn energy_never_increases() {
        let dom = unit_square(1.0 / 16.0);
        for p in [1.5, 3.0] {
            let op = OperatorSpec::canonical(p).unwrap();
            let f = VectorField::from_fn(dom.grid, |x| [(3.0 * x[1]).cos(), (2.0 * x[0]).sin()]);
            let sigma = GridFunction::from_fn(dom.grid, |x| x[0] * x[1]);
            let s = solve_dirichlet_report(&op, &f, &sigma, &dom, 1e-9).unwrap();
            let hist = &s.report.energy_history;
            for w in hist.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "p = {p}: {hist:?}");
            }
            let r = weak_residual(&op, &s.u, &f, &dom);
            let sup = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(sup <= 1e-9 * s.report.scale);
        }
    }

    #[test]
    fn poisson_matches_five_point_laplacian() {
        // For p = 2 the stencil is the classical one: 4u_ij − neighbors = h²·f with div F = −f.
        let dom = unit_square(1.0 / 8.0);
        let op = OperatorSpec::canonical(2.0).unwrap();
        let sigma = GridFunction::from_fn(dom.grid, |x| (x[0] * x[0] - x[1] * x[1]) + x[0]);
        let u = solve_dirichlet(&op, &VectorField::zeros(dom.grid), &sigma, &dom, 1e-12).unwrap();
        // x² − y² is discrete harmonic for the five-point Laplacian.
        assert!(u.sub(&sigma).max_abs() < 1e-12);
    }

    #[test]
    fn manufactured_solution_converges_at_first_order() {
        let exact = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1]).sin();
        let grad = |x: [f64; 2]| {
            [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos()]
        };
        let op = OperatorSpec::canonical(2.0).unwrap();
        let errs: Vec<f64> = [8.0, 16.0]
            .iter()
            .map(|&m| {
                let dom = unit_square(1.0 / m);
                let f = VectorField::from_fn(dom.grid, grad);
                let sigma = GridFunction::from_fn(dom.grid, exact);
                let u = solve_dirichlet(&op, &f, &sigma, &dom, 1e-10).unwrap();
                h1_error(&u, exact, grad, &dom)
            })
            .collect();
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 0.8, "{errs:?}");
    }

    #[test]
    fn comparison_interior_reproduces_affine_and_zero() {
        let dom = unit_square(1.0 / 16.0);
        let op = OperatorSpec::canonical(3.0).unwrap();
        let ball = dom.grid.ball([0.5, 0.5], 0.25);
        let u = GridFunction::from_fn(dom.grid, |x| x[0] + 2.0 * x[1]);
        let sigma = GridFunction::from_fn(dom.grid, |x| 0.5 * x[0]);
        let w = solve_comparison_interior(&op, &u, &sigma, &ball, &dom).unwrap();
        assert!(w.sub(&u.sub(&sigma)).max_abs() < 1e-10);
        let w0 = solve_comparison_interior(&op, &u, &u, &ball, &dom).unwrap();
        assert_eq!(w0.max_abs(), 0.0);
        let edge = dom.grid.ball([0.05, 0.5], 0.1);
        assert!(matches!(solve_comparison_interior(&op, &u, &sigma, &edge, &dom), Err(Error::BallNotInterior)));
    }

    #[test]
    fn comparison_interior_approximates_harmonic_log() {
        // log|x − x₀| is harmonic; the five-point solution is second-order accurate.
        let x0 = [1.3, 0.4];
        let harmonic = move |x: [f64; 2]| (x[0] - x0[0]).hypot(x[1] - x0[1]).ln();
        let op = OperatorSpec::canonical(2.0).unwrap();
        let mut errs = Vec::new();
        for m in [16.0, 32.0] {
            let dom = unit_square(1.0 / m);
            let u = GridFunction::from_fn(dom.grid, harmonic);
            let zero = GridFunction::zeros(dom.grid);
            let ball = dom.grid.ball([0.5, 0.5], 0.3);
            let w = solve_comparison_interior(&op, &u, &zero, &ball, &dom).unwrap();
            errs.push(w.sub(&u).max_abs());
        }
        assert!(errs[1] < 0.35 * errs[0] || errs[1] < 1e-12, "{errs:?}");
    }

    #[test]
    fn comparison_boundary_has_small_residual() {
        let dom = unit_square(1.0 / 16.0);
        let op = OperatorSpec::canonical(2.0).unwrap();
        let u = GridFunction::from_fn(dom.grid, |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
        let zero = GridFunction::zeros(dom.grid);
        let w = solve_comparison_boundary(&op, &u, &zero, &dom, [0.5, 0.0], 0.03).unwrap();
        let region = boundary_region(&dom, [0.5, 0.0], 0.03);
        let free = enclosed_nodes(dom.grid, &region.to_mask());
        assert!(!free.is_empty());
        let problem = Variational { op: &op, grid: dom.grid, cells: region.members().to_vec(), rhs: vec![], free };
        let prep = problem.prepare();
        let r = problem.residual(&prep, &w.values);
        assert!(r.iter().all(|v| v.abs() < 1e-8));
        // Outside the region w keeps u − σ.
        let k = dom.grid.node_index(16, 16);
        assert_eq!(w.values[k], u.values[k]);
        let affine = GridFunction::from_fn(dom.grid, |x| 1.0 - x[1]);
        let wa = solve_comparison_boundary(&op, &affine, &zero, &dom, [0.5, 0.0], 0.03).unwrap();
        assert!(wa.sub(&affine).max_abs() < 1e-10);
    }

    #[test]
    fn energy_ratio_of_affine_is_one() {
        let dom = unit_square(1.0 / 8.0);
        let sigma = GridFunction::from_fn(dom.grid, |x| x[0]);
        let zero = VectorField::zeros(dom.grid);
        assert!((energy_ratio(&sigma, &zero, &sigma, &dom, 2.5).unwrap() - 1.0).abs() < 1e-12);
        let z = GridFunction::zeros(dom.grid);
        assert!(matches!(energy_ratio(&z, &zero, &z, &dom, 2.0), Err(Error::DegenerateData)));
    }

    #[test]
    fn reverse_holder_of_affine_and_constant() {
        let g = Grid::new(32, 32, 1.0 / 32.0, [0.0, 0.0]);
        let w = GridFunction::from_fn(g, |x| 2.0 * x[0] - x[1]);
        let r = reverse_holder_ratio(&w, [0.5, 0.5], 0.3, 4.0, 2.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let c = GridFunction::from_fn(g, |_| 3.0);
        assert!(matches!(reverse_holder_ratio(&c, [0.5, 0.5], 0.3, 4.0, 2.0), Err(Error::DegenerateData)));
    }
}
