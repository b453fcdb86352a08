//! Pointwise and weak-type inequalities between maximal operators, checked on a grid.
//!
//! All operators act on `|f|` with the radius set and lattice counts of
//! [`crate::maximal`]; points are cell centers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::CellField;
use crate::grid::{CellSet, DIM};
use crate::lorentz::{weak_quasinorm, Sample};
use crate::maximal::{maximal_at, MaximalQuery};

fn all_cells(f: &CellField) -> Vec<usize> {
    (0..f.grid.num_cells()).collect()
}

fn field(f: &CellField, values: Vec<f64>) -> CellField {
    CellField { grid: f.grid, values }
}

/// Outcome of `M M_α f ≤ max{M^r M^r_α f, M^r T^r_α f, T^r M_α f}` at every cell.
#[derive(Debug, Clone, Serialize)]
pub struct SplitBoundCheck {
    pub alpha: f64,
    pub r: f64,
    pub points: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` over points with `rhs > 0`.
    pub max_quotient: f64,
    /// Cell of the largest quotient.
    pub worst: Option<usize>,
}

pub fn split_bound_check(f: &CellField, alpha: f64, r: f64) -> Result<SplitBoundCheck> {
    let cells = all_cells(f);
    let mut inner =
        maximal_at(f, &[MaximalQuery::full(alpha), MaximalQuery::cutoff(r, alpha), MaximalQuery::tail(r, alpha)], &cells)?;
    let tail_alpha = field(f, inner.pop().unwrap());
    let cut_alpha = field(f, inner.pop().unwrap());
    let full_alpha = field(f, inner.pop().unwrap());
    let mut outer = maximal_at(&full_alpha, &[MaximalQuery::full(0.0), MaximalQuery::tail(r, 0.0)], &cells)?;
    let tail_of_full = outer.pop().unwrap();
    let lhs = outer.pop().unwrap();
    let cut_of_cut = maximal_at(&cut_alpha, &[MaximalQuery::cutoff(r, 0.0)], &cells)?.pop().unwrap();
    let cut_of_tail = maximal_at(&tail_alpha, &[MaximalQuery::cutoff(r, 0.0)], &cells)?.pop().unwrap();
    let mut out = SplitBoundCheck { alpha, r, points: cells.len(), violations: 0, max_quotient: 0.0, worst: None };
    for c in cells {
        let rhs = cut_of_cut[c].max(cut_of_tail[c]).max(tail_of_full[c]);
        if lhs[c] > rhs {
            out.violations += 1;
        }
        if rhs > 0.0 && lhs[c] / rhs > out.max_quotient {
            out.max_quotient = lhs[c] / rhs;
            out.worst = Some(c);
        }
    }
    Ok(out)
}

/// Outcome of `T^r_α f(x₁) ≤ k^{n−α} M_α f(x₂)` with `k = 1 + |x₁ − x₂|/r`.
///
/// For this `k` the triangle inequality gives `B_ρ(x₁) ⊆ B_{kρ}(x₂)` for every `ρ ≥ r`.
#[derive(Debug, Clone, Serialize)]
pub struct TailComparisonCheck {
    pub alpha: f64,
    pub r: f64,
    pub configurations: usize,
    pub violations: usize,
    /// Largest `T^r_α f(x₁) / (k^{n−α} M_α f(x₂))`.
    pub max_quotient: f64,
}

pub fn tail_comparison_check(f: &CellField, alpha: f64, r: f64, pairs: &[(usize, usize)]) -> Result<TailComparisonCheck> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("radius {r} must be positive")));
    }
    let g = f.grid;
    let mut targets: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    targets.sort_unstable();
    targets.dedup();
    let values = maximal_at(f, &[MaximalQuery::tail(r, alpha), MaximalQuery::full(alpha)], &targets)?;
    let at = |q: usize, c: usize| values[q][targets.binary_search(&c).unwrap()];
    let mut out = TailComparisonCheck { alpha, r, configurations: pairs.len(), violations: 0, max_quotient: 0.0 };
    for &(x1, x2) in pairs {
        let (a, b) = (g.cell_center(x1), g.cell_center(x2));
        let k = 1.0 + (a[0] - b[0]).hypot(a[1] - b[1]) / r;
        let lhs = at(0, x1);
        let rhs = k.powf(DIM as f64 - alpha) * at(1, x2);
        if lhs > rhs {
            out.violations += 1;
        }
        if rhs > 0.0 {
            out.max_quotient = out.max_quotient.max(lhs / rhs);
        }
    }
    Ok(out)
}

/// Smallest `C` with `M^r M^r_α f ≤ C M^{2r}_α f` at every cell.
pub fn cutoff_doubling_constant(f: &CellField, alpha: f64, r: f64) -> Result<f64> {
    let cells = all_cells(f);
    let mut inner = maximal_at(f, &[MaximalQuery::cutoff(r, alpha), MaximalQuery::cutoff(2.0 * r, alpha)], &cells)?;
    let wide = inner.pop().unwrap();
    let cut = field(f, inner.pop().unwrap());
    let lhs = maximal_at(&cut, &[MaximalQuery::cutoff(r, 0.0)], &cells)?.pop().unwrap();
    Ok(lhs.iter().zip(&wide).filter(|(_, &w)| w > 0.0).fold(0.0, |m, (&l, &w)| m.max(l / w)))
}

/// Smallest `C` with `|{M_α(χ_B f) > λ}| ≤ C (∫_B |f| / λ)^{n/(n−α)}` for every `λ > 0`,
/// the measure taken over the grid. `None` when `f` vanishes on `B`.
pub fn localized_weak_constant(f: &CellField, ball: &CellSet, alpha: f64) -> Result<Option<f64>> {
    let mut g = CellField::zeros(f.grid);
    for &c in ball.members() {
        g.values[c] = f.values[c].abs();
    }
    let mass = g.l1_norm();
    if mass == 0.0 {
        return Ok(None);
    }
    let q = DIM as f64 / (DIM as f64 - alpha);
    let m = maximal_at(&g, &[MaximalQuery::full(alpha)], &all_cells(f))?.pop().unwrap();
    let weak = weak_quasinorm(Sample::new(&m, f.grid.cell_volume()), q)?;
    Ok(Some((weak / mass).powf(q)))
}

/// `sup_λ λ |{Mf > λ}| / ‖f‖₁` with the measure taken over the grid. `None` for `f = 0`.
pub fn weak_type_constant(f: &CellField) -> Result<Option<f64>> {
    let mass = f.l1_norm();
    if mass == 0.0 {
        return Ok(None);
    }
    let m = maximal_at(f, &[MaximalQuery::full(0.0)], &all_cells(f))?.pop().unwrap();
    Ok(Some(weak_quasinorm(Sample::new(&m, f.grid.cell_volume()), 1.0)? / mass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> CellField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::new(n, n, 1.0 / n as f64, [0.0, 0.0]);
        let values = (0..g.num_cells()).map(|_| rng.random::<f64>().powi(3)).collect();
        CellField { grid: g, values }
    }

    #[test]
    fn constant_field_constants() {
        let g = Grid::new(12, 12, 1.0 / 12.0, [0.0, 0.0]);
        let mut f = CellField::zeros(g);
        f.values[g.cell_index(6, 6)] = 1.0;
        let c = weak_type_constant(&f).unwrap().unwrap();
        assert!(c > 0.5 && c <= 9.0, "{c}");
        assert_eq!(weak_type_constant(&CellField::zeros(g)).unwrap(), None);
    }

    #[test]
    fn tail_comparison_at_coincident_points_is_exact() {
        // x₁ = x₂ gives k = 1 and T^r_α ≤ M_α.
        let f = random(12, 3);
        let pairs: Vec<(usize, usize)> = (0..f.grid.num_cells()).step_by(7).map(|c| (c, c)).collect();
        let check = tail_comparison_check(&f, 0.5, 0.2, &pairs).unwrap();
        assert_eq!(check.violations, 0);
        assert!(check.max_quotient <= 1.0);
    }

    #[test]
    fn doubling_constant_is_at_least_one_and_finite() {
        let f = random(12, 5);
        for alpha in [0.0, 0.5, 1.0] {
            let c = cutoff_doubling_constant(&f, alpha, 0.2).unwrap();
            assert!(c.is_finite() && c > 0.0, "{c}");
        }
    }

    #[test]
    fn localized_constant_vanishes_off_support() {
        let f = random(10, 8);
        let g = f.grid;
        let ball = g.ball([0.5, 0.5], 0.2);
        let c = localized_weak_constant(&f, &ball, 0.5).unwrap().unwrap();
        assert!(c.is_finite() && c > 0.0);
        let zero = CellField::zeros(g);
        assert_eq!(localized_weak_constant(&zero, &ball, 0.5).unwrap(), None);
    }
}
