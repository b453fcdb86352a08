//! Scalar and vector fields on a [`Grid`].

use crate::grid::Grid;

/// Scalar values on the nodes of a grid (solutions `u`, boundary data `σ`, comparison `w`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

/// Scalar values on the cells of a grid (densities such as `|∇u|^p` and maximal functions).
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

/// One `n`-vector per cell (data `F`, gradients `∇u`).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub values: Vec<[f64; 2]>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        GridFunction { grid, values: vec![0.0; grid.num_nodes()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.num_nodes()).map(|k| f(grid.node_position(k))).collect();
        GridFunction { grid, values }
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        GridFunction { grid: self.grid, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl CellField {
    pub fn zeros(grid: Grid) -> Self {
        CellField { grid, values: vec![0.0; grid.num_cells()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.num_cells()).map(|c| f(grid.cell_center(c))).collect();
        CellField { grid, values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> CellField {
        CellField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn add(&self, other: &CellField) -> CellField {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        CellField { grid: self.grid, values }
    }

    pub fn scale(&self, c: f64) -> CellField {
        self.map(|v| c * v)
    }

    /// `∑ |f| hⁿ` over all cells.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume()
    }
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField { grid, values: vec![[0.0; 2]; grid.num_cells()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let values = (0..grid.num_cells()).map(|c| f(grid.cell_center(c))).collect();
        VectorField { grid, values }
    }

    /// Cellwise `|v|^p`.
    pub fn norm_pow(&self, p: f64) -> CellField {
        let values = self.values.iter().map(|v| norm(*v).powf(p)).collect();
        CellField { grid: self.grid, values }
    }
}

#[inline]
pub(crate) fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Per-cell forward-difference gradient, taken from the lower-left corner of
/// each cell. Exact for affine functions; its adjoint is the five-point
/// divergence used by the solver.
pub fn gradient(u: &GridFunction) -> VectorField {
    let g = u.grid;
    let inv_h = 1.0 / g.h;
    let values = (0..g.num_cells())
        .map(|c| {
            let [ll, lr, ul, _] = g.cell_nodes(c);
            let base = u.values[ll];
            [(u.values[lr] - base) * inv_h, (u.values[ul] - base) * inv_h]
        })
        .collect();
    VectorField { grid: g, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_affine_is_constant() {
        let g = Grid::new(6, 5, 0.2, [0.1, -0.3]);
        let u = GridFunction::from_fn(g, |x| 3.0 * x[0] - 2.0 * x[1] + 1.0);
        for v in gradient(&u).values {
            assert!((v[0] - 3.0).abs() < 1e-12 && (v[1] + 2.0).abs() < 1e-12);
        }
        let c = GridFunction::from_fn(g, |_| 4.2);
        assert!(gradient(&c).values.iter().all(|v| *v == [0.0, 0.0]));
    }

    #[test]
    fn gradient_of_square_matches_difference_quotients() {
        // u = x² on [0,1] with h = 0.5: quotients (0.25 - 0)/0.5 and (1 - 0.25)/0.5.
        let g = Grid::new(2, 2, 0.5, [0.0, 0.0]);
        let u = GridFunction::from_fn(g, |x| x[0] * x[0]);
        let grad = gradient(&u);
        for j in 0..2 {
            assert_eq!(grad.values[g.cell_index(0, j)], [0.5, 0.0]);
            assert_eq!(grad.values[g.cell_index(1, j)], [1.5, 0.0]);
        }
    }
}
