//! Uniform lattice geometry and cell sets.
//!
//! A [`Grid`] is an `nx × ny` array of square cells of side `h` anchored at
//! `origin`. Scalar unknowns live on the `(nx + 1) × (ny + 1)` nodes, fluxes and
//! gradients on cells. Indices are row-major with `x` fastest.

use serde::{Deserialize, Serialize};

/// Spatial dimension used by every formula in the crate.
pub const DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
}

impl Grid {
    pub fn new(nx: usize, ny: usize, h: f64, origin: [f64; 2]) -> Self {
        Grid { nx, ny, h, origin }
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn node_ij(&self, k: usize) -> (usize, usize) {
        (k % (self.nx + 1), k / (self.nx + 1))
    }

    #[inline]
    pub fn cell_center(&self, c: usize) -> [f64; 2] {
        let (i, j) = self.cell_ij(c);
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    #[inline]
    pub fn node_position(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(k);
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    /// Volume of one cell, `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(DIM as i32)
    }

    /// The four corner nodes of a cell: lower-left, lower-right, upper-left, upper-right.
    #[inline]
    pub fn cell_nodes(&self, c: usize) -> [usize; 4] {
        let (i, j) = self.cell_ij(c);
        [
            self.node_index(i, j),
            self.node_index(i + 1, j),
            self.node_index(i, j + 1),
            self.node_index(i + 1, j + 1),
        ]
    }

    /// Cells touching a node (up to four), as `Some(cell)` when inside the grid.
    pub fn node_cells(&self, k: usize) -> [Option<usize>; 4] {
        let (i, j) = self.node_ij(k);
        let get = |di: isize, dj: isize| {
            let ci = i as isize + di;
            let cj = j as isize + dj;
            if ci >= 0 && cj >= 0 && (ci as usize) < self.nx && (cj as usize) < self.ny {
                Some(self.cell_index(ci as usize, cj as usize))
            } else {
                None
            }
        };
        [get(-1, -1), get(0, -1), get(-1, 0), get(0, 0)]
    }

    /// Largest distance between two cell centers of the grid.
    pub fn diameter(&self) -> f64 {
        let dx = self.nx.saturating_sub(1) as f64;
        let dy = self.ny.saturating_sub(1) as f64;
        self.h * (dx * dx + dy * dy).sqrt()
    }

    /// Index of the cell containing point `x`, if inside the grid.
    pub fn locate_cell(&self, x: [f64; 2]) -> Option<usize> {
        let fi = ((x[0] - self.origin[0]) / self.h).floor();
        let fj = ((x[1] - self.origin[1]) / self.h).floor();
        if fi < 0.0 || fj < 0.0 {
            return None;
        }
        let (i, j) = (fi as usize, fj as usize);
        (i < self.nx && j < self.ny).then(|| self.cell_index(i, j))
    }

    /// Grid enlarged by `pad` cells on every side.
    pub fn padded(&self, pad: usize) -> Grid {
        Grid {
            nx: self.nx + 2 * pad,
            ny: self.ny + 2 * pad,
            h: self.h,
            origin: [self.origin[0] - pad as f64 * self.h, self.origin[1] - pad as f64 * self.h],
        }
    }

    /// Cells whose centers lie within distance `rho` of `x` (ties included),
    /// clipped to the grid.
    pub fn ball(&self, x: [f64; 2], rho: f64) -> CellSet {
        let h = self.h;
        let lo_i = (((x[0] - rho - self.origin[0]) / h) - 0.5).floor().max(0.0) as usize;
        let lo_j = (((x[1] - rho - self.origin[1]) / h) - 0.5).floor().max(0.0) as usize;
        let hi_i = ((((x[0] + rho - self.origin[0]) / h) - 0.5).ceil().max(-1.0) + 1.0) as usize;
        let hi_j = ((((x[1] + rho - self.origin[1]) / h) - 0.5).ceil().max(-1.0) + 1.0) as usize;
        let mut members = Vec::new();
        let r2 = rho * rho;
        for j in lo_j..hi_j.min(self.ny) {
            for i in lo_i..hi_i.min(self.nx) {
                let c = self.cell_index(i, j);
                let p = self.cell_center(c);
                let d2 = (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
                if d2 <= r2 {
                    members.push(c);
                }
            }
        }
        CellSet { grid: *self, members }
    }
}

/// A set of cells of a grid, stored as sorted, deduplicated indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    pub grid: Grid,
    members: Vec<usize>,
}

impl CellSet {
    pub fn new(grid: Grid, mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        members.retain(|&c| c < grid.num_cells());
        CellSet { grid, members }
    }

    pub fn empty(grid: Grid) -> Self {
        CellSet { grid, members: Vec::new() }
    }

    pub fn from_mask(grid: Grid, mask: &[bool]) -> Self {
        let members = mask.iter().enumerate().filter(|(_, &m)| m).map(|(c, _)| c).collect();
        CellSet { grid, members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, c: usize) -> bool {
        self.members.binary_search(&c).is_ok()
    }

    pub fn to_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.grid.num_cells()];
        for &c in &self.members {
            mask[c] = true;
        }
        mask
    }

    /// Lebesgue measure of the union of the member cells: `count · hⁿ`.
    pub fn measure(&self) -> f64 {
        self.members.len() as f64 * self.grid.cell_volume()
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let mut m = self.members.clone();
        m.extend_from_slice(&other.members);
        CellSet::new(self.grid, m)
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        let members = self.members.iter().copied().filter(|&c| other.contains(c)).collect();
        CellSet { grid: self.grid, members }
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        let members = self.members.iter().copied().filter(|&c| !other.contains(c)).collect();
        CellSet { grid: self.grid, members }
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.members.iter().all(|&c| other.contains(c))
    }

    /// Run-length encoding of the sorted index list as `(start, length)` runs.
    pub fn to_runs(&self) -> Vec<(usize, usize)> {
        let mut runs: Vec<(usize, usize)> = Vec::new();
        for &c in &self.members {
            match runs.last_mut() {
                Some((s, l)) if *s + *l == c => *l += 1,
                _ => runs.push((c, 1)),
            }
        }
        runs
    }

    pub fn from_runs(grid: Grid, runs: &[(usize, usize)]) -> CellSet {
        let members = runs.iter().flat_map(|&(s, l)| s..s + l).collect();
        CellSet::new(grid, members)
    }

    /// Text form of [`CellSet::to_runs`]: `start+len` tokens separated by spaces.
    pub fn runs_string(&self) -> String {
        self.to_runs().iter().map(|(s, l)| format!("{s}+{l}")).collect::<Vec<_>>().join(" ")
    }
}
