//! Bounded domains on a uniform grid.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CellField, GridFunction};
use crate::grid::{CellSet, Grid, DIM};

/// Catalog of domain shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ShapeSpec {
    /// `[0, L]²`
    Square { l: f64 },
    /// Disk of radius `R` centered at the origin.
    Disk { r: f64 },
    /// `[0, L]²` with the upper-right quarter `[L/2, L]²` removed.
    LShape { l: f64 },
    /// `[0, L]²` with a centered disk of radius `r_hole` removed.
    SquareMinusDisk { l: f64, r_hole: f64 },
}

impl ShapeSpec {
    fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match *self {
            ShapeSpec::Square { l } | ShapeSpec::LShape { l } | ShapeSpec::SquareMinusDisk { l, .. } => {
                ([0.0, 0.0], [l, l])
            }
            ShapeSpec::Disk { r } => ([-r, -r], [r, r]),
        }
    }

    /// Strict point membership; points on the boundary are outside.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let in_square = |l: f64| x[0] > 0.0 && x[0] < l && x[1] > 0.0 && x[1] < l;
        match *self {
            ShapeSpec::Square { l } => in_square(l),
            ShapeSpec::Disk { r } => x[0] * x[0] + x[1] * x[1] < r * r,
            ShapeSpec::LShape { l } => in_square(l) && !(x[0] >= 0.5 * l && x[1] >= 0.5 * l),
            ShapeSpec::SquareMinusDisk { l, r_hole } => {
                let c = 0.5 * l;
                in_square(l) && (x[0] - c).powi(2) + (x[1] - c).powi(2) > r_hole * r_hole
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ShapeSpec::Square { l } | ShapeSpec::LShape { l } => l > 0.0,
            ShapeSpec::Disk { r } => r > 0.0,
            ShapeSpec::SquareMinusDisk { l, r_hole } => l > 0.0 && r_hole >= 0.0 && r_hole < 0.5 * l,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("bad shape dimensions: {self}")))
        }
    }
}

impl fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeSpec::Square { l } => write!(f, "square({l})"),
            ShapeSpec::Disk { r } => write!(f, "disk({r})"),
            ShapeSpec::LShape { l } => write!(f, "l-shape({l})"),
            ShapeSpec::SquareMinusDisk { l, r_hole } => write!(f, "square-minus-disk({l}, {r_hole})"),
        }
    }
}

impl FromStr for ShapeSpec {
    type Err = Error;

    /// Parses `square(1)`, `disk(0.5)`, `l-shape(1)`, `square-minus-disk(1, 0.2)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse shape '{s}'"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let name = s[..open].trim().to_ascii_lowercase().replace('_', "-");
        let args: Vec<f64> = s[open + 1..s.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let shape = match (name.as_str(), args.as_slice()) {
            ("square", [l]) => ShapeSpec::Square { l: *l },
            ("disk", [r]) => ShapeSpec::Disk { r: *r },
            ("l-shape" | "lshape", [l]) => ShapeSpec::LShape { l: *l },
            ("square-minus-disk", [l, r]) => ShapeSpec::SquareMinusDisk { l: *l, r_hole: *r },
            _ => return Err(bad()),
        };
        shape.validate()?;
        Ok(shape)
    }
}

/// A domain Ω discretized on a uniform grid.
#[derive(Debug, Clone)]
pub struct DiscreteDomain {
    pub dim: usize,
    pub grid: Grid,
    pub shape: Option<ShapeSpec>,
    interior: Vec<bool>,
    boundary_nodes: Vec<usize>,
    free_nodes: Vec<usize>,
    closure_nodes: Vec<bool>,
    diam: f64,
}

/// Discretize `shape` at spacing `h`: a cell belongs to Ω when its center lies inside the shape.
pub fn build_domain(shape: &ShapeSpec, h: f64) -> Result<DiscreteDomain> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParams(format!("spacing h = {h} must be positive")));
    }
    shape.validate()?;
    let (lo, hi) = shape.bounding_box();
    // Round before ceil so that 1/0.25 does not become 5 through representation error.
    let cells = |len: f64| ((len / h * 1e9).round() / 1e9).ceil().max(1.0) as usize;
    let grid = Grid::new(cells(hi[0] - lo[0]), cells(hi[1] - lo[1]), h, lo);
    let interior: Vec<bool> = (0..grid.num_cells()).map(|c| shape.contains(grid.cell_center(c))).collect();
    let mut dom = DiscreteDomain::from_mask(grid, interior)?;
    dom.shape = Some(*shape);
    Ok(dom)
}

impl DiscreteDomain {
    /// Domain from an explicit cell mask. Fails when the mask is empty or not 4-connected.
    pub fn from_mask(grid: Grid, interior: Vec<bool>) -> Result<Self> {
        assert_eq!(interior.len(), grid.num_cells());
        if !interior.iter().any(|&b| b) {
            return Err(Error::EmptyDomain { h: grid.h });
        }
        let components = count_components(&grid, &interior);
        if components != 1 {
            return Err(Error::DisconnectedDomain { components });
        }
        let mut boundary_nodes = Vec::new();
        let mut free_nodes = Vec::new();
        let mut closure_nodes = vec![false; grid.num_nodes()];
        for k in 0..grid.num_nodes() {
            let cells = grid.node_cells(k);
            let inside = cells.iter().filter(|c| c.is_some_and(|c| interior[c])).count();
            if inside == 0 {
                continue;
            }
            closure_nodes[k] = true;
            if inside == 4 {
                free_nodes.push(k);
            } else {
                boundary_nodes.push(k);
            }
        }
        let diam = compute_diameter(&grid, &interior);
        Ok(DiscreteDomain {
            dim: DIM,
            grid,
            shape: None,
            interior,
            boundary_nodes,
            free_nodes,
            closure_nodes,
            diam,
        })
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }

    pub fn is_interior(&self, c: usize) -> bool {
        self.interior[c]
    }

    /// Nodes touching both an interior and an exterior cell.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Nodes whose four surrounding cells all lie in Ω.
    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    pub fn in_closure(&self, k: usize) -> bool {
        self.closure_nodes[k]
    }

    pub fn cells(&self) -> CellSet {
        CellSet::from_mask(self.grid, &self.interior)
    }

    pub fn measure(&self) -> f64 {
        self.interior.iter().filter(|&&b| b).count() as f64 * self.grid.cell_volume()
    }

    /// Cached diameter (maximal distance between interior cell centers).
    pub fn diam(&self) -> f64 {
        self.diam
    }

    /// Number of padding cells added on each side by [`extend_by_zero`].
    pub fn pad_cells(&self) -> usize {
        (self.diam / self.grid.h - 1e-9).ceil().max(0.0) as usize
    }

    /// Bounding grid padded by `diam(Ω)` on all sides.
    pub fn ambient_grid(&self) -> Grid {
        self.grid.padded(self.pad_cells())
    }

    /// Ω's cells as a set on the ambient grid.
    pub fn cells_in_ambient(&self) -> CellSet {
        let pad = self.pad_cells();
        let amb = self.ambient_grid();
        let members = self
            .cells()
            .members()
            .iter()
            .map(|&c| {
                let (i, j) = self.grid.cell_ij(c);
                amb.cell_index(i + pad, j + pad)
            })
            .collect();
        CellSet::new(amb, members)
    }

    /// The same mask with the grid shifted by whole cells.
    pub fn translated(&self, di: i64, dj: i64) -> DiscreteDomain {
        let mut d = self.clone();
        d.grid.origin[0] += di as f64 * self.grid.h;
        d.grid.origin[1] += dj as f64 * self.grid.h;
        d
    }

    /// Zero the values of a node function outside the closure of Ω.
    pub fn mask_nodes(&self, f: &GridFunction) -> GridFunction {
        let values =
            f.values.iter().enumerate().map(|(k, &v)| if self.closure_nodes[k] { v } else { 0.0 }).collect();
        GridFunction { grid: f.grid, values }
    }

    /// Zero the values of a cell field outside Ω.
    pub fn mask_cells(&self, f: &CellField) -> CellField {
        let values = f.values.iter().enumerate().map(|(c, &v)| if self.interior[c] { v } else { 0.0 }).collect();
        CellField { grid: f.grid, values }
    }
}

/// Diameter of Ω: maximal pairwise distance of interior cell centers.
pub fn diameter(dom: &DiscreteDomain) -> f64 {
    dom.diam
}

/// Extend a cell field from Ω to the padded ambient grid, with value 0 outside Ω.
pub fn extend_by_zero(f: &CellField, dom: &DiscreteDomain) -> CellField {
    let pad = dom.pad_cells();
    let amb = dom.ambient_grid();
    if f.grid == amb {
        // Already ambient: only the mask applies.
        let inside = dom.cells_in_ambient();
        let mut out = CellField::zeros(amb);
        for &c in inside.members() {
            out.values[c] = f.values[c];
        }
        return out;
    }
    assert_eq!(f.grid, dom.grid, "field must live on the domain grid");
    let mut out = CellField::zeros(amb);
    for c in 0..dom.grid.num_cells() {
        if dom.interior[c] {
            let (i, j) = dom.grid.cell_ij(c);
            out.values[amb.cell_index(i + pad, j + pad)] = f.values[c];
        }
    }
    out
}

/// Restrict an ambient cell field back to the domain grid.
pub fn restrict_to_domain(f: &CellField, dom: &DiscreteDomain) -> CellField {
    let pad = dom.pad_cells();
    let amb = dom.ambient_grid();
    assert_eq!(f.grid, amb);
    let mut out = CellField::zeros(dom.grid);
    for c in 0..dom.grid.num_cells() {
        let (i, j) = dom.grid.cell_ij(c);
        out.values[c] = f.values[amb.cell_index(i + pad, j + pad)];
    }
    out
}

fn count_components(grid: &Grid, mask: &[bool]) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            let (i, j) = grid.cell_ij(c);
            let mut visit = |n: usize| {
                if mask[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            };
            if i > 0 {
                visit(c - 1);
            }
            if i + 1 < grid.nx {
                visit(c + 1);
            }
            if j > 0 {
                visit(c - grid.nx);
            }
            if j + 1 < grid.ny {
                visit(c + grid.nx);
            }
        }
    }
    components
}

fn compute_diameter(grid: &Grid, mask: &[bool]) -> f64 {
    // The farthest pair is realized by cells on the outer layer of the mask.
    let edge: Vec<[f64; 2]> = (0..mask.len())
        .filter(|&c| mask[c])
        .filter(|&c| {
            let (i, j) = grid.cell_ij(c);
            i == 0
                || j == 0
                || i + 1 == grid.nx
                || j + 1 == grid.ny
                || !mask[c - 1]
                || !mask[c + 1]
                || !mask[c - grid.nx]
                || !mask[c + grid.nx]
        })
        .map(|c| grid.cell_center(c))
        .collect();
    let mut best = 0.0f64;
    for (a, p) in edge.iter().enumerate() {
        for q in &edge[a + 1..] {
            best = best.max((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2));
        }
    }
    best.sqrt()
}
