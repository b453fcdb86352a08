//! Python bindings: `import pyreglab`.
//!
//! Fields cross the boundary as flat row-major lists plus `(nx, ny, h)`; node fields
//! have `(nx + 1) * (ny + 1)` entries, cell fields `nx * ny`.

use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

use reglab::capacity::{condenser_balls, p_capacity, thickness_certificate, ThicknessParams};
use reglab::experiment::{solve_case, CaseSpec, DataSpec};
use reglab::instance::InstanceParams;
use reglab::io::RawGrid;
use reglab::lorentz::{lorentz_quasinorm, LorentzParams, Sample};
use reglab::maximal::{maximal_at, MaximalQuery};
use reglab::{build_domain, CellField, Error, Grid, OperatorForm, OperatorSpec, ShapeSpec};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn shape(spec: &str) -> PyResult<ShapeSpec> {
    spec.parse().map_err(py_err)
}

fn cell_field(values: Vec<f64>, nx: usize, ny: usize, h: f64) -> PyResult<CellField> {
    if values.len() != nx * ny {
        return Err(PyValueError::new_err(format!("expected {} cell values, got {}", nx * ny, values.len())));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(PyValueError::new_err(format!("spacing {h} is not positive")));
    }
    Ok(CellField { grid: Grid::new(nx, ny, h, [0.0, 0.0]), values })
}

/// Discrete solution of the Dirichlet problem.
#[pyclass(frozen, get_all)]
struct Solution {
    nx: usize,
    ny: usize,
    h: f64,
    /// Node values, row-major, `(ny + 1) * (nx + 1)` entries.
    u: Vec<f64>,
    iterations: usize,
    residual: f64,
    energy_history: Vec<f64>,
}

#[pymethods]
impl Solution {
    fn __repr__(&self) -> String {
        format!("Solution(nx={}, ny={}, h={}, iterations={}, residual={:e})", self.nx, self.ny, self.h, self.iterations, self.residual)
    }
}

/// Solve `-div A(x, ∇u) = -div(|F|^{p-2} F)` with `u = σ` on the boundary.
///
/// `data` is `"random"` (seeded), `"manufactured"` or `"affine"`.
#[pyfunction]
#[pyo3(signature = (shape_spec, p, h, data = "random", seed = 1, form = "canonical", tol = 1e-8))]
fn solve(shape_spec: &str, p: f64, h: f64, data: &str, seed: u64, form: &str, tol: f64) -> PyResult<Solution> {
    let form = match form {
        "canonical" => OperatorForm::Canonical,
        "weighted" => OperatorForm::Weighted,
        other => return Err(PyValueError::new_err(format!("unknown operator form '{other}'"))),
    };
    let data = match data {
        "random" => DataSpec::Random { seed, params: InstanceParams::default() },
        "manufactured" => DataSpec::Manufactured,
        "affine" => DataSpec::Affine { offset: 0.0, slope: [1.0, 0.0] },
        other => return Err(PyValueError::new_err(format!("unknown data kind '{other}'"))),
    };
    let spec = CaseSpec { shape: shape(shape_spec)?, op: OperatorSpec::new(p, form).map_err(py_err)?, h, data };
    let case = solve_case(&spec, tol).map_err(py_err)?;
    let g = case.dom.grid;
    let report = case.solution.report;
    Ok(Solution {
        nx: g.nx,
        ny: g.ny,
        h: g.h,
        u: case.solution.u.values,
        iterations: report.iterations,
        residual: report.residual,
        energy_history: report.energy_history,
    })
}

/// Maximal function of a cell field; `mode` is `"full"`, `"cutoff"` or `"tail"`.
#[pyfunction]
#[pyo3(signature = (values, nx, ny, h, alpha = 0.0, mode = "full", r = None))]
fn maximal(values: Vec<f64>, nx: usize, ny: usize, h: f64, alpha: f64, mode: &str, r: Option<f64>) -> PyResult<Vec<f64>> {
    let f = cell_field(values, nx, ny, h)?;
    let query = match (mode, r) {
        ("full", _) => MaximalQuery::full(alpha),
        ("cutoff", Some(r)) => MaximalQuery::cutoff(r, alpha),
        ("tail", Some(r)) => MaximalQuery::tail(r, alpha),
        ("cutoff" | "tail", None) => return Err(PyValueError::new_err(format!("mode '{mode}' needs a radius r"))),
        (other, _) => return Err(PyValueError::new_err(format!("unknown mode '{other}'"))),
    };
    let all: Vec<usize> = (0..nx * ny).collect();
    let mut out = maximal_at(&f, &[query], &all).map_err(py_err)?;
    Ok(out.remove(0))
}

/// Lorentz quasinorm `‖f‖_{q,s}` of cell values; `s = inf` gives the weak quasinorm.
#[pyfunction]
fn lorentz(values: Vec<f64>, cell_volume: f64, q: f64, s: f64) -> PyResult<f64> {
    let params = LorentzParams::new(q, s).map_err(py_err)?;
    lorentz_quasinorm(Sample::new(&values, cell_volume), params).map_err(py_err)
}

/// `p`-capacity of the condenser `(B̄_r, B_2r)` centered on a grid of spacing `h`.
#[pyfunction]
fn ball_capacity(p: f64, r: f64, h: f64) -> PyResult<f64> {
    if !(r > 0.0 && h > 0.0 && h < r) {
        return Err(PyValueError::new_err("require 0 < h < r"));
    }
    let half = (2.0 * r / h).ceil() as usize + 2;
    let o = -(half as f64 + 0.5) * h;
    let g = Grid::new(2 * half + 1, 2 * half + 1, h, [o, o]);
    let (k, b) = condenser_balls(&g, g.cell_center(g.cell_index(half, half)), r);
    p_capacity(&k, &b, p).map_err(py_err)
}

/// Uniform thickness certificate; returns `(passed, min_ratio)`.
#[pyfunction]
#[pyo3(signature = (shape_spec, h, p, c0 = 0.05, r0 = 0.25, max_points = 200))]
fn thickness(shape_spec: &str, h: f64, p: f64, c0: f64, r0: f64, max_points: usize) -> PyResult<(bool, Option<f64>)> {
    let dom = build_domain(&shape(shape_spec)?, h).map_err(py_err)?;
    let report = thickness_certificate(&dom, p, &ThicknessParams { c0, r0, max_points }).map_err(py_err)?;
    Ok((report.passed, report.min_ratio))
}

/// Read an `RGL1` file; returns `(dims, h, values)`.
#[pyfunction]
fn read_grid(path: std::path::PathBuf) -> PyResult<(Vec<usize>, f64, Vec<f64>)> {
    let raw = RawGrid::read(&path).map_err(py_err)?;
    Ok((raw.dims, raw.h, raw.data))
}

#[pyfunction]
fn write_grid(path: std::path::PathBuf, dims: Vec<usize>, h: f64, values: Vec<f64>) -> PyResult<()> {
    RawGrid { dims, h, data: values }.write(&path).map_err(py_err)
}

/// Run the command line with `args` (without the program name); returns the exit status.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    reglab::cli::run_command(std::iter::once("reglab".to_owned()).chain(args))
}

#[pymodule]
fn pyreglab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(maximal, m)?)?;
    m.add_function(wrap_pyfunction!(lorentz, m)?)?;
    m.add_function(wrap_pyfunction!(ball_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(thickness, m)?)?;
    m.add_function(wrap_pyfunction!(read_grid, m)?)?;
    m.add_function(wrap_pyfunction!(write_grid, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
