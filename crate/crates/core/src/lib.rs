//! Discrete laboratory for gradient estimates of quasilinear elliptic equations.
//!
//! The crate discretizes `div A(x,∇u) = div(|F|^{p-2}F)` with Dirichlet data on a
//! uniform grid and provides the harmonic-analysis tools needed to measure the
//! resulting gradient bounds: fractional and cut-off maximal operators, Lorentz
//! quasinorms, variational p-capacity and good-λ level-set experiments.

pub mod capacity;
pub mod cli;
pub mod config;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod field;
pub mod goodlambda;
pub mod grid;
pub mod inequalities;
pub mod io;
pub mod instance;
pub mod linalg;
pub mod lorentz;
pub mod maximal;
pub mod operator;
pub mod parallel;
pub mod solver;

pub use domain::{build_domain, extend_by_zero, DiscreteDomain, ShapeSpec};
pub use error::{Error, Result};
pub use field::{gradient, CellField, GridFunction, VectorField};
pub use grid::{CellSet, Grid};
pub use operator::{OperatorForm, OperatorSpec};
