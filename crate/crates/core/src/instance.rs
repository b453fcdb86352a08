//! Deterministic random data `(F, σ)` from truncated Fourier series.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridFunction, VectorField};
use crate::grid::Grid;

/// Modes per axis.
pub const MODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    /// Multiplier of the data field `F`.
    pub f_amplitude: f64,
    /// Multiplier of the boundary datum `σ`.
    pub sigma_amplitude: f64,
    /// Mode `k` is damped by `(1 + |k|²)^{-decay}`.
    pub decay: f64,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams { f_amplitude: 1.0, sigma_amplitude: 1.0, decay: 1.0 }
    }
}

impl InstanceParams {
    pub fn validate(&self) -> Result<()> {
        let finite = self.f_amplitude.is_finite() && self.sigma_amplitude.is_finite();
        if !(finite && self.decay >= 0.0 && self.decay.is_finite()) {
            return Err(Error::InvalidParams(format!("invalid instance parameters {self:?}")));
        }
        Ok(())
    }
}

/// `Σ_k (a_k cos πk·x + b_k sin πk·x) / (1 + |k|²)^decay` over `k ∈ {0..8}²`.
#[derive(Debug, Clone)]
pub struct FourierSeries {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl FourierSeries {
    fn draw(rng: &mut ChaCha8Rng, amplitude: f64, decay: f64) -> Self {
        let mut cos = Vec::with_capacity(MODES * MODES);
        let mut sin = Vec::with_capacity(MODES * MODES);
        for k2 in 0..MODES {
            for k1 in 0..MODES {
                let damp = amplitude / (1.0 + (k1 * k1 + k2 * k2) as f64).powf(decay);
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                cos.push(a * damp);
                sin.push(b * damp);
            }
        }
        FourierSeries { cos, sin }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let mut s = 0.0;
        for k2 in 0..MODES {
            for k1 in 0..MODES {
                let t = PI * (k1 as f64 * x[0] + k2 as f64 * x[1]);
                let i = k2 * MODES + k1;
                s += self.cos[i] * t.cos() + self.sin[i] * t.sin();
            }
        }
        s
    }
}

/// Random data on a grid: `F` at cell centers, `σ` at nodes.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub f: VectorField,
    pub sigma: GridFunction,
}

/// The three series of a seed, drawn in the order `σ`, `F₁`, `F₂`.
pub fn series(seed: u64, params: &InstanceParams) -> [FourierSeries; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = FourierSeries::draw(&mut rng, params.sigma_amplitude, params.decay);
    let f1 = FourierSeries::draw(&mut rng, params.f_amplitude, params.decay);
    let f2 = FourierSeries::draw(&mut rng, params.f_amplitude, params.decay);
    [sigma, f1, f2]
}

pub fn generate_instance(grid: Grid, seed: u64, params: &InstanceParams) -> Result<Instance> {
    params.validate()?;
    let [s, f1, f2] = series(seed, params);
    Ok(Instance {
        seed,
        f: VectorField::from_fn(grid, |x| [f1.eval(x), f2.eval(x)]),
        sigma: GridFunction::from_fn(grid, |x| s.eval(x)),
    })
}

/// `u*(x) = sin(πx₁) sin(πx₂)`, which vanishes on the boundary of the unit square.
pub fn manufactured_exact(x: [f64; 2]) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).sin()
}

pub fn manufactured_gradient(x: [f64; 2]) -> [f64; 2] {
    [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos()]
}

/// `F = ∇u*` at cell centers and `σ = u*` at nodes; `u*` solves the equation for every `p`
/// with the canonical operator.
pub fn manufactured_instance(grid: Grid) -> Instance {
    Instance {
        seed: 0,
        f: VectorField::from_fn(grid, manufactured_gradient),
        sigma: GridFunction::from_fn(grid, manufactured_exact),
    }
}
