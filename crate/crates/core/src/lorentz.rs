//! Distribution functions and Lorentz quasinorms of piecewise-constant functions.
//!
//! A grid function takes finitely many values, so its distribution function
//! `μ(λ) = |{|f| > λ}|` is a step function and the Lorentz integral is a finite sum
//! over the distinct values `0 = v₀ < v₁ < … < v_J` of `|f|`:
//! `‖f‖_{q,s}^s = q Σ_j μ_j^{s/q} (v_j^s − v_{j−1}^s)/s` with `μ_j = |{|f| ≥ v_j}|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::CellField;
use crate::grid::CellSet;

/// Second Lorentz index: finite, or `∞` for the weak space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SecondIndex {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzParams {
    pub q: f64,
    pub s: SecondIndex,
}

impl LorentzParams {
    pub fn new(q: f64, s: f64) -> Result<Self> {
        let p = LorentzParams { q, s: if s.is_infinite() { SecondIndex::Infinite } else { SecondIndex::Finite(s) } };
        p.validate()?;
        Ok(p)
    }

    pub fn weak(q: f64) -> Result<Self> {
        let p = LorentzParams { q, s: SecondIndex::Infinite };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let s_ok = match self.s {
            SecondIndex::Finite(s) => s > 0.0 && s.is_finite(),
            SecondIndex::Infinite => true,
        };
        if self.q > 0.0 && self.q.is_finite() && s_ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("Lorentz indices need q > 0, s > 0: {self:?}")))
        }
    }

    /// `s` as a number, `∞` for the weak space.
    pub fn s_value(&self) -> f64 {
        match self.s {
            SecondIndex::Finite(s) => s,
            SecondIndex::Infinite => f64::INFINITY,
        }
    }
}

/// A sample of cell values with a common cell volume.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub values: &'a [f64],
    pub cell_volume: f64,
}

impl<'a> Sample<'a> {
    pub fn new(values: &'a [f64], cell_volume: f64) -> Self {
        Sample { values, cell_volume }
    }
}

/// Values of `f` on the members of `set`, in member order.
pub fn values_on(f: &CellField, set: &CellSet) -> Vec<f64> {
    set.members().iter().map(|&c| f.values[c]).collect()
}

/// `|{x : |f(x)| > λ}|`.
pub fn distribution_function(f: Sample<'_>, lambda: f64) -> f64 {
    f.values.iter().filter(|v| v.abs() > lambda).count() as f64 * f.cell_volume
}

/// Breakpoints `(v_j, μ_j)` with `μ_j = |{|f| ≥ v_j}|`, increasing in `v_j > 0`.
pub fn breakpoints(f: Sample<'_>) -> Vec<(f64, f64)> {
    let mut abs: Vec<f64> = f.values.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    abs.sort_unstable_by(f64::total_cmp);
    let n = abs.len();
    let mut out = Vec::new();
    let mut k = 0;
    while k < n {
        let v = abs[k];
        out.push((v, (n - k) as f64 * f.cell_volume));
        while k < n && abs[k] == v {
            k += 1;
        }
    }
    out
}

/// `(λ, μ(λ))` rows with `λ` at each breakpoint: the value of `μ` on `[v_{j−1}, v_j)` is `μ_j`.
pub fn distribution_table(f: Sample<'_>) -> Vec<(f64, f64)> {
    let bp = breakpoints(f);
    let mut rows = Vec::with_capacity(bp.len() + 1);
    let mut prev = 0.0;
    for &(v, mu) in &bp {
        rows.push((prev, mu));
        prev = v;
    }
    rows.push((prev, 0.0));
    rows
}

/// `‖f‖_{L^{q,s}}`; for `s = ∞` this is [`weak_quasinorm`].
pub fn lorentz_quasinorm(f: Sample<'_>, params: LorentzParams) -> Result<f64> {
    params.validate()?;
    let q = params.q;
    let s = match params.s {
        SecondIndex::Infinite => return weak_quasinorm(f, q),
        SecondIndex::Finite(s) => s,
    };
    let mut sum = 0.0;
    let mut prev = 0.0f64;
    for (v, mu) in breakpoints(f) {
        let vs = v.powf(s);
        sum += mu.powf(s / q) * (vs - prev);
        prev = vs;
    }
    Ok((q / s * sum).powf(1.0 / s))
}

/// `sup_λ λ μ(λ)^{1/q}`, attained at `λ → v_j⁻`: `max_j v_j μ_j^{1/q}`.
pub fn weak_quasinorm(f: Sample<'_>, q: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParams(format!("q = {q} must be positive")));
    }
    Ok(breakpoints(f).iter().fold(0.0f64, |m, &(v, mu)| m.max(v * mu.powf(1.0 / q))))
}

/// `(Σ |f|^q · cell volume)^{1/q}`.
pub fn lebesgue_norm(f: Sample<'_>, q: f64) -> f64 {
    (f.values.iter().map(|v| v.abs().powf(q)).sum::<f64>() * f.cell_volume).powf(1.0 / q)
}
