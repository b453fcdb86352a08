//! The nonlinearity `A(x, ξ)` of the quasilinear equation.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which nonlinearity the operator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorForm {
    /// `A(x, ξ) = |ξ|^{p-2} ξ`.
    Canonical,
    /// `A(x, ξ) = a(x) |ξ|^{p-2} ξ` with `a(x) = 1 + ½ sin(2πx₁) sin(2πx₂)`.
    Weighted,
}

/// Nonlinearity with exponent `p` and structure constants.
///
/// Growth: `|A(x, ξ)| ≤ lambda1 |ξ|^{p-1}`.
/// Monotonicity: `⟨A(x, ξ) − A(x, η), ξ − η⟩ ≥ lambda2 (|ξ|² + |η|²)^{(p−2)/2} |ξ − η|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub p: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub form: OperatorForm,
}

/// Best monotonicity constant of `|ξ|^{p-2} ξ` in the plane.
pub fn canonical_monotonicity_constant(p: f64) -> f64 {
    let base = 2f64.powf((2.0 - p) / 2.0);
    if p >= 2.0 {
        base
    } else {
        (p - 1.0) * base
    }
}

impl OperatorSpec {
    pub fn canonical(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(OperatorSpec { p, lambda1: 1.0, lambda2: canonical_monotonicity_constant(p), form: OperatorForm::Canonical })
    }

    pub fn weighted(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(OperatorSpec {
            p,
            lambda1: 1.5,
            lambda2: 0.5 * canonical_monotonicity_constant(p),
            form: OperatorForm::Weighted,
        })
    }

    pub fn new(p: f64, form: OperatorForm) -> Result<Self> {
        match form {
            OperatorForm::Canonical => Self::canonical(p),
            OperatorForm::Weighted => Self::weighted(p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.p)?;
        if !(self.lambda1 > 0.0 && self.lambda2 > 0.0) {
            return Err(Error::InvalidParams("lambda1 and lambda2 must be positive".into()));
        }
        Ok(())
    }

    /// Coefficient `a(x)`; identically 1 for the canonical form. Takes values in `[½, 3/2]`.
    #[inline]
    pub fn coefficient(&self, x: [f64; 2]) -> f64 {
        match self.form {
            OperatorForm::Canonical => 1.0,
            OperatorForm::Weighted => 1.0 + 0.5 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin(),
        }
    }

    /// `A(x, ξ)` given the precomputed coefficient `a = a(x)`.
    #[inline]
    pub fn flux_with(&self, a: f64, xi: [f64; 2]) -> [f64; 2] {
        let t = xi[0] * xi[0] + xi[1] * xi[1];
        if t == 0.0 {
            return [0.0, 0.0];
        }
        let s = a * t.powf(0.5 * (self.p - 2.0));
        [s * xi[0], s * xi[1]]
    }

    pub fn flux(&self, x: [f64; 2], xi: [f64; 2]) -> [f64; 2] {
        self.flux_with(self.coefficient(x), xi)
    }

    /// Energy density `a |ξ|^p / p`, whose gradient in `ξ` is the flux.
    #[inline]
    pub fn energy_density_with(&self, a: f64, xi: [f64; 2]) -> f64 {
        let t = xi[0] * xi[0] + xi[1] * xi[1];
        if t == 0.0 {
            return 0.0;
        }
        a * t.powf(0.5 * self.p) / self.p
    }

    /// Regularized Jacobian of the flux: `a (|ξ|²+δ²)^{(p−2)/2} [I + (p−2) ξξᵀ/(|ξ|²+δ²)]`.
    /// Symmetric positive definite for `δ > 0`; equal to the exact Jacobian at `δ = 0`, `ξ ≠ 0`.
    #[inline]
    pub fn jacobian_with(&self, a: f64, xi: [f64; 2], delta: f64) -> [[f64; 2]; 2] {
        let t = xi[0] * xi[0] + xi[1] * xi[1] + delta * delta;
        if t == 0.0 {
            return [[0.0; 2]; 2];
        }
        let s = a * t.powf(0.5 * (self.p - 2.0));
        let c = (self.p - 2.0) / t;
        [
            [s * (1.0 + c * xi[0] * xi[0]), s * c * xi[0] * xi[1]],
            [s * c * xi[0] * xi[1], s * (1.0 + c * xi[1] * xi[1])],
        ]
    }

    /// `a (|ξ|²+δ²)^{(p−2)/2} I`; for `p < 2` it dominates the exact Jacobian.
    #[inline]
    pub fn isotropic_jacobian_with(&self, a: f64, xi: [f64; 2], delta: f64) -> [[f64; 2]; 2] {
        let t = xi[0] * xi[0] + xi[1] * xi[1] + delta * delta;
        if t == 0.0 {
            return [[0.0; 2]; 2];
        }
        let s = a * t.powf(0.5 * (self.p - 2.0));
        [[s, 0.0], [0.0, s]]
    }
}

/// Data flux `|F|^{p-2} F`, with value 0 where `F = 0`.
#[inline]
pub fn data_flux(p: f64, f: [f64; 2]) -> [f64; 2] {
    let t = f[0] * f[0] + f[1] * f[1];
    if t == 0.0 {
        return [0.0, 0.0];
    }
    let s = t.powf(0.5 * (p - 2.0));
    [s * f[0], s * f[1]]
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// Outcome of sampling the structure conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureCheck {
    pub samples: usize,
    pub growth_violations: usize,
    pub monotonicity_violations: usize,
    /// Largest observed `|A(x, ξ)| / |ξ|^{p-1}`.
    pub max_growth_ratio: f64,
    /// Smallest observed monotonicity quotient.
    pub min_monotonicity_ratio: f64,
}

impl StructureCheck {
    pub fn passed(&self) -> bool {
        self.growth_violations == 0 && self.monotonicity_violations == 0
    }
}

/// Check growth and monotonicity on `samples` random triples `(x, ξ, η)`.
///
/// `x` ranges over the unit square, `ξ` and `η` have components of mixed magnitude
/// (uniform directions, log-uniform lengths in `[1e-3, 1e3]`), with a share of exactly
/// antipodal and exactly parallel pairs, where the bounds are tight.
pub fn sample_structure<R: Rng>(op: &OperatorSpec, samples: usize, rng: &mut R) -> StructureCheck {
    const SLACK: f64 = 1e-12;
    let p = op.p;
    let mut out = StructureCheck {
        samples,
        growth_violations: 0,
        monotonicity_violations: 0,
        max_growth_ratio: 0.0,
        min_monotonicity_ratio: f64::INFINITY,
    };
    let vector = |rng: &mut R| {
        let len = 10f64.powf(rng.random_range(-3.0..3.0));
        let th = rng.random_range(0.0..2.0 * PI);
        [len * th.cos(), len * th.sin()]
    };
    for k in 0..samples {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        let xi = vector(rng);
        let eta = match k % 4 {
            0 => [-xi[0], -xi[1]],
            1 => {
                let s = rng.random_range(0.0..1.0);
                [s * xi[0], s * xi[1]]
            }
            _ => vector(rng),
        };
        let a = op.flux(x, xi);
        let na = a[0].hypot(a[1]);
        let bound = xi[0].hypot(xi[1]).powf(p - 1.0);
        let g = na / bound;
        out.max_growth_ratio = out.max_growth_ratio.max(g);
        if g > op.lambda1 * (1.0 + SLACK) {
            out.growth_violations += 1;
        }
        let b = op.flux(x, eta);
        let d = [xi[0] - eta[0], xi[1] - eta[1]];
        let lhs = (a[0] - b[0]) * d[0] + (a[1] - b[1]) * d[1];
        let sq = xi[0] * xi[0] + xi[1] * xi[1] + eta[0] * eta[0] + eta[1] * eta[1];
        let rhs = sq.powf(0.5 * (p - 2.0)) * (d[0] * d[0] + d[1] * d[1]);
        if rhs > 0.0 {
            let m = lhs / rhs;
            out.min_monotonicity_ratio = out.min_monotonicity_ratio.min(m);
            if m < op.lambda2 * (1.0 - SLACK) {
                out.monotonicity_violations += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn structure_constants_hold_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [1.2, 1.5, 2.0, 3.0, 4.5] {
            for op in [OperatorSpec::canonical(p).unwrap(), OperatorSpec::weighted(p).unwrap()] {
                let check = sample_structure(&op, 10_000, &mut rng);
                assert!(check.passed(), "{op:?}: {check:?}");
            }
        }
    }

    #[test]
    fn canonical_constants_are_sharp() {
        // Antipodal pairs attain the constant for p ≥ 2, parallel pairs approach it for p < 2.
        for p in [1.5, 2.0, 3.0] {
            let op = OperatorSpec::canonical(p).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let check = sample_structure(&op, 20_000, &mut rng);
            assert!((check.max_growth_ratio - 1.0).abs() < 1e-12);
            assert!(check.min_monotonicity_ratio < op.lambda2 * 1.05, "p = {p}: {check:?}");
        }
    }

    #[test]
    fn rejects_small_exponent() {
        assert!(matches!(OperatorSpec::canonical(1.0), Err(Error::InvalidExponent(_))));
        assert!(matches!(OperatorSpec::weighted(0.5), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn jacobian_matches_finite_difference_of_flux() {
        let op = OperatorSpec::weighted(3.0).unwrap();
        let a = op.coefficient([0.2, 0.7]);
        let xi = [0.3, -1.1];
        let j = op.jacobian_with(a, xi, 0.0);
        let eps = 1e-6;
        for col in 0..2 {
            let mut xp = xi;
            let mut xm = xi;
            xp[col] += eps;
            xm[col] -= eps;
            let fp = op.flux_with(a, xp);
            let fm = op.flux_with(a, xm);
            for row in 0..2 {
                let fd = (fp[row] - fm[row]) / (2.0 * eps);
                assert!((fd - j[row][col]).abs() < 1e-6, "{row},{col}: {fd} vs {}", j[row][col]);
            }
        }
    }

    #[test]
    fn data_flux_vanishes_at_zero() {
        assert_eq!(data_flux(1.5, [0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(data_flux(2.0, [0.5, -2.0]), [0.5, -2.0]);
    }
}
