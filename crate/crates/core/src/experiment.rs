//! End-to-end pipelines shared by the command line and the test suites: build a
//! domain, draw data, solve, and run the good-λ experiments on the solution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{build_domain, DiscreteDomain, ShapeSpec};
use crate::error::{Error, Result};
use crate::field::{GridFunction, VectorField};
use crate::goodlambda::{
    comparison_estimate_audit, covering_lemma_audit_within, estimate_theta, sample_balls, sweep, ComparisonAudit,
    CoveringBall, ExperimentReport, GoodLambdaParams, InstanceMeta, LevelFields, SweepKind, ThetaEstimate,
};
use crate::instance::{generate_instance, manufactured_instance, InstanceParams};
use crate::operator::OperatorSpec;
use crate::solver::{solve_dirichlet_report, Solution};

/// Source of `(F, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSpec {
    Random { seed: u64, params: InstanceParams },
    /// `F = ∇u*`, `σ = u*` with `u* = sin(πx₁) sin(πx₂)`.
    Manufactured,
    /// `F = 0`, `σ = c + g·x`.
    Affine { offset: f64, slope: [f64; 2] },
}

impl DataSpec {
    pub fn seed(&self) -> u64 {
        match self {
            DataSpec::Random { seed, .. } => *seed,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseSpec {
    pub shape: ShapeSpec,
    pub op: OperatorSpec,
    pub h: f64,
    pub data: DataSpec,
}

#[derive(Debug, Clone)]
pub struct SolvedCase {
    pub spec: CaseSpec,
    pub dom: DiscreteDomain,
    pub f: VectorField,
    pub sigma: GridFunction,
    pub solution: Solution,
}

impl SolvedCase {
    pub fn u(&self) -> &GridFunction {
        &self.solution.u
    }

    pub fn meta(&self) -> InstanceMeta {
        InstanceMeta {
            p: self.spec.op.p,
            domain: self.spec.shape.to_string(),
            h: self.spec.h,
            seed: self.spec.data.seed(),
            ..Default::default()
        }
    }
}

pub fn solve_case(spec: &CaseSpec, tol: f64) -> Result<SolvedCase> {
    let dom = build_domain(&spec.shape, spec.h)?;
    let (f, sigma) = match spec.data {
        DataSpec::Random { seed, params } => {
            let inst = generate_instance(dom.grid, seed, &params)?;
            (inst.f, inst.sigma)
        }
        DataSpec::Manufactured => {
            let inst = manufactured_instance(dom.grid);
            (inst.f, inst.sigma)
        }
        DataSpec::Affine { offset, slope } => (
            VectorField::zeros(dom.grid),
            GridFunction::from_fn(dom.grid, |x| offset + slope[0] * x[0] + slope[1] * x[1]),
        ),
    };
    let solution = solve_dirichlet_report(&spec.op, &f, &sigma, &dom, tol)?;
    Ok(SolvedCase { spec: *spec, dom, f, sigma, solution })
}

/// Level fields of a solved case for the orders `alphas` (0 is always included).
pub fn level_fields(case: &SolvedCase, alphas: &[f64]) -> Result<LevelFields> {
    let mut orders = vec![0.0];
    orders.extend(alphas.iter().copied().filter(|&a| a != 0.0));
    LevelFields::compute(case.u(), &case.f, &case.sigma, &case.dom, case.spec.op.p, &orders)
}

/// Classical sweep plus one fractional sweep per order, with `ε = factor · ε₀` and the
/// exponents derived from `theta_hat`.
pub fn sweeps(
    case: &SolvedCase,
    fields: &LevelFields,
    alphas: &[f64],
    theta_hat: f64,
    epsilon_factors: &[f64],
) -> Result<Vec<ExperimentReport>> {
    let p = case.spec.op.p;
    let mut out = Vec::with_capacity(alphas.len() + 1);
    let classical = GoodLambdaParams::from_theta(p, 0.0, theta_hat, epsilon_factors)?;
    out.push(sweep(fields, SweepKind::Classical, &classical, case.meta())?);
    for &alpha in alphas {
        let params = GoodLambdaParams::from_theta(p, alpha, theta_hat, epsilon_factors)?;
        let meta = InstanceMeta { alpha, ..case.meta() };
        out.push(sweep(fields, SweepKind::Fractional, &params, meta)?);
    }
    Ok(out)
}

/// Covering audit of one sweep row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringRow {
    pub kind: SweepKind,
    pub alpha: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub smallness_holds: bool,
    pub sampled_pairs: usize,
    pub triggered_pairs: usize,
    pub applicable: bool,
    pub constant: Option<f64>,
    pub conclusion_holds: Option<bool>,
}

/// `Q = B_R(x₀)` with `x₀` the center of the domain grid and `R` its half diagonal
/// plus `h`, so that `Ω ⊆ Q`; `R₁ = R / 2`.
pub fn covering_ball(dom: &DiscreteDomain) -> (CoveringBall, f64) {
    let g = dom.grid;
    let (wx, wy) = (g.nx as f64 * g.h, g.ny as f64 * g.h);
    let center = [g.origin[0] + 0.5 * wx, g.origin[1] + 0.5 * wy];
    let radius = 0.5 * wx.hypot(wy) + g.h;
    (CoveringBall { center, radius }, 0.5 * radius)
}

/// Run the covering audit on every row of a sweep, with balls measured inside Ω.
pub fn covering_rows(case: &SolvedCase, fields: &LevelFields, report: &ExperimentReport) -> Result<Vec<CoveringRow>> {
    let (q, r1) = covering_ball(&case.dom);
    let omega = case.dom.cells();
    let p = &report.params;
    let alpha = match report.kind {
        SweepKind::Classical => 0.0,
        SweepKind::Fractional => p.alpha,
    };
    report
        .rows
        .iter()
        .map(|row| {
            let (v, w) = fields.level_sets(report.kind, alpha, p.a, p.b, row.epsilon, row.lambda)?;
            let c = covering_lemma_audit_within(&v, &w, q, row.epsilon, r1, &omega)?;
            Ok(CoveringRow {
                kind: report.kind,
                alpha,
                epsilon: row.epsilon,
                lambda: row.lambda,
                smallness_holds: c.smallness_holds,
                sampled_pairs: c.sampled_pairs,
                triggered_pairs: c.triggered_pairs,
                applicable: c.applicable,
                constant: c.constant,
                conclusion_holds: c.conclusion_holds,
            })
        })
        .collect()
}

/// Ball sampling of the comparison audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditPlan {
    pub interior: usize,
    pub boundary: usize,
    /// Largest `2R` of interior balls.
    pub max_interior: f64,
    /// Largest `10R` of boundary balls.
    pub max_boundary: f64,
    pub seed: u64,
    /// Holdout slack factor.
    pub slack: f64,
}

impl Default for AuditPlan {
    fn default() -> Self {
        AuditPlan { interior: 50, boundary: 20, max_interior: 0.25, max_boundary: 0.5, seed: 7, slack: 2.0 }
    }
}

pub fn audit_case(case: &SolvedCase, plan: &AuditPlan) -> Result<ComparisonAudit> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let balls = sample_balls(&case.dom, plan.interior, plan.boundary, plan.max_interior, plan.max_boundary, &mut rng)?;
    comparison_estimate_audit(&case.spec.op, case.u(), &case.f, &case.sigma, &case.dom, &balls)
}

/// `Θ̂` from the comparison solutions of an audit.
pub fn theta_from_audit(p: f64, audit: &ComparisonAudit) -> Result<(f64, ThetaEstimate)> {
    let est = estimate_theta(p, &audit.harmonic)?;
    match est.theta_hat {
        Some(t) => Ok((t, est)),
        None => Err(Error::InvalidParams(format!(
            "no reverse-Hölder exponent stays within the budget; smallest candidate ratio {}",
            est.max_ratios[0]
        ))),
    }
}
