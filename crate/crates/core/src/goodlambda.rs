//! Good-λ experiments: level-set ratios, norm ratios, comparison audits and the
//! covering-lemma audit, each turning an estimate into measured constants.
//!
//! Maximal functions of `|∇u|^p` and of the data `|F|^p + |∇σ|^p` are evaluated on
//! the zero extension of both to the padded ambient grid and sampled at the cells of
//! Ω. Set measures count cells of Ω.

use rand::Rng;
use serde::Serialize;

use crate::domain::{extend_by_zero, DiscreteDomain};
use crate::error::{Error, Result};
use crate::field::{gradient, norm, CellField, GridFunction, VectorField};
use crate::grid::{CellSet, Grid, DIM};
use crate::lorentz::{lorentz_quasinorm, weak_quasinorm, LorentzParams, Sample};
use crate::maximal::{maximal_at, MaximalQuery};
use crate::operator::OperatorSpec;
use crate::solver::{boundary_region, mean_pow, reverse_holder_ratio, solve_comparison_boundary, solve_comparison_interior};

/// Number of λ values per sweep.
pub const LAMBDA_POINTS: usize = 40;
/// Upper bound on reverse-Hölder ratios accepted by [`estimate_theta`].
pub const THETA_BUDGET: f64 = 1e3;
/// Constant of the Vitali-type covering argument, `10ⁿ`.
pub const COVERING_CONSTANT: f64 = 100.0;

/// Exponents and grids of a good-λ sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodLambdaParams {
    pub alpha: f64,
    /// Level exponent: the gradient set is cut at `ε^{−a} λ`.
    pub a: f64,
    /// Data exponent: the data set is cut at `ε^b λ`.
    pub b: f64,
    pub epsilons: Vec<f64>,
    /// Reverse-Hölder exponent the exponents were derived from.
    pub theta_hat: Option<f64>,
}

impl GoodLambdaParams {
    /// `a = p(n−α)/(nΘ̂)` and `b = p(1 − a)`, with `ε = factor · ε₀` for each factor.
    pub fn from_theta(p: f64, alpha: f64, theta_hat: f64, epsilon_factors: &[f64]) -> Result<Self> {
        if !(theta_hat > p) {
            return Err(Error::InvalidParams(format!("theta {theta_hat} must exceed p = {p}")));
        }
        let n = DIM as f64;
        let a = p * (n - alpha) / (n * theta_hat);
        let eps0 = epsilon_zero(a);
        let params = GoodLambdaParams {
            alpha,
            a,
            b: p * (1.0 - a),
            epsilons: epsilon_factors.iter().map(|f| f * eps0).collect(),
            theta_hat: Some(theta_hat),
        };
        params.validate()?;
        Ok(params)
    }

    /// Explicit level exponent `a`, with `b = p(1 − a)`.
    pub fn with_level_exponent(p: f64, alpha: f64, a: f64, epsilons: Vec<f64>) -> Result<Self> {
        let params = GoodLambdaParams { alpha, a, b: p * (1.0 - a), epsilons, theta_hat: None };
        params.validate()?;
        Ok(params)
    }

    /// `ε₀ = 4^{−n/a}`, the largest value with `ε₀^{−a} ≥ 4ⁿ`.
    pub fn epsilon0(&self) -> f64 {
        epsilon_zero(self.a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..DIM as f64).contains(&self.alpha) {
            return Err(Error::InvalidOrder { alpha: self.alpha, n: DIM });
        }
        if !(self.a > 0.0 && self.a < 1.0 && self.b > 0.0 && self.a + self.b > 1.0) {
            return Err(Error::InvalidParams(format!("need 0 < a < 1, b > 0, a + b > 1: a = {}, b = {}", self.a, self.b)));
        }
        if self.epsilons.is_empty() {
            return Err(Error::InvalidParams("empty epsilon grid".into()));
        }
        let eps0 = self.epsilon0();
        for &eps in &self.epsilons {
            if !(eps > 0.0 && eps < eps0) {
                return Err(Error::EpsilonOutOfRange { eps, eps0 });
            }
        }
        Ok(())
    }
}

fn epsilon_zero(a: f64) -> f64 {
    4f64.powf(-(DIM as f64) / a)
}

/// Which set family a sweep uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// `M(|∇u|^p)` against `M(|F|^p + |∇σ|^p)`.
    Classical,
    /// `M M_α(|∇u|^p)` against `M_α(|F|^p + |∇σ|^p)`.
    Fractional,
}

/// Maximal functions of one order sampled at the cells of Ω.
#[derive(Debug, Clone)]
pub struct OrderFields {
    pub alpha: f64,
    /// `M_α(|∇u|^p)`.
    pub grad: Vec<f64>,
    /// `M(M_α(|∇u|^p))`.
    pub grad_composed: Vec<f64>,
    /// `M_α(|F|^p + |∇σ|^p)`.
    pub data: Vec<f64>,
}

/// Per-instance fields shared by every experiment on one solution.
#[derive(Debug, Clone)]
pub struct LevelFields {
    pub p: f64,
    /// Domain grid and Ω's cells on it; entry `k` of every sampled vector is cell `cells[k]`.
    pub grid: Grid,
    pub cells: Vec<usize>,
    /// `∑_Ω |∇u|^p hⁿ`.
    pub gradient_mass: f64,
    pub orders: Vec<OrderFields>,
}

impl LevelFields {
    /// Evaluate every maximal function needed for the orders `alphas`.
    pub fn compute(
        u: &GridFunction,
        f: &VectorField,
        sigma: &GridFunction,
        dom: &DiscreteDomain,
        p: f64,
        alphas: &[f64],
    ) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidParams("no fractional order requested".into()));
        }
        let grad_pow = dom.mask_cells(&gradient(u).norm_pow(p));
        let data_pow = dom.mask_cells(&f.norm_pow(p).add(&gradient(sigma).norm_pow(p)));
        let grad_amb = extend_by_zero(&grad_pow, dom);
        let data_amb = extend_by_zero(&data_pow, dom);
        let inside = dom.cells_in_ambient();
        let all: Vec<usize> = (0..grad_amb.grid.num_cells()).collect();
        let queries: Vec<MaximalQuery> = alphas.iter().map(|&a| MaximalQuery::full(a)).collect();
        let full = maximal_at(&grad_amb, &queries, &all)?;
        let data = maximal_at(&data_amb, &queries, inside.members())?;
        let mut orders = Vec::with_capacity(alphas.len());
        for ((&alpha, m_alpha), data) in alphas.iter().zip(full).zip(data) {
            let grad = inside.members().iter().map(|&c| m_alpha[c]).collect();
            let field = CellField { grid: grad_amb.grid, values: m_alpha };
            let grad_composed = maximal_at(&field, &[MaximalQuery::full(0.0)], inside.members())?.pop().unwrap();
            orders.push(OrderFields { alpha, grad, grad_composed, data });
        }
        Ok(LevelFields {
            p,
            grid: dom.grid,
            cells: dom.cells().members().to_vec(),
            gradient_mass: grad_pow.l1_norm(),
            orders,
        })
    }

    pub fn order(&self, alpha: f64) -> Result<&OrderFields> {
        self.orders
            .iter()
            .find(|o| o.alpha == alpha)
            .ok_or_else(|| Error::InvalidParams(format!("order {alpha} was not evaluated")))
    }

    /// `(gradient maximal, data maximal)` of a set family.
    pub fn family(&self, kind: SweepKind, alpha: f64) -> Result<(&[f64], &[f64])> {
        match kind {
            SweepKind::Classical => {
                let o = self.order(0.0)?;
                Ok((&o.grad, &o.data))
            }
            SweepKind::Fractional => {
                let o = self.order(alpha)?;
                Ok((&o.grad_composed, &o.data))
            }
        }
    }

    /// `(V_λ, W_λ)` as cell sets of the domain grid.
    pub fn level_sets(&self, kind: SweepKind, alpha: f64, a: f64, b: f64, eps: f64, lambda: f64) -> Result<(CellSet, CellSet)> {
        let (g, d) = self.family(kind, alpha)?;
        let (hi, lo) = (eps.powf(-a) * lambda, eps.powf(b) * lambda);
        let mut v = Vec::new();
        let mut w = Vec::new();
        for (k, &c) in self.cells.iter().enumerate() {
            if g[k] > lambda {
                w.push(c);
            }
            if g[k] > hi && d[k] <= lo {
                v.push(c);
            }
        }
        Ok((CellSet::new(self.grid, v), CellSet::new(self.grid, w)))
    }
}

/// Metadata sufficient to regenerate a row.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InstanceMeta {
    pub p: f64,
    pub alpha: f64,
    pub q: Option<f64>,
    pub s: Option<f64>,
    pub domain: String,
    pub h: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub lambda: f64,
    pub measure_v: f64,
    pub measure_w: f64,
    /// `|V| / (ε |W|)`; `None` when `W` is empty.
    pub ratio: Option<f64>,
}

/// Violations of the structural invariants of a sweep, counted row by row.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InvariantCounts {
    /// Rows with `V ⊄ W`.
    pub inclusion: usize,
    /// Consecutive λ with `|W|` increasing.
    pub lambda_w: usize,
    /// Consecutive λ with `|V|` increasing.
    pub lambda_v: usize,
    /// `V_λ(ε') ⊄ V_λ(ε)` for consecutive `ε' < ε`.
    pub epsilon: usize,
    /// Classical rows with `|V| > ε^a ∑|∇u|^p hⁿ C_weak / λ`.
    pub weak_bound: usize,
}

impl InvariantCounts {
    pub fn total(&self) -> usize {
        self.inclusion + self.lambda_w + self.lambda_v + self.epsilon + self.weak_bound
    }
}

/// Empirical constants of an instance; each is a maximum over rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Constants {
    pub c_goodlambda: Option<f64>,
    pub c_norm: Option<f64>,
    pub c_energy: Option<f64>,
    pub c_comparison: Option<f64>,
    pub theta_hat: Option<f64>,
    /// `sup_t t |{M(|∇u|^p) > t} ∩ Ω| / ∑|∇u|^p hⁿ`.
    pub c_weak: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub meta: InstanceMeta,
    pub kind: SweepKind,
    pub params: GoodLambdaParams,
    pub rows: Vec<SweepRow>,
    pub flagged_rows: usize,
    pub invariants: InvariantCounts,
    pub constants: Constants,
}

impl ExperimentReport {
    /// Largest ratio over unflagged rows.
    pub fn max_ratio(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.ratio).fold(None, |m, r| Some(m.map_or(r, |m: f64| m.max(r))))
    }

    /// `(λ, ratio)` pairs of one ε, flagged rows omitted.
    pub fn plot_series(&self, epsilon: f64) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.epsilon == epsilon).filter_map(|r| r.ratio.map(|q| (r.lambda, q))).collect()
    }
}

/// Nearest-rank percentile of `values`, `q` in `[0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    if v.is_empty() {
        return 0.0;
    }
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// `LAMBDA_POINTS` log-spaced values from the 1st to the 99.9th percentile.
pub fn lambda_grid(values: &[f64]) -> Result<Vec<f64>> {
    let hi = percentile(values, 0.999);
    if !(hi > 0.0) {
        return Err(Error::EmptyRange);
    }
    let lo = percentile(values, 0.01).max(hi * 1e-6);
    if lo >= hi {
        return Ok(vec![hi * (1.0 - 1e-12)]);
    }
    let step = (hi / lo).ln() / (LAMBDA_POINTS - 1) as f64;
    Ok((0..LAMBDA_POINTS).map(|k| lo * (step * k as f64).exp()).collect())
}

/// Sweep λ and ε over one set family of precomputed fields.
pub fn sweep(fields: &LevelFields, kind: SweepKind, params: &GoodLambdaParams, meta: InstanceMeta) -> Result<ExperimentReport> {
    params.validate()?;
    let alpha = match kind {
        SweepKind::Classical => 0.0,
        SweepKind::Fractional => params.alpha,
    };
    let (g, _) = fields.family(kind, alpha)?;
    let lambdas = lambda_grid(g)?;
    let vol = fields.grid.cell_volume();
    let c_weak = match kind {
        SweepKind::Classical if fields.gradient_mass > 0.0 => {
            Some(weak_quasinorm(Sample::new(g, vol), 1.0)? / fields.gradient_mass)
        }
        _ => None,
    };
    let mut epsilons = params.epsilons.clone();
    epsilons.sort_unstable_by(f64::total_cmp);
    let mut rows = Vec::new();
    let mut inv = InvariantCounts::default();
    // V sets of the previous (smaller) ε, per λ.
    let mut previous: Vec<Option<CellSet>> = vec![None; lambdas.len()];
    for &eps in &epsilons {
        let mut last: Option<(f64, f64)> = None;
        for (li, &lambda) in lambdas.iter().enumerate() {
            let (v, w) = fields.level_sets(kind, alpha, params.a, params.b, eps, lambda)?;
            let (mv, mw) = (v.measure(), w.measure());
            if !v.is_subset(&w) {
                inv.inclusion += 1;
            }
            if let Some((pv, pw)) = last {
                inv.lambda_w += usize::from(mw > pw);
                inv.lambda_v += usize::from(mv > pv);
            }
            if let Some(smaller) = &previous[li] {
                inv.epsilon += usize::from(!smaller.is_subset(&v));
            }
            if let Some(c) = c_weak {
                let bound = eps.powf(params.a) * fields.gradient_mass * c / lambda;
                inv.weak_bound += usize::from(mv > bound * (1.0 + 1e-12));
            }
            last = Some((mv, mw));
            rows.push(SweepRow { epsilon: eps, lambda, measure_v: mv, measure_w: mw, ratio: (mw > 0.0).then(|| mv / (eps * mw)) });
            previous[li] = Some(v);
        }
    }
    if rows.iter().all(|r| r.measure_w == 0.0) {
        return Err(Error::EmptyRange);
    }
    let flagged_rows = rows.iter().filter(|r| r.ratio.is_none()).count();
    let mut report = ExperimentReport {
        meta,
        kind,
        params: params.clone(),
        rows,
        flagged_rows,
        invariants: inv,
        constants: Constants { theta_hat: params.theta_hat, c_weak, ..Default::default() },
    };
    report.constants.c_goodlambda = report.max_ratio();
    Ok(report)
}

/// Classical sweep: `V_λ = {M(|∇u|^p) > ε^{−a}λ, M(|F|^p+|∇σ|^p) ≤ ε^bλ} ∩ Ω`, `W_λ = {M(|∇u|^p) > λ} ∩ Ω`.
pub fn good_lambda_sweep(
    u: &GridFunction,
    f: &VectorField,
    sigma: &GridFunction,
    dom: &DiscreteDomain,
    p: f64,
    params: &GoodLambdaParams,
) -> Result<ExperimentReport> {
    let fields = LevelFields::compute(u, f, sigma, dom, p, &[0.0])?;
    let meta = InstanceMeta { p, h: dom.h(), ..Default::default() };
    sweep(&fields, SweepKind::Classical, params, meta)
}

/// Fractional sweep with `M M_α(|∇u|^p)` and `M_α(|F|^p+|∇σ|^p)`.
pub fn good_lambda_fractional_sweep(
    u: &GridFunction,
    f: &VectorField,
    sigma: &GridFunction,
    dom: &DiscreteDomain,
    p: f64,
    params: &GoodLambdaParams,
) -> Result<ExperimentReport> {
    let fields = LevelFields::compute(u, f, sigma, dom, p, &[params.alpha])?;
    let meta = InstanceMeta { p, alpha: params.alpha, h: dom.h(), ..Default::default() };
    sweep(&fields, SweepKind::Fractional, params, meta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormRatio {
    pub alpha: f64,
    pub q: f64,
    pub s: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// `None` when the denominator vanishes.
    pub ratio: Option<f64>,
    /// `q` lies outside `(0, Θ̂ n / (p(n−α)))`.
    pub q_out_of_range: bool,
}

/// Upper end of the admissible `q` window, `Θ̂ n / (p(n−α))`.
pub fn q_window(p: f64, alpha: f64, theta_hat: f64) -> f64 {
    theta_hat * DIM as f64 / (p * (DIM as f64 - alpha))
}

/// `‖M_α(|∇u|^p)‖_{L^{q,s}(Ω)} / ‖M_α(|F|^p+|∇σ|^p)‖_{L^{q,s}(Ω)}` from precomputed fields.
pub fn norm_ratio(fields: &LevelFields, alpha: f64, lorentz: LorentzParams, theta_hat: f64) -> Result<NormRatio> {
    let o = fields.order(alpha)?;
    let vol = fields.grid.cell_volume();
    let numerator = lorentz_quasinorm(Sample::new(&o.grad, vol), lorentz)?;
    let denominator = lorentz_quasinorm(Sample::new(&o.data, vol), lorentz)?;
    let q_out_of_range = !(lorentz.q < q_window(fields.p, alpha, theta_hat));
    if q_out_of_range {
        log::warn!("q = {} outside the admissible window for p = {}, alpha = {alpha}", lorentz.q, fields.p);
    }
    Ok(NormRatio {
        alpha,
        q: lorentz.q,
        s: lorentz.s_value(),
        numerator,
        denominator,
        ratio: (denominator > 0.0).then(|| numerator / denominator),
        q_out_of_range,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn norm_estimate_ratio(
    u: &GridFunction,
    f: &VectorField,
    sigma: &GridFunction,
    dom: &DiscreteDomain,
    p: f64,
    alpha: f64,
    lorentz: LorentzParams,
    theta_hat: f64,
) -> Result<NormRatio> {
    let fields = LevelFields::compute(u, f, sigma, dom, p, &[alpha])?;
    norm_ratio(&fields, alpha, lorentz, theta_hat)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BallKind {
    /// `B_{2R}(x₀)` compactly inside Ω.
    Interior,
    /// `Ω ∩ B_{10R}(x₀)` with `x₀` on the boundary.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditBall {
    pub kind: BallKind,
    pub center: [f64; 2],
    /// `R`; the region has radius `2R` (interior) or `10R` (boundary).
    pub radius: f64,
}

impl AuditBall {
    pub fn region_radius(&self) -> f64 {
        match self.kind {
            BallKind::Interior => 2.0 * self.radius,
            BallKind::Boundary => 10.0 * self.radius,
        }
    }

    pub fn region(&self, dom: &DiscreteDomain) -> CellSet {
        match self.kind {
            BallKind::Interior => dom.grid.ball(self.center, 2.0 * self.radius),
            BallKind::Boundary => boundary_region(dom, self.center, self.radius),
        }
    }
}

fn ball_is_interior(dom: &DiscreteDomain, ball: &CellSet) -> bool {
    let g = dom.grid;
    ball.members().iter().all(|&c| {
        let (i, j) = g.cell_ij(c);
        (-1i64..=1).all(|dj| {
            (-1i64..=1).all(|di| {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                ni >= 0
                    && nj >= 0
                    && (ni as usize) < g.nx
                    && (nj as usize) < g.ny
                    && dom.is_interior(g.cell_index(ni as usize, nj as usize))
            })
        })
    })
}

/// Random interior balls with `2R ∈ [4h, max_interior]` and boundary balls with
/// `10R ∈ [4h, max_boundary]` centered at boundary nodes.
pub fn sample_balls<R: Rng>(
    dom: &DiscreteDomain,
    interior: usize,
    boundary: usize,
    max_interior: f64,
    max_boundary: f64,
    rng: &mut R,
) -> Result<Vec<AuditBall>> {
    let h = dom.h();
    let g = dom.grid;
    if !(max_interior >= 4.0 * h && max_boundary >= 4.0 * h) {
        return Err(Error::InvalidParams("ball radius bounds are below the 4h resolution floor".into()));
    }
    let cells = dom.cells();
    let mut out = Vec::with_capacity(interior + boundary);
    let mut attempts = 0;
    while out.len() < interior {
        attempts += 1;
        if attempts > 1000 * interior.max(1) {
            return Err(Error::InvalidParams("domain too thin for the requested interior balls".into()));
        }
        let c = cells.members()[rng.random_range(0..cells.len())];
        let center = g.cell_center(c);
        let radius = 0.5 * rng.random_range(4.0 * h..=max_interior);
        if ball_is_interior(dom, &g.ball(center, 2.0 * radius)) {
            out.push(AuditBall { kind: BallKind::Interior, center, radius });
        }
    }
    let nodes = dom.boundary_nodes();
    for _ in 0..boundary {
        let k = nodes[rng.random_range(0..nodes.len())];
        let radius = 0.1 * rng.random_range(4.0 * h..=max_boundary);
        out.push(AuditBall { kind: BallKind::Boundary, center: g.node_position(k), radius });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub kind: BallKind,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    /// `⨍ |∇u − ∇w|^p`.
    pub lhs: f64,
    /// `⨍ (|F|^p + |∇σ|^p) + (⨍ |∇u|^p)^{(p−1)/p} (⨍ |∇σ|^p)^{1/p}`.
    pub rhs: f64,
    /// `None` when both sides vanish.
    pub quotient: Option<f64>,
}

/// A comparison solution with a ball on which it is A-harmonic.
#[derive(Debug, Clone)]
pub struct HarmonicSample {
    pub w: GridFunction,
    pub center: [f64; 2],
    pub rho: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonAudit {
    pub rows: Vec<ComparisonRow>,
    /// Largest quotient over all rows.
    pub constant: Option<f64>,
    #[serde(skip)]
    pub harmonic: Vec<HarmonicSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Holdout {
    /// Constant fitted on the even-indexed rows.
    pub train_constant: f64,
    pub slack: f64,
    /// Odd-indexed rows with `lhs > slack · C · rhs`.
    pub violations: usize,
    pub tested: usize,
}

impl ComparisonAudit {
    /// Fit `C` on the even-indexed rows and test the odd-indexed rows against `slack · C`.
    pub fn holdout(&self, slack: f64) -> Holdout {
        let train = self.rows.iter().step_by(2).filter_map(|r| r.quotient).fold(0.0, f64::max);
        let test: Vec<&ComparisonRow> = self.rows.iter().skip(1).step_by(2).collect();
        let violations = test.iter().filter(|r| r.lhs > slack * train * r.rhs).count();
        Holdout { train_constant: train, slack, violations, tested: test.len() }
    }
}

/// Solve the comparison problem on each ball and evaluate both sides of the estimate.
pub fn comparison_estimate_audit(
    op: &OperatorSpec,
    u: &GridFunction,
    f: &VectorField,
    sigma: &GridFunction,
    dom: &DiscreteDomain,
    balls: &[AuditBall],
) -> Result<ComparisonAudit> {
    let p = op.p;
    let grad_u = gradient(u);
    let grad_s = gradient(sigma);
    let mut rows = Vec::with_capacity(balls.len());
    let mut harmonic = Vec::new();
    for ball in balls {
        let region = ball.region(dom);
        let w = match ball.kind {
            BallKind::Interior => solve_comparison_interior(op, u, sigma, &region, dom)?,
            BallKind::Boundary => solve_comparison_boundary(op, u, sigma, dom, ball.center, ball.radius)?,
        };
        let grad_w = gradient(&w);
        let m = region.members();
        let diff = VectorField {
            grid: dom.grid,
            values: grad_u.values.iter().zip(&grad_w.values).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect(),
        };
        let lhs = mean_pow(&diff, m, p);
        let data = m.iter().map(|&c| norm(f.values[c]).powf(p) + norm(grad_s.values[c]).powf(p)).sum::<f64>()
            / m.len() as f64;
        let rhs = data + mean_pow(&grad_u, m, p).powf((p - 1.0) / p) * mean_pow(&grad_s, m, p).powf(1.0 / p);
        let quotient = if rhs > 0.0 {
            Some(lhs / rhs)
        } else if lhs == 0.0 {
            None
        } else {
            Some(f64::INFINITY)
        };
        rows.push(ComparisonRow { kind: ball.kind, x: ball.center[0], y: ball.center[1], radius: ball.radius, lhs, rhs, quotient });
        harmonic.push(HarmonicSample { w, center: ball.center, rho: ball.region_radius() });
    }
    let constant = rows.iter().filter_map(|r| r.quotient).fold(None, |m, q| Some(m.map_or(q, |m: f64| m.max(q))));
    Ok(ComparisonAudit { rows, constant, harmonic })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaEstimate {
    pub candidates: Vec<f64>,
    /// Largest ratio over the corpus and scales, per candidate.
    pub max_ratios: Vec<f64>,
    /// Largest candidate within [`THETA_BUDGET`]; `None` if none is.
    pub theta_hat: Option<f64>,
    /// Usable `(sample, scale)` evaluations.
    pub evaluations: usize,
}

/// Largest `Θ ∈ {p + ½, p + 1, …, p + 4}` whose reverse-Hölder ratio stays within the
/// budget over the corpus at scales `ρ` and `ρ/2`. Samples with vanishing gradient are skipped.
pub fn estimate_theta(p: f64, corpus: &[HarmonicSample]) -> Result<ThetaEstimate> {
    if corpus.len() < 10 {
        return Err(Error::CorpusTooSmall(corpus.len()));
    }
    let candidates: Vec<f64> = (1..=8).map(|k| p + 0.5 * k as f64).collect();
    let mut max_ratios = vec![0.0f64; candidates.len()];
    let mut evaluations = 0;
    for s in corpus {
        let h = s.w.grid.h;
        for rho in [s.rho, 0.5 * s.rho] {
            if rho < 2.0 * h {
                continue;
            }
            let mut usable = false;
            for (k, &theta) in candidates.iter().enumerate() {
                match reverse_holder_ratio(&s.w, s.center, rho, theta, p) {
                    Ok(r) => {
                        max_ratios[k] = max_ratios[k].max(r);
                        usable = true;
                    }
                    Err(Error::DegenerateData) => {}
                    Err(e) => return Err(e),
                }
            }
            evaluations += usize::from(usable);
        }
    }
    let theta_hat =
        candidates.iter().zip(&max_ratios).filter(|(_, &r)| r <= THETA_BUDGET).map(|(&t, _)| t).fold(None, |m, t| {
            Some(m.map_or(t, |m: f64| m.max(t)))
        });
    Ok(ThetaEstimate { candidates, max_ratios, theta_hat, evaluations })
}

/// Ball `Q = B_R(x₀)` of the covering audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringBall {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringReport {
    pub epsilon: f64,
    pub r1: f64,
    /// `|V| < ε |B_{R₁}|`.
    pub smallness_holds: bool,
    /// `(x, r)` pairs tested for the density condition.
    pub sampled_pairs: usize,
    /// Pairs whose density triggered the inclusion test.
    pub triggered_pairs: usize,
    /// Both hypotheses hold.
    pub applicable: bool,
    /// Smallest `C` with `|V| ≤ C ε |W|` (0 for empty `V`).
    pub constant: Option<f64>,
    /// The conclusion holds with [`COVERING_CONSTANT`].
    pub conclusion_holds: Option<bool>,
}

/// Lattice cell count of a ball of radius `r` about a cell center.
fn lattice_count(r_cells: f64) -> usize {
    let k = r_cells.floor() as i64;
    let r2 = r_cells * r_cells;
    (-k..=k).map(|a| (-k..=k).filter(|b| ((a * a + b * b) as f64) <= r2).count()).sum()
}

/// Check the hypotheses of the covering lemma for `V ⊆ W ⊆ Q` and, if they hold,
/// its conclusion. Density is tested at every cell center of `Q` on the grid and
/// dyadic radii `R₁ 2^{−k} ≥ h`; balls are restricted to the grid.
pub fn covering_lemma_audit(v: &CellSet, w: &CellSet, q: CoveringBall, eps: f64, r1: f64) -> Result<CoveringReport> {
    let g = v.grid;
    let everything = CellSet::new(g, (0..g.num_cells()).collect());
    covering_lemma_audit_within(v, w, q, eps, r1, &everything)
}

/// [`covering_lemma_audit`] on the measure space `region`: `Q` and every ball
/// `B_r(x)` are intersected with `region`.
pub fn covering_lemma_audit_within(
    v: &CellSet,
    w: &CellSet,
    q: CoveringBall,
    eps: f64,
    r1: f64,
    region: &CellSet,
) -> Result<CoveringReport> {
    let g = v.grid;
    if w.grid != g || region.grid != g {
        return Err(Error::ShapeMismatch("V, W and the region live on different grids".into()));
    }
    if !(eps > 0.0 && eps < 1.0 && r1 > 0.0 && q.radius >= r1) {
        return Err(Error::InvalidParams(format!("need 0 < eps < 1 and 0 < R1 <= R: eps = {eps}, R1 = {r1}")));
    }
    let q_cells = g.ball(q.center, q.radius).intersection(region);
    if !v.is_subset(w) || !w.is_subset(&q_cells) {
        return Err(Error::InvalidNesting);
    }
    let h = g.h;
    let vol = g.cell_volume();
    let mut report = CoveringReport {
        epsilon: eps,
        r1,
        smallness_holds: v.measure() < eps * lattice_count(r1 / h) as f64 * vol,
        sampled_pairs: 0,
        triggered_pairs: 0,
        applicable: false,
        constant: None,
        conclusion_holds: None,
    };
    if !report.smallness_holds {
        return Ok(report);
    }
    let in_w = w.to_mask();
    let in_q = q_cells.to_mask();
    let mut r = r1;
    while r >= h * (1.0 - 1e-12) {
        let ball_measure = lattice_count(r / h) as f64 * vol;
        let k = (r / h).floor() as i64;
        let r2 = (r / h) * (r / h);
        // Density of V in B_r(x) for every x, by scattering V's cells.
        let mut density = vec![0usize; g.num_cells()];
        for &c in v.members() {
            let (i, j) = g.cell_ij(c);
            for dj in -k..=k {
                for di in -k..=k {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ((di * di + dj * dj) as f64) <= r2 && ni >= 0 && nj >= 0 && (ni as usize) < g.nx && (nj as usize) < g.ny {
                        density[g.cell_index(ni as usize, nj as usize)] += 1;
                    }
                }
            }
        }
        for &x in q_cells.members() {
            report.sampled_pairs += 1;
            if (density[x] as f64) * vol < eps * ball_measure {
                continue;
            }
            report.triggered_pairs += 1;
            let (i, j) = g.cell_ij(x);
            for dj in -k..=k {
                for di in -k..=k {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ((di * di + dj * dj) as f64) > r2 || ni < 0 || nj < 0 || ni as usize >= g.nx || nj as usize >= g.ny {
                        continue;
                    }
                    let c = g.cell_index(ni as usize, nj as usize);
                    if in_q[c] && !in_w[c] {
                        let p = g.cell_center(x);
                        return Err(Error::HypothesisViolated { x: p[0], y: p[1], r });
                    }
                }
            }
        }
        r *= 0.5;
    }
    report.applicable = true;
    let c = if v.is_empty() { 0.0 } else { v.measure() / (eps * w.measure()) };
    report.constant = Some(c);
    report.conclusion_holds = Some(c <= COVERING_CONSTANT);
    Ok(report)
}
