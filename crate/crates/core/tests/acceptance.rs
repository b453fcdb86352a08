//! Exit criteria of the laboratory. Each test prints one `PASS`/`FAIL` line and
//! asserts the criterion at its pinned tolerance.

mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reglab::capacity::{condenser_balls, p_capacity, thickness_certificate, ThicknessParams};
use reglab::cli::stability_factor;
use reglab::experiment::{
    audit_case, covering_rows, level_fields, solve_case, sweeps, theta_from_audit, AuditPlan, CaseSpec, DataSpec,
};
use reglab::goodlambda::{norm_ratio, SweepKind};
use reglab::inequalities::{
    cutoff_doubling_constant, localized_weak_constant, split_bound_check, tail_comparison_check, weak_type_constant,
};
use reglab::instance::{manufactured_exact, manufactured_gradient, series, InstanceParams};
use reglab::lorentz::{lebesgue_norm, lorentz_quasinorm, LorentzParams, Sample};
use reglab::maximal::{maximal_at, MaximalQuery};
use reglab::solver::{h1_error, solve_dirichlet};
use reglab::{build_domain, CellField, CellSet, Error, Grid, OperatorSpec, ShapeSpec};

const P_SET: [f64; 3] = [1.5, 2.0, 3.0];
const ALPHAS: [f64; 3] = [0.0, 0.5, 1.0];
const RADII: [f64; 3] = [0.1, 0.2, 0.4];
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const RESOLUTIONS: [usize; 2] = [32, 64];
const EPSILON_FACTORS: [f64; 3] = [0.25, 0.5, 0.9];
const SOLVER_TOL: f64 = 1e-8;
const STABILITY: f64 = 2.0;

fn verdict(id: u32, pass: bool, what: &str, detail: impl std::fmt::Display) {
    println!("criterion {id:>2} {}: {what}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn domains() -> [ShapeSpec; 3] {
    [ShapeSpec::Square { l: 1.0 }, ShapeSpec::LShape { l: 1.0 }, ShapeSpec::SquareMinusDisk { l: 1.0, r_hole: 0.25 }]
}

fn unit_grid(n: usize) -> Grid {
    Grid::new(n, n, 1.0 / n as f64, [0.0, 0.0])
}

fn random_field(n: usize, rng: &mut ChaCha8Rng) -> CellField {
    let g = unit_grid(n);
    let values = (0..g.num_cells()).map(|_| rng.random::<f64>().powi(3)).collect();
    CellField { grid: g, values }
}

/// Smooth nonnegative field: `|σ|` of a seeded data draw, sampled at cell centers.
fn smooth_field(n: usize, seed: u64) -> CellField {
    let [s, _, _] = series(seed, &InstanceParams::default());
    CellField::from_fn(unit_grid(n), |x| s.eval(x).abs())
}

#[test]
fn c01_manufactured_solution_converges() {
    let mut pass = true;
    let mut detail = Vec::new();
    for p in P_SET {
        let op = OperatorSpec::canonical(p).unwrap();
        let mut errors = Vec::new();
        for n in RESOLUTIONS {
            let dom = build_domain(&ShapeSpec::Square { l: 1.0 }, 1.0 / n as f64).unwrap();
            let inst = reglab::instance::manufactured_instance(dom.grid);
            let t = Instant::now();
            let u = solve_dirichlet(&op, &inst.f, &inst.sigma, &dom, SOLVER_TOL).unwrap();
            let elapsed = t.elapsed();
            pass &= elapsed < Duration::from_secs(60);
            errors.push(h1_error(&u, manufactured_exact, manufactured_gradient, &dom));
            detail.push(format!("p={p} n={n} {:.2}s", elapsed.as_secs_f64()));
        }
        let rate = (errors[0] / errors[1]).log2();
        pass &= rate >= 0.8;
        detail.push(format!("p={p} rate {rate:.3}"));
    }
    verdict(1, pass, "manufactured H1 rate >= 0.8, each solve < 60 s", detail.join(", "));
    assert!(pass);
}

#[test]
fn c02_affine_data_is_reproduced() {
    let mut worst = 0.0f64;
    for p in P_SET {
        for shape in domains() {
            let spec = CaseSpec {
                shape,
                op: OperatorSpec::canonical(p).unwrap(),
                h: 1.0 / 32.0,
                data: DataSpec::Affine { offset: 0.3, slope: [1.25, -0.75] },
            };
            let case = solve_case(&spec, SOLVER_TOL).unwrap();
            worst = worst.max(case.dom.mask_nodes(&case.u().sub(&case.sigma)).max_abs());
        }
    }
    let pass = worst <= SOLVER_TOL;
    verdict(2, pass, "affine data reproduced within 1e-8", format!("max nodal error {worst:.3e}"));
    assert!(pass);
}

#[test]
fn c03_maximal_matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let fields: Vec<CellField> = (0..20).map(|_| random_field(32, &mut rng)).collect();
    let mut queries = Vec::new();
    for alpha in ALPHAS {
        queries.push(MaximalQuery::full(alpha));
        for r in RADII {
            queries.push(MaximalQuery::cutoff(r, alpha));
            queries.push(MaximalQuery::tail(r, alpha));
        }
    }
    let all: Vec<usize> = (0..unit_grid(32).num_cells()).collect();
    let t = Instant::now();
    let fast: Vec<Vec<Vec<f64>>> = fields.iter().map(|f| maximal_at(f, &queries, &all).unwrap()).collect();
    let fast_time = t.elapsed();
    let mut mismatches = 0usize;
    for (f, fast) in fields.iter().zip(&fast) {
        let slow = common::oracle_maximal(f, &queries);
        for (a, b) in fast.iter().flatten().zip(slow.iter().flatten()) {
            mismatches += usize::from(a.to_bits() != b.to_bits());
        }
    }
    let pass = mismatches == 0 && fast_time < Duration::from_secs(30);
    verdict(
        3,
        pass,
        "fast maximal operators equal the oracle bit for bit, sweep < 30 s",
        format!("{mismatches} mismatches over {} values, sweep {:.2}s", 20 * queries.len() * all.len(), fast_time.as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn c04_pointwise_maximal_inequalities() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut split_violations, mut split_points, mut split_worst) = (0usize, 0usize, 0.0f64);
    let (mut tail_violations, mut tail_configs, mut tail_worst) = (0usize, 0usize, 0.0f64);
    for _ in 0..100 {
        let f = random_field(24, &mut rng);
        let n = f.grid.num_cells();
        let pairs: Vec<(usize, usize)> = (0..50).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
        for r in RADII {
            for alpha in ALPHAS {
                let s = split_bound_check(&f, alpha, r).unwrap();
                split_violations += s.violations;
                split_points += s.points;
                split_worst = split_worst.max(s.max_quotient);
                let t = tail_comparison_check(&f, alpha, r, &pairs).unwrap();
                tail_violations += t.violations;
                tail_configs += t.configurations;
                tail_worst = tail_worst.max(t.max_quotient);
            }
        }
    }
    let pass = split_violations == 0 && tail_violations == 0;
    verdict(
        4,
        pass,
        "three-term split bound and tail comparison hold everywhere",
        format!(
            "split bound {split_violations}/{split_points} violations (max lhs/rhs {split_worst:.4}); \
             tail comparison {tail_violations}/{tail_configs} violations (max {tail_worst:.4})"
        ),
    );
    assert!(pass);
}

#[test]
fn c05_weak_type_and_doubling_constants() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut weak = 0.0f64;
    for _ in 0..20 {
        weak = weak.max(weak_type_constant(&random_field(32, &mut rng)).unwrap().unwrap());
    }
    for n in RESOLUTIONS {
        let mut delta = CellField::zeros(unit_grid(n));
        delta.values[unit_grid(n).cell_index(n / 2, n / 2)] = 1.0;
        weak = weak.max(weak_type_constant(&delta).unwrap().unwrap());
        for seed in SEEDS {
            weak = weak.max(weak_type_constant(&smooth_field(n, seed)).unwrap().unwrap());
        }
    }
    let mut pass = weak.is_finite() && weak <= 9.0;
    let mut detail = vec![format!("weak (1,1) constant {weak:.4}")];
    for alpha in ALPHAS {
        let mut doubling = Vec::new();
        let mut localized = Vec::new();
        for n in RESOLUTIONS {
            let g = unit_grid(n);
            let ball = g.ball([0.5, 0.5], 0.25);
            let mut d = 0.0f64;
            let mut l = 0.0f64;
            for seed in SEEDS {
                let f = smooth_field(n, seed);
                d = d.max(cutoff_doubling_constant(&f, alpha, 0.2).unwrap());
                l = l.max(localized_weak_constant(&f, &ball, alpha).unwrap().unwrap());
            }
            doubling.push(Some(d));
            localized.push(Some(l));
        }
        let fd = stability_factor(&doubling);
        let fl = stability_factor(&localized);
        let ok = [fd, fl].iter().all(|f| f.is_some_and(|f| f <= STABILITY));
        pass &= ok;
        detail.push(format!("alpha={alpha} doubling {doubling:?} (x{fd:?}) localized {localized:?} (x{fl:?})"));
    }
    verdict(5, pass, "weak (1,1) <= 9; doubling and localized constants stable within 2", detail.join("; "));
    assert!(pass);
}

#[test]
fn c06_lorentz_consistency() {
    const TOL: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let f = random_field(16, &mut rng).map(|v| v - 0.3);
        let sample = Sample::new(&f.values, f.grid.cell_volume());
        for q in [0.5, 1.0, 2.0, 4.0] {
            let lorentz = lorentz_quasinorm(sample, LorentzParams::new(q, q).unwrap()).unwrap();
            let direct = f.values.iter().map(|v| v.abs().powf(q)).sum::<f64>() * f.grid.cell_volume();
            let direct = direct.powf(1.0 / q);
            worst = worst.max((lorentz - direct).abs() / direct);
            assert!((lebesgue_norm(sample, q) - direct).abs() <= TOL * direct);
        }
        let g = f.grid;
        let mask: Vec<bool> = (0..g.num_cells()).map(|_| rng.random::<f64>() < 0.3).collect();
        let set = CellSet::from_mask(g, &mask);
        if set.is_empty() {
            continue;
        }
        let chi: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let sample = Sample::new(&chi, g.cell_volume());
        for q in [0.5, 1.0, 2.0, 4.0] {
            for s in [0.5, 1.0, 2.0, 4.0, f64::INFINITY] {
                let got = lorentz_quasinorm(sample, LorentzParams::new(q, s).unwrap()).unwrap();
                let factor = if s.is_infinite() { 1.0 } else { (q / s).powf(1.0 / s) };
                let want = factor * set.measure().powf(1.0 / q);
                worst = worst.max((got - want).abs() / want);
            }
        }
    }
    let pass = worst <= TOL;
    verdict(6, pass, "Lorentz quasinorms match closed forms within 1e-10", format!("max relative error {worst:.3e}"));
    assert!(pass);
}

#[test]
fn c07_capacity_of_balls_and_monotonicity() {
    let r = 1.0;
    let h = r / 64.0;
    let half = 132usize;
    let g = Grid::new(2 * half + 1, 2 * half + 1, h, [-(half as f64 + 0.5) * h, -(half as f64 + 0.5) * h]);
    let x = g.cell_center(g.cell_index(half, half));
    let (k, b) = condenser_balls(&g, x, r);
    let cap = p_capacity(&k, &b, 2.0).unwrap();
    let exact = common::radial_capacity(2.0, r, 2.0 * r);
    let rel = (cap - exact).abs() / exact;
    let mut pass = rel <= 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut violations = 0usize;
    let mut pairs = 0usize;
    let g = unit_grid(20);
    let outer = g.ball([0.5, 0.5], 0.45);
    let inner = g.ball([0.5, 0.5], 0.35);
    for p in P_SET {
        for _ in 0..20 {
            let small: Vec<usize> = inner.members().iter().copied().filter(|_| rng.random::<f64>() < 0.05).collect();
            let large: Vec<usize> =
                inner.members().iter().copied().filter(|c| small.contains(c) || rng.random::<f64>() < 0.05).collect();
            let (ks, kl) = (CellSet::new(g, small), CellSet::new(g, large));
            let (cs, cl) = match (p_capacity(&ks, &outer, p), p_capacity(&kl, &outer, p)) {
                (Ok(a), Ok(b)) => (a, b),
                (a, b) => panic!("capacity failed: {a:?} {b:?}"),
            };
            pairs += 1;
            violations += usize::from(cs > cl * (1.0 + SOLVER_TOL));
        }
    }
    pass &= violations == 0 && pairs >= 20;
    verdict(
        7,
        pass,
        "cap2 of concentric balls within 5% of 2pi/ln2 at h = r/64; monotone in K",
        format!("cap {cap:.5} vs {exact:.5} (rel {rel:.4}); {violations} violations over {pairs} nested pairs"),
    );
    assert!(pass);
}

#[test]
fn c08_square_is_uniformly_thick() {
    let dom = build_domain(&ShapeSpec::Square { l: 1.0 }, 1.0 / 64.0).unwrap();
    let params = ThicknessParams { c0: 0.05, r0: 0.25, max_points: 200 };
    let t = Instant::now();
    let report = thickness_certificate(&dom, 2.0, &params).unwrap();
    let elapsed = t.elapsed();
    let min = report.min_ratio.unwrap_or(0.0);
    let pass = report.passed && min > 0.05 && elapsed < Duration::from_secs(600);
    verdict(
        8,
        pass,
        "unit square thickness certificate with c0 > 0.05 in < 10 min at h = 1/64",
        format!("{} rows, min ratio {min:.4}, {:.1}s", report.rows.len(), elapsed.as_secs_f64()),
    );
    assert!(pass);
}

struct SweepSummary {
    p: f64,
    alpha: f64,
    domain: String,
    kind: SweepKind,
    resolution: usize,
    max_ratio: Option<f64>,
    nonempty_v: usize,
    lambda_violations: usize,
    epsilon_violations: usize,
    inclusion_violations: usize,
}

struct NormSummary {
    p: f64,
    alpha: f64,
    domain: String,
    q: f64,
    s: f64,
    resolution: usize,
    ratio: Option<f64>,
    out_of_range: bool,
}

#[derive(Default)]
struct CoveringSummary {
    rows: usize,
    applicable: usize,
    conclusion_failures: usize,
    hypothesis_witnesses: Vec<String>,
    max_constant: f64,
    sampled_pairs: usize,
}

struct Corpus {
    thetas: Vec<(f64, f64)>,
    sweeps: Vec<SweepSummary>,
    norms: Vec<NormSummary>,
    covering: CoveringSummary,
    elapsed: Duration,
}

/// `Θ̂` per exponent, from the comparison solves on the manufactured instance.
fn theta_hat(p: f64) -> f64 {
    static THETAS: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let thetas = THETAS.get_or_init(|| {
        P_SET
            .iter()
            .map(|&p| {
                let spec = CaseSpec {
                    shape: ShapeSpec::Square { l: 1.0 },
                    op: OperatorSpec::canonical(p).unwrap(),
                    h: 1.0 / 32.0,
                    data: DataSpec::Manufactured,
                };
                let case = solve_case(&spec, SOLVER_TOL).unwrap();
                let audit = audit_case(&case, &AuditPlan::default()).unwrap();
                (p, theta_from_audit(p, &audit).unwrap().0)
            })
            .collect()
    });
    thetas.iter().find(|t| t.0 == p).unwrap().1
}

fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let start = Instant::now();
        let mut out = Corpus {
            thetas: P_SET.iter().map(|&p| (p, theta_hat(p))).collect(),
            sweeps: Vec::new(),
            norms: Vec::new(),
            covering: CoveringSummary::default(),
            elapsed: Duration::ZERO,
        };
        let lorentz: Vec<LorentzParams> = [0.5, 1.0, 2.0]
            .iter()
            .flat_map(|&q| [1.0, 2.0, f64::INFINITY].map(|s| LorentzParams::new(q, s).unwrap()))
            .collect();
        for p in P_SET {
            let theta = theta_hat(p);
            for shape in domains() {
                for n in RESOLUTIONS {
                    for seed in SEEDS {
                        let spec = CaseSpec {
                            shape,
                            op: OperatorSpec::canonical(p).unwrap(),
                            h: 1.0 / n as f64,
                            data: DataSpec::Random { seed, params: InstanceParams::default() },
                        };
                        let case = solve_case(&spec, SOLVER_TOL).unwrap();
                        let fields = level_fields(&case, &ALPHAS).unwrap();
                        for rep in sweeps(&case, &fields, &ALPHAS, theta, &EPSILON_FACTORS).unwrap() {
                            out.sweeps.push(SweepSummary {
                                p,
                                alpha: rep.meta.alpha,
                                domain: shape.to_string(),
                                kind: rep.kind,
                                resolution: n,
                                max_ratio: rep.max_ratio(),
                                nonempty_v: rep.rows.iter().filter(|r| r.measure_v > 0.0).count(),
                                lambda_violations: rep.invariants.lambda_w + rep.invariants.lambda_v,
                                epsilon_violations: rep.invariants.epsilon,
                                inclusion_violations: rep.invariants.inclusion,
                            });
                            let cov = &mut out.covering;
                            match covering_rows(&case, &fields, &rep) {
                                Ok(rows) => {
                                    for row in rows {
                                        cov.rows += 1;
                                        cov.sampled_pairs += row.sampled_pairs;
                                        if row.applicable {
                                            cov.applicable += 1;
                                            cov.max_constant = cov.max_constant.max(row.constant.unwrap());
                                            cov.conclusion_failures += usize::from(row.conclusion_holds == Some(false));
                                        }
                                    }
                                }
                                Err(e @ Error::HypothesisViolated { .. }) => {
                                    cov.hypothesis_witnesses.push(format!("{} p={p} n={n} seed={seed}: {e}", shape))
                                }
                                Err(e) => panic!("covering audit failed: {e}"),
                            }
                        }
                        for alpha in ALPHAS {
                            for &l in &lorentz {
                                let r = norm_ratio(&fields, alpha, l, theta).unwrap();
                                out.norms.push(NormSummary {
                                    p,
                                    alpha,
                                    domain: shape.to_string(),
                                    q: r.q,
                                    s: r.s,
                                    resolution: n,
                                    ratio: r.ratio,
                                    out_of_range: r.q_out_of_range,
                                });
                            }
                        }
                    }
                }
            }
        }
        out.elapsed = start.elapsed();
        out
    })
}

fn max_over<'a>(values: impl Iterator<Item = Option<f64>> + 'a) -> Option<f64> {
    values.fold(None, |m, v| match (m, v) {
        (Some(a), Some(b)) => Some(f64::max(a, b)),
        (a, None) => a,
        (None, b) => b,
    })
}

#[test]
fn c09_good_lambda_sweeps() {
    let c = corpus();
    let mut pass = true;
    let mut lines = Vec::new();
    for p in P_SET {
        for shape in domains() {
            let domain = shape.to_string();
            let mut families: Vec<(SweepKind, f64)> = vec![(SweepKind::Classical, 0.0)];
            families.extend(ALPHAS.iter().map(|&a| (SweepKind::Fractional, a)));
            for (kind, alpha) in families {
                let rows: Vec<&SweepSummary> =
                    c.sweeps.iter().filter(|s| s.p == p && s.domain == domain && s.kind == kind && s.alpha == alpha).collect();
                let maxima: Vec<Option<f64>> = RESOLUTIONS
                    .iter()
                    .map(|&n| max_over(rows.iter().filter(|s| s.resolution == n).map(|s| s.max_ratio)))
                    .collect();
                let factor = stability_factor(&maxima);
                let finite = maxima.iter().all(|m| m.is_some_and(f64::is_finite));
                let lambda: usize = rows.iter().map(|s| s.lambda_violations).sum();
                let epsilon: usize = rows.iter().map(|s| s.epsilon_violations).sum();
                let inclusion: usize = rows.iter().map(|s| s.inclusion_violations).sum();
                let nonempty: usize = rows.iter().map(|s| s.nonempty_v).sum();
                let ok = finite && factor.is_some_and(|f| f <= STABILITY) && lambda == 0 && epsilon == 0 && inclusion == 0;
                pass &= ok;
                lines.push(format!(
                    "  {} p={p} {kind:?} alpha={alpha} {domain}: maxima {maxima:?} factor {factor:?}, rows with nonempty V {nonempty}, \
                     violations lambda {lambda} epsilon {epsilon} inclusion {inclusion}",
                    if ok { "ok  " } else { "FAIL" }
                ));
            }
        }
    }
    verdict(
        9,
        pass,
        "good-lambda ratios finite and stable within 2 under h: 1/32 -> 1/64; monotonicity holds",
        format!("thetas {:?}, corpus built in {:.1}s\n{}", c.thetas, c.elapsed.as_secs_f64(), lines.join("\n")),
    );
    assert!(pass);
}

#[test]
fn c10_norm_estimate_ratios() {
    let c = corpus();
    let mut pass = true;
    let mut lines = Vec::new();
    let mut excluded = 0usize;
    for p in P_SET {
        for shape in domains() {
            let domain = shape.to_string();
            for alpha in ALPHAS {
                for q in [0.5, 1.0, 2.0] {
                    for s in [1.0, 2.0, f64::INFINITY] {
                        let rows: Vec<&NormSummary> = c
                            .norms
                            .iter()
                            .filter(|r| r.p == p && r.domain == domain && r.alpha == alpha && r.q == q && r.s == s)
                            .collect();
                        if rows.iter().any(|r| r.out_of_range) {
                            excluded += rows.len();
                            continue;
                        }
                        let maxima: Vec<Option<f64>> = RESOLUTIONS
                            .iter()
                            .map(|&n| max_over(rows.iter().filter(|r| r.resolution == n).map(|r| r.ratio)))
                            .collect();
                        let factor = stability_factor(&maxima);
                        let ok = maxima.iter().all(|m| m.is_some_and(f64::is_finite)) && factor.is_some_and(|f| f <= STABILITY);
                        pass &= ok;
                        if !ok {
                            lines.push(format!("  FAIL p={p} alpha={alpha} q={q} s={s} {domain}: {maxima:?} factor {factor:?}"));
                        }
                    }
                }
            }
        }
    }
    verdict(
        10,
        pass,
        "norm ratios inside the q window finite and stable within 2",
        format!("{} rows, {excluded} out-of-window rows excluded\n{}", c.norms.len(), lines.join("\n")),
    );
    assert!(pass);
}

#[test]
fn c11_comparison_estimate_audit() {
    let plan = AuditPlan::default();
    let mut pass = true;
    let mut lines = Vec::new();
    for p in P_SET {
        let op = OperatorSpec::canonical(p).unwrap();
        let mut specs = vec![CaseSpec { shape: ShapeSpec::Square { l: 1.0 }, op, h: 1.0 / 32.0, data: DataSpec::Manufactured }];
        specs.extend(domains().map(|shape| CaseSpec {
            shape,
            op,
            h: 1.0 / 32.0,
            data: DataSpec::Random { seed: 1, params: InstanceParams::default() },
        }));
        for spec in specs {
            let case = solve_case(&spec, SOLVER_TOL).unwrap();
            let audit = audit_case(&case, &plan).unwrap();
            let holdout = audit.holdout(plan.slack);
            let finite = audit.rows.len() == plan.interior + plan.boundary
                && audit.constant.is_some_and(f64::is_finite)
                && holdout.train_constant.is_finite();
            let ok = finite && holdout.violations == 0;
            pass &= ok;
            lines.push(format!(
                "  {} p={p} {} {:?}: C {:?}, train C {:.4}, held-out violations {}/{}",
                if ok { "ok  " } else { "FAIL" },
                spec.shape,
                spec.data,
                audit.constant,
                holdout.train_constant,
                holdout.violations,
                holdout.tested
            ));
        }
    }
    verdict(11, pass, "one finite comparison constant per instance; holdout with slack 2 clean", format!("\n{}", lines.join("\n")));
    assert!(pass);
}

#[test]
fn c12_covering_lemma_audit() {
    let c = corpus();
    let cov = &c.covering;
    let pass = cov.hypothesis_witnesses.is_empty() && cov.conclusion_failures == 0;
    verdict(
        12,
        pass,
        "covering conclusion holds on every applicable sweep row; no hypothesis witness",
        format!(
            "{} rows, {} applicable, {} conclusion failures, max C {:.4}, {} sampled (x, r) pairs, witnesses {:?}",
            cov.rows, cov.applicable, cov.conclusion_failures, cov.max_constant, cov.sampled_pairs, cov.hypothesis_witnesses
        ),
    );
    assert!(pass);
}
