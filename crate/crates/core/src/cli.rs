//! Command-line front end. Exit codes: 0 success, 1 usage or validation error,
//! 2 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::capacity::thickness_certificate;
use crate::config::{ExperimentConfig, ThetaChoice};
use crate::domain::{build_domain, extend_by_zero};
use crate::error::{Error, Result};
use crate::experiment::{
    audit_case, covering_rows, level_fields, solve_case, sweeps, theta_from_audit, CaseSpec, DataSpec, SolvedCase,
};
use crate::field::{gradient, CellField};
use crate::goodlambda::{norm_ratio, BallKind, SweepKind};
use crate::grid::Grid;
use crate::instance::{manufactured_exact, manufactured_gradient};
use crate::io::{write_csv, write_json, write_pairs, RawGrid};
use crate::lorentz::{distribution_table, lorentz_quasinorm, Sample};
use crate::maximal::{maximal_at, MaximalQuery};
use crate::solver::{energy_ratio, h1_error};

#[derive(Debug, Parser)]
#[command(name = "reglab", version, about = "Gradient-estimate laboratory for quasilinear elliptic equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `run.out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Source {
    /// RGL1 cell grid to analyse instead of the configured data field.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Resolution `N` (h = 1/N); defaults to the finest configured one.
    #[arg(long)]
    resolution: Option<usize>,
    /// Data seed; defaults to the first configured one.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the Dirichlet problem and write `u.grid` and `convergence.csv`.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
    },
    /// Fractional, cut-off and tail maximal functions of a cell field.
    Maximal {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
        /// Cut-off radius; adds `M^r_α` and `T^r_α`.
        #[arg(long)]
        r: Option<f64>,
    },
    /// Lorentz quasinorms and the distribution function of a cell field.
    Lorentz {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
    },
    /// Uniform thickness certificate of the configured domain.
    Capacity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Good-λ sweeps, norm ratios and covering audits over every configured case.
    Goodlambda {
        #[command(flatten)]
        common: Common,
    },
    /// Comparison-estimate audit, reverse-Hölder exponent and energy ratios.
    Audit {
        #[command(flatten)]
        common: Common,
    },
    /// Summarize the JSON outputs found in a directory.
    Report {
        /// Directory holding `goodlambda.json` and/or `audit.json`.
        #[arg(long)]
        dir: PathBuf,
    },
}

/// Parse `args` (including the program name), run the subcommand and return the exit code.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let out = common.out.clone().unwrap_or_else(|| cfg.out.clone());
    fs::create_dir_all(&out)?;
    Ok((cfg, out))
}

fn pick_case(cfg: &ExperimentConfig, source: &Source) -> Result<CaseSpec> {
    let n = source.resolution.unwrap_or(*cfg.resolutions.last().expect("validated"));
    if n == 0 {
        return Err(Error::Config("resolution: must be positive".into()));
    }
    let seed = source.seed.unwrap_or(cfg.data.seeds[0]);
    Ok(CaseSpec { shape: cfg.shape, op: cfg.operator, h: 1.0 / n as f64, data: cfg.data_spec(seed) })
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Solve { common, source } => {
            let (cfg, out) = load(&common)?;
            solve(&cfg, &pick_case(&cfg, &source)?, &out)
        }
        Command::Maximal { common, source, r } => {
            let (cfg, out) = load(&common)?;
            maximal(&cfg, &source, r, &out)
        }
        Command::Lorentz { common, source } => {
            let (cfg, out) = load(&common)?;
            lorentz(&cfg, &source, &out)
        }
        Command::Capacity { common, resolution } => {
            let (cfg, out) = load(&common)?;
            capacity(&cfg, resolution, &out)
        }
        Command::Goodlambda { common } => {
            let (cfg, out) = load(&common)?;
            goodlambda(&cfg, &out)
        }
        Command::Audit { common } => {
            let (cfg, out) = load(&common)?;
            audit(&cfg, &out)
        }
        Command::Report { dir } => report(&dir),
    }
}

#[derive(Serialize)]
struct ConvergenceRow {
    step: usize,
    energy: f64,
    residual: f64,
}

fn solve(cfg: &ExperimentConfig, spec: &CaseSpec, out: &Path) -> Result<()> {
    let case = solve_case(spec, cfg.tol)?;
    RawGrid::from_nodes(case.u()).write(&out.join("u.grid"))?;
    let r = &case.solution.report;
    let rows: Vec<ConvergenceRow> = r
        .energy_history
        .iter()
        .zip(&r.residual_history)
        .enumerate()
        .map(|(step, (&energy, &residual))| ConvergenceRow { step, energy, residual })
        .collect();
    write_csv(&out.join("convergence.csv"), &rows)?;
    let h1 = matches!(spec.data, DataSpec::Manufactured)
        .then(|| h1_error(case.u(), manufactured_exact, manufactured_gradient, &case.dom));
    write_json(
        &out.join("solve.json"),
        &json!({
            "meta": case.meta(),
            "operator": spec.op,
            "data": spec.data,
            "iterations": r.iterations,
            "residual": r.residual,
            "unknowns": r.unknowns,
            "h1_error": h1,
            "timestamp": timestamp(),
        }),
    )?;
    println!("solved {} unknowns in {} steps, residual {:.3e}", r.unknowns, r.iterations, r.residual);
    Ok(())
}

/// The field to analyse: an input file, or `|F|^p + |∇σ|^p` of the configured case
/// on Ω extended by zero to the padded grid.
fn source_field(cfg: &ExperimentConfig, source: &Source) -> Result<CellField> {
    if let Some(path) = &source.input {
        let raw = RawGrid::read(path)?;
        let grid = Grid::new(raw.dims[1], raw.dims[0], raw.h, [0.0, 0.0]);
        return raw.into_cells(grid);
    }
    let spec = pick_case(cfg, source)?;
    let dom = build_domain(&spec.shape, spec.h)?;
    let case = match spec.data {
        DataSpec::Random { seed, params } => crate::instance::generate_instance(dom.grid, seed, &params)?,
        DataSpec::Manufactured => crate::instance::manufactured_instance(dom.grid),
        DataSpec::Affine { .. } => {
            return Err(Error::Config("data.kind: affine data has no field to analyse".into()));
        }
    };
    let p = spec.op.p;
    let data = dom.mask_cells(&case.f.norm_pow(p).add(&gradient(&case.sigma).norm_pow(p)));
    Ok(extend_by_zero(&data, &dom))
}

#[derive(Serialize)]
struct MaximalRow {
    alpha: f64,
    mode: &'static str,
    r: Option<f64>,
    max: f64,
    mean: f64,
    file: String,
}

fn maximal(cfg: &ExperimentConfig, source: &Source, r: Option<f64>, out: &Path) -> Result<()> {
    let f = source_field(cfg, source)?;
    RawGrid::from_cells(&f).write(&out.join("input.grid"))?;
    let mut queries = Vec::new();
    let mut labels = Vec::new();
    for &alpha in &cfg.grids.alpha {
        queries.push(MaximalQuery::full(alpha));
        labels.push((alpha, "full", None));
        if let Some(r) = r {
            queries.push(MaximalQuery::cutoff(r, alpha));
            labels.push((alpha, "cutoff", Some(r)));
            queries.push(MaximalQuery::tail(r, alpha));
            labels.push((alpha, "tail", Some(r)));
        }
    }
    let all: Vec<usize> = (0..f.grid.num_cells()).collect();
    let values = maximal_at(&f, &queries, &all)?;
    let mut rows = Vec::new();
    for ((alpha, mode, r), v) in labels.into_iter().zip(values) {
        let file = format!("maximal_{mode}_a{alpha}.grid");
        let field = CellField { grid: f.grid, values: v };
        RawGrid::from_cells(&field).write(&out.join(&file))?;
        let max = field.values.iter().fold(0.0f64, |m, &x| m.max(x));
        let mean = field.values.iter().sum::<f64>() / field.values.len() as f64;
        rows.push(MaximalRow { alpha, mode, r, max, mean, file });
    }
    write_csv(&out.join("maximal.csv"), &rows)?;
    println!("wrote {} maximal fields", rows.len());
    Ok(())
}

#[derive(Serialize)]
struct LorentzRow {
    q: f64,
    s: f64,
    quasinorm: f64,
}

fn lorentz(cfg: &ExperimentConfig, source: &Source, out: &Path) -> Result<()> {
    let f = source_field(cfg, source)?;
    let sample = Sample::new(&f.values, f.grid.cell_volume());
    let rows = cfg
        .lorentz_params()
        .into_iter()
        .map(|params| Ok(LorentzRow { q: params.q, s: params.s_value(), quasinorm: lorentz_quasinorm(sample, params)? }))
        .collect::<Result<Vec<_>>>()?;
    write_csv(&out.join("lorentz.csv"), &rows)?;
    write_pairs(&out.join("distribution.csv"), ["lambda", "measure"], &distribution_table(sample))?;
    println!("wrote {} quasinorms", rows.len());
    Ok(())
}

fn capacity(cfg: &ExperimentConfig, resolution: Option<usize>, out: &Path) -> Result<()> {
    let n = resolution.unwrap_or(*cfg.resolutions.last().expect("validated"));
    let dom = build_domain(&cfg.shape, 1.0 / n.max(1) as f64)?;
    let report = thickness_certificate(&dom, cfg.operator.p, &cfg.thickness)?;
    write_csv(&out.join("thickness.csv"), &report.rows)?;
    write_json(
        &out.join("capacity.json"),
        &json!({
            "domain": cfg.shape.to_string(),
            "h": dom.h(),
            "p": report.p,
            "params": report.params,
            "skipped_radii": report.skipped_radii,
            "notice": report.notice,
            "min_ratio": report.min_ratio,
            "passed": report.passed,
            "timestamp": timestamp(),
        }),
    )?;
    match &report.notice {
        Some(n) => println!("{n}"),
        None => println!("thickness certificate {} (min ratio {:?})", if report.passed { "passed" } else { "failed" }, report.min_ratio),
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepCsvRow {
    domain: String,
    p: f64,
    alpha: f64,
    h: f64,
    seed: u64,
    kind: SweepKind,
    a: f64,
    b: f64,
    epsilon: f64,
    lambda: f64,
    measure_v: f64,
    measure_w: f64,
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct NormCsvRow {
    domain: String,
    p: f64,
    alpha: f64,
    h: f64,
    seed: u64,
    q: f64,
    s: f64,
    numerator: f64,
    denominator: f64,
    ratio: Option<f64>,
    q_out_of_range: bool,
}

#[derive(Serialize)]
struct CoveringCsvRow {
    domain: String,
    p: f64,
    h: f64,
    seed: u64,
    kind: SweepKind,
    alpha: f64,
    epsilon: f64,
    lambda: f64,
    smallness_holds: bool,
    sampled_pairs: usize,
    triggered_pairs: usize,
    applicable: bool,
    constant: Option<f64>,
    conclusion_holds: Option<bool>,
}

/// Per-resolution maxima of one quantity.
#[derive(Debug, Clone, Serialize)]
pub struct Stability {
    pub label: String,
    pub resolutions: Vec<usize>,
    pub maxima: Vec<Option<f64>>,
    /// Largest over smallest maximum; 1 when all maxima vanish; `None` if undefined.
    pub factor: Option<f64>,
}

/// `max/min` of the maxima, 1 when all vanish, `None` when some are missing or only
/// some vanish.
pub fn stability_factor(maxima: &[Option<f64>]) -> Option<f64> {
    let v: Option<Vec<f64>> = maxima.iter().copied().collect();
    let v = v?;
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        Some(1.0)
    } else if lo > 0.0 && hi.is_finite() {
        Some(hi / lo)
    } else {
        None
    }
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn theta_for(cfg: &ExperimentConfig, first: &SolvedCase) -> Result<f64> {
    match cfg.grids.theta {
        ThetaChoice::Fixed(t) => Ok(t),
        ThetaChoice::Auto => Ok(theta_from_audit(cfg.operator.p, &audit_case(first, &cfg.audit)?)?.0),
    }
}

fn goodlambda(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let alphas = &cfg.grids.alpha;
    let mut sweep_rows = Vec::new();
    let mut norm_rows = Vec::new();
    let mut cover_rows = Vec::new();
    let mut theta = None;
    let plots = out.join("plots");
    fs::create_dir_all(&plots)?;
    // Per sweep label, the maximum over instances at each resolution.
    let mut labels: Vec<String> = vec!["classical".into()];
    labels.extend(alphas.iter().map(|a| format!("fractional a={a}")));
    let norm_labels: Vec<String> = alphas
        .iter()
        .flat_map(|a| cfg.lorentz_params().into_iter().map(move |l| format!("norm a={a} q={} s={}", l.q, l.s_value())))
        .collect();
    let nres = cfg.resolutions.len();
    let mut sweep_max = vec![vec![None; nres]; labels.len()];
    let mut norm_max = vec![vec![None; nres]; norm_labels.len()];
    let mut invariants = 0usize;
    let mut energy: Option<f64> = None;
    let mut covering_constant: Option<f64> = None;
    for spec in cfg.cases() {
        let ri = cfg.resolutions.iter().position(|&n| (1.0 / n as f64) == spec.h).expect("case from config");
        let case = solve_case(&spec, cfg.tol)?;
        let t = match theta {
            Some(t) => t,
            None => *theta.insert(theta_for(cfg, &case)?),
        };
        energy = max_opt(energy, energy_ratio(case.u(), &case.f, &case.sigma, &case.dom, spec.op.p).ok());
        let fields = level_fields(&case, alphas)?;
        let meta = case.meta();
        for (li, rep) in sweeps(&case, &fields, alphas, t, &cfg.grids.epsilon_factors)?.into_iter().enumerate() {
            invariants += rep.invariants.inclusion + rep.invariants.lambda_w + rep.invariants.epsilon;
            sweep_max[li][ri] = max_opt(sweep_max[li][ri], rep.max_ratio());
            for (ei, &eps) in rep.params.epsilons.iter().enumerate() {
                let name = format!("{}_a{}_n{}_s{}_e{ei}.csv", labels[li].split(' ').next().unwrap(), rep.meta.alpha, (1.0 / spec.h).round(), meta.seed);
                write_pairs(&plots.join(name), ["lambda", "ratio"], &rep.plot_series(eps))?;
            }
            for row in covering_rows(&case, &fields, &rep)? {
                covering_constant = max_opt(covering_constant, row.constant);
                cover_rows.push(CoveringCsvRow {
                    domain: meta.domain.clone(),
                    p: meta.p,
                    h: meta.h,
                    seed: meta.seed,
                    kind: row.kind,
                    alpha: row.alpha,
                    epsilon: row.epsilon,
                    lambda: row.lambda,
                    smallness_holds: row.smallness_holds,
                    sampled_pairs: row.sampled_pairs,
                    triggered_pairs: row.triggered_pairs,
                    applicable: row.applicable,
                    constant: row.constant,
                    conclusion_holds: row.conclusion_holds,
                });
            }
            for row in &rep.rows {
                sweep_rows.push(SweepCsvRow {
                    domain: meta.domain.clone(),
                    p: meta.p,
                    alpha: rep.meta.alpha,
                    h: meta.h,
                    seed: meta.seed,
                    kind: rep.kind,
                    a: rep.params.a,
                    b: rep.params.b,
                    epsilon: row.epsilon,
                    lambda: row.lambda,
                    measure_v: row.measure_v,
                    measure_w: row.measure_w,
                    ratio: row.ratio,
                });
            }
        }
        let mut k = 0;
        for &alpha in alphas {
            for l in cfg.lorentz_params() {
                let nr = norm_ratio(&fields, alpha, l, t)?;
                if !nr.q_out_of_range {
                    norm_max[k][ri] = max_opt(norm_max[k][ri], nr.ratio);
                }
                k += 1;
                norm_rows.push(NormCsvRow {
                    domain: meta.domain.clone(),
                    p: meta.p,
                    alpha,
                    h: meta.h,
                    seed: meta.seed,
                    q: nr.q,
                    s: nr.s,
                    numerator: nr.numerator,
                    denominator: nr.denominator,
                    ratio: nr.ratio,
                    q_out_of_range: nr.q_out_of_range,
                });
            }
        }
    }
    write_csv(&out.join("goodlambda.csv"), &sweep_rows)?;
    write_csv(&out.join("norms.csv"), &norm_rows)?;
    write_csv(&out.join("covering.csv"), &cover_rows)?;
    let stability = |labels: &[String], maxima: Vec<Vec<Option<f64>>>| -> Vec<Stability> {
        labels
            .iter()
            .zip(maxima)
            .map(|(label, maxima)| Stability {
                label: label.clone(),
                resolutions: cfg.resolutions.clone(),
                factor: stability_factor(&maxima),
                maxima,
            })
            .collect()
    };
    let sweeps = stability(&labels, sweep_max);
    let norms = stability(&norm_labels, norm_max);
    let c_goodlambda = sweeps.iter().flat_map(|s| s.maxima.iter().copied()).fold(None, max_opt);
    let c_norm = norms.iter().flat_map(|s| s.maxima.iter().copied()).fold(None, max_opt);
    write_json(
        &out.join("goodlambda.json"),
        &json!({
            "domain": cfg.shape.to_string(),
            "p": cfg.operator.p,
            "theta_hat": theta,
            "constants": {
                "c_goodlambda": c_goodlambda,
                "c_norm": c_norm,
                "c_energy": energy,
                "c_covering": covering_constant,
            },
            "invariant_violations": invariants,
            "sweeps": sweeps,
            "norms": norms,
            "timestamp": timestamp(),
        }),
    )?;
    println!("{} sweep rows, {} norm rows, theta_hat {theta:?}", sweep_rows.len(), norm_rows.len());
    Ok(())
}

#[derive(Serialize)]
struct AuditCsvRow {
    domain: String,
    p: f64,
    h: f64,
    seed: u64,
    kind: BallKind,
    x: f64,
    y: f64,
    radius: f64,
    lhs: f64,
    rhs: f64,
    quotient: Option<f64>,
}

fn audit(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for spec in cfg.cases() {
        let case = solve_case(&spec, cfg.tol)?;
        let meta = case.meta();
        let a = audit_case(&case, &cfg.audit)?;
        let holdout = a.holdout(cfg.audit.slack);
        let theta = theta_from_audit(spec.op.p, &a).map(|(_, est)| est);
        summaries.push(json!({
            "meta": meta,
            "constant": a.constant,
            "holdout": holdout,
            "theta": theta.as_ref().ok(),
            "theta_error": theta.as_ref().err().map(|e| e.to_string()),
            "energy_ratio": energy_ratio(case.u(), &case.f, &case.sigma, &case.dom, spec.op.p).ok(),
        }));
        rows.extend(a.rows.into_iter().map(|r| AuditCsvRow {
            domain: meta.domain.clone(),
            p: meta.p,
            h: meta.h,
            seed: meta.seed,
            kind: r.kind,
            x: r.x,
            y: r.y,
            radius: r.radius,
            lhs: r.lhs,
            rhs: r.rhs,
            quotient: r.quotient,
        }));
    }
    write_csv(&out.join("audit.csv"), &rows)?;
    write_json(&out.join("audit.json"), &json!({ "cases": summaries, "timestamp": timestamp() }))?;
    println!("audited {} balls", rows.len());
    Ok(())
}

fn report(dir: &Path) -> Result<()> {
    let mut lines = Vec::new();
    let mut found = false;
    let gl = dir.join("goodlambda.json");
    if gl.exists() {
        found = true;
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&gl)?)?;
        lines.push(format!("good-lambda: domain {} p {} theta_hat {}", v["domain"], v["p"], v["theta_hat"]));
        lines.push(format!("  constants {}", v["constants"]));
        lines.push(format!("  invariant violations {}", v["invariant_violations"]));
        for s in v["sweeps"].as_array().into_iter().chain(v["norms"].as_array()).flatten() {
            lines.push(format!("  {:<32} maxima {} factor {}", s["label"].as_str().unwrap_or("?"), s["maxima"], s["factor"]));
        }
    }
    let au = dir.join("audit.json");
    if au.exists() {
        found = true;
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&au)?)?;
        for c in v["cases"].as_array().into_iter().flatten() {
            lines.push(format!(
                "audit: {} h {} seed {} C {} holdout violations {} theta {}",
                c["meta"]["domain"], c["meta"]["h"], c["meta"]["seed"], c["constant"], c["holdout"]["violations"], c["theta"]["theta_hat"]
            ));
        }
    }
    if !found {
        return Err(Error::Config(format!("{}: no goodlambda.json or audit.json found", dir.display())));
    }
    let text = lines.join("\n") + "\n";
    fs::write(dir.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}
