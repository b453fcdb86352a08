//! Experiment configuration: flat `key = value` lines grouped under `[section]` headers.
//!
//! ```text
//! [domain]
//! shape = l-shape(1)
//! [operator]
//! p = 1.5
//! form = canonical
//! [data]
//! kind = random
//! seeds = 1, 2, 3
//! [grids]
//! alpha = 0, 0.5, 1
//! s = 1, 2, inf
//! [run]
//! resolutions = 32, 64
//! ```
//!
//! Every key has a default; unknown sections and keys are errors. Error messages name
//! the offending `section.key`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use serde::Serialize;

use crate::capacity::ThicknessParams;
use crate::domain::ShapeSpec;
use crate::error::{Error, Result};
use crate::experiment::{AuditPlan, CaseSpec, DataSpec};
use crate::grid::DIM;
use crate::instance::InstanceParams;
use crate::lorentz::LorentzParams;
use crate::operator::{OperatorForm, OperatorSpec};
use crate::solver::DEFAULT_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Random,
    Manufactured,
    Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataConfig {
    pub kind: DataKind,
    pub seeds: Vec<u64>,
    pub instance: InstanceParams,
    pub offset: f64,
    pub slope: [f64; 2],
}

/// `Θ̂` is either fixed or estimated from the comparison audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaChoice {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridsConfig {
    pub alpha: Vec<f64>,
    pub q: Vec<f64>,
    /// `f64::INFINITY` selects the weak quasinorm.
    pub s: Vec<f64>,
    pub epsilon_factors: Vec<f64>,
    pub theta: ThetaChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub shape: ShapeSpec,
    pub operator: OperatorSpec,
    pub data: DataConfig,
    pub grids: GridsConfig,
    /// Cells per unit length, strictly increasing; `h = 1 / N`.
    pub resolutions: Vec<usize>,
    pub tol: f64,
    pub out: PathBuf,
    pub audit: AuditPlan,
    pub thickness: ThicknessParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            shape: ShapeSpec::Square { l: 1.0 },
            operator: OperatorSpec::canonical(2.0).expect("p = 2 is admissible"),
            data: DataConfig {
                kind: DataKind::Random,
                seeds: vec![1],
                instance: InstanceParams::default(),
                offset: 0.0,
                slope: [1.0, 0.0],
            },
            grids: GridsConfig {
                alpha: vec![0.0, 0.5, 1.0],
                q: vec![1.0, 2.0],
                s: vec![1.0, 2.0, f64::INFINITY],
                epsilon_factors: vec![0.25, 0.5, 0.9],
                theta: ThetaChoice::Auto,
            },
            resolutions: vec![32],
            tol: DEFAULT_TOL,
            out: PathBuf::from("out"),
            audit: AuditPlan::default(),
            thickness: ThicknessParams::default(),
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("domain", &["shape"]),
    ("operator", &["p", "form", "lambda1", "lambda2"]),
    ("data", &["kind", "seeds", "f_amplitude", "sigma_amplitude", "decay", "offset", "slope"]),
    ("grids", &["alpha", "q", "s", "epsilon_factors", "theta", "lambda"]),
    ("run", &["resolutions", "tol", "out"]),
    ("audit", &["interior", "boundary", "max_interior", "max_boundary", "seed", "slack"]),
    ("capacity", &["c0", "r0", "max_points"]),
];

fn invalid(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| invalid(key, format!("cannot parse '{}'", v.trim())))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items: Vec<T> = v.split(',').map(|s| scalar(key, s)).collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(invalid(key, "empty list"));
    }
    Ok(items)
}

fn real(key: &str, v: &str) -> Result<f64> {
    let t = v.trim().to_ascii_lowercase();
    let x = match t.as_str() {
        "inf" | "infinity" => f64::INFINITY,
        _ => scalar(key, &t)?,
    };
    if x.is_nan() {
        return Err(invalid(key, "NaN is not allowed"));
    }
    Ok(x)
}

fn reals(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| real(key, s)).collect()
}

fn finite(key: &str, v: &str) -> Result<f64> {
    let x = real(key, v)?;
    if !x.is_finite() {
        return Err(invalid(key, "must be finite"));
    }
    Ok(x)
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str_noescape(text).map_err(|e| Error::Config(format!("syntax: {e}")))?;
        let mut cfg = ExperimentConfig::default();
        let mut lambda1 = None;
        let mut lambda2 = None;
        let mut p = cfg.operator.p;
        let mut form = cfg.operator.form;
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(invalid(k, "key outside of any [section]"));
                }
                continue;
            };
            let allowed = KEYS
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, k)| *k)
                .ok_or_else(|| Error::Config(format!("[{section}]: unknown section")))?;
            for (k, v) in props.iter() {
                let key = format!("{section}.{k}");
                if !allowed.contains(&k) {
                    return Err(invalid(&key, "unknown key"));
                }
                let key = key.as_str();
                match (section, k) {
                    ("domain", "shape") => cfg.shape = v.parse().map_err(|e: Error| invalid(key, e))?,
                    ("operator", "p") => p = finite(key, v)?,
                    ("operator", "form") => {
                        form = match v.trim().to_ascii_lowercase().as_str() {
                            "canonical" => OperatorForm::Canonical,
                            "weighted" => OperatorForm::Weighted,
                            other => return Err(invalid(key, format!("unknown form '{other}'"))),
                        }
                    }
                    ("operator", "lambda1") => lambda1 = Some(finite(key, v)?),
                    ("operator", "lambda2") => lambda2 = Some(finite(key, v)?),
                    ("data", "kind") => {
                        cfg.data.kind = match v.trim().to_ascii_lowercase().as_str() {
                            "random" => DataKind::Random,
                            "manufactured" => DataKind::Manufactured,
                            "affine" => DataKind::Affine,
                            other => return Err(invalid(key, format!("unknown data kind '{other}'"))),
                        }
                    }
                    ("data", "seeds") => cfg.data.seeds = list(key, v)?,
                    ("data", "f_amplitude") => cfg.data.instance.f_amplitude = finite(key, v)?,
                    ("data", "sigma_amplitude") => cfg.data.instance.sigma_amplitude = finite(key, v)?,
                    ("data", "decay") => cfg.data.instance.decay = finite(key, v)?,
                    ("data", "offset") => cfg.data.offset = finite(key, v)?,
                    ("data", "slope") => {
                        let s = reals(key, v)?;
                        cfg.data.slope = s.try_into().map_err(|_| invalid(key, "expected two components"))?;
                    }
                    ("grids", "alpha") => cfg.grids.alpha = reals(key, v)?,
                    ("grids", "q") => cfg.grids.q = reals(key, v)?,
                    ("grids", "s") => cfg.grids.s = reals(key, v)?,
                    ("grids", "epsilon_factors") => cfg.grids.epsilon_factors = reals(key, v)?,
                    ("grids", "theta") => {
                        cfg.grids.theta = match v.trim() {
                            "auto" => ThetaChoice::Auto,
                            t => ThetaChoice::Fixed(finite(key, t)?),
                        }
                    }
                    ("grids", "lambda") => {
                        if v.trim() != "percentile" {
                            return Err(invalid(key, "only the 'percentile' policy is available"));
                        }
                    }
                    ("run", "resolutions") => cfg.resolutions = list(key, v)?,
                    ("run", "tol") => cfg.tol = finite(key, v)?,
                    ("run", "out") => cfg.out = PathBuf::from(v.trim()),
                    ("audit", "interior") => cfg.audit.interior = scalar(key, v)?,
                    ("audit", "boundary") => cfg.audit.boundary = scalar(key, v)?,
                    ("audit", "max_interior") => cfg.audit.max_interior = finite(key, v)?,
                    ("audit", "max_boundary") => cfg.audit.max_boundary = finite(key, v)?,
                    ("audit", "seed") => cfg.audit.seed = scalar(key, v)?,
                    ("audit", "slack") => cfg.audit.slack = finite(key, v)?,
                    ("capacity", "c0") => cfg.thickness.c0 = finite(key, v)?,
                    ("capacity", "r0") => cfg.thickness.r0 = finite(key, v)?,
                    ("capacity", "max_points") => cfg.thickness.max_points = scalar(key, v)?,
                    _ => unreachable!("key list and match arms agree"),
                }
            }
        }
        let mut op = OperatorSpec::new(p, form).map_err(|e| invalid("operator.p", e))?;
        op.lambda1 = lambda1.unwrap_or(op.lambda1);
        op.lambda2 = lambda2.unwrap_or(op.lambda2);
        cfg.operator = op;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate().map_err(|e| invalid("domain.shape", e))?;
        self.operator.validate().map_err(|e| invalid("operator", e))?;
        if self.data.seeds.is_empty() {
            return Err(invalid("data.seeds", "empty list"));
        }
        self.data.instance.validate().map_err(|e| invalid("data", e))?;
        let n = DIM as f64;
        let g = &self.grids;
        for (key, empty) in [
            ("grids.alpha", g.alpha.is_empty()),
            ("grids.q", g.q.is_empty()),
            ("grids.s", g.s.is_empty()),
            ("grids.epsilon_factors", g.epsilon_factors.is_empty()),
            ("run.resolutions", self.resolutions.is_empty()),
        ] {
            if empty {
                return Err(invalid(key, "empty list"));
            }
        }
        if let Some(a) = g.alpha.iter().find(|a| !(0.0..n).contains(*a)) {
            return Err(invalid("grids.alpha", format!("{a} is outside [0, {n})")));
        }
        for (&q, &s) in g.q.iter().flat_map(|q| g.s.iter().map(move |s| (q, s))) {
            LorentzParams::new(q, s).map_err(|e| invalid(if q > 0.0 && q.is_finite() { "grids.s" } else { "grids.q" }, e))?;
        }
        if let Some(e) = g.epsilon_factors.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(invalid("grids.epsilon_factors", format!("{e} is outside (0, 1)")));
        }
        if let ThetaChoice::Fixed(t) = g.theta {
            if !(t > self.operator.p) {
                return Err(invalid("grids.theta", format!("{t} must exceed p = {}", self.operator.p)));
            }
        }
        if self.resolutions.windows(2).any(|w| w[0] >= w[1]) || self.resolutions[0] == 0 {
            return Err(invalid("run.resolutions", "must be positive and strictly increasing"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("run.tol", "must be positive"));
        }
        if !(self.audit.max_interior > 0.0 && self.audit.max_boundary > 0.0) {
            return Err(invalid("audit", "radius bounds must be positive"));
        }
        if !(self.audit.slack >= 1.0) {
            return Err(invalid("audit.slack", "must be at least 1"));
        }
        self.thickness.validate().map_err(|e| invalid("capacity", e))?;
        Ok(())
    }

    pub fn data_spec(&self, seed: u64) -> DataSpec {
        match self.data.kind {
            DataKind::Random => DataSpec::Random { seed, params: self.data.instance },
            DataKind::Manufactured => DataSpec::Manufactured,
            DataKind::Affine => DataSpec::Affine { offset: self.data.offset, slope: self.data.slope },
        }
    }

    /// Every `(resolution, seed)` case in order.
    pub fn cases(&self) -> Vec<CaseSpec> {
        let seeds: &[u64] = match self.data.kind {
            DataKind::Random => &self.data.seeds,
            _ => &[0],
        };
        self.resolutions
            .iter()
            .flat_map(|&n| {
                seeds.iter().map(move |&seed| CaseSpec {
                    shape: self.shape,
                    op: self.operator,
                    h: 1.0 / n as f64,
                    data: self.data_spec(seed),
                })
            })
            .collect()
    }

    /// Lorentz exponent pairs of the grids.
    pub fn lorentz_params(&self) -> Vec<LorentzParams> {
        self.grids
            .q
            .iter()
            .flat_map(|&q| self.grids.s.iter().map(move |&s| LorentzParams::new(q, s).expect("validated")))
            .collect()
    }
}
