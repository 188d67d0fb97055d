//! Experiment configuration: a TOML file with `[model]`, `[limit]`, `[study]`
//! and `[monotone]` sections plus top-level `seed` and `out`.
//!
//! Parsing is strict (unknown keys are rejected) and every semantic check
//! reports the line of the offending key.

use std::path::{Path, PathBuf};

use cbp_core::{GammaRule64, LatticeLaw64};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub model: ModelSpec,
    #[serde(default)]
    pub limit: LimitSpec,
    pub study: StudySpec,
    #[serde(default)]
    pub monotone: MonotoneSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default = "one")]
    pub m: f64,
    pub gamma: GammaSpec,
    pub offspring: OffspringSpec,
    #[serde(default)]
    pub family: FamilySpec,
    /// Immigration paired with the `poisson`, `binomial` and `negbin` families.
    #[serde(default)]
    pub immigration: ImmigrationSpec,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase", deny_unknown_fields)]
pub enum GammaSpec {
    /// `gamma_k = c k`.
    Linear { c: f64 },
    /// `gamma_k = c k^p`, `0 < p <= 1`.
    Power { c: f64, p: f64 },
}

impl GammaSpec {
    pub fn rule(&self) -> GammaRule64 {
        match *self {
            GammaSpec::Linear { c } => GammaRule64::Linear { c },
            GammaSpec::Power { c, p } => GammaRule64::Power { c, p },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OffspringSpec {
    /// Exactly one child.
    Identity,
    /// PGF `s + (b^2/2)(1-s)^2`: mean 1, variance `b^2`, `0 <= b <= 1`.
    Binary { b: f64 },
    /// `Poisson(m - drift / k)`.
    Poisson {
        #[serde(default)]
        drift: f64,
    },
    /// The same pmf for every `k`.
    Explicit { pmf: Vec<f64> },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    #[default]
    Identity,
    Poisson,
    Binomial,
    Negbin,
    /// Root and immigration laws independent of `(k, j)`.
    Fixed {
        root: LawSpec,
        #[serde(default)]
        immigration: LawSpec,
    },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Identity => "identity",
            FamilySpec::Poisson => "poisson",
            FamilySpec::Binomial => "binomial",
            FamilySpec::Negbin => "negbin",
            FamilySpec::Fixed { .. } => "fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ImmigrationSpec {
    #[default]
    None,
    /// `Poisson((beta + slope j / k) k / gamma_k)`.
    Poisson {
        beta: f64,
        #[serde(default)]
        slope: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase", deny_unknown_fields)]
pub enum LawSpec {
    Dirac { n: u64 },
    Bernoulli { p: f64 },
    Binomial { n: u64, p: f64 },
    Poisson { rate: f64 },
    Geometric { p: f64 },
    Negbin { r: f64, p: f64 },
    Explicit { pmf: Vec<f64> },
}

impl Default for LawSpec {
    fn default() -> Self {
        LawSpec::Dirac { n: 0 }
    }
}

impl LawSpec {
    pub fn build(&self) -> cbp_core::Result<LatticeLaw64> {
        match self {
            LawSpec::Dirac { n } => Ok(LatticeLaw64::dirac(*n)),
            LawSpec::Bernoulli { p } => LatticeLaw64::bernoulli(*p),
            LawSpec::Binomial { n, p } => LatticeLaw64::binomial(*n, *p),
            LawSpec::Poisson { rate } => LatticeLaw64::poisson(*rate),
            LawSpec::Geometric { p } => LatticeLaw64::geometric(*p),
            LawSpec::Negbin { r, p } => LatticeLaw64::negative_binomial(*r, *p),
            LawSpec::Explicit { pmf } => LatticeLaw64::explicit(pmf.clone()),
        }
    }
}

/// Limit data. Jump measures are lists of `[size, weight]` atoms, given
/// before the `m` rescaling of the immigration jumps.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSpec {
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub mu_atoms: Vec<[f64; 2]>,
    /// Immigration drift `alpha(x) = alpha + alpha_slope x`. Defaults to the
    /// drift of the configured immigration for the built-in families.
    pub alpha: Option<f64>,
    pub alpha_slope: Option<f64>,
    #[serde(default)]
    pub nu_atoms: Vec<[f64; 2]>,
    /// Jump rate `r(x, u) = r_intercept + r_slope x`.
    #[serde(default = "one")]
    pub r_intercept: f64,
    #[serde(default)]
    pub r_slope: f64,
    /// Defaults to the limit of the `gamma` rule.
    pub gamma0: Option<f64>,
    /// Default to the values declared by the family.
    pub rho0: Option<f64>,
    pub sigma0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Z0Rule {
    /// `Z_k(0) = round(z0 k)`.
    #[default]
    Fixed,
    /// `Z_k(0) ~ Poisson(z0 k)`, drawn per path.
    Poisson,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub k_list: Vec<u64>,
    #[serde(default = "default_lambdas")]
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    /// Comparison times; each must be a multiple of `record_dt`.
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_record_dt")]
    pub record_dt: f64,
    #[serde(default = "default_paths")]
    pub paths: u64,
    /// Paths of the limit process when no closed form applies; defaults to `paths`.
    pub limit_paths: Option<u64>,
    /// Step of the limit integrator.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "one")]
    pub z0: f64,
    #[serde(default)]
    pub z0_rule: Z0Rule,
    #[serde(default = "default_j_max")]
    pub j_max: u64,
    /// Grid for the immigration-growth check.
    #[serde(default = "default_growth_grid")]
    pub growth_x_grid: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotoneSpec {
    #[serde(default = "quarter")]
    pub c: f64,
    #[serde(default = "quarter")]
    pub d: f64,
    #[serde(default = "default_orders")]
    pub j_max: u32,
    #[serde(default = "default_monotone_grid")]
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for MonotoneSpec {
    fn default() -> Self {
        Self {
            c: quarter(),
            d: quarter(),
            j_max: default_orders(),
            lambda_grid: default_monotone_grid(),
            tol: default_tol(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn quarter() -> f64 {
    0.25
}
fn default_lambdas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_x_max() -> f64 {
    cbp_core::mechanisms::DEFAULT_X_MAX
}
fn default_max_points() -> usize {
    cbp_core::mechanisms::DEFAULT_MAX_POINTS
}
fn default_t_grid() -> Vec<f64> {
    vec![1.0]
}
fn default_record_dt() -> f64 {
    0.1
}
fn default_paths() -> u64 {
    1000
}
fn default_dt() -> f64 {
    1e-3
}
fn default_j_max() -> u64 {
    1000
}
fn default_growth_grid() -> Vec<f64> {
    (0..=20).map(f64::from).collect()
}
fn default_orders() -> u32 {
    4
}
fn default_monotone_grid() -> Vec<f64> {
    (0..=20).map(|i| f64::from(i) * 0.25).collect()
}
fn default_tol() -> f64 {
    1e-8
}

/// A validated configuration with the text it came from.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub origin: String,
    /// First 16 hex digits of `sha256(config text || seed)`.
    pub hash: String,
}

impl Experiment {
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&raw, &path.display().to_string(), seed)
    }

    /// Parses and validates `raw`; `seed` overrides the file's seed.
    pub fn parse(raw: &str, origin: &str, seed: Option<u64>) -> Result<Self> {
        let mut config: ExperimentConfig = toml::from_str(raw).map_err(|e| HarnessError::Validation {
            origin: origin.to_string(),
            line: e.span().map(|s| line_of_offset(raw, s.start)),
            message: e.message().trim().to_string(),
        })?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        let checker = Checker { raw, origin };
        checker.validate(&config)?;
        let mut hasher = Sha256::new();
        hasher.update(raw.as_bytes());
        hasher.update(config.seed.to_le_bytes());
        let hash = hex::encode(hasher.finalize())[..16].to_string();
        Ok(Self {
            config,
            origin: origin.to_string(),
            hash,
        })
    }
}

fn line_of_offset(raw: &str, offset: usize) -> usize {
    raw[..offset.min(raw.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (`""` for top level), falling back to the
/// section header.
fn locate(raw: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = "";
    let mut header = None;
    for (i, line) in raw.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.split(']').next()) {
            current = name.trim();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            let is_key = t
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='));
            if is_key {
                return Some(i + 1);
            }
        }
    }
    header
}

struct Checker<'a> {
    raw: &'a str,
    origin: &'a str,
}

impl Checker<'_> {
    fn fail(&self, section: &str, key: &str, message: impl Into<String>) -> HarnessError {
        let name = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        HarnessError::Validation {
            origin: self.origin.to_string(),
            line: locate(self.raw, section, key),
            message: format!("{name}: {}", message.into()),
        }
    }

    fn ensure(&self, ok: bool, section: &str, key: &str, message: impl Into<String>) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(self.fail(section, key, message))
        }
    }

    fn core(&self, section: &str, key: &str, r: cbp_core::Result<()>) -> Result<()> {
        r.map_err(|e| self.fail(section, key, e.to_string()))
    }

    fn validate(&self, c: &ExperimentConfig) -> Result<()> {
        self.study(&c.study)?;
        self.model(c)?;
        self.limit(c)?;
        self.monotone(&c.monotone)
    }

    fn study(&self, s: &StudySpec) -> Result<()> {
        let sec = "study";
        self.ensure(!s.k_list.is_empty(), sec, "k_list", "must not be empty")?;
        self.ensure(s.k_list[0] >= 1, sec, "k_list", "entries must be positive")?;
        self.ensure(
            s.k_list.windows(2).all(|w| w[0] < w[1]),
            sec,
            "k_list",
            "must be strictly increasing",
        )?;
        self.ensure(!s.lambda_grid.is_empty(), sec, "lambda_grid", "must not be empty")?;
        self.ensure(
            s.lambda_grid.iter().all(|l| *l >= 0.0 && l.is_finite()),
            sec,
            "lambda_grid",
            "entries must be finite and non-negative",
        )?;
        self.ensure(s.x_max > 0.0 && s.x_max.is_finite(), sec, "x_max", "must be positive")?;
        self.ensure(s.max_points >= 2, sec, "max_points", "must be at least 2")?;
        self.ensure(s.paths >= 1, sec, "paths", "must be at least 1")?;
        self.ensure(s.limit_paths != Some(0), sec, "limit_paths", "must be at least 1")?;
        self.ensure(s.dt > 0.0 && s.dt.is_finite(), sec, "dt", "must be positive")?;
        self.ensure(
            s.record_dt > 0.0 && s.record_dt.is_finite(),
            sec,
            "record_dt",
            "must be positive",
        )?;
        self.ensure(
            is_multiple(s.record_dt, s.dt),
            sec,
            "record_dt",
            format!("must be a multiple of dt = {}", s.dt),
        )?;
        self.ensure(!s.t_grid.is_empty(), sec, "t_grid", "must not be empty")?;
        self.ensure(
            s.t_grid.iter().all(|t| *t > 0.0 && is_multiple(*t, s.record_dt)),
            sec,
            "t_grid",
            format!("entries must be positive multiples of record_dt = {}", s.record_dt),
        )?;
        self.ensure(
            s.t_grid.windows(2).all(|w| w[0] < w[1]),
            sec,
            "t_grid",
            "must be strictly increasing",
        )?;
        self.ensure(
            s.z0 >= 0.0 && s.z0.is_finite(),
            sec,
            "z0",
            "must be finite and non-negative",
        )?;
        self.ensure(s.j_max >= 1, sec, "j_max", "must be at least 1")?;
        self.ensure(
            s.growth_x_grid.iter().all(|x| *x >= 0.0 && x.is_finite()),
            sec,
            "growth_x_grid",
            "entries must be finite and non-negative",
        )
    }

    fn model(&self, c: &ExperimentConfig) -> Result<()> {
        let (sec, m) = ("model", &c.model);
        self.ensure(m.m > 0.0 && m.m.is_finite(), sec, "m", "must be positive")?;
        let rule = m.gamma.rule();
        self.core(sec, "gamma", rule.validate())?;

        // |gamma_k / k - gamma0| must shrink along k_list.
        let gamma0 = c.limit.gamma0.unwrap_or_else(|| rule.gamma0());
        let gaps: Vec<f64> = c
            .study
            .k_list
            .iter()
            .map(|&k| (rule.gamma_k(k) / k as f64 - gamma0).abs())
            .collect();
        let shrinking = gaps.windows(2).all(|w| w[1] < w[0] || (w[0] < 1e-12 && w[1] < 1e-12));
        let last = gaps.last().copied().unwrap_or(0.0);
        let consistent = shrinking && (gaps.len() > 1 || last < 1e-12);
        if !consistent {
            let key = if c.limit.gamma0.is_some() {
                ("limit", "gamma0")
            } else {
                (sec, "gamma")
            };
            return Err(self.fail(
                key.0,
                key.1,
                format!("gamma0 = {gamma0} is inconsistent with the gamma rule: |gamma_k/k - gamma0| = {gaps:?}"),
            ));
        }

        match &m.offspring {
            OffspringSpec::Identity => {}
            OffspringSpec::Binary { b } => {
                self.ensure((0.0..=1.0).contains(b), sec, "offspring", "binary b must lie in [0, 1]")?
            }
            OffspringSpec::Poisson { drift } => {
                let k0 = c.study.k_list[0] as f64;
                self.ensure(
                    drift.is_finite() && m.m - drift / k0 >= 0.0,
                    sec,
                    "offspring",
                    format!("Poisson rate m - drift/k is negative at k = {k0}"),
                )?
            }
            OffspringSpec::Explicit { pmf } => {
                self.core(sec, "offspring", LatticeLaw64::explicit(pmf.clone()).map(|_| ()))?
            }
        }

        if let FamilySpec::Fixed { root, immigration } = &m.family {
            self.core(sec, "family", root.build().map(|_| ()))?;
            self.core(sec, "family", immigration.build().map(|_| ()))?;
        }
        if matches!(m.family, FamilySpec::Poisson) {
            self.ensure(
                c.study.k_list[0] >= 2,
                "study",
                "k_list",
                "the poisson family needs k >= 2",
            )?;
        }
        if let ImmigrationSpec::Poisson { beta, slope } = m.immigration {
            self.ensure(
                beta >= 0.0 && slope >= 0.0 && beta.is_finite() && slope.is_finite(),
                sec,
                "immigration",
                "beta and slope must be finite and non-negative",
            )?;
        }
        Ok(())
    }

    fn limit(&self, c: &ExperimentConfig) -> Result<()> {
        let (sec, l) = ("limit", &c.limit);
        self.ensure(
            l.b >= 0.0 && l.b.is_finite(),
            sec,
            "b",
            "must be finite and non-negative",
        )?;
        self.ensure(l.a.is_finite(), sec, "a", "must be finite")?;
        for (key, atoms) in [("mu_atoms", &l.mu_atoms), ("nu_atoms", &l.nu_atoms)] {
            for [u, w] in atoms {
                self.core(sec, key, cbp_core::Atom::new(*u, *w).map(|_| ()))?;
            }
        }
        self.ensure(
            l.r_intercept >= 0.0 && l.r_slope >= 0.0,
            sec,
            "r_intercept",
            "r(x, u) = r_intercept + r_slope x must be non-negative",
        )?;
        if let Some(declared) = crate::model::family_declared(&c.model) {
            for (key, given, expected) in [("rho0", l.rho0, declared.rho0), ("sigma0", l.sigma0, declared.sigma0)] {
                if let Some(v) = given {
                    self.ensure(
                        (v - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                        sec,
                        key,
                        format!(
                            "{v} conflicts with the value {expected} declared by the {} family",
                            c.model.family.name()
                        ),
                    )?;
                }
            }
        }
        let x_grid: Vec<f64> = (0..=100).map(|i| f64::from(i) * c.study.x_max / 100.0).collect();
        let params = crate::model::limit_params(c);
        self.core(sec, "a", params.validate(&x_grid))
    }

    fn monotone(&self, m: &MonotoneSpec) -> Result<()> {
        let sec = "monotone";
        self.ensure(m.c > 0.0 && m.c.is_finite(), sec, "c", "must be positive")?;
        self.ensure(m.d > 0.0 && m.d.is_finite(), sec, "d", "must be positive")?;
        self.ensure(m.tol >= 0.0, sec, "tol", "must be non-negative")?;
        self.ensure(!m.lambda_grid.is_empty(), sec, "lambda_grid", "must not be empty")?;
        self.ensure(
            m.lambda_grid.iter().all(|l| *l >= 0.0 && l.is_finite()),
            sec,
            "lambda_grid",
            "entries must be finite and non-negative",
        )
    }
}

fn is_multiple(x: f64, step: f64) -> bool {
    let r = x / step;
    r.round() >= 1.0 && (r - r.round()).abs() <= 1e-6 * r.max(1.0)
}
