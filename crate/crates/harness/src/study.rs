//! The experiments behind each CLI subcommand.
//!
//! Work is spread over the current rayon pool, but every result is collected
//! in a fixed order (by `k`, then `lambda`, then path index) and reduced
//! sequentially, so tables do not depend on the number of workers.

use cbp_core::csbpdi::values_at;
use cbp_core::mechanisms::{
    branching_deviation, complete_monotone_check, g_k_eval, generator_gap, immigration_deviation, lattice_grid,
    log_root_deviation, second_derivative_deviation,
};
use cbp_core::stats::{mean_estimate, variance_estimate, Estimate};
use cbp_core::{
    feller_laplace, feller_moments, simulate_csbpdi_path_on_grid, verify_immigration_growth, verify_moment_assumption,
    ControlFamily64, Error as CoreError, LatticeLaw64, LimitParams64, PathSample64, ScaledModel64, StreamKey,
};
use log::{debug, info};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig, Z0Rule};
use crate::error::Result;
use crate::model::{build_family, limit_params, scaled_model};
use crate::report::{Cell, Table};

/// Stream domain of the limit process; the CBP at scale `k` uses `2 k`.
const LIMIT_DOMAIN: u64 = 1;

fn cbp_domain(k: u64) -> u64 {
    k.wrapping_mul(2)
}

/// A table plus, for the verifying subcommands, a description of any
/// invariant that failed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub violation: Option<String>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Self { table, violation: None }
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (rayon's default when `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?.install(f))
}

struct Setup {
    family: ControlFamily64,
    params: LimitParams64,
}

impl Setup {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            family: build_family(config)?,
            params: limit_params(config),
        })
    }

    fn model(&self, config: &ExperimentConfig, k: u64) -> Result<ScaledModel64> {
        scaled_model(config, &self.family, k)
    }
}

const DIAGNOSTICS: [&str; 6] = [
    "generator_gap",
    "s_deviation",
    "t_deviation",
    "h_deviation",
    "log_root_deviation",
    "root_second_derivative_deviation",
];

fn lambda_cell(
    model: &ScaledModel64,
    params: &LimitParams64,
    grid: &[f64],
    lambda: f64,
    j_max: u64,
) -> Result<[f64; 6]> {
    let gap = generator_gap(model, params, lambda, grid)?;
    let (s, t) = branching_deviation(model, params, lambda)?;
    let h = immigration_deviation(model, params, lambda, grid)?;
    let log_root = log_root_deviation(model, lambda, j_max)?.value;
    let second = second_derivative_deviation(model, lambda, j_max)?.value;
    Ok([gap, s, t, h, log_root, second])
}

/// Per `k`: the generator gap, the branching and immigration functional
/// deviations and the root-law diagnostics at each `lambda`, then the two
/// factorial-moment deviations when the family declares its limits.
pub fn run_convergence_study(exp: &Experiment) -> Result<Table> {
    let c = &exp.config;
    let s = &c.study;
    let setup = Setup::new(c)?;
    let models = s
        .k_list
        .iter()
        .map(|&k| setup.model(c, k))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, f64)> = (0..models.len())
        .flat_map(|i| s.lambda_grid.iter().map(move |l| (i, *l)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(i, lambda)| {
            let model = &models[i];
            let grid = lattice_grid(model.k, s.x_max, s.max_points);
            lambda_cell(model, &setup.params, &grid, lambda, s.j_max)
        })
        .collect::<Result<Vec<_>>>()?;
    let moments = match setup.family.declared_limits() {
        Some(_) => {
            let rule = c.model.gamma.rule();
            let report = verify_moment_assumption(&setup.family, c.model.m, |k| rule.gamma_k(k), &s.k_list, s.j_max)?;
            Some(report.rows)
        }
        None => None,
    };

    let mut table = Table::new(&["k", "gamma_k", "diagnostic", "lambda", "value"], &exp.hash);
    let n_lambda = s.lambda_grid.len();
    for (i, model) in models.iter().enumerate() {
        for (d, name) in DIAGNOSTICS.iter().enumerate() {
            for (li, lambda) in s.lambda_grid.iter().enumerate() {
                let v = values[i * n_lambda + li][d];
                table.push(vec![
                    model.k.into(),
                    model.gamma_k.into(),
                    (*name).into(),
                    (*lambda).into(),
                    v.into(),
                ]);
            }
        }
        if let Some(rows) = &moments {
            let row = &rows[i];
            for (name, v) in [("moment_dev1", row.dev1.value), ("moment_dev2", row.dev2.value)] {
                table.push(vec![
                    model.k.into(),
                    model.gamma_k.into(),
                    name.into(),
                    Cell::Empty,
                    v.into(),
                ]);
            }
        }
        info!(
            "k = {}: max generator gap {:e}",
            model.k,
            (0..n_lambda).map(|li| values[i * n_lambda + li][0]).fold(0.0, f64::max)
        );
    }
    Ok(table)
}

fn initial_population(rule: Z0Rule, z0: f64, k: u64, rng: &mut cbp_core::SimRng) -> Result<u64> {
    let mean = z0 * k as f64;
    Ok(match rule {
        Z0Rule::Fixed => mean.round() as u64,
        Z0Rule::Poisson => LatticeLaw64::poisson(mean)?.sample(rng),
    })
}

/// CBP paths at scale `k`, indexed `0..paths`.
fn cbp_paths(exp: &Experiment, model: &ScaledModel64, horizon: f64) -> Result<Vec<PathSample64>> {
    let s = &exp.config.study;
    (0..s.paths)
        .into_par_iter()
        .map(|i| {
            let key = StreamKey::new(exp.config.seed, cbp_domain(model.k), i);
            let mut rng = key.rng();
            let z0 = initial_population(s.z0_rule, s.z0, model.k, &mut rng)?;
            Ok(model
                .simulate_scaled_path(z0, horizon, s.record_dt, &mut rng)?
                .with_stream(key))
        })
        .collect()
}

fn limit_paths(exp: &Experiment, params: &LimitParams64, horizon: f64) -> Result<Vec<PathSample64>> {
    let s = &exp.config.study;
    (0..s.limit_paths.unwrap_or(s.paths))
        .into_par_iter()
        .map(|i| {
            let key = StreamKey::new(exp.config.seed, LIMIT_DOMAIN, i);
            Ok(
                simulate_csbpdi_path_on_grid(params, s.z0, horizon, s.dt, s.record_dt, &mut key.rng())?
                    .with_stream(key),
            )
        })
        .collect()
}

/// Reference values for the limit at one time.
struct LimitSide {
    laplace: Vec<Estimate>,
    mean: Estimate,
    variance: Estimate,
}

fn limit_side(exp: &Experiment, params: &LimitParams64, paths: Option<&[PathSample64]>, t: f64) -> Result<LimitSide> {
    let s = &exp.config.study;
    match paths {
        None => {
            let (mean, var) = feller_moments(params, s.z0, t)?;
            let laplace = s
                .lambda_grid
                .iter()
                .map(|l| feller_laplace(params, s.z0, t, *l).map(Estimate::exact))
                .collect::<cbp_core::Result<Vec<_>>>()?;
            Ok(LimitSide {
                laplace,
                mean: Estimate::exact(mean),
                variance: Estimate::exact(var),
            })
        }
        Some(paths) => {
            let values = values_at(paths, t)?;
            Ok(LimitSide {
                laplace: s.lambda_grid.iter().map(|l| laplace_of(&values, *l)).collect(),
                mean: mean_estimate(&values),
                variance: variance_estimate(&values),
            })
        }
    }
}

fn laplace_of(values: &[f64], lambda: f64) -> Estimate {
    let samples: Vec<f64> = values.iter().map(|z| (-lambda * z).exp()).collect();
    mean_estimate(&samples)
}

/// Whether the limit has closed-form moments and Laplace transform.
fn has_closed_form(params: &LimitParams64) -> Result<bool> {
    match feller_moments(params, 1.0, 1.0) {
        Ok(_) => Ok(true),
        Err(CoreError::InvalidParameter(_)) => Ok(false),
        Err(e) => Err(e.into()),
    }
}

/// Per `(k, t)`: Monte-Carlo Laplace transform at each `lambda`, mean and
/// variance of `z_k(t)`, against the limit (closed form when available,
/// otherwise simulated), with the difference in combined standard errors.
pub fn run_distribution_comparison(exp: &Experiment) -> Result<Table> {
    let c = &exp.config;
    let s = &c.study;
    let setup = Setup::new(c)?;
    let horizon = s.t_grid.iter().copied().fold(0.0, f64::max);
    let closed = has_closed_form(&setup.params)?;
    let simulated_limit = if closed {
        None
    } else {
        info!(
            "no closed form for the limit; simulating {} paths",
            s.limit_paths.unwrap_or(s.paths)
        );
        Some(limit_paths(exp, &setup.params, horizon)?)
    };
    let limits = s
        .t_grid
        .iter()
        .map(|t| limit_side(exp, &setup.params, simulated_limit.as_deref(), *t))
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(
        &[
            "k",
            "gamma_k",
            "t",
            "quantity",
            "lambda",
            "cbp_estimate",
            "cbp_std_error",
            "limit_estimate",
            "limit_std_error",
            "difference",
            "z_score",
        ],
        &exp.hash,
    );
    for &k in &s.k_list {
        let model = setup.model(c, k)?;
        let paths = cbp_paths(exp, &model, horizon)?;
        debug!("k = {k}: simulated {} paths", paths.len());
        for (t, limit) in s.t_grid.iter().zip(&limits) {
            let values = values_at(&paths, *t)?;
            let mut push = |quantity: &str, lambda: Option<f64>, cbp: Estimate, lim: Estimate| {
                table.push(vec![
                    k.into(),
                    model.gamma_k.into(),
                    (*t).into(),
                    quantity.into(),
                    lambda.into(),
                    cbp.value.into(),
                    cbp.std_error.into(),
                    lim.value.into(),
                    lim.std_error.into(),
                    (cbp.value - lim.value).into(),
                    cbp.z_score(&lim).into(),
                ]);
            };
            for (lambda, lim) in s.lambda_grid.iter().zip(&limit.laplace) {
                push("laplace", Some(*lambda), laplace_of(&values, *lambda), *lim);
            }
            push("mean", None, mean_estimate(&values), limit.mean);
            push("variance", None, variance_estimate(&values), limit.variance);
        }
    }
    Ok(table)
}

/// Rescaled CBP paths for every `k`, then paths of the limit process.
pub fn run_simulation(exp: &Experiment) -> Result<Table> {
    let c = &exp.config;
    let s = &c.study;
    let setup = Setup::new(c)?;
    let horizon = s.t_grid.iter().copied().fold(0.0, f64::max);
    let mut table = Table::new(&["process", "k", "path", "t", "z"], &exp.hash);
    for &k in &s.k_list {
        let model = setup.model(c, k)?;
        for (i, path) in cbp_paths(exp, &model, horizon)?.iter().enumerate() {
            for (t, z) in path.times.iter().zip(&path.values) {
                table.push(vec![
                    "cbp".into(),
                    k.into(),
                    (i as u64).into(),
                    (*t).into(),
                    (*z).into(),
                ]);
            }
        }
    }
    for (i, path) in limit_paths(exp, &setup.params, horizon)?.iter().enumerate() {
        for (t, z) in path.times.iter().zip(&path.values) {
            table.push(vec![
                "limit".into(),
                Cell::Empty,
                (i as u64).into(),
                (*t).into(),
                (*z).into(),
            ]);
        }
    }
    Ok(table)
}

/// Factorial-moment deviations of the root laws and the immigration growth
/// constant, per `k`. Fails the invariant when a moment deviation grows with `k`.
pub fn run_family_check(exp: &Experiment) -> Result<Outcome> {
    let c = &exp.config;
    let s = &c.study;
    let family = build_family(c)?;
    let rule = c.model.gamma.rule();
    let report = verify_moment_assumption(&family, c.model.m, |k| rule.gamma_k(k), &s.k_list, s.j_max)?;
    let mut table = Table::new(
        &[
            "k", "gamma_k", "family", "quantity", "value", "argmax", "j_max", "sup_mode",
        ],
        &exp.hash,
    );
    let name = family.name();
    for row in &report.rows {
        for (q, dev) in [("moment_dev1", row.dev1), ("moment_dev2", row.dev2)] {
            table.push(vec![
                row.k.into(),
                row.gamma_k.into(),
                name.into(),
                q.into(),
                dev.value.into(),
                dev.grid.argmax_j.into(),
                dev.grid.j_max.into(),
                format!("{:?}", dev.mode).as_str().into(),
            ]);
        }
        let growth = verify_immigration_growth(&family, row.k, row.gamma_k, &s.growth_x_grid)?;
        table.push(vec![
            row.k.into(),
            row.gamma_k.into(),
            name.into(),
            "growth_k1".into(),
            growth.k1_hat.into(),
            growth.argmax_x.into(),
            Cell::Empty,
            Cell::Empty,
        ]);
    }
    let violation = (!(report.dev1_monotone && report.dev2_monotone)).then(|| {
        format!(
            "moment deviations are not non-increasing in k (dev1 {}, dev2 {})",
            report.dev1_monotone, report.dev2_monotone
        )
    });
    Ok(Outcome { table, violation })
}

/// The sign test `(-1)^j Delta_d^j Delta_c^2 G >= -tol` for `G_k` at each `k`
/// and for the limit `G`.
pub fn run_monotone(exp: &Experiment) -> Result<Outcome> {
    let c = &exp.config;
    let mc = &c.monotone;
    let setup = Setup::new(c)?;
    let mut table = Table::new(
        &["target", "k", "holds", "worst_value", "worst_order", "worst_lambda"],
        &exp.hash,
    );
    let mut failed = Vec::new();
    let reports = c
        .study
        .k_list
        .par_iter()
        .map(|&k| {
            let model = setup.model(c, k)?;
            let g = |l: f64| g_k_eval(&model, l);
            Ok(complete_monotone_check(
                g,
                k as f64,
                mc.c,
                mc.d,
                mc.j_max,
                &mc.lambda_grid,
                mc.tol,
            )?)
        })
        .collect::<Result<Vec<_>>>()?;
    let params = &setup.params;
    let limit = complete_monotone_check(
        |l: f64| Ok(params.limit_g(l)),
        f64::INFINITY,
        mc.c,
        mc.d,
        mc.j_max,
        &mc.lambda_grid,
        mc.tol,
    )?;
    let targets = c
        .study
        .k_list
        .iter()
        .map(|k| ("g_k", Cell::Int(*k)))
        .chain([("limit_g", Cell::Empty)]);
    for ((target, k), r) in targets.zip(reports.iter().chain([&limit])) {
        if !r.holds {
            failed.push(format!(
                "{target} {k:?}: {:e} at (j, lambda) = {:?}",
                r.worst_value, r.worst_point
            ));
        }
        table.push(vec![
            target.into(),
            k,
            r.holds.into(),
            r.worst_value.into(),
            u64::from(r.worst_point.0).into(),
            r.worst_point.1.into(),
        ]);
    }
    let violation = (!failed.is_empty()).then(|| format!("complete monotonicity fails: {}", failed.join("; ")));
    Ok(Outcome { table, violation })
}
