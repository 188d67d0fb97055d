//! Builds core model objects from a configuration.

use cbp_core::families::{binomial_family, negbin_family, poisson_family};
use cbp_core::{
    Atom, ControlFamily64, DeclaredLimits, Immigration, JumpRate, LatticeLaw64, LimitParams64, ScaledModel64, StateRate,
};

use crate::config::{ExperimentConfig, FamilySpec, ImmigrationSpec, ModelSpec, OffspringSpec};
use crate::error::Result;

fn immigration(spec: ImmigrationSpec) -> Immigration<f64> {
    match spec {
        ImmigrationSpec::None => Immigration::None,
        ImmigrationSpec::Poisson { beta, slope } => Immigration::Poisson { beta, slope },
    }
}

fn is_builtin(family: &FamilySpec) -> bool {
    matches!(family, FamilySpec::Poisson | FamilySpec::Binomial | FamilySpec::Negbin)
}

/// The family's own `(rho0, sigma0)`, for families that declare them.
pub fn family_declared(model: &ModelSpec) -> Option<DeclaredLimits<f64>> {
    match model.family {
        FamilySpec::Fixed { .. } => None,
        _ => build_family_unchecked(model).ok()?.declared_limits(),
    }
}

fn build_family_unchecked(model: &ModelSpec) -> cbp_core::Result<ControlFamily64> {
    let (m, gamma, imm) = (model.m, model.gamma.rule(), immigration(model.immigration));
    match &model.family {
        FamilySpec::Identity => Ok(ControlFamily64::identity()),
        FamilySpec::Poisson => poisson_family(m, gamma, imm),
        FamilySpec::Binomial => binomial_family(m, gamma, imm),
        FamilySpec::Negbin => negbin_family(m, gamma, imm),
        FamilySpec::Fixed { root, immigration } => {
            Ok(ControlFamily64::fixed("fixed", root.build()?, immigration.build()?))
        }
    }
}

/// The control family, with `(rho0, sigma0)` from `[limit]` attached to a
/// fixed family when both are given. Divisible parts are always drawn as one
/// aggregate variate.
pub fn build_family(config: &ExperimentConfig) -> Result<ControlFamily64> {
    let family = build_family_unchecked(&config.model)?.with_aggregate_sampling(true);
    Ok(match (&config.model.family, config.limit.rho0, config.limit.sigma0) {
        (FamilySpec::Fixed { .. }, Some(rho0), Some(sigma0)) => {
            family.with_declared_limits(DeclaredLimits { rho0, sigma0 })
        }
        _ => family,
    })
}

pub fn offspring(config: &ExperimentConfig, k: u64) -> Result<LatticeLaw64> {
    Ok(match &config.model.offspring {
        OffspringSpec::Identity => LatticeLaw64::Dirac(1),
        OffspringSpec::Binary { b } => {
            let h = b * b / 2.0;
            LatticeLaw64::explicit(vec![h, 1.0 - b * b, h])?
        }
        OffspringSpec::Poisson { drift } => LatticeLaw64::poisson(config.model.m - drift / k as f64)?,
        OffspringSpec::Explicit { pmf } => LatticeLaw64::explicit(pmf.clone())?,
    })
}

pub fn gamma0(config: &ExperimentConfig) -> f64 {
    config
        .limit
        .gamma0
        .unwrap_or_else(|| config.model.gamma.rule().gamma0())
}

/// The `k`-th model of the sequence.
pub fn scaled_model(config: &ExperimentConfig, family: &ControlFamily64, k: u64) -> Result<ScaledModel64> {
    let gamma_k = config.model.gamma.rule().gamma_k(k);
    Ok(ScaledModel64::new(
        k,
        gamma_k,
        offspring(config, k)?,
        family.clone(),
        config.model.m,
        gamma0(config),
    )?)
}

fn atoms(list: &[[f64; 2]]) -> Vec<Atom<f64>> {
    // Validation has already rejected bad atoms.
    list.iter().filter_map(|[u, w]| Atom::new(*u, *w).ok()).collect()
}

/// Limit parameters; unset constants fall back to the family's declarations
/// and, for the built-in families, to the drift of their immigration.
pub fn limit_params(config: &ExperimentConfig) -> LimitParams64 {
    let l = &config.limit;
    let declared = family_declared(&config.model);
    let rho0 = l.rho0.or(declared.map(|d| d.rho0)).unwrap_or(0.0);
    let sigma0 = l.sigma0.or(declared.map(|d| d.sigma0)).unwrap_or(0.0);
    let alpha = match (l.alpha, l.alpha_slope) {
        (None, None) if is_builtin(&config.model.family) => immigration(config.model.immigration).limit_alpha(),
        (a, None) | (a, Some(0.0)) => StateRate::Constant(a.unwrap_or(0.0)),
        (a, Some(slope)) => StateRate::Affine {
            intercept: a.unwrap_or(0.0),
            slope,
        },
    };
    let r = if l.r_slope == 0.0 {
        JumpRate::Constant(l.r_intercept)
    } else {
        JumpRate::Affine {
            intercept: l.r_intercept,
            slope: l.r_slope,
        }
    };
    LimitParams64::new(config.model.m, gamma0(config))
        .with_branching(l.a, l.b, atoms(&l.mu_atoms))
        .with_immigration(alpha, atoms(&l.nu_atoms), r)
        .with_control_limits(rho0, sigma0)
}
