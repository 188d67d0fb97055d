//! Functionals of the `k`-th process: `G_k`, `S_k`, `T_k`, `H_k` and the
//! discrete generator on exponentials.

use crate::cbp::ScaledModel;
use crate::control::ControlFamily;
use crate::error::{Error, Result};
use crate::mechanisms::limit::LimitParams;
use crate::scalar::Real;

/// Default extent of the state grid for supremum surrogates.
pub const DEFAULT_X_MAX: f64 = 20.0;
/// Default cap on the number of state-grid points.
pub const DEFAULT_MAX_POINTS: usize = 2000;

fn check_lambda_in_range<T: Real>(lambda: T, k: T) -> Result<()> {
    if lambda >= T::zero() && lambda <= k {
        Ok(())
    } else {
        Err(Error::domain("lambda", lambda.as_f64(), "[0, k]"))
    }
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if lambda >= T::zero() && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("lambda", lambda.as_f64(), "[0, inf)"))
    }
}

/// `floor(k x)`, tolerant of rounding on lattice points.
pub fn lattice_floor<T: Real>(k: u64, x: T) -> u64 {
    (T::from_count(k) * x + T::cast(1e-9)).floor().to_u64().unwrap_or(0)
}

/// `k x` as an integer, provided `x` lies in `k^-1 N_0` within 1e-9.
pub fn lattice_index<T: Real>(k: u64, x: T) -> Result<u64> {
    let kx = T::from_count(k) * x;
    let j = kx.round();
    if !(x >= T::zero()) || (kx - j).abs() > T::cast(1e-9) {
        return Err(Error::domain("x", x.as_f64(), "a point of k^-1 N_0"));
    }
    j.to_u64()
        .ok_or_else(|| Error::domain("x", x.as_f64(), "a point of k^-1 N_0"))
}

/// `G_k(lambda) = (k gamma_k / m) [g_k(1 - lambda/k) - (1 - m lambda / k)]`, `lambda` in `[0, k]`.
pub fn g_k_eval<T: Real>(model: &ScaledModel<T>, lambda: T) -> Result<T> {
    let k = model.k_real();
    check_lambda_in_range(lambda, k)?;
    let g = model.offspring.pgf_eval(T::one() - lambda / k)?;
    Ok(k * model.gamma_k / model.m * (g - (T::one() - model.m * lambda / k)))
}

/// `S_k(lambda) = (k gamma_k / m) [g_k(e^{-lambda/k}) - (1 - m lambda / k)]`.
pub fn s_k_eval<T: Real>(model: &ScaledModel<T>, lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    let k = model.k_real();
    let g = model.offspring.pgf_eval((-lambda / k).exp())?;
    Ok(k * model.gamma_k / model.m * (g - (T::one() - model.m * lambda / k)))
}

/// `T_k(lambda) = k [1 - g_k(e^{-lambda/k})]`.
pub fn t_k_eval<T: Real>(model: &ScaledModel<T>, lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    let k = model.k_real();
    let g = model.offspring.pgf_eval((-lambda / k).exp())?;
    Ok(k * (T::one() - g))
}

/// `H_k(x, lambda) = gamma_k [1 - h_k^(floor(kx))(1 - lambda/k)]`, `lambda` in `[0, k]`.
pub fn h_k_eval<T: Real>(family: &ControlFamily<T>, k: u64, gamma_k: T, x: T, lambda: T) -> Result<T> {
    let k_real = T::from_count(k);
    check_lambda_in_range(lambda, k_real)?;
    if !(x >= T::zero()) {
        return Err(Error::domain("x", x.as_f64(), "[0, inf)"));
    }
    let h = family
        .immigration_law(k, lattice_floor(k, x))?
        .pgf_eval(T::one() - lambda / k_real)?;
    Ok(gamma_k * (T::one() - h))
}

/// `A_k e_lambda(x) = gamma_k [c_k^(kx)(g_k(e^{-lambda/k})) - e^{-lambda x}]` for `x` in `k^-1 N_0`.
pub fn discrete_generator_exp<T: Real>(model: &ScaledModel<T>, x: T, lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    let j = lattice_index(model.k, x)?;
    let k = model.k_real();
    let s = model.offspring.pgf_eval((-lambda / k).exp())?;
    let c = model.controls.control_pgf(model.k, j, s)?;
    let e = (-lambda * T::from_count(j) / k).exp();
    Ok(model.gamma_k * (c - e))
}

/// Max over `x_grid` of `|A_k e_lambda(x) - A e_lambda(x)|`: a finite
/// surrogate for the supremum over all of `k^-1 N_0`.
pub fn generator_gap<T: Real>(model: &ScaledModel<T>, params: &LimitParams<T>, lambda: T, x_grid: &[T]) -> Result<T> {
    x_grid.iter().try_fold(T::zero(), |worst, x| {
        let discrete = discrete_generator_exp(model, *x, lambda)?;
        let limit = params.generator_exp(*x, lambda)?;
        Ok(worst.max((discrete - limit).abs()))
    })
}

/// Points `i s / k` of `k^-1 N_0` in `[0, x_max]`, with the stride `s` the
/// smallest integer keeping the count at most `max_points`.
pub fn lattice_grid<T: Real>(k: u64, x_max: T, max_points: usize) -> Vec<T> {
    let top = (T::from_count(k) * x_max + T::cast(1e-9)).floor().to_u64().unwrap_or(0);
    let max_points = max_points.max(2) as u64;
    let stride = top.div_ceil(max_points - 1).max(1);
    let k_real = T::from_count(k);
    (0..=top / stride).map(|i| T::from_count(i * stride) / k_real).collect()
}
