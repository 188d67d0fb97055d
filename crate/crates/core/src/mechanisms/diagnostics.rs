//! Numerical convergence diagnostics for the offspring and control PGFs.
//!
//! Each function measures, at a single `k`, the distance between a
//! `k`-dependent functional and its limit. Running them along an increasing
//! sequence of `k` shows how fast each functional approaches its limit.

use crate::cbp::ScaledModel;
use crate::error::{Error, Result};
use crate::mechanisms::discrete::{lattice_floor, s_k_eval, t_k_eval};
use crate::mechanisms::limit::LimitParams;
use crate::scalar::Real;

/// Below this `|f - 1|`, `ln f / (f - 1)` is evaluated by its series.
pub const LOG_RATIO_SERIES_CUTOFF: f64 = 1e-6;

/// Supremum over a finite `j`-grid, with where it was attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JSup<T> {
    pub value: T,
    pub argmax_j: u64,
    /// The grid scanned was `1..=j_max`.
    pub j_max: u64,
    /// The scanned values were monotone in `j`, so the supremum over all
    /// `j` is attained at `j = 1` or in the limit `j -> inf`.
    pub monotone_in_j: bool,
}

/// `|S_k(lambda) - (G(lambda) + gamma0 lambda^2 / 2)|` and `|T_k(lambda) - m lambda|`.
pub fn branching_deviation<T: Real>(model: &ScaledModel<T>, params: &LimitParams<T>, lambda: T) -> Result<(T, T)> {
    let half = T::cast(0.5);
    let s = s_k_eval(model, lambda)?;
    let s_limit = params.limit_g(lambda) + half * model.gamma0 * lambda * lambda;
    let t = t_k_eval(model, lambda)?;
    Ok(((s - s_limit).abs(), (t - model.m * lambda).abs()))
}

/// Max over `x_grid` of `|gamma_k [1 - h_k^(floor(kx))(g_k(e^{-lambda/k}))] - H(x, m lambda)|`.
pub fn immigration_deviation<T: Real>(
    model: &ScaledModel<T>,
    params: &LimitParams<T>,
    lambda: T,
    x_grid: &[T],
) -> Result<T> {
    let s = model.offspring.pgf_eval((-lambda / model.k_real()).exp())?;
    x_grid.iter().try_fold(T::zero(), |worst, x| {
        let h = model
            .controls
            .immigration_law(model.k, lattice_floor(model.k, *x))?
            .pgf_eval(s)?;
        let discrete = model.gamma_k * (T::one() - h);
        let limit = params.limit_h(*x, model.m * lambda)?;
        Ok(worst.max((discrete - limit).abs()))
    })
}

/// `ln f / (f - 1)` on `(0, 1]`, by series near `f = 1`.
pub fn log_ratio<T: Real>(f: T) -> T {
    let u = f - T::one();
    if u.abs() < T::cast(LOG_RATIO_SERIES_CUTOFF) {
        let (half, third, quarter) = (T::cast(0.5), T::cast(1.0 / 3.0), T::cast(0.25));
        T::one() - u * half + u * u * third - u * u * u * quarter
    } else {
        f.ln() / u
    }
}

pub(crate) fn scan_j<T: Real>(j_max: u64, mut term: impl FnMut(u64) -> Result<T>) -> Result<JSup<T>> {
    if j_max == 0 {
        return Err(Error::domain("j_max", 0.0, "positive integer"));
    }
    let mut best = JSup {
        value: T::zero(),
        argmax_j: 1,
        j_max,
        monotone_in_j: true,
    };
    let (mut rising, mut falling) = (true, true);
    let mut prev: Option<T> = None;
    for j in 1..=j_max {
        let v = term(j)?;
        if v.is_nan() {
            return Err(Error::Numeric(format!("NaN diagnostic at j = {j}")));
        }
        if let Some(p) = prev {
            rising &= v >= p;
            falling &= v <= p;
        }
        prev = Some(v);
        if v > best.value {
            best.value = v;
            best.argmax_j = j;
        }
    }
    best.monotone_in_j = rising || falling;
    Ok(best)
}

/// `sup_j |gamma_k [1 - ln f / (f - 1)] + gamma0 lambda / 2|` with
/// `f = f_k^(j)(g_k(e^{-lambda/k}))`, over `j = 1..=j_max`.
pub fn log_root_deviation<T: Real>(model: &ScaledModel<T>, lambda: T, j_max: u64) -> Result<JSup<T>> {
    let s = model.offspring.pgf_eval((-lambda / model.k_real()).exp())?;
    let target = T::cast(0.5) * model.gamma0 * lambda;
    scan_j(j_max, |j| {
        let f = model.controls.root_law(model.k, j)?.pgf_eval(s)?;
        Ok((model.gamma_k * (T::one() - log_ratio(f)) + target).abs())
    })
}

/// `sup_j |f''(g_k(e^{-lambda/k})) - f''(1-)|` over `j = 1..=j_max`, with
/// `f = f_k^(j)`.
pub fn second_derivative_deviation<T: Real>(model: &ScaledModel<T>, lambda: T, j_max: u64) -> Result<JSup<T>> {
    let s = model.offspring.pgf_eval((-lambda / model.k_real()).exp())?;
    scan_j(j_max, |j| {
        let root = model.controls.root_law(model.k, j)?;
        Ok((root.pgf_derivative(s, 2)? - root.factorial_moment(2)?).abs())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControlFamily;
    use crate::lattice::LatticeLaw;

    #[test]
    fn log_ratio_is_continuous_across_cutoff() {
        for f in [1.0 - 2e-6, 1.0 - 1e-6, 1.0 - 0.999e-6, 1.0 - 1e-9, 1.0_f64] {
            let exact = if f == 1.0 { 1.0 } else { f.ln() / (f - 1.0) };
            assert!((log_ratio(f) - exact).abs() < 1e-9, "{f}");
        }
        assert!((log_ratio(0.5_f64) - 2.0 * 2.0_f64.ln()).abs() < 1e-15);
        assert_eq!(log_ratio(1.0_f64), 1.0);
    }

    #[test]
    fn identity_model_log_root_deviation_shrinks() {
        let dev = |k: u64| {
            let model = ScaledModel::<f64>::identity(k);
            log_root_deviation(&model, 1.0, 5).unwrap().value
        };
        let (a, b, c) = (dev(10), dev(100), dev(1000));
        assert!(a > b && b > c && c < 1e-3, "{a} {b} {c}");
    }

    #[test]
    fn second_derivative_deviation_for_poisson_root() {
        // f = Poisson(r): f''(s) = r^2 e^{r(s-1)}.
        let r = 0.9;
        let fam = ControlFamily::fixed("t", LatticeLaw::poisson(r).unwrap(), LatticeLaw::Dirac(0));
        let model = ScaledModel::new(50, 50.0, LatticeLaw::Dirac(1), fam, 1.0, 1.0).unwrap();
        let d = second_derivative_deviation(&model, 2.0, 3).unwrap();
        let s = (-2.0_f64 / 50.0).exp();
        assert!((d.value - r * r * (1.0 - (r * (s - 1.0)).exp())).abs() < 1e-14);
        assert!(second_derivative_deviation(&model, 2.0, 0).is_err());
    }
}
