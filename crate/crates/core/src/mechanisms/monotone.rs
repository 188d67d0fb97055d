//! Sign test for iterated forward differences.
//!
//! A continuous `theta` is completely monotone when `(-1)^j Delta_d^j theta >= 0`
//! for every order `j` and step `d`. A function `G` is a branching mechanism
//! exactly when `Delta_c^2 G` is completely monotone for every `c`, which is
//! what [`complete_monotone_check`] probes on a finite grid of orders and points.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneReport<T> {
    /// Every `(-1)^j Delta_d^j Delta_c^2 f(lambda)` was `>= -tol`.
    pub holds: bool,
    /// Smallest signed value `(-1)^j Delta_d^j Delta_c^2 f(lambda)` seen.
    pub worst_value: T,
    /// `max(0, -worst_value)`.
    pub worst_violation: T,
    /// `(j, lambda)` where `worst_value` occurred.
    pub worst_point: (u32, T),
}

/// `Delta_d f(lambda) = f(lambda + d) - f(lambda)`.
pub fn forward_difference<T: Real>(f: impl Fn(T) -> Result<T>, d: T) -> impl Fn(T) -> Result<T> {
    move |lambda| Ok(f(lambda + d)? - f(lambda)?)
}

/// Checks `(-1)^j Delta_d^j Delta_c^2 f(lambda) >= -tol` for `j = 0..=j_max` and
/// every grid `lambda`, with `f` defined on `[0, domain_end]`.
///
/// The differences follow the recursion `Delta_d^j = Delta_d^{j-1} Delta_d`:
/// the values `Delta_c^2 f(lambda + i d)`, `i = 0..=j_max`, are differenced
/// level by level, and level `j` at offset 0 is `Delta_d^j Delta_c^2 f(lambda)`.
pub fn complete_monotone_check<T: Real>(
    f: impl Fn(T) -> Result<T>,
    domain_end: T,
    c: T,
    d: T,
    j_max: u32,
    lambda_grid: &[T],
    tol: T,
) -> Result<MonotoneReport<T>> {
    if !(c > T::zero()) {
        return Err(Error::domain("c", c.as_f64(), "(0, inf)"));
    }
    if !(d > T::zero()) {
        return Err(Error::domain("d", d.as_f64(), "(0, inf)"));
    }
    if !(tol >= T::zero()) {
        return Err(Error::domain("tol", tol.as_f64(), "[0, inf)"));
    }
    let reach = T::from_count(u64::from(j_max)) * d + T::cast(2.0) * c;
    let second = forward_difference(forward_difference(&f, c), c);

    let mut report = MonotoneReport {
        holds: true,
        worst_value: T::infinity(),
        worst_violation: T::zero(),
        worst_point: (0, T::zero()),
    };
    for &lambda in lambda_grid {
        if !(lambda >= T::zero()) || lambda + reach > domain_end * (T::one() + T::epsilon()) {
            return Err(Error::domain(
                "lambda + j_max d + 2c",
                (lambda + reach).as_f64(),
                "within [0, L]",
            ));
        }
        let mut level = (0..=j_max)
            .map(|i| second(lambda + T::from_count(u64::from(i)) * d))
            .collect::<Result<Vec<T>>>()?;
        for j in 0..=j_max {
            let signed = if j % 2 == 0 { level[0] } else { -level[0] };
            if signed.is_nan() {
                return Err(Error::Numeric(format!("NaN difference at j = {j}, lambda = {lambda}")));
            }
            if signed < report.worst_value {
                report.worst_value = signed;
                report.worst_point = (j, lambda);
            }
            level = level.windows(2).map(|w| w[1] - w[0]).collect();
        }
    }
    report.worst_violation = (-report.worst_value).max(T::zero());
    report.holds = report.worst_value >= -tol;
    Ok(report)
}
