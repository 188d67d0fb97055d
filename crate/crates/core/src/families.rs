//! Poisson, binomial and negative-binomial control families, and numerical
//! checks of the moment and immigration-growth conditions on a control family.

use crate::control::{ControlFamily, DeclaredLimits};
use crate::error::{Error, Result};
use crate::lattice::LatticeLaw;
use crate::mechanisms::diagnostics::{scan_j, JSup};
use crate::mechanisms::limit::StateRate;
use crate::scalar::Real;

/// Time scaling `gamma_k = c k^p` with `0 < p <= 1`, so that `gamma_k / k`
/// converges to `gamma0 = c` when `p = 1` and to 0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule<T> {
    Linear { c: T },
    Power { c: T, p: T },
}

impl<T: Real> GammaRule<T> {
    pub fn validate(&self) -> Result<()> {
        let (c, p) = self.coefficients();
        if !(c > T::zero() && c.is_finite()) {
            return Err(Error::domain("gamma rule c", c.as_f64(), "(0, inf)"));
        }
        if !(p > T::zero() && p <= T::one()) {
            return Err(Error::domain("gamma rule p", p.as_f64(), "(0, 1]"));
        }
        Ok(())
    }

    fn coefficients(&self) -> (T, T) {
        match *self {
            GammaRule::Linear { c } => (c, T::one()),
            GammaRule::Power { c, p } => (c, p),
        }
    }

    pub fn gamma_k(&self, k: u64) -> T {
        let (c, p) = self.coefficients();
        let k = T::from_count(k);
        if p == T::one() {
            c * k
        } else {
            c * k.powf(p)
        }
    }

    /// `lim gamma_k / k`.
    pub fn gamma0(&self) -> T {
        let (c, p) = self.coefficients();
        if p == T::one() {
            c
        } else {
            T::zero()
        }
    }
}

/// Immigration attached to a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Immigration<T> {
    None,
    /// `h_k^(j) = Poisson((beta + slope j / k) k / gamma_k)`, whose immigration
    /// mechanism in the limit is `H(x, lambda) = (beta + slope x) lambda`.
    Poisson {
        beta: T,
        slope: T,
    },
}

impl<T: Real> Immigration<T> {
    pub fn poisson(beta: T) -> Self {
        Immigration::Poisson { beta, slope: T::zero() }
    }

    pub fn law(&self, k: u64, j: u64, gamma_k: T) -> Result<LatticeLaw<T>> {
        match *self {
            Immigration::None => Ok(LatticeLaw::Dirac(0)),
            Immigration::Poisson { beta, slope } => {
                let kr = T::from_count(k);
                let rate = (beta + slope * T::from_count(j) / kr) * kr / gamma_k;
                LatticeLaw::poisson(rate)
            }
        }
    }

    /// The drift `alpha(x)` of the limiting immigration mechanism.
    pub fn limit_alpha(&self) -> StateRate<T> {
        match *self {
            Immigration::None => StateRate::Constant(T::zero()),
            Immigration::Poisson { beta, slope } if slope == T::zero() => StateRate::Constant(beta),
            Immigration::Poisson { beta, slope } => StateRate::Affine { intercept: beta, slope },
        }
    }

    fn attach(self, family: ControlFamily<T>, gamma: GammaRule<T>) -> ControlFamily<T>
    where
        T: 'static,
    {
        family.with_immigration(move |k, j| self.law(k, j, gamma.gamma_k(k)))
    }
}

/// `varphi(j) ~ Poisson(rate(k, j) j)`, with root law `Poisson(rate(k, j))`.
pub fn poisson_control<T: Real>(
    name: impl Into<String>,
    rate: impl Fn(u64, u64) -> T + Send + Sync + 'static,
) -> ControlFamily<T> {
    ControlFamily::new(
        name,
        move |k, j| LatticeLaw::poisson(rate(k, j)),
        |_, _| Ok(LatticeLaw::Dirac(0)),
    )
    .with_aggregate_sampling(true)
}

/// `varphi(j) ~ Binomial(n(k, j) j, p(k, j))`, with root law `Binomial(n(k, j), p(k, j))`.
pub fn binomial_control<T: Real>(
    name: impl Into<String>,
    n: impl Fn(u64, u64) -> u64 + Send + Sync + 'static,
    p: impl Fn(u64, u64) -> T + Send + Sync + 'static,
) -> ControlFamily<T> {
    ControlFamily::new(
        name,
        move |k, j| LatticeLaw::binomial(n(k, j), p(k, j)),
        |_, _| Ok(LatticeLaw::Dirac(0)),
    )
    .with_aggregate_sampling(true)
}

/// `varphi(j) ~ NegativeBinomial(n(k, j) j, p(k, j))`, with root law
/// `NegativeBinomial(n(k, j), p(k, j))`.
pub fn negbin_control<T: Real>(
    name: impl Into<String>,
    n: impl Fn(u64, u64) -> T + Send + Sync + 'static,
    p: impl Fn(u64, u64) -> T + Send + Sync + 'static,
) -> ControlFamily<T> {
    ControlFamily::new(
        name,
        move |k, j| {
            let (n, p) = (n(k, j), p(k, j));
            if n == T::one() {
                LatticeLaw::geometric(p)
            } else {
                LatticeLaw::negative_binomial(n, p)
            }
        },
        |_, _| Ok(LatticeLaw::Dirac(0)),
    )
    .with_aggregate_sampling(true)
}

/// `sigma0 = m^-1 (m^-1 - p0)` for a binomial family with `p_k(j) -> p0`.
pub fn binomial_sigma0<T: Real>(m: T, p0: T) -> T {
    (T::one() / m) * (T::one() / m - p0)
}

/// `sigma0 = m^-1 (m^-1 + q0)` for a negative-binomial family with
/// `N_k(j)^-1 (1 - p_k(j)) / p_k(j) -> q0`.
pub fn negbin_sigma0<T: Real>(m: T, q0: T) -> T {
    (T::one() / m) * (T::one() / m + q0)
}

fn check_m<T: Real>(m: T) -> Result<()> {
    if m > T::zero() && m.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("m", m.as_f64(), "(0, inf)"))
    }
}

/// Poisson control with `r_k(j) = m^-1 (1 - 2/k + 1/(j k ln k))`, defined for `k >= 2`;
/// declares `rho0 = 2 gamma0` and `sigma0 = m^-2`.
pub fn poisson_family<T: Real>(m: T, gamma: GammaRule<T>, immigration: Immigration<T>) -> Result<ControlFamily<T>> {
    check_m(m)?;
    gamma.validate()?;
    let check_k = |k: u64| {
        if k < 2 {
            Err(Error::domain("k", k as f64, "k >= 2 for the Poisson family"))
        } else {
            Ok(T::from_count(k))
        }
    };
    let root = move |k: u64, j: u64| {
        let kr = check_k(k)?;
        let jr = T::from_count(j);
        LatticeLaw::poisson((T::one() - T::cast(2.0) / kr + T::one() / (jr * kr * kr.ln())) / m)
    };
    let family = ControlFamily::new("poisson", root, |_, _| Ok(LatticeLaw::Dirac(0)))
        .with_aggregate_sampling(true)
        .with_declared_limits(DeclaredLimits {
            rho0: T::cast(2.0) * gamma.gamma0(),
            sigma0: T::one() / (m * m),
        })
        .with_root_limit(move |k| LatticeLaw::poisson((T::one() - T::cast(2.0) / check_k(k)?) / m));
    Ok(immigration.attach(family, gamma))
}

/// Binomial control with `N_k(j) = 1 + j k (k + 1)` and `p_k(j) = 1/(m j k^2)`;
/// declares `rho0 = -gamma0` and `sigma0 = m^-2` (`p0 = 0`).
pub fn binomial_family<T: Real>(m: T, gamma: GammaRule<T>, immigration: Immigration<T>) -> Result<ControlFamily<T>> {
    check_m(m)?;
    gamma.validate()?;
    let n = |k: u64, j: u64| 1 + j * k * (k + 1);
    let p = move |k: u64, j: u64| {
        let kr = T::from_count(k);
        T::one() / (m * T::from_count(j) * kr * kr)
    };
    let family = binomial_control("binomial", n, p)
        .with_declared_limits(DeclaredLimits {
            rho0: -gamma.gamma0(),
            sigma0: binomial_sigma0(m, T::zero()),
        })
        .with_root_limit(move |k| {
            let kr = T::from_count(k);
            LatticeLaw::poisson((kr + T::one()) / (m * kr))
        });
    Ok(immigration.attach(family, gamma))
}

/// Geometric control (`N_k(j) = 1`) with `p_k(j) = m e^{(j+k)^-2} / (1 + m e^{(j+k)^-2})`;
/// declares `rho0 = 0` and `sigma0 = 2 m^-2` (`q0 = m^-1`).
pub fn negbin_family<T: Real>(m: T, gamma: GammaRule<T>, immigration: Immigration<T>) -> Result<ControlFamily<T>> {
    check_m(m)?;
    gamma.validate()?;
    let p = move |k: u64, j: u64| {
        let jk = T::from_count(j + k);
        let e = m * (T::one() / (jk * jk)).exp();
        e / (T::one() + e)
    };
    let family = negbin_control("negbin", |_, _| T::one(), p)
        .with_declared_limits(DeclaredLimits {
            rho0: T::zero(),
            sigma0: negbin_sigma0(m, T::one() / m),
        })
        .with_root_limit(move |_| LatticeLaw::geometric(m / (T::one() + m)));
    Ok(immigration.attach(family, gamma))
}

/// How a supremum over `j` was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupMode {
    /// Maximum over `1..=j_max` only.
    Grid,
    /// Maximum over `1..=j_max` and the analytic `j -> inf` root law; used
    /// when the grid values are monotone in `j` and the family knows its limit.
    GridAndLimit,
}

/// A supremum over `j` of one moment deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupDeviation<T> {
    pub value: T,
    pub grid: JSup<T>,
    /// Deviation of the `j -> inf` root law, when used.
    pub limit: Option<T>,
    pub mode: SupMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow<T> {
    pub k: u64,
    pub gamma_k: T,
    /// `sup_j |gamma_k [1 - m f'(1-)] - rho0|`.
    pub dev1: SupDeviation<T>,
    /// `sup_j |f''(1-) - sigma0|`.
    pub dev2: SupDeviation<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport<T> {
    pub rows: Vec<MomentRow<T>>,
    /// `dev1` is non-increasing along the `k` list.
    pub dev1_monotone: bool,
    pub dev2_monotone: bool,
}

fn non_increasing<T: Real>(values: impl Iterator<Item = T>) -> bool {
    let v: Vec<T> = values.collect();
    v.windows(2).all(|w| w[1] <= w[0])
}

fn sup_deviation<T: Real>(
    family: &ControlFamily<T>,
    k: u64,
    j_max: u64,
    term: impl Fn(&LatticeLaw<T>) -> Result<T>,
) -> Result<SupDeviation<T>> {
    let grid = scan_j(j_max, |j| term(&family.root_law(k, j)?))?;
    let limit = match family.root_law_limit(k) {
        Some(law) if grid.monotone_in_j => Some(term(&law?)?),
        _ => None,
    };
    Ok(SupDeviation {
        value: limit.map_or(grid.value, |l| grid.value.max(l)),
        grid,
        limit,
        mode: if limit.is_some() {
            SupMode::GridAndLimit
        } else {
            SupMode::Grid
        },
    })
}

/// Exact factorial-moment deviations of the root laws from the declared
/// `(rho0, sigma0)`, per `k`, with the supremum over `j` as in [`SupMode`].
pub fn verify_moment_assumption<T: Real>(
    family: &ControlFamily<T>,
    m: T,
    gamma: impl Fn(u64) -> T,
    k_list: &[u64],
    j_max: u64,
) -> Result<MomentReport<T>> {
    let limits = family
        .declared_limits()
        .ok_or_else(|| Error::InvalidParameter(format!("family {} declares no limits", family.name())))?;
    let rows = k_list
        .iter()
        .map(|&k| {
            let gamma_k = gamma(k);
            let dev1 = sup_deviation(family, k, j_max, |law| {
                Ok((gamma_k * (T::one() - m * law.factorial_moment(1)?) - limits.rho0).abs())
            })?;
            let dev2 = sup_deviation(family, k, j_max, |law| {
                Ok((law.factorial_moment(2)? - limits.sigma0).abs())
            })?;
            Ok(MomentRow { k, gamma_k, dev1, dev2 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentReport {
        dev1_monotone: non_increasing(rows.iter().map(|r| r.dev1.value)),
        dev2_monotone: non_increasing(rows.iter().map(|r| r.dev2.value)),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthReport<T> {
    /// Smallest `K1` with `(gamma_k / k) h'(1-) <= K1 (1 + x)` on the grid.
    pub k1_hat: T,
    pub argmax_x: T,
}

/// Estimates the immigration-mean growth constant at one `k`.
pub fn verify_immigration_growth<T: Real>(
    family: &ControlFamily<T>,
    k: u64,
    gamma_k: T,
    x_grid: &[T],
) -> Result<GrowthReport<T>> {
    let scale = gamma_k / T::from_count(k);
    let mut report = GrowthReport {
        k1_hat: T::zero(),
        argmax_x: x_grid.first().copied().unwrap_or(T::zero()),
    };
    for &x in x_grid {
        if !(x >= T::zero()) {
            return Err(Error::domain("x", x.as_f64(), "[0, inf)"));
        }
        let j = crate::mechanisms::discrete::lattice_floor(k, x);
        let mean = family.immigration_law(k, j)?.factorial_moment(1)?;
        let ratio = scale * mean / (T::one() + x);
        if ratio > report.k1_hat {
            report.k1_hat = ratio;
            report.argmax_x = x;
        }
    }
    Ok(report)
}
