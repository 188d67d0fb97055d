//! Euler–Maruyama integration of the limiting continuous-state process with
//! dependent immigration, and closed forms for its jump-free case (Feller
//! diffusion with immigration).

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::cbp::{uniform_grid, PathSample};
use crate::error::{Error, Result};
use crate::mechanisms::limit::LimitParams;
use crate::scalar::Real;
use crate::stats::{mean_estimate, Estimate};

/// Largest admissible expected number of jumps in one step.
pub const MAX_JUMPS_PER_STEP: f64 = 0.1;

fn poisson_count<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<u64> {
    if rate <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(rate).map_err(|e| Error::Numeric(format!("jump count with rate {rate}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// One jump channel as seen by the integrator: size and rate at state `z`.
struct Channels<'a, T> {
    params: &'a LimitParams<T>,
}

impl<T: Real> Channels<'_, T> {
    /// Branching jumps of size `u` at rate `w z`, and immigration jumps of size
    /// `m u` at rate `w r(z, u)` for each atom `(u, w)`.
    fn for_each(&self, z: T, mut visit: impl FnMut(T, T) -> Result<()>) -> Result<()> {
        let zp = z.max(T::zero());
        for atom in &self.params.mu_atoms {
            visit(atom.size, atom.weight * zp)?;
        }
        for atom in &self.params.nu_atoms {
            let rate = atom.weight * self.params.r.eval(zp, atom.size);
            if !(rate >= T::zero()) {
                return Err(Error::InvariantViolation(format!(
                    "r({zp}, {}) = {rate} < 0",
                    atom.size
                )));
            }
            visit(self.params.m * atom.size, rate)?;
        }
        Ok(())
    }
}

/// Integrates the limit from `z0` with step `dt` up to `horizon` and records
/// every step.
pub fn simulate_csbpdi_path<T: Real, R: Rng + ?Sized>(
    params: &LimitParams<T>,
    z0: T,
    horizon: T,
    dt: T,
    rng: &mut R,
) -> Result<PathSample<T>> {
    simulate_csbpdi_path_on_grid(params, z0, horizon, dt, dt, rng)
}

/// Same as [`simulate_csbpdi_path`] but records only on the grid
/// `0, record_dt, 2 record_dt, ...`; `record_dt` must be a multiple of `dt`.
///
/// The continuous part uses full truncation: the square root is taken of
/// `max(z, 0)` and the state is clamped at 0 after each step. Jumps are
/// thinned per step, with branching jumps compensated in the drift.
pub fn simulate_csbpdi_path_on_grid<T: Real, R: Rng + ?Sized>(
    params: &LimitParams<T>,
    z0: T,
    horizon: T,
    dt: T,
    record_dt: T,
    rng: &mut R,
) -> Result<PathSample<T>> {
    if !(z0 >= T::zero() && z0.is_finite()) {
        return Err(Error::domain("z0", z0.as_f64(), "[0, inf)"));
    }
    if !(dt > T::zero()) || dt > horizon {
        return Err(Error::domain("dt", dt.as_f64(), "(0, horizon]"));
    }
    let ratio = record_dt / dt;
    let per_record = ratio.round();
    if !(per_record >= T::one()) || (ratio - per_record).abs() > T::cast(1e-6) * ratio {
        return Err(Error::domain(
            "record dt",
            record_dt.as_f64(),
            "a positive multiple of dt",
        ));
    }
    let per_record = per_record.to_u64().unwrap_or(1);
    params.validate(&[])?;

    let times = uniform_grid(horizon, record_dt)?;
    let dt_f = dt.as_f64();
    let kappa = params.mean_reversion();
    let c2 = params.diffusion_sq();
    let channels = Channels { params };
    let compensator: T = params
        .mu_atoms
        .iter()
        .fold(T::zero(), |acc, atom| acc + atom.size * atom.weight);

    let mut values = Vec::with_capacity(times.len());
    let mut z = z0;
    values.push(z);
    for _ in 1..times.len() {
        for _ in 0..per_record {
            let zp = z.max(T::zero());
            let drift = params.m * params.alpha.eval(zp) - (kappa + compensator) * zp;
            let noise: f64 = rng.sample(StandardNormal);
            let mut next = z + drift * dt + (c2 * zp * dt).sqrt() * T::cast(noise);
            let mut total_rate = T::zero();
            channels.for_each(zp, |size, rate| {
                total_rate = total_rate + rate;
                let jumps = poisson_count((rate * dt).as_f64(), rng)?;
                next = next + size * T::from_count(jumps);
                Ok(())
            })?;
            if (total_rate * dt).as_f64() > MAX_JUMPS_PER_STEP {
                return Err(Error::Config(format!(
                    "dt * jump rate = {} exceeds {MAX_JUMPS_PER_STEP} at z = {zp}; reduce dt",
                    total_rate.as_f64() * dt_f
                )));
            }
            if next.is_nan() {
                return Err(Error::Numeric(format!("state became NaN from z = {z}")));
            }
            z = next.max(T::zero());
        }
        values.push(z);
    }
    Ok(PathSample {
        times,
        values,
        stream: None,
    })
}

/// Drift, squared diffusion and immigration rate `(kappa, c^2, c0)` of a
/// jump-free limit: `dz = (c0 - kappa z) dt + sqrt(c^2 z) dW`.
fn feller_coefficients<T: Real>(params: &LimitParams<T>) -> Result<(T, T, T)> {
    if !params.mu_atoms.is_empty() || !params.nu_atoms.is_empty() {
        return Err(Error::InvalidParameter(
            "closed forms need a limit without jump atoms".into(),
        ));
    }
    let alpha = params
        .alpha
        .as_constant()
        .ok_or_else(|| Error::InvalidParameter("closed forms need a constant alpha".into()))?;
    Ok((params.mean_reversion(), params.diffusion_sq(), alpha * params.m))
}

/// `(1 - e^{-kappa t}) / kappa`, equal to `t` at `kappa = 0`.
fn decay_integral<T: Real>(kappa: T, t: T) -> T {
    if kappa == T::zero() {
        t
    } else {
        -(-kappa * t).exp_m1() / kappa
    }
}

/// Mean and variance of the Feller diffusion with immigration at time `t`.
///
/// With `E = (1 - e^{-kappa t}) / kappa`:
/// mean `z0 e^{-kappa t} + c0 E`, variance `c^2 (z0 e^{-kappa t} E + c0 E^2 / 2)`.
pub fn feller_moments<T: Real>(params: &LimitParams<T>, z0: T, t: T) -> Result<(T, T)> {
    if !(t >= T::zero()) {
        return Err(Error::domain("t", t.as_f64(), "[0, inf)"));
    }
    let (kappa, c2, c0) = feller_coefficients(params)?;
    let decay = (-kappa * t).exp();
    let e = decay_integral(kappa, t);
    let mean = z0 * decay + c0 * e;
    let var = c2 * (z0 * decay * e + c0 * e * e * T::cast(0.5));
    Ok((mean, var))
}

/// `E[exp(-lambda z(t))] = exp(-z0 psi - phi)` for the Feller diffusion with
/// immigration, with `q = lambda E`, `psi = lambda e^{-kappa t} / (1 + c^2 q / 2)`
/// and `phi = (2 c0 / c^2) ln(1 + c^2 q / 2)`.
pub fn feller_laplace<T: Real>(params: &LimitParams<T>, z0: T, t: T, lambda: T) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(Error::domain("t", t.as_f64(), "[0, inf)"));
    }
    if !(lambda >= T::zero()) {
        return Err(Error::domain("lambda", lambda.as_f64(), "[0, inf)"));
    }
    let (kappa, c2, c0) = feller_coefficients(params)?;
    let half_c2 = T::cast(0.5) * c2;
    let q = lambda * decay_integral(kappa, t);
    let psi = lambda * (-kappa * t).exp() / (T::one() + half_c2 * q);
    let phi = if half_c2 == T::zero() {
        c0 * q
    } else {
        c0 * (half_c2 * q).ln_1p() / half_c2
    };
    Ok((-z0 * psi - phi).exp())
}

/// Values of all paths at grid time `t`.
pub fn values_at<T: Real>(paths: &[PathSample<T>], t: T) -> Result<Vec<f64>> {
    paths
        .iter()
        .map(|p| {
            p.value_at(t)
                .map(Real::as_f64)
                .ok_or_else(|| Error::domain("t", t.as_f64(), "a time on every path grid"))
        })
        .collect()
}

/// Sample mean and standard error of `exp(-lambda z(t))` across paths.
pub fn laplace_mc<T: Real>(paths: &[PathSample<T>], t: T, lambda: T) -> Result<Estimate> {
    if !(lambda >= T::zero()) {
        return Err(Error::domain("lambda", lambda.as_f64(), "[0, inf)"));
    }
    let l = lambda.as_f64();
    let samples: Vec<f64> = values_at(paths, t)?.into_iter().map(|z| (-l * z).exp()).collect();
    Ok(mean_estimate(&samples))
}
