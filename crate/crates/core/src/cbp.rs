//! Simulation of the controlled branching recursion
//! `Z(n+1) = sum_{i=1}^{phi(Z(n))} X_i` and of its rescaled version
//! `z_k(t) = Z_k(floor(gamma_k t)) / k`.

use rand::Rng;

use crate::control::ControlFamily;
use crate::error::{Error, Result};
use crate::lattice::LatticeLaw;
use crate::rng::StreamKey;
use crate::scalar::Real;

/// Largest population the chain may reach: beyond it the rescaled state is
/// no longer an exact integer multiple of `1/k` in `f64`.
pub const MAX_STATE: u64 = 1 << 53;

/// The `k`-th process of a rescaled sequence.
#[derive(Debug, Clone)]
pub struct ScaledModel<T> {
    pub k: u64,
    pub gamma_k: T,
    /// Offspring law with PGF `g_k`.
    pub offspring: LatticeLaw<T>,
    pub controls: ControlFamily<T>,
    /// Limit of the offspring means.
    pub m: T,
    /// Declared limit of `gamma_k / k`.
    pub gamma0: T,
    /// Draw the offspring total of `phi` parents as one aggregate variate
    /// where the law admits it, instead of `phi` separate draws.
    pub aggregate_offspring: bool,
}

impl<T: Real> ScaledModel<T> {
    pub fn new(
        k: u64,
        gamma_k: T,
        offspring: LatticeLaw<T>,
        controls: ControlFamily<T>,
        m: T,
        gamma0: T,
    ) -> Result<Self> {
        let model = Self {
            k,
            gamma_k,
            offspring,
            controls,
            m,
            gamma0,
            aggregate_offspring: true,
        };
        model.validate()?;
        Ok(model)
    }

    /// Identity dynamics: one child each, control `phi(j) = j`, no immigration.
    pub fn identity(k: u64) -> Self {
        let k_real = T::from_count(k);
        Self {
            k,
            gamma_k: k_real,
            offspring: LatticeLaw::Dirac(1),
            controls: ControlFamily::identity(),
            m: T::one(),
            gamma0: T::one(),
            aggregate_offspring: true,
        }
    }

    pub fn with_aggregate_offspring(mut self, enabled: bool) -> Self {
        self.aggregate_offspring = enabled;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::domain("k", 0.0, "positive integer"));
        }
        if !(self.gamma_k > T::zero() && self.gamma_k.is_finite()) {
            return Err(Error::domain("gamma_k", self.gamma_k.as_f64(), "(0, inf)"));
        }
        if !(self.m > T::zero() && self.m.is_finite()) {
            return Err(Error::domain("m", self.m.as_f64(), "(0, inf)"));
        }
        if !(self.gamma0 >= T::zero() && self.gamma0.is_finite()) {
            return Err(Error::domain("gamma0", self.gamma0.as_f64(), "[0, inf)"));
        }
        self.offspring.validate()?;
        if !self.offspring.mean().is_finite() {
            return Err(Error::InvalidParameter("offspring mean is infinite".into()));
        }
        Ok(())
    }

    pub fn k_real(&self) -> T {
        T::from_count(self.k)
    }

    /// One generation from population `z`.
    pub fn step<R: Rng + ?Sized>(&self, z: u64, rng: &mut R) -> Result<u64> {
        let parents = self.controls.sample_control(self.k, z, rng)?.total;
        let next = if self.aggregate_offspring {
            self.offspring.sample_sum(parents, rng)?
        } else {
            self.offspring.sample_sum_direct(parents, rng)?
        };
        if next > MAX_STATE {
            return Err(Error::Overflow(format!(
                "population {next} exceeds 2^53 at k={}",
                self.k
            )));
        }
        Ok(next)
    }

    /// `sum_j Q(i, j) s^j = c^(i)(g(s))`.
    pub fn transition_pgf(&self, i: u64, s: T) -> Result<T> {
        let g = self.offspring.pgf_eval(s)?;
        self.controls.control_pgf(self.k, i, g)
    }

    /// Number of chain steps taken by time `t`: `floor(gamma_k t)`.
    pub fn steps_by(&self, t: T) -> u64 {
        // The small shift absorbs rounding when gamma_k t is an integer.
        (self.gamma_k * t + T::cast(1e-9)).floor().to_u64().unwrap_or(u64::MAX)
    }

    /// Runs the chain from `Z_k(0) = z0` and records `z_k(t)` on the grid
    /// `0, dt, 2 dt, ...` up to `horizon`; the path is right-continuous and
    /// piecewise constant between chain steps.
    pub fn simulate_scaled_path<R: Rng + ?Sized>(
        &self,
        z0: u64,
        horizon: T,
        grid_dt: T,
        rng: &mut R,
    ) -> Result<PathSample<T>> {
        let times = uniform_grid(horizon, grid_dt)?;
        let k = self.k_real();
        let mut values = Vec::with_capacity(times.len());
        let mut z = z0;
        let mut taken = 0u64;
        for t in &times {
            let target = self.steps_by(*t);
            while taken < target {
                z = self.step(z, rng)?;
                taken += 1;
            }
            values.push(T::from_count(z) / k);
        }
        Ok(PathSample {
            times,
            values,
            stream: None,
        })
    }
}

/// Convenience wrapper for [`ScaledModel::step`].
pub fn cbp_step<T: Real, R: Rng + ?Sized>(model: &ScaledModel<T>, z: u64, rng: &mut R) -> Result<u64> {
    model.step(z, rng)
}

/// Convenience wrapper for [`ScaledModel::transition_pgf`].
pub fn transition_pgf<T: Real>(model: &ScaledModel<T>, i: u64, s: T) -> Result<T> {
    model.transition_pgf(i, s)
}

/// One trajectory sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub stream: Option<StreamKey>,
}

impl<T: Real> PathSample<T> {
    pub fn with_stream(mut self, key: StreamKey) -> Self {
        self.stream = Some(key);
        self
    }

    /// Index of grid time `t`, if `t` is on the grid.
    pub fn index_of(&self, t: T) -> Option<usize> {
        let tol = T::cast(1e-9) * T::one().max(t.abs());
        let i = self.times.partition_point(|s| *s < t - tol);
        (i < self.times.len() && (self.times[i] - t).abs() <= tol).then_some(i)
    }

    pub fn value_at(&self, t: T) -> Option<T> {
        self.index_of(t).map(|i| self.values[i])
    }
}

/// `0, dt, 2 dt, ..., n dt` with `n = floor(horizon / dt)`.
pub fn uniform_grid<T: Real>(horizon: T, dt: T) -> Result<Vec<T>> {
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(Error::domain("grid dt", dt.as_f64(), "(0, inf)"));
    }
    if !(horizon >= dt && horizon.is_finite()) {
        return Err(Error::domain("horizon", horizon.as_f64(), "[dt, inf)"));
    }
    let n = (horizon / dt + T::cast(1e-9))
        .floor()
        .to_u64()
        .ok_or_else(|| Error::domain("horizon / dt", (horizon / dt).as_f64(), "finite"))?;
    Ok((0..=n).map(|i| T::from_count(i) * dt).collect())
}
