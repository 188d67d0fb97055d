//! Parameters of the limiting continuous-state process with dependent
//! immigration, its branching mechanism `G`, immigration mechanism `H` and its
//! generator on exponentials.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One atom `weight * delta_size` of a finite atomic measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub size: T,
    pub weight: T,
}

impl<T: Real> Atom<T> {
    pub fn new(size: T, weight: T) -> Result<Self> {
        if !(size > T::zero() && size.is_finite()) {
            return Err(Error::domain("atom size", size.as_f64(), "(0, inf)"));
        }
        if !(weight > T::zero() && weight.is_finite()) {
            return Err(Error::domain("atom weight", weight.as_f64(), "(0, inf)"));
        }
        Ok(Self { size, weight })
    }
}

/// Immigration drift `alpha(x)`.
#[derive(Clone)]
pub enum StateRate<T> {
    Constant(T),
    Affine { intercept: T, slope: T },
    Custom(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T: Real> StateRate<T> {
    pub fn eval(&self, x: T) -> T {
        match self {
            StateRate::Constant(c) => *c,
            StateRate::Affine { intercept, slope } => *intercept + *slope * x,
            StateRate::Custom(f) => f(x),
        }
    }

    pub fn as_constant(&self) -> Option<T> {
        match self {
            StateRate::Constant(c) => Some(*c),
            StateRate::Affine { intercept, slope } if *slope == T::zero() => Some(*intercept),
            _ => None,
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for StateRate<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateRate::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            StateRate::Affine { intercept, slope } => f
                .debug_struct("Affine")
                .field("intercept", intercept)
                .field("slope", slope)
                .finish(),
            StateRate::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Immigration jump rate `r(x, u)`.
#[derive(Clone)]
pub enum JumpRate<T> {
    Constant(T),
    /// `intercept + slope * x`, independent of the jump size.
    Affine {
        intercept: T,
        slope: T,
    },
    Custom(Arc<dyn Fn(T, T) -> T + Send + Sync>),
}

impl<T: Real> JumpRate<T> {
    pub fn eval(&self, x: T, u: T) -> T {
        match self {
            JumpRate::Constant(c) => *c,
            JumpRate::Affine { intercept, slope } => *intercept + *slope * x,
            JumpRate::Custom(f) => f(x, u),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for JumpRate<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpRate::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            JumpRate::Affine { intercept, slope } => f
                .debug_struct("Affine")
                .field("intercept", intercept)
                .field("slope", slope)
                .finish(),
            JumpRate::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Data of the limit process: `(a, b, mu)` for branching, `(alpha, nu, r)`
/// for immigration, and the constants `m, gamma0, rho0, sigma0` inherited from
/// the approximating sequence.
#[derive(Debug, Clone)]
pub struct LimitParams<T> {
    pub a: T,
    pub b: T,
    pub mu_atoms: Vec<Atom<T>>,
    pub alpha: StateRate<T>,
    pub nu_atoms: Vec<Atom<T>>,
    pub r: JumpRate<T>,
    pub m: T,
    pub gamma0: T,
    pub rho0: T,
    pub sigma0: T,
    /// Linear-growth constant `K`; when set, [`LimitParams::limit_h`] enforces
    /// `H(x, lambda) <= K lambda (1 + x)`.
    pub growth: Option<T>,
    /// Immigration-mean bound `K1`.
    pub k1: Option<T>,
}

impl<T: Real> LimitParams<T> {
    /// Everything zero except `m` and `gamma0`: `G = 0`, `H = 0`.
    pub fn new(m: T, gamma0: T) -> Self {
        Self {
            a: T::zero(),
            b: T::zero(),
            mu_atoms: Vec::new(),
            alpha: StateRate::Constant(T::zero()),
            nu_atoms: Vec::new(),
            r: JumpRate::Constant(T::zero()),
            m,
            gamma0,
            rho0: T::zero(),
            sigma0: T::zero(),
            growth: None,
            k1: None,
        }
    }

    pub fn with_branching(mut self, a: T, b: T, mu_atoms: Vec<Atom<T>>) -> Self {
        self.a = a;
        self.b = b;
        self.mu_atoms = mu_atoms;
        self
    }

    pub fn with_immigration(mut self, alpha: StateRate<T>, nu_atoms: Vec<Atom<T>>, r: JumpRate<T>) -> Self {
        self.alpha = alpha;
        self.nu_atoms = nu_atoms;
        self.r = r;
        self
    }

    pub fn with_control_limits(mut self, rho0: T, sigma0: T) -> Self {
        self.rho0 = rho0;
        self.sigma0 = sigma0;
        self
    }

    pub fn with_growth_constants(mut self, growth: Option<T>, k1: Option<T>) -> Self {
        self.growth = growth;
        self.k1 = k1;
        self
    }

    /// `alpha(x) + sum_nu r(x, u) u w`, the left side of the linear-growth condition.
    pub fn immigration_intensity(&self, x: T) -> T {
        self.nu_atoms.iter().fold(self.alpha.eval(x), |acc, atom| {
            acc + self.r.eval(x, atom.size) * atom.size * atom.weight
        })
    }

    /// Smallest `K` with `immigration_intensity(x) <= K (1 + x)` on the grid.
    pub fn estimate_growth_constant(&self, x_grid: &[T]) -> T {
        x_grid
            .iter()
            .map(|x| self.immigration_intensity(*x) / (T::one() + *x))
            .fold(T::zero(), T::max)
    }

    /// Checks parameter domains, and non-negativity plus linear growth of the
    /// immigration data on `x_grid`.
    pub fn validate(&self, x_grid: &[T]) -> Result<()> {
        let finite = |what, v: T| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(what, v.as_f64(), "finite"))
            }
        };
        finite("a", self.a)?;
        finite("rho0", self.rho0)?;
        if !(self.b >= T::zero() && self.b.is_finite()) {
            return Err(Error::domain("b", self.b.as_f64(), "[0, inf)"));
        }
        if !(self.m > T::zero() && self.m.is_finite()) {
            return Err(Error::domain("m", self.m.as_f64(), "(0, inf)"));
        }
        if !(self.gamma0 >= T::zero() && self.gamma0.is_finite()) {
            return Err(Error::domain("gamma0", self.gamma0.as_f64(), "[0, inf)"));
        }
        if !(self.sigma0 >= T::zero() && self.sigma0.is_finite()) {
            return Err(Error::domain("sigma0", self.sigma0.as_f64(), "[0, inf)"));
        }
        for atom in self.mu_atoms.iter().chain(&self.nu_atoms) {
            Atom::new(atom.size, atom.weight)?;
        }
        for x in x_grid {
            let alpha = self.alpha.eval(*x);
            if !(alpha >= T::zero()) {
                return Err(Error::InvariantViolation(format!("alpha({x}) = {alpha} < 0")));
            }
            for atom in &self.nu_atoms {
                let r = self.r.eval(*x, atom.size);
                if !(r >= T::zero()) {
                    return Err(Error::InvariantViolation(format!("r({x}, {}) = {r} < 0", atom.size)));
                }
            }
            if let Some(k) = self.growth {
                let lhs = self.immigration_intensity(*x);
                if lhs > k * (T::one() + *x) * (T::one() + T::cast(1e-12)) {
                    return Err(Error::InvariantViolation(format!(
                        "linear growth fails at x = {x}: {lhs} > {k} (1 + x)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Drift rate `a + rho0` of the limit.
    pub fn mean_reversion(&self) -> T {
        self.a + self.rho0
    }

    /// Squared diffusion coefficient `b^2 + m^2 gamma0 sigma0`.
    pub fn diffusion_sq(&self) -> T {
        self.b * self.b + self.m * self.m * self.gamma0 * self.sigma0
    }

    /// `G(lambda) = a lambda + b^2 lambda^2 / 2 + sum_mu w (e^{-lambda u} - 1 + lambda u)`.
    pub fn limit_g(&self, lambda: T) -> T {
        let half = T::cast(0.5);
        self.mu_atoms.iter().fold(
            self.a * lambda + half * self.b * self.b * lambda * lambda,
            |acc, atom| {
                let x = lambda * atom.size;
                // e^{-x} - 1 + x without cancellation for small x.
                acc + atom.weight * ((-x).exp_m1() + x)
            },
        )
    }

    /// `H(x, lambda) = alpha(x) lambda + sum_nu w (1 - e^{-lambda u}) r(x, u)`.
    pub fn limit_h(&self, x: T, lambda: T) -> Result<T> {
        if !(x >= T::zero() && lambda >= T::zero()) {
            return Err(Error::domain("(x, lambda)", x.min(lambda).as_f64(), "non-negative"));
        }
        let value = self.nu_atoms.iter().fold(self.alpha.eval(x) * lambda, |acc, atom| {
            acc - atom.weight * (-lambda * atom.size).exp_m1() * self.r.eval(x, atom.size)
        });
        if let Some(k) = self.growth {
            let bound = k * lambda * (T::one() + x);
            if value > bound + T::cast(1e-12) * (T::one() + bound) {
                return Err(Error::InvariantViolation(format!(
                    "H({x}, {lambda}) = {value} exceeds K lambda (1 + x) = {bound}"
                )));
            }
        }
        Ok(value)
    }

    /// Generator of the limit applied to `e_lambda(x) = e^{-lambda x}`:
    /// `e^{-lambda x} [x (G(lambda) + rho0 lambda + gamma0 sigma0 m^2 lambda^2 / 2) - H(x, m lambda)]`.
    pub fn generator_exp(&self, x: T, lambda: T) -> Result<T> {
        let half = T::cast(0.5);
        let branching = self.limit_g(lambda)
            + self.rho0 * lambda
            + half * self.gamma0 * self.sigma0 * self.m * self.m * lambda * lambda;
        let immigration = self.limit_h(x, self.m * lambda)?;
        Ok((-lambda * x).exp() * (x * branching - immigration))
    }
}

pub fn limit_g<T: Real>(params: &LimitParams<T>, lambda: T) -> T {
    params.limit_g(lambda)
}

pub fn limit_h<T: Real>(params: &LimitParams<T>, x: T, lambda: T) -> Result<T> {
    params.limit_h(x, lambda)
}

pub fn limit_generator_exp<T: Real>(params: &LimitParams<T>, x: T, lambda: T) -> Result<T> {
    params.generator_exp(x, lambda)
}
