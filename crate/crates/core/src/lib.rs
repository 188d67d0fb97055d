//! Controlled branching processes whose control splits into a size-divisible
//! term and an immigration term, and their continuous-state scaling limits.
//!
//! The library is generic over the scalar type (`f32` or `f64`) through
//! [`Real`]; the `*64` aliases below fix it to `f64`.

// `!(x >= 0)` deliberately rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cbp;
pub mod control;
pub mod csbpdi;
pub mod error;
pub mod families;
pub mod lattice;
pub mod mechanisms;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use cbp::{cbp_step, transition_pgf, uniform_grid, PathSample, ScaledModel};
pub use control::{ControlDraw, ControlFamily, DeclaredLimits};
pub use csbpdi::{feller_laplace, feller_moments, laplace_mc, simulate_csbpdi_path, simulate_csbpdi_path_on_grid};
pub use error::{Error, Result};
pub use families::{
    binomial_family, negbin_family, poisson_family, verify_immigration_growth, verify_moment_assumption, GammaRule,
    Immigration,
};
pub use lattice::LatticeLaw;
pub use mechanisms::{Atom, JumpRate, LimitParams, StateRate};
pub use rng::{SimRng, StreamKey};
pub use scalar::Real;
pub use stats::Estimate;

pub type LatticeLaw64 = LatticeLaw<f64>;
pub type ControlFamily64 = ControlFamily<f64>;
pub type ScaledModel64 = ScaledModel<f64>;
pub type LimitParams64 = LimitParams<f64>;
pub type PathSample64 = PathSample<f64>;
pub type GammaRule64 = GammaRule<f64>;
