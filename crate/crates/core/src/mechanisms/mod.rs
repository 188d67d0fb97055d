//! Branching and immigration mechanisms: the limit objects, their
//! `k`-dependent approximations, convergence diagnostics and the
//! complete-monotonicity test.

pub mod diagnostics;
pub mod discrete;
pub mod limit;
pub mod monotone;

pub use diagnostics::{
    branching_deviation, immigration_deviation, log_ratio, log_root_deviation, second_derivative_deviation, JSup,
};
pub use discrete::{
    discrete_generator_exp, g_k_eval, generator_gap, h_k_eval, lattice_grid, lattice_index, s_k_eval, t_k_eval,
    DEFAULT_MAX_POINTS, DEFAULT_X_MAX,
};
pub use limit::{limit_g, limit_generator_exp, limit_h, Atom, JumpRate, LimitParams, StateRate};
pub use monotone::{complete_monotone_check, forward_difference, MonotoneReport};
