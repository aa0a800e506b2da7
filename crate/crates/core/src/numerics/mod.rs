//! Special functions and adaptive quadrature.

mod gamma;
mod quad;

pub use gamma::{erf, erfc, gamma, gamma_density, log_gamma, reg_gamma_p, reg_gamma_q};
pub use quad::{
    integrate, integrate_semi_infinite, QuadResult, Quadrature, Tail, DEFAULT_TOL,
    MAX_EVALUATIONS,
};

pub(crate) use gamma::{ln_gamma_unchecked, p_q};
