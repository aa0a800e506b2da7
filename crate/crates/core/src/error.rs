use thiserror::Error;

use crate::numerics::QuadResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge (best estimate {} ± {})", best.value, best.error_estimate)]
    NoConvergence { best: QuadResult },

    #[error("integrand tail is not decaying near {at}")]
    Divergent { at: f64 },

    #[error("survival at the level underflows: {0}")]
    Underflow(String),

    /// A path exceeded `max_steps` before crossing; `clock` is the accumulated
    /// physical time so far (a lower bound on the hitting time).
    #[error("path truncated after {steps} steps at clock {clock}")]
    Truncated { steps: u64, clock: f64 },

    #[error("{censored} of {n} samples censored (limit {limit})")]
    Censored { censored: u64, n: u64, limit: f64 },

    #[error("scheme unstable: u = {value} at t = {t}, x = {x}; refine the grid")]
    Unstable { value: f64, t: f64, x: f64 },

    #[error("query ({x}, {t}) outside the solution grid")]
    OutOfGrid { x: f64, t: f64 },

    #[error("all {n} paths were absorbed before t; use more paths or a smaller t")]
    AllAbsorbed { n: u64 },

    #[error("values change sign inside the fit window near t = {t}")]
    SignChange { t: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}
