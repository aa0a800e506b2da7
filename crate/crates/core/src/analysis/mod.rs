//! Remainder extraction, rate fits and residual checks that turn limit
//! statements about tails into pass/fail numbers.

mod curve;
mod oracle;
mod residuals;
mod suites;

pub use curve::{
    closed_form_curve, default_window, fit_rate, fit_rate_in, log_grid, remainder, CurvePoint, RateFit, Source,
    TailCurve, MIN_FIT_POINTS,
};
pub use oracle::{oracle_tail, OracleSettings, OracleTail};
pub use residuals::{
    cancellation_pattern_holds, cancellation_scan, convolution_tail, identity_residual, integral_identity_residual,
    j_bound_above_one, j_curve, j_limit_at_one, j_limit_below_one, jbound_check, k1_asymptotic, k1_integral,
    keyprop_scaled, recursive_residual, rho_tail_scaled, CancellationRow, IdentityResidual, JBound, JBoundRow,
    JCurve, CANCELLATION_ZERO,
};

pub use suites::{Budget, Suite, Verifier, CRITERIA};
