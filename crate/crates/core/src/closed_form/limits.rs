//! Limits of t^ν-scaled functionals of the running infimum under index +ν.
//!
//! All of them are integrals against the law of the global infimum,
//! (2ν/a^{2ν}) z^{2ν−1} dz on (0, a). Substituting z = a·s^{1/(2ν)} turns that
//! weight into ds on (0, 1), which removes the z^{2ν−1} endpoint singularity.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::numerics::{ln_gamma_unchecked, Quadrature};

const TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    /// lim t^ν E[f(I_t) R_t^{−2ν}]
    Keyprop,
    /// lim t^ν (E[g(I_∞)] − E[g(I_t)])
    TcorIi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoLimits {
    /// lim t^ν P(I_t − I_∞ > b)
    pub tcor1_limit: f64,
    /// lim t^ν P(ρ_∞ > t)
    pub tcor2_limit: f64,
}

fn norm(nu: f64) -> f64 {
    (-(nu * std::f64::consts::LN_2) - ln_gamma_unchecked(nu + 1.0)).exp()
}

fn check(nu: f64, a: f64) -> Result<()> {
    ensure(nu > 0.0 && nu.is_finite(), || format!("nu must be positive, got {nu}"))?;
    ensure(a > 0.0 && a.is_finite(), || format!("a must be positive, got {a}"))
}

pub fn rho_limits(nu: f64, a: f64, b: f64) -> Result<RhoLimits> {
    check(nu, a)?;
    ensure((0.0..=a).contains(&b), || format!("need 0 <= b <= a, got b={b}, a={a}"))?;
    let inv = 1.0 / (2.0 * nu);
    let lo = (b / a).powf(2.0 * nu);
    let tcor1_limit = if lo >= 1.0 {
        0.0
    } else {
        let r = Quadrature::with_tol(TOL).integrate(
            |s: f64| (a * s.powf(inv) - b).max(0.0).powf(2.0 * nu),
            lo,
            1.0,
        )?;
        norm(nu) * r.value
    };
    let tcor2_limit = a.powf(2.0 * nu) * norm(nu) / 2.0;
    Ok(RhoLimits {
        tcor1_limit,
        tcor2_limit,
    })
}

pub fn functional_limit<F: Fn(f64) -> f64>(nu: f64, a: f64, f: F, kind: LimitKind) -> Result<f64> {
    check(nu, a)?;
    let inv = 1.0 / (2.0 * nu);
    let quad = Quadrature::with_tol(TOL);
    let r = match kind {
        LimitKind::Keyprop => quad.integrate(|s: f64| f(a * s.powf(inv)), 0.0, 1.0)?,
        LimitKind::TcorIi => {
            let r = quad.integrate(|s: f64| (1.0 - 2.0 * s) * f(a * s.powf(inv)), 0.0, 1.0)?;
            crate::numerics::QuadResult {
                value: a.powf(2.0 * nu) * r.value,
                ..r
            }
        }
    };
    Ok(norm(nu) * r.value)
}
