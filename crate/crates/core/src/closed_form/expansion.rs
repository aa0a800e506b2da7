use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::ln_gamma_unchecked;

use super::constants::{c_const, kappa};
use super::{ExpansionPrediction, LawQuery, Regime, Sign};

/// Scale function multiplying the second-order coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SecondScale {
    /// t^{−2ν}
    #[serde(rename = "t^-2nu")]
    TPow2Nu,
    /// (log t)/t²
    #[serde(rename = "log(t)/t^2")]
    LogTOverT2,
    /// t^{−(ν+1)}, with only a bound on the coefficient
    #[serde(rename = "t^-(nu+1) bounded")]
    TPowNuPlus1Bounded,
}

impl SecondScale {
    pub fn eval(&self, nu: f64, t: f64) -> f64 {
        match self {
            SecondScale::TPow2Nu => t.powf(-2.0 * nu),
            SecondScale::LogTOverT2 => t.ln() / (t * t),
            SecondScale::TPowNuPlus1Bounded => t.powf(-nu - 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SecondCoeff {
    /// The limit of remainder / scale exists and equals this value.
    Point(f64),
    /// Only limsup remainder / scale ≤ this (negative) value is known, and the
    /// liminf is finite.
    UpperBound(f64),
}

impl SecondCoeff {
    pub fn value(&self) -> f64 {
        match *self {
            SecondCoeff::Point(v) | SecondCoeff::UpperBound(v) => v,
        }
    }
}

fn gamma_factor(nu: f64) -> f64 {
    (-(nu * std::f64::consts::LN_2) - ln_gamma_unchecked(nu + 1.0)).exp()
}

/// First-order tail prediction: C_ν/t^ν for index −ν, and (b/a)^{2ν}·C_ν/t^ν
/// for index +ν.
pub fn leading_tail(q: &LawQuery) -> Result<f64> {
    let nu = q.nu();
    let base = c_const(nu, q.a, q.b)? * q.t.powf(-nu);
    Ok(match q.sign() {
        Sign::Minus => base,
        Sign::Plus => q.sign_flip_factor() * base,
    })
}

/// Regime-dependent two-term expansion. The `t` of the query is not used
/// except through the leading term's definition; coefficients are
/// t-independent.
pub fn expansion(q: &LawQuery) -> Result<ExpansionPrediction> {
    let nu = q.nu();
    let (a, b) = (q.a, q.b);
    let regime = Regime::of(nu);
    let snapped_to_one = regime == Regime::NuEq1 && nu != 1.0;
    let flip = match q.sign() {
        Sign::Minus => 1.0,
        Sign::Plus => q.sign_flip_factor(),
    };
    let (second_coeff, second_scale, leading) = match regime {
        Regime::NuLt1 => {
            let c = c_const(nu, a, b)?;
            let coeff = b.powf(2.0 * nu) * gamma_factor(nu) * c * (1.0 - nu * kappa(nu)?);
            (SecondCoeff::Point(flip * coeff), SecondScale::TPow2Nu, flip * c)
        }
        Regime::NuEq1 => {
            let c1 = c_const(1.0, a, b)?;
            (
                SecondCoeff::Point(-flip * b * b * c1),
                SecondScale::LogTOverT2,
                flip * c1,
            )
        }
        Regime::NuGt1 => {
            let c = c_const(nu, a, b)?;
            let bound = nu * c_const(nu + 1.0, a, b)?
                + b.powf(2.0 * nu) * (a * a - b * b)
                    / (2f64.powf(nu + 1.0) * (nu - 1.0) * ln_gamma_unchecked(nu).exp());
            (
                SecondCoeff::UpperBound(-flip * bound),
                SecondScale::TPowNuPlus1Bounded,
                flip * c,
            )
        }
    };
    Ok(ExpansionPrediction {
        leading,
        second_coeff,
        second_scale,
        regime,
        snapped_to_one,
    })
}
