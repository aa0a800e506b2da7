//! Exact laws and asymptotic predictions as pure functions.
//!
//! Every hitting-time tail goes through the regularized incomplete gamma
//! function; quadrature is used only for the constants and limit functionals
//! that have no closed form.

mod constants;
mod expansion;
mod laws;
mod limits;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use constants::{c_const, kappa, kappa_representations, KappaForms};
pub use expansion::{expansion, leading_tail, SecondCoeff, SecondScale};
pub use laws::{
    halfindex_exact, i_parts, iasympt_check, infimum_tail, inverse_moment, tau0_tail,
    tau0_tail_flagged, tau0_hit_prob, Flagged, IParts, UNDERFLOW_FLOOR,
};
pub use limits::{functional_limit, rho_limits, LimitKind, RhoLimits};

/// Indices this close to 1 are treated as exactly 1.
pub const NU_ONE_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    /// Index +ν: transient, never hits zero.
    Plus,
    /// Index −ν: hits zero in finite time.
    Minus,
}

impl std::str::FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Sign::Plus),
            "minus" | "-" => Ok(Sign::Minus),
            _ => Err(Error::Invalid(format!("sign must be plus or minus, got {s:?}"))),
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        })
    }
}

/// Index ±ν of a Bessel process with ν > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedIndex {
    nu: f64,
    sign: Sign,
}

impl SignedIndex {
    pub fn new(nu: f64, sign: Sign) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Domain(format!(
                "index magnitude must be positive (the zero index is not covered), got {nu}"
            )));
        }
        Ok(Self { nu, sign })
    }

    pub fn plus(nu: f64) -> Result<Self> {
        Self::new(nu, Sign::Plus)
    }

    pub fn minus(nu: f64) -> Result<Self> {
        Self::new(nu, Sign::Minus)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// The signed index value, ±ν.
    pub fn value(&self) -> f64 {
        match self.sign {
            Sign::Plus => self.nu,
            Sign::Minus => -self.nu,
        }
    }

    /// Dimension δ = 2(index + 1).
    pub fn dimension(&self) -> f64 {
        2.0 * (self.value() + 1.0)
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.nu)
    }
}

/// Coordinates of a tail probability P_a(τ_b > t) under index ±ν.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawQuery {
    pub index: SignedIndex,
    pub a: f64,
    pub b: f64,
    pub t: f64,
}

impl LawQuery {
    pub fn new(index: SignedIndex, a: f64, b: f64, t: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("start a must be positive, got {a}")));
        }
        if !(b >= 0.0 && b < a) {
            return Err(Error::Domain(format!("level must satisfy 0 <= b < a, got b={b}, a={a}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("time must be positive, got {t}")));
        }
        Ok(Self { index, a, b, t })
    }

    pub fn nu(&self) -> f64 {
        self.index.nu
    }

    pub fn sign(&self) -> Sign {
        self.index.sign
    }

    /// (b/a)^{2ν}, the factor relating the two signs.
    pub fn sign_flip_factor(&self) -> f64 {
        (self.b / self.a).powf(2.0 * self.nu())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "nu_lt_1")]
    NuLt1,
    #[serde(rename = "nu_eq_1")]
    NuEq1,
    #[serde(rename = "nu_gt_1")]
    NuGt1,
}

impl Regime {
    pub fn of(nu: f64) -> Self {
        if (nu - 1.0).abs() <= NU_ONE_SNAP {
            Regime::NuEq1
        } else if nu < 1.0 {
            Regime::NuLt1
        } else {
            Regime::NuGt1
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Regime::NuLt1 => "nu_lt_1",
            Regime::NuEq1 => "nu_eq_1",
            Regime::NuGt1 => "nu_gt_1",
        }
    }
}

/// First and second order of the tail expansion for one query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPrediction {
    /// Coefficient of t^{−ν}.
    pub leading: f64,
    pub second_coeff: SecondCoeff,
    pub second_scale: SecondScale,
    pub regime: Regime,
    /// Set when ν was within [`NU_ONE_SNAP`] of 1 and snapped to the ν = 1 case.
    pub snapped_to_one: bool,
}

impl ExpansionPrediction {
    /// Leading term plus the second-order term at `t`, when the second term is
    /// a point value.
    pub fn two_term(&self, nu: f64, t: f64) -> Option<f64> {
        let lead = self.leading * t.powf(-nu);
        match self.second_coeff {
            SecondCoeff::Point(c) => Some(lead + c * self.second_scale.eval(nu, t)),
            SecondCoeff::UpperBound(_) => None,
        }
    }
}
