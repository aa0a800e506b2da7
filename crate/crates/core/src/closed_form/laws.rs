use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::numerics::{erf, ln_gamma_unchecked, p_q};

use super::constants::c_const;
use super::Regime;

/// Tails below this are reported as 0 with the underflow flag set.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flagged {
    pub value: f64,
    pub underflow: bool,
}

fn check_nu(nu: f64) -> Result<()> {
    ensure(nu > 0.0 && nu.is_finite(), || format!("nu must be positive, got {nu}"))
}

fn check_t(t: f64) -> Result<()> {
    ensure(t > 0.0 && t.is_finite(), || format!("t must be positive, got {t}"))
}

/// P_x(τ₀ > t) under index −ν: the Dufresne law gives P(γ_ν < x²/2t).
pub fn tau0_tail(nu: f64, x: f64, t: f64) -> Result<f64> {
    tau0_tail_flagged(nu, x, t).map(|f| f.value)
}

pub fn tau0_tail_flagged(nu: f64, x: f64, t: f64) -> Result<Flagged> {
    check_nu(nu)?;
    check_t(t)?;
    ensure(x >= 0.0 && x.is_finite(), || format!("x must be nonnegative, got {x}"))?;
    if x == 0.0 {
        return Ok(Flagged {
            value: 0.0,
            underflow: false,
        });
    }
    let z = x * x / (2.0 * t);
    let (p, _) = p_q(nu, z);
    Ok(if p < UNDERFLOW_FLOOR {
        Flagged {
            value: 0.0,
            underflow: true,
        }
    } else {
        Flagged {
            value: p,
            underflow: false,
        }
    })
}

/// P_x(τ₀ ≤ t) under index −ν, computed directly (no 1 − tail cancellation).
pub fn tau0_hit_prob(nu: f64, x: f64, t: f64) -> Result<f64> {
    check_nu(nu)?;
    check_t(t)?;
    ensure(x >= 0.0, || format!("x must be nonnegative, got {x}"))?;
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(p_q(nu, x * x / (2.0 * t)).1)
}

/// E_x[R_t^{−2ν}] under index +ν.
pub fn inverse_moment(nu: f64, x: f64, t: f64) -> Result<f64> {
    ensure(x > 0.0, || format!("inverse moment needs a positive start, got {x}"))?;
    Ok(x.powf(-2.0 * nu) * tau0_tail(nu, x, t)?)
}

/// P_x(I_∞ > y) under index +ν.
pub fn infimum_tail(nu: f64, x: f64, y: f64) -> Result<f64> {
    check_nu(nu)?;
    ensure(x > 0.0, || format!("x must be positive, got {x}"))?;
    ensure((0.0..=x).contains(&y), || format!("need 0 <= y <= x, got y={y}, x={x}"))?;
    Ok(1.0 - (y / x).powf(2.0 * nu))
}

/// P_a(∞ > τ_b > t) for the three-dimensional Bessel process (index +1/2).
pub fn halfindex_exact(a: f64, b: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    ensure(b >= 0.0 && b < a, || format!("need 0 <= b < a, got b={b}, a={a}"))?;
    if b == 0.0 {
        return Ok(0.0);
    }
    Ok(b / a * erf((a - b) / (2.0 * t).sqrt()))
}

/// The decomposition I(t) = I₁ + I₂ + I₃ of the first term in
/// P_a(τ_b > t) = I(t) − J(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IParts {
    pub i: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// (P_a(τ₀>t) − P_b(τ₀>t)) / P_b(τ₀≤t), evaluated directly.
    pub direct: f64,
}

pub fn i_parts(nu: f64, a: f64, b: f64, t: f64) -> Result<IParts> {
    check_nu(nu)?;
    check_t(t)?;
    ensure(b >= 0.0 && b < a, || format!("need 0 <= b < a, got b={b}, a={a}"))?;
    let tail_a = tau0_tail(nu, a, t)?;
    let tail_b = tau0_tail(nu, b, t)?;
    let hit_b = tau0_hit_prob(nu, b, t)?;
    if hit_b < UNDERFLOW_FLOOR {
        return Err(Error::Underflow(format!(
            "P_b(tau_0 <= t) underflows at b={b}, t={t}"
        )));
    }
    let log_norm = nu * (2.0 * t).ln() + ln_gamma_unchecked(nu + 1.0);
    let weighted = |x: f64| {
        if x == 0.0 {
            0.0
        } else {
            (2.0 * nu * x.ln() - x * x / (2.0 * t) - log_norm).exp()
        }
    };
    let i1 = weighted(a) - weighted(b);
    let i2 = tau0_tail(nu + 1.0, a, t)? - tau0_tail(nu + 1.0, b, t)?;
    let i3 = tail_b / hit_b * (tail_a - tail_b);
    Ok(IParts {
        i: i1 + i2 + i3,
        i1,
        i2,
        i3,
        direct: (tail_a - tail_b) / hit_b,
    })
}

/// Residual of I(t) against its regime-specific two-term expansion.
///
/// Expected order of the residual: t^{−min(3ν, ν+1)} for ν < 1, t^{−3} for
/// ν = 1 and t^{−min(2ν, ν+2)} for ν > 1.
pub fn iasympt_check(nu: f64, a: f64, b: f64, t: f64) -> Result<f64> {
    let parts = i_parts(nu, a, b, t)?;
    let c = c_const(nu, a, b)?;
    let tn = t.powf(-nu);
    let second = match Regime::of(nu) {
        Regime::NuLt1 => {
            b.powf(2.0 * nu) / (2f64.powf(nu) * ln_gamma_unchecked(nu + 1.0).exp()) * c * tn * tn
        }
        Regime::NuEq1 => -c * c / (2.0 * t * t),
        Regime::NuGt1 => -nu * c_const(nu + 1.0, a, b)? * tn / t,
    };
    Ok(parts.i - c * tn - second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gamma, integrate_semi_infinite, Quadrature, Tail};

    #[test]
    fn tau0_tail_examples() {
        let v = tau0_tail(1.0, 1.0, 1.0).unwrap();
        assert!((v - (1.0 - (-0.5f64).exp())).abs() < 1e-14);
        assert_eq!(tau0_tail(0.7, 0.0, 3.0).unwrap(), 0.0);
        // direct quadrature of x^{2ν}/(2^ν Γ(ν)) ∫_t^∞ s^{−ν−1} e^{−x²/2s} ds
        let (nu, x, t) = (0.3, 1.5, 10.0);
        let q = integrate_semi_infinite(
            |s: f64| s.powf(-nu - 1.0) * (-x * x / (2.0 * s)).exp(),
            t,
            1e-14,
        )
        .unwrap();
        let oracle = x.powf(2.0 * nu) / (2f64.powf(nu) * gamma(nu).unwrap()) * q.value;
        let got = tau0_tail(nu, x, t).unwrap();
        assert!((got - oracle).abs() < 1e-11, "{got} vs {oracle}");
        assert!((got - 0.563_975_252_278_995_6).abs() < 1e-12);
        assert!(tau0_tail(0.0, 1.0, 1.0).is_err());
        assert!(tau0_tail(1.0, -1.0, 1.0).is_err());
        assert!(tau0_tail(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn underflow_is_flagged() {
        let f = tau0_tail_flagged(2.0, 1.0, 1e160).unwrap();
        assert!(f.underflow && f.value == 0.0);
        assert!(!tau0_tail_flagged(2.0, 1.0, 1.0).unwrap().underflow);
    }

    #[test]
    fn inverse_moment_examples() {
        let v = inverse_moment(1.0, 1.0, 1.0).unwrap();
        assert!((v - 0.393_469_340_287_366_6).abs() < 1e-12);
        assert!(inverse_moment(1.0, 0.0, 1.0).is_err());
        let (nu, x, t): (f64, f64, f64) = (0.7, 2.0, 1e6);
        let limit = 1.0 / (2f64.powf(nu) * gamma(nu + 1.0).unwrap());
        let scaled = t.powf(nu) * inverse_moment(nu, x, t).unwrap();
        assert!((scaled / limit - 1.0).abs() < 1e-3);
        // mpmath: gammainc(0.5, 0, 0.5, regularized=True) / 2
        let v = inverse_moment(0.5, 2.0, 4.0).unwrap();
        assert!((v - 0.341_344_746_068_542_95).abs() < 1e-12);
    }

    #[test]
    fn infimum_tail_examples() {
        assert_eq!(infimum_tail(0.8, 2.0, 0.0).unwrap(), 1.0);
        assert_eq!(infimum_tail(0.8, 2.0, 2.0).unwrap(), 0.0);
        assert!((infimum_tail(0.5, 2.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(infimum_tail(0.5, 2.0, 2.5).is_err());
    }

    #[test]
    fn halfindex_examples() {
        assert_eq!(halfindex_exact(2.0, 0.0, 5.0).unwrap(), 0.0);
        assert!((halfindex_exact(2.0, 1.0, 1e-8).unwrap() - 0.5).abs() < 1e-10);
        let (a, b, t) = (2.0, 1.0, 100.0);
        let d = a - b;
        let q = Quadrature::with_tol(1e-14)
            .integrate_semi_infinite(
                |s: f64| d / (2.0 * std::f64::consts::PI * s.powi(3)).sqrt() * (-d * d / (2.0 * s)).exp(),
                t,
                Tail::Algebraic,
            )
            .unwrap();
        let got = halfindex_exact(a, b, t).unwrap();
        assert!((got - b / a * q.value).abs() < 1e-12);
        assert!((got - 0.039_827_837_277_028_98).abs() < 1e-13);
    }

    #[test]
    fn recursive_identity_instance() {
        let (nu, x, t) = (0.7, 1.3, 5.0);
        let lhs = tau0_tail(nu, x, t).unwrap() - tau0_tail(nu + 1.0, x, t).unwrap();
        let rhs = x.powf(2.0 * nu) / ((2.0 * t).powf(nu) * gamma(nu + 1.0).unwrap())
            * (-x * x / (2.0 * t)).exp();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn i_parts_examples() {
        let p = i_parts(0.6, 2.0, 0.0, 3.0).unwrap();
        assert_eq!(p.i3, 0.0);
        assert!((p.i - tau0_tail(0.6, 2.0, 3.0).unwrap()).abs() < 1e-14);
        for &(nu, a, b, t) in &[(0.3, 2.0, 1.0, 0.7), (1.0, 2.0, 1.0, 50.0), (2.5, 3.0, 0.4, 9.0)] {
            let p = i_parts(nu, a, b, t).unwrap();
            assert!((p.i - p.direct).abs() < 1e-12, "{p:?}");
        }
        let (a, b, t) = (2.0, 1.0, 1e6);
        let p = i_parts(1.0, a, b, t).unwrap();
        let c = c_const(1.0, a, b).unwrap();
        assert!((t * p.i / c - 1.0).abs() < 1e-3);
        assert!(matches!(i_parts(1.0, 2.0, 1.0, 1e-5), Err(Error::Underflow(_))));
    }

    #[test]
    fn iasympt_examples() {
        let (nu, a, t) = (0.4, 2.0, 50.0);
        let r = iasympt_check(nu, a, 0.0, t).unwrap();
        let direct = i_parts(nu, a, 0.0, t).unwrap().i - c_const(nu, a, 0.0).unwrap() * t.powf(-nu);
        assert!((r - direct).abs() < 1e-15);

        // ν = 1: t²·(I − C₁/t) → −C₁²/2
        let (a, b, t) = (2.0, 1.0, 1e5);
        let c = c_const(1.0, a, b).unwrap();
        let i = i_parts(1.0, a, b, t).unwrap().i;
        let scaled = t * t * (i - c / t);
        assert!((scaled / (-c * c / 2.0) - 1.0).abs() < 0.05, "{scaled}");
        assert!((iasympt_check(1.0, a, b, t).unwrap() * t.powi(3)).abs() < 50.0);

        // ν = 0.4: the t^{-3ν} term dominates the t^{-(ν+1)} one once t is large
        let ts = [1e8, 1e9, 1e10, 1e11, 1e12];
        let ys: Vec<f64> = ts.iter().map(|&t| iasympt_check(0.4, 2.0, 1.0, t).unwrap().abs().ln()).collect();
        let slope = (ys[4] - ys[0]) / (ts[4].ln() - ts[0].ln());
        assert!((slope + 1.2).abs() < 0.03, "slope {slope}");
    }
}
