use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::numerics::{ln_gamma_unchecked, Quadrature, Tail};

/// C_ν = (a^{2ν} − b^{2ν}) / (2^ν Γ(ν+1)).
pub fn c_const(nu: f64, a: f64, b: f64) -> Result<f64> {
    ensure(nu > 0.0 && nu.is_finite(), || format!("nu must be positive, got {nu}"))?;
    ensure(b >= 0.0 && b < a, || format!("need 0 <= b < a, got b={b}, a={a}"))?;
    let num = a.powf(2.0 * nu) - b.powf(2.0 * nu);
    Ok(num * (-(nu * std::f64::consts::LN_2) - ln_gamma_unchecked(nu + 1.0)).exp())
}

/// The two integral representations of κ_ν.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaForms {
    /// ∫₁^∞ ((v+1)^{2ν} − v^{2ν}) v^{−ν−1} dv.
    pub semi_infinite: f64,
    /// ∫_{1/2}^1 (1 − x^{2ν}) / (x^{ν+1}(1−x)^{ν+1}) dx.
    pub finite: f64,
}

const KAPPA_TOL: f64 = 1e-12;
const KAPPA_AGREEMENT: f64 = 1e-8;

/// κ_ν for 0 < ν < 1, from the finite-interval form after cross-checking it
/// against the semi-infinite form.
pub fn kappa(nu: f64) -> Result<f64> {
    let forms = kappa_representations(nu)?;
    let gap = (forms.finite - forms.semi_infinite).abs();
    if gap > KAPPA_AGREEMENT * forms.finite.abs().max(1.0) {
        return Err(Error::Invalid(format!(
            "kappa representations disagree at nu={nu}: {} vs {}",
            forms.finite, forms.semi_infinite
        )));
    }
    Ok(forms.finite)
}

pub fn kappa_representations(nu: f64) -> Result<KappaForms> {
    ensure(nu > 0.0 && nu < 1.0, || {
        format!("kappa needs 0 < nu < 1 (the integral diverges otherwise), got {nu}")
    })?;
    let quad = Quadrature {
        abs_tol: 0.0,
        rel_tol: KAPPA_TOL,
        ..Quadrature::default()
    };

    // ((v+1)^{2ν} − v^{2ν}) v^{−ν−1} = v^{ν−1}·expm1(2ν·ln(1 + 1/v)); decays as v^{ν−2}
    let semi = quad.integrate_semi_infinite(
        |v: f64| v.powf(nu - 1.0) * (2.0 * nu * (1.0 / v).ln_1p()).exp_m1(),
        1.0,
        Tail::AlgebraicDecay(2.0 - nu),
    )?;

    // 1 − x = w^p with p = 1/(1−ν) absorbs the (1−x)^{−ν} endpoint singularity
    let p = 1.0 / (1.0 - nu);
    let w_max = 0.5f64.powf(1.0 - nu);
    let finite = quad.integrate(
        |w: f64| {
            let wp = w.powf(p);
            if wp == 0.0 {
                return 2.0 * nu * p;
            }
            let x = 1.0 - wp;
            let ratio = -(2.0 * nu * (-wp).ln_1p()).exp_m1() / wp;
            p * ratio * x.powf(-nu - 1.0)
        },
        0.0,
        w_max,
    )?;

    Ok(KappaForms {
        semi_infinite: semi.value,
        finite: finite.value,
    })
}
