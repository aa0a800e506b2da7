use serde::{Deserialize, Serialize};

use super::curve::{CurvePoint, TailCurve};
use crate::closed_form::{
    c_const, expansion, i_parts, kappa, tau0_tail, LawQuery, SignedIndex,
};
use crate::error::{ensure, Result};
use crate::numerics::{ln_gamma_unchecked, Quadrature};
use crate::simulate::{
    estimate_mean, hitting_before, infimum_and_endpoint, tau0_sample, z_sample, Capped, EulerConfig,
    McEstimate, Sample,
};

/// 2^ν Γ(ν+1)
fn two_nu_gamma(nu: f64) -> f64 {
    (nu * std::f64::consts::LN_2 + ln_gamma_unchecked(nu + 1.0)).exp()
}

/// tail(ν) − tail(ν+1) − x^{2ν}e^{−x²/2t}/((2t)^ν Γ(ν+1)), which vanishes.
pub fn recursive_residual(nu: f64, x: f64, t: f64) -> Result<f64> {
    let lhs = tau0_tail(nu, x, t)? - tau0_tail(nu + 1.0, x, t)?;
    let y = x * x / (2.0 * t);
    let rhs = if x == 0.0 {
        0.0
    } else {
        (nu * y.ln() - y - ln_gamma_unchecked(nu + 1.0)).exp()
    };
    Ok(lhs - rhs)
}

/// Relative gap between the two sides of
/// ∫_c^x dy/(y^α (x+c−y)^β)
///   = (c(x+c))^{1−α−β} ∫_c^x (y+c)^{α+β−2} (c^α/y^α + c^β/y^β) dy.
pub fn integral_identity_residual(c: f64, alpha: f64, beta: f64, x: f64) -> Result<f64> {
    ensure(c > 0.0 && x > c && x.is_finite(), || format!("need 0 < c < x, got c={c}, x={x}"))?;
    ensure(alpha.is_finite() && beta.is_finite(), || "exponents must be finite".into())?;
    let quad = Quadrature::relative(1e-13);
    let lhs = quad.integrate(|y| (-alpha * y.ln() - beta * (x + c - y).ln()).exp(), c, x)?;
    let s = alpha + beta;
    let rhs = quad.integrate(
        |y| {
            let base = (s - 2.0) * (y + c).ln();
            (base + alpha * (c / y).ln()).exp() + (base + beta * (c / y).ln()).exp()
        },
        c,
        x,
    )?;
    let rhs = ((1.0 - s) * (c * (x + c)).ln()).exp() * rhs.value;
    Ok((lhs.value - rhs).abs() / lhs.value.abs())
}

/// J(t) = I(t) − P^{(−ν)}_a(τ_b > t) on the oracle's times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JCurve {
    pub curve: TailCurve,
    /// Times where J < −tolerance: the oracle contradicts J ≥ 0.
    pub flagged: Vec<f64>,
}

/// `tolerance[k]` is the oracle error at the k-th point of `oracle_tail`.
pub fn j_curve(nu: f64, a: f64, b: f64, oracle_tail: &TailCurve, tolerance: &[f64]) -> Result<JCurve> {
    ensure(tolerance.len() == oracle_tail.len(), || "one tolerance per point".into())?;
    let mut points = Vec::with_capacity(oracle_tail.len());
    let mut flagged = Vec::new();
    for (p, &tol) in oracle_tail.points().iter().zip(tolerance) {
        let j = if b == 0.0 {
            0.0
        } else {
            i_parts(nu, a, b, p.t)?.i - p.value
        };
        if j < -tol {
            flagged.push(p.t);
        }
        points.push(CurvePoint {
            value: j,
            ci95: Some(tol),
            ..*p
        });
    }
    Ok(JCurve {
        curve: TailCurve::new(points)?,
        flagged,
    })
}

/// Limit of t^{2ν}J(t) for ν < 1: b^{2ν}C_ν κ_ν/(2^ν Γ(ν)).
pub fn j_limit_below_one(nu: f64, a: f64, b: f64) -> Result<f64> {
    ensure(nu > 0.0 && nu < 1.0, || format!("need 0 < nu < 1, got {nu}"))?;
    Ok(b.powf(2.0 * nu) * nu / two_nu_gamma(nu) * c_const(nu, a, b)? * kappa(nu)?)
}

/// Limit of (t²/log t)·J(t) at ν = 1: b²C₁.
pub fn j_limit_at_one(a: f64, b: f64) -> Result<f64> {
    Ok(b * b * c_const(1.0, a, b)?)
}

/// Lower bound on liminf t^{ν+1}J(t) for ν > 1:
/// b^{2ν}(a²−b²)/(2^ν Γ(ν)·2(ν−1)).
pub fn j_bound_above_one(nu: f64, a: f64, b: f64) -> Result<f64> {
    ensure(nu > 1.0, || format!("need nu > 1, got {nu}"))?;
    Ok(b.powf(2.0 * nu) * nu / two_nu_gamma(nu) * (a * a - b * b) / (2.0 * (nu - 1.0)))
}

/// K₁(t; λ) = ∫_λ^t u^{−ν−1}[(t+λ−u)^{−ν} − t^{−ν}] du.
///
/// The range is split at the midpoint; the lower half is integrated in log u,
/// the upper half in log v with v = t+λ−u, so both ends are resolved.
pub fn k1_integral(nu: f64, t: f64, lambda: f64) -> Result<f64> {
    ensure(nu > 0.0 && lambda > 0.0 && t > lambda, || {
        format!("need nu > 0 and t > lambda > 0, got nu={nu}, t={t}, lambda={lambda}")
    })?;
    let quad = Quadrature::relative(1e-9);
    let tn = t.powf(-nu);
    let mid = 0.5 * (t + lambda);
    // (t+λ−u)^{−ν} − t^{−ν} = t^{−ν}·expm1(−ν log1p((λ−u)/t))
    let bracket = |u: f64| tn * (-nu * ((lambda - u) / t).ln_1p()).exp_m1();
    let lower = quad.integrate(
        |s: f64| {
            let u = lambda * s.exp();
            u.powf(-nu) * bracket(u)
        },
        0.0,
        (mid / lambda).ln(),
    )?;
    let upper = quad.integrate(
        |s: f64| {
            let v = lambda * s.exp();
            let u = t + lambda - v;
            v * u.powf(-nu - 1.0) * bracket(u)
        },
        0.0,
        ((t + lambda - mid) / lambda).ln(),
    )?;
    Ok(lower.value + upper.value)
}

/// (t+λ)^{−2ν} ∫₁^{t/λ} ((v+1)^{2ν} − v^{2ν}) v^{−ν−1} dv, the leading form of K₁.
pub fn k1_asymptotic(nu: f64, t: f64, lambda: f64) -> Result<f64> {
    ensure(nu > 0.0 && lambda > 0.0 && t > lambda, || {
        format!("need nu > 0 and t > lambda > 0, got nu={nu}, t={t}, lambda={lambda}")
    })?;
    let r = Quadrature::relative(1e-9).integrate(
        |s: f64| {
            let v = s.exp();
            v.powf(nu) * (2.0 * nu * (1.0 / v).ln_1p()).exp_m1()
        },
        0.0,
        (t / lambda).ln(),
    )?;
    Ok((t + lambda).powf(-2.0 * nu) * r.value)
}

/// S ~ τ_b from a under index −ν, capped at t; then U ~ τ₀ from b.
fn hit_then_zero<R: rand::Rng + ?Sized>(
    index: SignedIndex,
    a: f64,
    b: f64,
    t: f64,
    cfg: &EulerConfig,
    rng: &mut R,
) -> Result<Option<(f64, f64)>> {
    match hitting_before(index, a, b, t, cfg, rng)? {
        Capped::Hit(s) if s <= t => Ok(Some((s, tau0_sample(index.nu(), b, rng)?))),
        _ => Ok(None),
    }
}

/// P(S + U > t) for independent S = τ_b from a and U = τ₀ from b, both under
/// index −ν. By the strong Markov property this is P_a(τ₀ > t).
pub fn convolution_tail(
    nu: f64,
    a: f64,
    b: f64,
    t: f64,
    n: u64,
    cfg: &EulerConfig,
    plan: &Sample,
) -> Result<McEstimate> {
    let index = SignedIndex::minus(nu)?;
    estimate_mean(n, plan, |rng| {
        Ok(match hit_then_zero(index, a, b, t, cfg, rng)? {
            Some((s, u)) => f64::from(s + u > t),
            None => 1.0,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub residual: f64,
    /// Standard error of the residual from the Monte Carlo estimate of D_t.
    pub std_error: f64,
    /// Half-width combining the MC CI of D_t and the oracle error.
    pub ci95: f64,
    pub d_t: McEstimate,
    /// (P_a(τ₀>t) − P_b(τ₀>t) − D_t)/P_b(τ₀≤t)
    pub rhs: f64,
}

/// P_a(τ_b>t) against (P_a(τ₀>t) − P_b(τ₀>t) − D_t)/P_b(τ₀≤t), with
/// D_t = P(S+U > t, S ≤ t, U ≤ t) estimated by Monte Carlo.
#[allow(clippy::too_many_arguments)]
pub fn identity_residual(
    nu: f64,
    a: f64,
    b: f64,
    t: f64,
    n: u64,
    cfg: &EulerConfig,
    plan: &Sample,
    oracle_tail: f64,
    oracle_error: f64,
) -> Result<IdentityResidual> {
    ensure(b > 0.0 && b < a, || format!("need 0 < b < a, got b={b}, a={a}"))?;
    let index = SignedIndex::minus(nu)?;
    let d_t = estimate_mean(n, plan, |rng| {
        Ok(match hit_then_zero(index, a, b, t, cfg, rng)? {
            Some((s, u)) => f64::from(u <= t && s + u > t),
            None => 0.0,
        })
    })?;
    let tail_a = tau0_tail(nu, a, t)?;
    let tail_b = tau0_tail(nu, b, t)?;
    let hit_b = 1.0 - tail_b;
    let rhs = (tail_a - tail_b - d_t.mean) / hit_b;
    Ok(IdentityResidual {
        residual: oracle_tail - rhs,
        std_error: d_t.std_error() / hit_b,
        ci95: d_t.ci95 / hit_b + oracle_error,
        d_t,
        rhs,
    })
}

/// t^ν·1{ρ_∞ > t} under index +ν from a; ρ_∞ is the hitting time of an
/// independent level Z by index −ν, so paths stop at t.
pub fn rho_tail_scaled(nu: f64, a: f64, t: f64, n: u64, cfg: &EulerConfig, plan: &Sample) -> Result<McEstimate> {
    let index = SignedIndex::minus(nu)?;
    let scale = t.powf(nu);
    estimate_mean(n, plan, |rng| {
        let z = z_sample(nu, a, rng)?;
        if z <= 0.0 || z >= a {
            return Ok(if z <= 0.0 { scale } else { 0.0 });
        }
        Ok(match hitting_before(index, a, z, t, cfg, rng)? {
            Capped::Hit(s) if s <= t => 0.0,
            _ => scale,
        })
    })
}

/// t^ν·f(I_t)/R_t^{2ν} under index +ν from a.
pub fn keyprop_scaled<F>(
    nu: f64,
    a: f64,
    t: f64,
    f: F,
    n: u64,
    cfg: &EulerConfig,
    plan: &Sample,
) -> Result<McEstimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    let scale = t.powf(nu);
    estimate_mean(n, plan, |rng| {
        let (inf, r) = infimum_and_endpoint(nu, a, t, cfg, rng)?;
        Ok(scale * f(inf) * r.powf(-2.0 * nu))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JBoundRow {
    pub t: f64,
    /// t^{ν+1}J(t)
    pub scaled_j: f64,
    /// t^{ν+1}(tail − leading)
    pub scaled_remainder: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JBound {
    pub bound: f64,
    /// Known upper bound on limsup t^{ν+1}·remainder.
    pub remainder_bound: f64,
    pub rows: Vec<JBoundRow>,
    pub pass: bool,
}

/// For ν > 1: t^{ν+1}J ≥ bound − tol, and t^{ν+1}·remainder negative and
/// within `spread` (max/min magnitude) over the curve's times. b = 0 passes
/// vacuously.
pub fn jbound_check(
    nu: f64,
    a: f64,
    b: f64,
    oracle_tail: &TailCurve,
    tolerance: &[f64],
    spread: f64,
) -> Result<JBound> {
    ensure(nu > 1.0, || format!("need nu > 1, got {nu}"))?;
    if b == 0.0 {
        return Ok(JBound {
            bound: 0.0,
            remainder_bound: 0.0,
            rows: Vec::new(),
            pass: true,
        });
    }
    let bound = j_bound_above_one(nu, a, b)?;
    let index = SignedIndex::minus(nu)?;
    let remainder_bound = expansion(&LawQuery::new(index, a, b, 1.0)?)?.second_coeff.value();
    let j = j_curve(nu, a, b, oracle_tail, tolerance)?;
    let c = c_const(nu, a, b)?;
    let mut rows = Vec::new();
    for ((p, jp), &tol) in oracle_tail.points().iter().zip(j.curve.points()).zip(tolerance) {
        let s = p.t.powf(nu + 1.0);
        let scaled_j = s * jp.value;
        let scaled_remainder = s * (p.value - c * p.t.powf(-nu));
        rows.push(JBoundRow {
            t: p.t,
            scaled_j,
            scaled_remainder,
            pass: scaled_j >= bound - s * tol && scaled_remainder < 0.0,
        });
    }
    let mags: Vec<f64> = rows.iter().map(|r| r.scaled_remainder.abs()).collect();
    let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mags.iter().cloned().fold(0.0, f64::max);
    let bounded = !rows.is_empty() && lo > 0.0 && hi / lo <= spread;
    let pass = bounded && rows.iter().all(|r| r.pass);
    Ok(JBound {
        bound,
        remainder_bound,
        rows,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CancellationRow {
    pub nu: f64,
    pub kappa: f64,
    /// 1 − νκ_ν
    pub cancellation: f64,
    /// −1, 0 or +1 with |1 − νκ_ν| ≤ 1e-9 counted as 0.
    pub sign: i8,
}

pub const CANCELLATION_ZERO: f64 = 1e-9;

pub fn cancellation_scan(nu_grid: &[f64]) -> Result<Vec<CancellationRow>> {
    nu_grid
        .iter()
        .map(|&nu| {
            ensure(nu > 0.0 && nu < 1.0, || format!("need 0 < nu < 1, got {nu}"))?;
            let k = kappa(nu)?;
            let c = 1.0 - nu * k;
            let sign = if c.abs() <= CANCELLATION_ZERO { 0 } else { c.signum() as i8 };
            Ok(CancellationRow {
                nu,
                kappa: k,
                cancellation: c,
                sign,
            })
        })
        .collect()
}

/// Whether the rows show + below 1/2, 0 at 1/2 and − above.
pub fn cancellation_pattern_holds(rows: &[CancellationRow]) -> bool {
    rows.iter().all(|r| {
        let want = if r.nu == 0.5 {
            0
        } else if r.nu < 0.5 {
            1
        } else {
            -1
        };
        r.sign == want
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::curve::{log_grid, Source};
    use crate::analysis::curve::closed_form_curve;

    #[test]
    fn recursive_identity_holds() {
        for &(nu, x, t) in &[(0.3, 1.0, 0.7), (1.0, 2.0, 5.0), (2.5, 0.4, 0.01), (0.8, 0.0, 1.0)] {
            assert!(recursive_residual(nu, x, t).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn integral_identity_instance() {
        // both sides equal 0.557568185540418… (independent high-precision quadrature)
        assert!(integral_identity_residual(1.0, 1.3, 0.7, 5.0).unwrap() < 1e-12);
        assert!(integral_identity_residual(0.2, -0.4, 2.1, 3.0).unwrap() < 1e-12);
        assert!(integral_identity_residual(1.0, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn j_vanishes_at_zero_level_and_flags_negatives() {
        let ts = log_grid(1.0, 100.0, 5).unwrap();
        let exact = closed_form_curve(SignedIndex::minus(0.7).unwrap(), 2.0, 0.0, &ts).unwrap();
        let j = j_curve(0.7, 2.0, 0.0, &exact, &[0.0; 5]).unwrap();
        assert!(j.curve.values().iter().all(|&v| v == 0.0) && j.flagged.is_empty());

        // the ν = 1/2 closed form as a perfect oracle: J ≥ 0
        let exact = closed_form_curve(SignedIndex::minus(0.5).unwrap(), 2.0, 1.0, &ts).unwrap();
        let j = j_curve(0.5, 2.0, 1.0, &exact, &[1e-14; 5]).unwrap();
        assert!(j.flagged.is_empty(), "{j:?}");
        assert!(j.curve.values().iter().all(|&v| v >= -1e-14));
        // a tail stuck at 1 exceeds I(t) everywhere
        let ones = TailCurve::new(ts.iter().map(|&t| CurvePoint::new(t, 1.0, Source::Oracle)).collect()).unwrap();
        assert_eq!(j_curve(0.5, 2.0, 1.0, &ones, &[1e-6; 5]).unwrap().flagged.len(), 5);
    }

    #[test]
    fn half_index_j_limit() {
        // with the exact ν = 1/2 tail, t^{2ν}J approaches its limit like t^{−1/2}
        let (a, b) = (2.0, 1.0);
        let lim = j_limit_below_one(0.5, a, b).unwrap();
        let ts = [1e4, 1e6, 1e8];
        let exact = closed_form_curve(SignedIndex::minus(0.5).unwrap(), a, b, &ts).unwrap();
        let j = j_curve(0.5, a, b, &exact, &[0.0; 3]).unwrap();
        let gaps: Vec<f64> = j.curve.points().iter().map(|p| (p.t * p.value / lim - 1.0).abs()).collect();
        assert!(gaps[2] < 1e-3 && gaps[1] < gaps[0], "{gaps:?}");
    }

    #[test]
    fn k1_against_its_asymptotic_form() {
        let (nu, lambda, t) = (0.4, 1.0, 1e4);
        let k = k1_integral(nu, t, lambda).unwrap();
        let approx = k1_asymptotic(nu, t, lambda).unwrap();
        assert!(((k - approx) / k).abs() < 0.02, "{k} {approx}");
        assert!(k1_integral(nu, lambda * (1.0 + 1e-9), lambda).unwrap().abs() < 1e-12);
        assert!(k1_integral(nu, 0.5, 1.0).is_err());
    }

    #[test]
    fn k1_log_limit_at_one() {
        let scaled = |t: f64| t * t / t.ln() * k1_integral(1.0, t, 1.0).unwrap();
        let (s1, s2) = (scaled(1e4), scaled(1e8));
        assert!((s2 - 2.0).abs() < (s1 - 2.0).abs());
        assert!((s2 - 2.0).abs() < 0.15, "{s1} {s2}");
    }

    #[test]
    fn cancellation_signs() {
        let rows = cancellation_scan(&[0.25, 0.5, 0.75]).unwrap();
        assert_eq!(rows.iter().map(|r| r.sign).collect::<Vec<_>>(), vec![1, 0, -1]);
        assert!(rows[1].cancellation.abs() < 1e-9);
        assert!(cancellation_pattern_holds(&rows));
        assert!(cancellation_scan(&[1.0]).is_err());
    }

    #[test]
    fn jbound_is_vacuous_at_zero_level() {
        let ts = log_grid(10.0, 100.0, 5).unwrap();
        let exact = closed_form_curve(SignedIndex::minus(1.5).unwrap(), 2.0, 0.0, &ts).unwrap();
        let r = jbound_check(1.5, 2.0, 0.0, &exact, &[0.0; 5], 2.0).unwrap();
        assert!(r.pass && r.rows.is_empty());
        assert!(jbound_check(0.5, 2.0, 1.0, &exact, &[0.0; 5], 2.0).is_err());
    }

    #[test]
    fn jbound_constant() {
        // 3/(2^{1.5}Γ(1.5)) = 3/√(2π)
        let v = j_bound_above_one(1.5, 2.0, 1.0).unwrap();
        assert!((v - 3.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn convolution_is_the_zero_level_tail() {
        let (nu, a, b, t) = (0.8, 2.0, 1.0, 5.0);
        let e = convolution_tail(nu, a, b, t, 20_000, &EulerConfig::with_dt(1e-3), &Sample::seeded(11)).unwrap();
        assert!(e.z_score(tau0_tail(nu, a, t).unwrap()) < 4.0, "{e:?}");
    }
}
