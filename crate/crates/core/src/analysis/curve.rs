use serde::{Deserialize, Serialize};

use crate::closed_form::{halfindex_exact, leading_tail, tau0_tail, LawQuery, Sign, SignedIndex};
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    Oracle,
    Mc,
}

impl Source {
    pub fn tag(&self) -> &'static str {
        match self {
            Source::ClosedForm => "closed_form",
            Source::Oracle => "oracle",
            Source::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub value: f64,
    pub source: Source,
    pub ci95: Option<f64>,
}

impl CurvePoint {
    pub fn new(t: f64, value: f64, source: Source) -> Self {
        Self {
            t,
            value,
            source,
            ci95: None,
        }
    }
}

/// Values of some function of t on an increasing grid. Tails live in [0, 1];
/// derived curves (remainders, scaled J) may be signed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    points: Vec<CurvePoint>,
}

impl TailCurve {
    /// Any finite values on strictly increasing positive times.
    pub fn new(points: Vec<CurvePoint>) -> Result<Self> {
        for w in points.windows(2) {
            ensure(w[1].t > w[0].t, || format!("times must increase, got {} then {}", w[0].t, w[1].t))?;
        }
        for p in &points {
            ensure(p.t > 0.0 && p.t.is_finite(), || format!("bad time {}", p.t))?;
            ensure(p.value.is_finite(), || format!("non-finite value at t = {}", p.t))?;
        }
        Ok(Self { points })
    }

    /// Like [`TailCurve::new`], additionally requiring probabilities.
    pub fn probabilities(points: Vec<CurvePoint>) -> Result<Self> {
        let c = Self::new(points)?;
        if let Some(p) = c.points.iter().find(|p| !(0.0..=1.0).contains(&p.value)) {
            return Err(Error::Invalid(format!("value {} at t = {} is not a probability", p.value, p.t)));
        }
        Ok(c)
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// The value at a grid time (relative match 1e-9).
    pub fn at(&self, t: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| (p.t - t).abs() <= 1e-9 * t)
            .map(|p| p.value)
    }

    /// Points with lo ≤ t ≤ hi (relative slack 1e-9).
    pub fn window(&self, lo: f64, hi: f64) -> TailCurve {
        TailCurve {
            points: self
                .points
                .iter()
                .filter(|p| p.t >= lo * (1.0 - 1e-9) && p.t <= hi * (1.0 + 1e-9))
                .copied()
                .collect(),
        }
    }

    /// Every value (and CI) multiplied by `scale(t)`.
    pub fn scaled<F: Fn(f64) -> f64>(&self, scale: F) -> TailCurve {
        TailCurve {
            points: self
                .points
                .iter()
                .map(|p| {
                    let s = scale(p.t);
                    CurvePoint {
                        value: p.value * s,
                        ci95: p.ci95.map(|c| c * s.abs()),
                        ..*p
                    }
                })
                .collect(),
        }
    }
}

/// `n` log-spaced times from lo to hi inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    ensure(lo > 0.0 && hi > lo && hi.is_finite(), || format!("need 0 < lo < hi, got {lo}, {hi}"))?;
    ensure(n >= 2, || format!("need at least 2 points, got {n}"))?;
    // base-10 exponents keep decade nodes exact
    let (l0, l1) = (lo.log10(), hi.log10());
    Ok((0..n)
        .map(|k| match k {
            0 => lo,
            k if k + 1 == n => hi,
            k => 10f64.powf(l0 + (l1 - l0) * k as f64 / (n - 1) as f64),
        })
        .collect())
}

/// The tail on `ts` where a closed form exists: b = 0, or ν = 1/2.
pub fn closed_form_curve(index: SignedIndex, a: f64, b: f64, ts: &[f64]) -> Result<TailCurve> {
    let nu = index.nu();
    let value = |t: f64| -> Result<f64> {
        match (index.sign(), b == 0.0, nu == 0.5) {
            (Sign::Minus, true, _) => tau0_tail(nu, a, t),
            // index +ν never reaches 0
            (Sign::Plus, true, _) => Ok(0.0),
            (Sign::Plus, false, true) => halfindex_exact(a, b, t),
            (Sign::Minus, false, true) => Ok(halfindex_exact(a, b, t)? * a / b),
            _ => Err(Error::Invalid(format!("no closed form for nu={nu}, b={b}"))),
        }
    };
    let mut points = Vec::with_capacity(ts.len());
    for &t in ts {
        points.push(CurvePoint::new(t, value(t)?, Source::ClosedForm));
    }
    TailCurve::probabilities(points)
}

/// Pointwise value − leading-order prediction, signed. CIs carry over.
pub fn remainder(curve: &TailCurve, nu: f64, a: f64, b: f64, sign: Sign) -> Result<TailCurve> {
    let index = SignedIndex::new(nu, sign)?;
    let mut points = Vec::with_capacity(curve.len());
    for p in curve.points() {
        let lead = leading_tail(&LawQuery::new(index, a, b, p.t)?)?;
        points.push(CurvePoint {
            value: p.value - lead,
            ..*p
        });
    }
    TailCurve::new(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub window: (f64, f64),
}

pub const MIN_FIT_POINTS: usize = 5;

/// Least-squares line through (log t, log |value|) over the whole curve.
pub fn fit_rate(curve: &TailCurve) -> Result<RateFit> {
    let pts = curve.points();
    ensure(pts.len() >= MIN_FIT_POINTS, || {
        format!("need at least {MIN_FIT_POINTS} points, got {}", pts.len())
    })?;
    let sign = pts[0].value.signum();
    for p in pts {
        if p.value == 0.0 || p.value.signum() != sign {
            return Err(Error::SignChange { t: p.t });
        }
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.t.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.value.abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        residual_rms: (ss / n).sqrt(),
        window: (pts[0].t, pts[pts.len() - 1].t),
    })
}

/// [`fit_rate`] restricted to lo ≤ t ≤ hi.
pub fn fit_rate_in(curve: &TailCurve, lo: f64, hi: f64) -> Result<RateFit> {
    fit_rate(&curve.window(lo, hi))
}

/// One decade ending at the last time before the discretisation error
/// (`errors`, aligned with the curve) first exceeds 10% of |remainder|.
pub fn default_window(remainder: &TailCurve, errors: &[f64]) -> Result<(f64, f64)> {
    ensure(errors.len() == remainder.len(), || "one error per point".into())?;
    let pts = remainder.points();
    let bad = pts
        .iter()
        .zip(errors)
        .position(|(p, &e)| e > 0.1 * p.value.abs())
        .unwrap_or(pts.len());
    ensure(bad > 0, || "no reliable point".into())?;
    let hi = pts[bad - 1].t;
    let lo = (hi / 10.0).max(pts[0].t);
    let n = remainder.window(lo, hi).len();
    ensure(n >= MIN_FIT_POINTS, || {
        format!("reliable window [{lo}, {hi}] has only {n} points")
    })?;
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::c_const;

    fn synthetic<F: Fn(f64) -> f64>(ts: &[f64], f: F) -> TailCurve {
        TailCurve::new(ts.iter().map(|&t| CurvePoint::new(t, f(t), Source::ClosedForm)).collect()).unwrap()
    }

    #[test]
    fn pure_power_law_slope() {
        let ts = log_grid(1.0, 1e4, 30).unwrap();
        let fit = fit_rate(&synthetic(&ts, |t| 3.0 * t.powf(-1.7))).unwrap();
        assert!((fit.slope + 1.7).abs() < 1e-12, "{fit:?}");
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-11);
        assert!(fit.residual_rms < 1e-12);
        assert_eq!(fit.window, (1.0, 1e4));
    }

    #[test]
    fn log_factor_bends_the_fit() {
        let ts = log_grid(1e3, 1e6, 31).unwrap();
        let fit = fit_rate(&synthetic(&ts, |t| 1.5 * t.ln() / (t * t))).unwrap();
        assert!(fit.slope > -2.0 && fit.slope < -1.8, "{fit:?}");
    }

    #[test]
    fn sign_change_and_short_windows_are_errors() {
        let ts = log_grid(1.0, 100.0, 20).unwrap();
        let c = synthetic(&ts, |t| t - 10.0);
        assert!(matches!(fit_rate(&c), Err(Error::SignChange { .. })));
        assert!(fit_rate(&c.window(20.0, 100.0)).is_ok());
        assert!(fit_rate(&c.window(1.0, 2.0)).is_err());
    }

    #[test]
    fn synthetic_leading_curve_has_zero_remainder() {
        let (nu, a, b) = (0.7, 2.0, 1.0);
        let c = c_const(nu, a, b).unwrap();
        let ts = log_grid(1.0, 1e3, 7).unwrap();
        let r = remainder(&synthetic(&ts, |t| c * t.powf(-nu)), nu, a, b, Sign::Minus).unwrap();
        assert!(r.values().iter().all(|v| v.abs() < 1e-16));
    }

    #[test]
    fn zero_level_remainder_has_the_gamma_series_exponent() {
        // P(ν, y) = y^ν/Γ(ν+1)·(1 − ν y/(ν+1) + …), so the next term is O(t^{−ν−1})
        for &nu in &[0.3, 1.0, 1.8] {
            let ts = log_grid(1e3, 1e6, 16).unwrap();
            let curve = closed_form_curve(SignedIndex::minus(nu).unwrap(), 2.0, 0.0, &ts).unwrap();
            let r = remainder(&curve, nu, 2.0, 0.0, Sign::Minus).unwrap();
            assert!(r.values().iter().all(|&v| v < 0.0));
            let fit = fit_rate(&r).unwrap();
            assert!((fit.slope + nu + 1.0).abs() < 1e-3, "nu={nu} {fit:?}");
        }
    }

    #[test]
    fn half_index_remainder_decays_like_t_to_the_minus_three_halves() {
        let ts = log_grid(1e2, 1e5, 31).unwrap();
        let curve = closed_form_curve(SignedIndex::plus(0.5).unwrap(), 2.0, 1.0, &ts).unwrap();
        let fit = fit_rate(&remainder(&curve, 0.5, 2.0, 1.0, Sign::Plus).unwrap()).unwrap();
        assert!((fit.slope + 1.5).abs() < 0.01, "{fit:?}");
    }

    #[test]
    fn closed_forms_respect_the_sign_flip() {
        let ts = [0.5, 2.0, 10.0];
        let plus = closed_form_curve(SignedIndex::plus(0.5).unwrap(), 2.0, 1.0, &ts).unwrap();
        let minus = closed_form_curve(SignedIndex::minus(0.5).unwrap(), 2.0, 1.0, &ts).unwrap();
        for (p, m) in plus.values().iter().zip(minus.values()) {
            assert!((p - 0.5 * m).abs() < 1e-16);
        }
        assert!(closed_form_curve(SignedIndex::minus(0.7).unwrap(), 2.0, 1.0, &ts).is_err());
        assert_eq!(closed_form_curve(SignedIndex::plus(0.7).unwrap(), 2.0, 0.0, &ts).unwrap().values(), vec![0.0; 3]);
    }

    #[test]
    fn default_window_stops_before_noise() {
        let ts = log_grid(1.0, 1e4, 41).unwrap();
        let r = synthetic(&ts, |t| t.powf(-1.2));
        let errs: Vec<f64> = ts.iter().map(|_| 2e-5).collect();
        let (lo, hi) = default_window(&r, &errs).unwrap();
        // 2e-5 = 0.1·t^{−1.2} at t ≈ 1.2e3
        assert_eq!(hi, 1e3);
        assert!((lo - hi / 10.0).abs() < 1e-9);
        assert!(default_window(&r, &vec![1.0; ts.len()]).is_err());
    }

    #[test]
    fn curve_validation() {
        let p = |t: f64, v: f64| CurvePoint::new(t, v, Source::Oracle);
        assert!(TailCurve::new(vec![p(2.0, 0.1), p(1.0, 0.2)]).is_err());
        assert!(TailCurve::new(vec![p(1.0, -0.5)]).is_ok());
        assert!(TailCurve::probabilities(vec![p(1.0, -0.5)]).is_err());
        assert!(TailCurve::new(vec![p(1.0, f64::NAN)]).is_err());
    }
}
