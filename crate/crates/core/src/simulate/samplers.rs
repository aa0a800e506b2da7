use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::EulerConfig;
use crate::closed_form::{Sign, SignedIndex};
use crate::error::{ensure, Error, Result};

/// Uniform on (0, 1].
fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// A gamma(shape, 1) draw by Marsaglia–Tsang squeeze/rejection, boosted as
/// γ_s = γ_{s+1}·U^{1/s} for shape < 1.
pub fn gamma_sample<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    ensure(shape > 0.0 && shape.is_finite(), || {
        format!("gamma shape must be positive, got {shape}")
    })?;
    if shape < 1.0 {
        let g = gamma_at_least_one(shape + 1.0, rng);
        let log = g.ln() + open_uniform(rng).ln() / shape;
        return Ok(log.exp().max(f64::MIN_POSITIVE));
    }
    Ok(gamma_at_least_one(shape, rng))
}

fn gamma_at_least_one<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open_uniform(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// τ₀ under index −ν from a, exactly: a²/(2γ_ν).
pub fn tau0_sample<R: Rng + ?Sized>(nu: f64, a: f64, rng: &mut R) -> Result<f64> {
    ensure(a > 0.0 && a.is_finite(), || format!("start must be positive, got {a}"))?;
    Ok(a * a / (2.0 * gamma_sample(nu, rng)?))
}

/// The global infimum of index +ν from a: a·U^{1/(2ν)}.
pub fn z_sample<R: Rng + ?Sized>(nu: f64, a: f64, rng: &mut R) -> Result<f64> {
    ensure(nu > 0.0 && nu.is_finite(), || format!("nu must be positive, got {nu}"))?;
    ensure(a > 0.0 && a.is_finite(), || format!("start must be positive, got {a}"))?;
    Ok(a * open_uniform(rng).powf(1.0 / (2.0 * nu)))
}

/// R_t under index +ν from a, exactly: R_t²/t is noncentral χ² with 2(ν+1)
/// degrees of freedom and noncentrality a²/t, drawn as a Poisson mixture.
pub fn bessel_marginal_sample<R: Rng + ?Sized>(nu: f64, a: f64, t: f64, rng: &mut R) -> Result<f64> {
    ensure(nu > 0.0 && nu.is_finite(), || format!("nu must be positive, got {nu}"))?;
    ensure(a >= 0.0 && t > 0.0, || format!("need a >= 0, t > 0, got a={a}, t={t}"))?;
    let lambda = a * a / (2.0 * t);
    let k = if lambda > 0.0 {
        Poisson::new(lambda)
            .map_err(|e| Error::Domain(format!("poisson rate {lambda}: {e}")))?
            .sample(rng)
    } else {
        0.0
    };
    Ok((2.0 * t * gamma_sample(nu + 1.0 + k, rng)?).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hit {
    Time(f64),
    /// The log-walk passed the escape barrier (index +ν only): τ_b = ∞.
    Escaped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Capped {
    Hit(f64),
    /// The clock passed the cap first; `log_r` is log R at that point.
    Survived { log_r: f64 },
    Escaped,
}

/// τ_b under the given index from a > b > 0 via the Lamperti log-walk.
pub fn hitting_sample<R: Rng + ?Sized>(
    index: SignedIndex,
    a: f64,
    b: f64,
    cfg: &EulerConfig,
    rng: &mut R,
) -> Result<Hit> {
    Ok(match hitting_before(index, a, b, f64::INFINITY, cfg, rng)? {
        Capped::Hit(t) => Hit::Time(t),
        Capped::Escaped => Hit::Escaped,
        Capped::Survived { .. } => unreachable!("no cap"),
    })
}

/// Like [`hitting_sample`], but stops once the clock exceeds `cap`.
pub fn hitting_before<R: Rng + ?Sized>(
    index: SignedIndex,
    a: f64,
    b: f64,
    cap: f64,
    cfg: &EulerConfig,
    rng: &mut R,
) -> Result<Capped> {
    ensure(b > 0.0 && b < a && a.is_finite(), || {
        format!("need 0 < b < a, got b={b}, a={a}")
    })?;
    let dt = cfg.dt;
    let mu = index.value();
    let sd = dt.sqrt();
    let level = b.ln();
    let b2 = b * b;
    let top = match index.sign() {
        Sign::Plus => a.ln() + cfg.escape_barrier,
        Sign::Minus => f64::INFINITY,
    };
    let mut w = a.ln();
    let mut e = a * a;
    let mut clock = 0.0;
    for _ in 0..cfg.max_steps {
        let w1 = w + mu * dt + sd * normal(rng);
        if w1 <= level {
            // crossing time interpolated linearly between the endpoints
            let f = (w - level) / (w - w1);
            return Ok(Capped::Hit(clock + f * dt * 0.5 * (e + b2)));
        }
        if cfg.bridge_correction {
            let x = 2.0 * (w - level) * (w1 - level) / dt;
            if x < 40.0 && open_uniform(rng) <= (-x).exp() {
                // an excursion below the level inside the step; place it where
                // the straight lines to the level from both endpoints meet
                let f = (w - level) / ((w - level) + (w1 - level));
                return Ok(Capped::Hit(clock + f * dt * 0.5 * (e + b2)));
            }
        }
        let e1 = (2.0 * w1).exp();
        clock += 0.5 * dt * (e + e1);
        w = w1;
        e = e1;
        if clock > cap {
            return Ok(Capped::Survived { log_r: w });
        }
        if w >= top {
            return Ok(Capped::Escaped);
        }
    }
    Err(Error::Truncated {
        steps: cfg.max_steps,
        clock,
    })
}

/// ρ_∞ under index +ν from a: the hitting time of an independent level
/// Z = z_sample(ν, a) by index −ν.
pub fn rho_inf_sample<R: Rng + ?Sized>(nu: f64, a: f64, cfg: &EulerConfig, rng: &mut R) -> Result<f64> {
    let z = z_sample(nu, a, rng)?;
    match hitting_sample(SignedIndex::minus(nu)?, a, z, cfg, rng)? {
        Hit::Time(t) => Ok(t),
        Hit::Escaped => unreachable!("index −ν never escapes"),
    }
}

/// (I_t, R_t) under index +ν from a, with the within-step minimum drawn
/// exactly from the Brownian bridge law.
pub fn infimum_and_endpoint<R: Rng + ?Sized>(
    nu: f64,
    a: f64,
    t: f64,
    cfg: &EulerConfig,
    rng: &mut R,
) -> Result<(f64, f64)> {
    ensure(nu > 0.0 && a > 0.0 && t > 0.0, || {
        format!("need nu, a, t > 0, got nu={nu}, a={a}, t={t}")
    })?;
    let dt = cfg.dt;
    let sd = dt.sqrt();
    let bridge_min = |lo: f64, hi: f64, span: f64, u: f64| {
        0.5 * (lo + hi - ((hi - lo).powi(2) - 2.0 * span * u.ln()).sqrt())
    };
    let mut w = a.ln();
    let mut e = a * a;
    let mut min = w;
    let mut clock = 0.0;
    for _ in 0..cfg.max_steps {
        let w1 = w + nu * dt + sd * normal(rng);
        let e1 = (2.0 * w1).exp();
        let inc = 0.5 * dt * (e + e1);
        if clock + inc >= t {
            let f = (t - clock) / inc;
            let wt = w + f * (w1 - w);
            min = min.min(bridge_min(w, wt, f * dt, open_uniform(rng)));
            return Ok((min.exp(), wt.exp()));
        }
        min = min.min(bridge_min(w, w1, dt, open_uniform(rng)));
        clock += inc;
        w = w1;
        e = e1;
    }
    Err(Error::Truncated {
        steps: cfg.max_steps,
        clock,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{halfindex_exact, tau0_tail};
    use crate::numerics::reg_gamma_p;
    use crate::simulate::{Moments, RngStream};

    /// Kolmogorov–Smirnov statistic of sorted samples against a CDF.
    fn ks<F: Fn(f64) -> f64>(mut xs: Vec<f64>, cdf: F) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = cdf(x);
                (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
            })
            .fold(0.0, f64::max)
    }

    // asymptotic 1% critical value of √n·D
    const KS_1PCT: f64 = 1.6276;

    #[test]
    fn gamma_moments() {
        let mut rng = RngStream::new(1, 0).rng();
        for (shape, n) in [(2.0, 1_000_000), (0.5, 1_000_000)] {
            let mut m = Moments::default();
            for _ in 0..n {
                m.push(gamma_sample(shape, &mut rng).unwrap());
            }
            let se_mean = (shape / n as f64).sqrt();
            assert!((m.mean - shape).abs() < 4.0 * se_mean, "mean {}", m.mean);
            // var of the sample variance for gamma: (μ4 − σ⁴)/n with μ4 = 3s² + 6s
            let se_var = ((3.0 * shape * shape + 6.0 * shape - shape * shape) / n as f64).sqrt();
            assert!((m.variance() - shape).abs() < 4.0 * se_var, "var {}", m.variance());
        }
    }

    #[test]
    fn gamma_ks() {
        let mut rng = RngStream::new(2, 0).rng();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| gamma_sample(0.7, &mut rng).unwrap()).collect();
        let d = ks(xs, |x| reg_gamma_p(0.7, x).unwrap());
        assert!(d * (n as f64).sqrt() < KS_1PCT, "D = {d}");
        assert!(gamma_sample(0.0, &mut rng).is_err());
        assert!(gamma_sample(1e-3, &mut rng).unwrap() > 0.0);
    }

    #[test]
    fn tau0_tail_frequencies() {
        let mut rng = RngStream::new(3, 0).rng();
        for (nu, a, t) in [(1.0, 1.0, 1.0), (0.3, 1.5, 10.0)] {
            let n = 1_000_000;
            let hits = (0..n).filter(|_| tau0_sample(nu, a, &mut rng).unwrap() > t).count();
            let p = tau0_tail(nu, a, t).unwrap();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((hits as f64 / n as f64 - p).abs() < 4.0 * se, "nu={nu}");
        }
        assert!((tau0_tail(1.0, 1.0, 1.0).unwrap() - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn tau0_scaling_two_sample_ks() {
        let n = 20_000;
        let mut r1 = RngStream::new(4, 0).rng();
        let mut r2 = RngStream::new(5, 0).rng();
        let mut big: Vec<f64> = (0..n).map(|_| tau0_sample(0.6, 2.0, &mut r1).unwrap()).collect();
        let mut small: Vec<f64> =
            (0..n).map(|_| 4.0 * tau0_sample(0.6, 1.0, &mut r2).unwrap()).collect();
        big.sort_by(|a, b| a.partial_cmp(b).unwrap());
        small.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < n && j < n {
            if big[i] <= small[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 - j as f64).abs() / n as f64);
        }
        assert!(d * (n as f64 / 2.0).sqrt() < KS_1PCT, "D = {d}");
    }

    #[test]
    fn z_laws() {
        let mut rng = RngStream::new(6, 0).rng();
        let n = 1_000_000;
        let above = (0..n).filter(|_| z_sample(1.0, 2.0, &mut rng).unwrap() > 1.0).count();
        let p = 1.0 - 0.25;
        assert!((above as f64 / n as f64 - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());

        let xs: Vec<f64> = (0..50_000).map(|_| z_sample(0.5, 2.0, &mut rng).unwrap()).collect();
        assert!(ks(xs, |x| x / 2.0) * (50_000f64).sqrt() < KS_1PCT);

        // density (2ν/a^{2ν}) z^{2ν−1} on (0, a): mean 2ν a/(2ν+1) = 2.4 at ν = 2, a = 3
        let mut m = Moments::default();
        for _ in 0..n {
            m.push(z_sample(2.0, 3.0, &mut rng).unwrap());
        }
        assert!((m.mean - 2.4).abs() < 4.0 * (m.variance() / n as f64).sqrt());
    }

    #[test]
    fn bessel_marginal_second_moment() {
        // E R_t² = a² + 2(ν+1)t for dimension 2(ν+1)
        let mut rng = RngStream::new(7, 0).rng();
        let (nu, a, t) = (0.7, 1.0, 2.0);
        let mut m = Moments::default();
        for _ in 0..200_000 {
            m.push(bessel_marginal_sample(nu, a, t, &mut rng).unwrap().powi(2));
        }
        let want = a * a + 2.0 * (nu + 1.0) * t;
        assert!((m.mean - want).abs() < 4.0 * (m.variance() / 200_000.0).sqrt());
    }

    #[test]
    fn half_index_tail_by_lamperti() {
        let (a, b, t) = (2.0, 1.0, 4.0);
        let want = (a / b) * halfindex_exact(a, b, t).unwrap();
        let cfg = EulerConfig::with_dt(1e-3);
        let idx = SignedIndex::minus(0.5).unwrap();
        let mut rng = RngStream::new(8, 0).rng();
        let n = 20_000;
        let survived = (0..n)
            .filter(|_| {
                !matches!(hitting_before(idx, a, b, t, &cfg, &mut rng).unwrap(), Capped::Hit(s) if s <= t)
            })
            .count();
        let p = survived as f64 / n as f64;
        let se = (want * (1.0 - want) / n as f64).sqrt();
        // first-order clock bias at this step is a few 1e-3
        assert!((p - want).abs() < 4.0 * se + 0.01, "{p} vs {want}");
    }

    #[test]
    fn start_next_to_level_hits_at_once() {
        let a = 1.0;
        let b = a * (1.0 - 1e-3);
        let cfg = EulerConfig::with_dt(1e-6);
        let mut rng = RngStream::new(9, 0).rng();
        let idx = SignedIndex::minus(0.8).unwrap();
        let mut ts: Vec<f64> = (0..10_000)
            .map(|_| match hitting_sample(idx, a, b, &cfg, &mut rng).unwrap() {
                Hit::Time(t) => t,
                Hit::Escaped => f64::INFINITY,
            })
            .collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(ts[5_000] < 1e-3 * a * a, "median {}", ts[5_000]);
    }

    #[test]
    fn plus_index_escapes_and_truncation_reports() {
        let mut rng = RngStream::new(10, 0).rng();
        let cfg = EulerConfig {
            dt: 1e-2,
            escape_barrier: 3.0,
            ..EulerConfig::default()
        };
        let idx = SignedIndex::plus(2.0).unwrap();
        let escaped = (0..200)
            .filter(|_| hitting_sample(idx, 2.0, 1.0, &cfg, &mut rng).unwrap() == Hit::Escaped)
            .count();
        // return probability (b/a)^{2ν} = 1/16
        assert!(escaped > 150);

        let tight = EulerConfig {
            max_steps: 3,
            ..EulerConfig::with_dt(1e-6)
        };
        let idx = SignedIndex::minus(0.5).unwrap();
        match hitting_sample(idx, 2.0, 1.0, &tight, &mut rng) {
            Err(Error::Truncated { steps: 3, clock }) => assert!(clock > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bridge_correction_finds_more_hits() {
        let (a, b, t) = (2.0, 1.0, 4.0);
        let idx = SignedIndex::minus(0.5).unwrap();
        let count = |bridge: bool| {
            let cfg = EulerConfig {
                bridge_correction: bridge,
                ..EulerConfig::with_dt(1e-2)
            };
            let mut rng = RngStream::new(11, 0).rng();
            (0..20_000)
                .filter(|_| {
                    matches!(hitting_before(idx, a, b, t, &cfg, &mut rng).unwrap(), Capped::Hit(s) if s <= t)
                })
                .count()
        };
        assert!(count(true) > count(false));
    }
}
