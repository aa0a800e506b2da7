use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::samplers::{hitting_before, tau0_sample, Capped};
use super::{EulerConfig, McEstimate, Moments, RngStream};
use crate::closed_form::{tau0_tail, LawQuery, Sign};
use crate::error::{ensure, Error, Result};

pub const DEFAULT_STREAMS: u64 = 64;
/// Largest tolerated fraction of truncated paths.
pub const DEFAULT_CENSOR_LIMIT: f64 = 1e-3;

/// How an estimate is split into random streams. Results depend on the seed
/// and the stream count, never on the number of threads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub seed: u64,
    pub streams: u64,
    pub censor_limit: f64,
}

impl Sample {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            streams: DEFAULT_STREAMS,
            censor_limit: DEFAULT_CENSOR_LIMIT,
        }
    }

    fn fingerprint(&self) -> String {
        format!("{:016x}/{}", self.seed, self.streams)
    }

    /// Number of draws assigned to stream k.
    fn share(&self, n: u64, k: u64) -> u64 {
        n / self.streams + u64::from(k < n % self.streams)
    }

    /// Runs `body` once per stream (in parallel) and returns the results in
    /// stream order.
    fn per_stream<T, F>(&self, n: u64, body: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng, u64) -> Result<T> + Sync,
    {
        ensure(self.streams > 0, || "need at least one stream".into())?;
        (0..self.streams)
            .into_par_iter()
            .map(|k| body(&mut RngStream::new(self.seed, k).rng(), self.share(n, k)))
            .collect()
    }
}

fn check_censoring(censored: u64, n: u64, limit: f64) -> Result<()> {
    if censored as f64 > limit * n as f64 {
        return Err(Error::Censored { censored, n, limit });
    }
    Ok(())
}

/// Mean of `draw` over n samples. Draws that fail with `Truncated` are
/// censored (dropped and counted); any other error aborts.
pub fn estimate_mean<F>(n: u64, plan: &Sample, draw: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    ensure(n >= 1, || "need at least one sample".into())?;
    let parts = plan.per_stream(n, |rng, m| {
        let mut acc = Moments::default();
        let mut censored = 0u64;
        for _ in 0..m {
            match draw(rng) {
                Ok(x) => acc.push(x),
                Err(Error::Truncated { .. }) => censored += 1,
                Err(e) => return Err(e),
            }
        }
        Ok((acc, censored))
    })?;
    let mut total = Moments::default();
    let mut censored = 0;
    for (m, c) in &parts {
        total.merge(m);
        censored += c;
    }
    check_censoring(censored, n, plan.censor_limit)?;
    if total.n == 0 {
        return Err(Error::Censored {
            censored,
            n,
            limit: plan.censor_limit,
        });
    }
    Ok(McEstimate::new(
        total.n,
        total.mean,
        total.variance(),
        censored,
        plan.fingerprint(),
    ))
}

/// Monte Carlo P(τ_b > t) for index −ν, or P(t < τ_b < ∞) for index +ν.
///
/// Paths stop once the clock passes t. For index +ν a survivor at log-level
/// w then returns to b with probability exp(−2ν(w − log b)) (drifted Brownian
/// motion), and the indicator of that event is drawn directly instead of
/// running the path on.
pub fn estimate_tail(q: &LawQuery, n: u64, cfg: &EulerConfig, plan: &Sample) -> Result<McEstimate> {
    ensure(n >= 100, || format!("need n >= 100, got {n}"))?;
    cfg.validate()?;
    let (nu, a, b, t) = (q.nu(), q.a, q.b, q.t);
    let sign = q.sign();
    if b == 0.0 {
        return estimate_mean(n, plan, |rng| {
            Ok(match sign {
                Sign::Minus => f64::from(u8::from(tau0_sample(nu, a, rng)? > t)),
                // the transient process never reaches 0
                Sign::Plus => 0.0,
            })
        });
    }
    let level = b.ln();
    estimate_mean(n, plan, |rng| {
        let hit = hitting_before(q.index, a, b, t, cfg, rng)?;
        Ok(match (hit, sign) {
            (Capped::Hit(s), _) => f64::from(u8::from(s > t)),
            (Capped::Survived { .. }, Sign::Minus) => 1.0,
            (Capped::Survived { log_r }, Sign::Plus) => {
                let back = (-2.0 * nu * (log_r - level)).exp();
                f64::from(u8::from(rng.random::<f64>() < back))
            }
            (Capped::Escaped, _) => 0.0,
        })
    })
}

/// Tail estimates at steps dt, dt/2, …, dt/2^{levels−1}, all driven by the
/// same Brownian path (coarse increments are sums of fine ones).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasLadder {
    pub dts: Vec<f64>,
    pub estimates: Vec<McEstimate>,
    /// Estimates of E[Y(dt_l) − Y(dt_{l+1})]; coupling makes these precise.
    pub differences: Vec<McEstimate>,
    /// differences[l] / differences[l+1]; 2 for a first-order bias.
    pub ratios: Vec<f64>,
}

struct Level {
    dt: f64,
    w: f64,
    e: f64,
    clock: f64,
    pending: f64,
    outcome: Option<f64>,
}

/// Coupled estimates of P(τ_b > t) for index −ν across halvings of dt.
pub fn bias_ladder(
    q: &LawQuery,
    dt: f64,
    levels: usize,
    n: u64,
    cfg: &EulerConfig,
    plan: &Sample,
) -> Result<BiasLadder> {
    ensure(q.sign() == Sign::Minus && q.b > 0.0, || {
        "the ladder runs index −ν hitting times at b > 0".into()
    })?;
    ensure(levels >= 2 && levels <= 12, || format!("need 2..=12 levels, got {levels}"))?;
    ensure(n >= 100, || format!("need n >= 100, got {n}"))?;
    let (mu, a, b, t) = (q.index.value(), q.a, q.b, q.t);
    let level = b.ln();
    let fine_dt = dt / (1u64 << (levels - 1)) as f64;
    let fine_sd = fine_dt.sqrt();
    let dts: Vec<f64> = (0..levels).map(|l| dt / (1u64 << l) as f64).collect();
    let max_fine = cfg.max_steps.saturating_mul(1 << (levels - 1));

    let parts = plan.per_stream(n, |rng, m| {
        let mut values = vec![Moments::default(); levels];
        let mut diffs = vec![Moments::default(); levels - 1];
        let mut censored = 0u64;
        'path: for _ in 0..m {
            let mut lv: Vec<Level> = dts
                .iter()
                .map(|&d| Level {
                    dt: d,
                    w: a.ln(),
                    e: a * a,
                    clock: 0.0,
                    pending: 0.0,
                    outcome: None,
                })
                .collect();
            let mut k: u64 = 0;
            while lv.iter().any(|l| l.outcome.is_none()) {
                if k >= max_fine {
                    censored += 1;
                    continue 'path;
                }
                k += 1;
                let z: f64 = StandardNormal.sample(rng);
                for (idx, l) in lv.iter_mut().enumerate() {
                    l.pending += fine_sd * z;
                    let stride = 1u64 << (levels - 1 - idx);
                    if k % stride != 0 || l.outcome.is_some() {
                        continue;
                    }
                    let w1 = l.w + mu * l.dt + l.pending;
                    l.pending = 0.0;
                    let mut hit = None;
                    if w1 <= level {
                        hit = Some((l.w - level) / (l.w - w1));
                    } else if cfg.bridge_correction {
                        let x = 2.0 * (l.w - level) * (w1 - level) / l.dt;
                        if x < 40.0 && 1.0 - rng.random::<f64>() <= (-x).exp() {
                            hit = Some((l.w - level) / ((l.w - level) + (w1 - level)));
                        }
                    }
                    if let Some(f) = hit {
                        let s = l.clock + f * l.dt * 0.5 * (l.e + b * b);
                        l.outcome = Some(f64::from(u8::from(s > t)));
                        continue;
                    }
                    let e1 = (2.0 * w1).exp();
                    l.clock += 0.5 * l.dt * (l.e + e1);
                    l.w = w1;
                    l.e = e1;
                    if l.clock > t {
                        l.outcome = Some(1.0);
                    }
                }
            }
            let ys: Vec<f64> = lv.iter().map(|l| l.outcome.expect("all settled")).collect();
            for (v, y) in values.iter_mut().zip(&ys) {
                v.push(*y);
            }
            for (d, w) in diffs.iter_mut().zip(ys.windows(2)) {
                d.push(w[0] - w[1]);
            }
        }
        Ok((values, diffs, censored))
    })?;

    let mut values = vec![Moments::default(); levels];
    let mut diffs = vec![Moments::default(); levels - 1];
    let mut censored = 0;
    for (v, d, c) in &parts {
        values.iter_mut().zip(v).for_each(|(x, y)| x.merge(y));
        diffs.iter_mut().zip(d).for_each(|(x, y)| x.merge(y));
        censored += c;
    }
    check_censoring(censored, n, plan.censor_limit)?;
    let fp = plan.fingerprint();
    let est = |m: &Moments| McEstimate::new(m.n, m.mean, m.variance(), censored, fp.clone());
    let differences: Vec<McEstimate> = diffs.iter().map(est).collect();
    let ratios = differences.windows(2).map(|w| w[0].mean / w[1].mean).collect();
    Ok(BiasLadder {
        dts,
        estimates: values.iter().map(est).collect(),
        differences,
        ratios,
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct RatioSums {
    n: u64,
    absorbed: u64,
    w: f64,
    wf: f64,
    w2: f64,
    w2f: f64,
    w2f2: f64,
}

impl RatioSums {
    fn merge(&mut self, o: &RatioSums) {
        self.n += o.n;
        self.absorbed += o.absorbed;
        self.w += o.w;
        self.wf += o.wf;
        self.w2 += o.w2;
        self.w2f += o.w2f;
        self.w2f2 += o.w2f2;
    }
}

/// E_a^{(−ν)}[f(R_t) | τ₀ > s] by radial Euler paths of index −ν absorbed at
/// 0, each weighted by P_{R_t}(τ₀ > s − t). `cfg.dt` is the real-time step.
/// The variance is the delta-method variance of the weighted ratio.
pub fn conditioned_expectation<F>(
    nu: f64,
    a: f64,
    t: f64,
    s: f64,
    f: F,
    n: u64,
    cfg: &EulerConfig,
    plan: &Sample,
) -> Result<McEstimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    ensure(nu > 0.0 && a > 0.0 && t > 0.0, || {
        format!("need nu, a, t > 0, got nu={nu}, a={a}, t={t}")
    })?;
    ensure(s > t, || format!("need s > t, got s={s}, t={t}"))?;
    cfg.validate()?;
    let steps = (t / cfg.dt).ceil().max(1.0) as u64;
    let dt = t / steps as f64;
    let sd = dt.sqrt();
    let drift = 0.5 - nu;
    let rest = s - t;
    let parts = plan.per_stream(n, |rng, m| {
        let mut acc = RatioSums::default();
        for _ in 0..m {
            acc.n += 1;
            let mut r = a;
            let mut alive = true;
            for _ in 0..steps {
                let z: f64 = StandardNormal.sample(rng);
                r += drift / r * dt + sd * z;
                if r <= 0.0 {
                    alive = false;
                    break;
                }
            }
            if !alive {
                acc.absorbed += 1;
                continue;
            }
            let w = tau0_tail(nu, r, rest)?;
            let fv = f(r);
            acc.w += w;
            acc.wf += w * fv;
            acc.w2 += w * w;
            acc.w2f += w * w * fv;
            acc.w2f2 += w * w * fv * fv;
        }
        Ok(acc)
    })?;
    let mut tot = RatioSums::default();
    parts.iter().for_each(|p| tot.merge(p));
    if tot.w <= 0.0 {
        return Err(Error::AllAbsorbed { n: tot.n });
    }
    let mean = tot.wf / tot.w;
    let nf = tot.n as f64;
    let spread = (tot.w2f2 - 2.0 * mean * tot.w2f + mean * mean * tot.w2).max(0.0);
    let variance = nf * spread / (tot.w * tot.w);
    Ok(McEstimate::new(tot.n, mean, variance, 0, plan.fingerprint()))
}
