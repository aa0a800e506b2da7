//! Samplers for hitting times and infimum functionals, and Monte Carlo
//! estimates built from them.
//!
//! Hitting times at b > 0 are simulated in the Lamperti clock: log R is a
//! Brownian motion with drift equal to the index, run until it crosses log b,
//! and the Bessel time is the accumulated clock ∫ exp(2W) ds.

mod estimate;
mod samplers;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use estimate::{
    bias_ladder, conditioned_expectation, estimate_mean, estimate_tail, BiasLadder, Sample, DEFAULT_CENSOR_LIMIT,
    DEFAULT_STREAMS,
};
pub use samplers::{
    bessel_marginal_sample, gamma_sample, hitting_before, hitting_sample, infimum_and_endpoint,
    rho_inf_sample, tau0_sample, z_sample, Capped, Hit,
};

/// Identifies an independent random stream: ChaCha8 keyed by `seed`, on
/// stream `stream_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerConfig {
    /// Step in the Lamperti clock (or in real time for the radial scheme).
    pub dt: f64,
    pub bridge_correction: bool,
    pub max_steps: u64,
    /// Height above log a at which an upward-drifting log-walk is declared
    /// escaped.
    pub escape_barrier: f64,
}

impl Default for EulerConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            bridge_correction: true,
            max_steps: 100_000_000,
            escape_barrier: 20.0,
        }
    }
}

impl EulerConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.max_steps == 0 {
            return Err(Error::Invalid("max_steps must be at least 1".into()));
        }
        if !(self.escape_barrier > 0.0) {
            return Err(Error::Invalid("escape barrier must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
    /// 1.96·√(variance/n)
    pub ci95: f64,
    /// Samples dropped because a path ran out of steps.
    pub censored: u64,
    /// `seed/streams`, enough to rerun the estimate.
    pub seeds: String,
}

impl McEstimate {
    pub fn new(n: u64, mean: f64, variance: f64, censored: u64, seeds: String) -> Self {
        let variance = variance.max(0.0);
        Self {
            n,
            mean,
            variance,
            ci95: 1.96 * (variance / n.max(1) as f64).sqrt(),
            censored,
            seeds,
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.n.max(1) as f64).sqrt()
    }

    /// |mean − target| in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        let se = self.std_error();
        if se == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target).abs() / se
        }
    }
}

/// Streaming mean and centred second moment; merges are exact in the order
/// they are applied.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |s: RngStream| -> Vec<u64> {
            let mut r = s.rng();
            (0..4).map(|_| r.random()).collect()
        };
        assert_eq!(draw(RngStream::new(7, 3)), draw(RngStream::new(7, 3)));
        assert_ne!(draw(RngStream::new(7, 3)), draw(RngStream::new(7, 4)));
        assert_ne!(draw(RngStream::new(7, 3)), draw(RngStream::new(8, 3)));
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut parts = Moments::default();
        for chunk in xs.chunks(77) {
            let mut m = Moments::default();
            chunk.iter().for_each(|&x| m.push(x));
            parts.merge(&m);
        }
        assert_eq!(parts.n, whole.n);
        assert!((parts.mean - whole.mean).abs() < 1e-12);
        assert!((parts.variance() - whole.variance()).abs() < 1e-10);
    }

    #[test]
    fn ci_definition() {
        let e = McEstimate::new(400, 0.5, 0.25, 0, "1/1".into());
        assert!((e.ci95 - 1.96 * 0.025).abs() < 1e-15);
        assert!((e.z_score(0.55) - 2.0).abs() < 1e-12);
    }
}
