use std::path::PathBuf;
use std::str::FromStr;

use besselhit::analysis::log_grid;
use besselhit::Sign;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

pub const CACHE_ENV: &str = "BESSELHIT_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(name = "besselhit", version, about = "Hitting times of Bessel processes: exact laws, tails and checks")]
pub struct Cli {
    /// Worker threads for Monte Carlo and oracle fan-out. Results do not
    /// depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Directory for cached PDE solutions.
    #[arg(long, global = true, env = CACHE_ENV)]
    pub cache_dir: Option<PathBuf>,

    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Constants and expansion coefficients for one (ν, a, b).
    Constants(Params),
    /// Tail table on a time grid, from a closed form or the PDE oracle.
    Tail(CurveArgs),
    /// Monte Carlo estimates of one functional.
    Simulate(SimulateArgs),
    /// Run a named verification suite; exit status 0 iff every check passed.
    Verify(VerifyArgs),
    /// Remainder after the leading term and its fitted decay rate.
    Rates(RatesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Plus,
    Minus,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Plus => Sign::Plus,
            SignArg::Minus => Sign::Minus,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Params {
    /// Index magnitude ν > 0.
    #[arg(long, allow_hyphen_values = true)]
    pub nu: f64,
    #[arg(long, value_enum, default_value = "minus")]
    pub sign: SignArg,
    /// Starting point.
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    /// Level to hit, 0 ≤ b < a.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
}

/// `lo:hi:points`, log-spaced; append `:lin` for uniform spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub linear: bool,
}

impl FromStr for TGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let linear = match parts.get(3) {
            None => false,
            Some(&"lin") => true,
            Some(&"log") => false,
            Some(x) => return Err(format!("unknown spacing {x:?}, expected lin or log")),
        };
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("expected lo:hi:points, got {s:?}"));
        }
        let lo: f64 = parts[0].parse().map_err(|e| format!("lo: {e}"))?;
        let hi: f64 = parts[1].parse().map_err(|e| format!("hi: {e}"))?;
        let points: usize = parts[2].parse().map_err(|e| format!("points: {e}"))?;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(format!("need 0 < lo < hi, got {lo}:{hi}"));
        }
        if points < 2 {
            return Err(format!("need at least 2 points, got {points}"));
        }
        Ok(Self { lo, hi, points, linear })
    }
}

impl TGrid {
    pub fn times(&self) -> besselhit::Result<Vec<f64>> {
        if self.linear {
            let h = (self.hi - self.lo) / (self.points - 1) as f64;
            Ok((0..self.points)
                .map(|k| if k + 1 == self.points { self.hi } else { self.lo + h * k as f64 })
                .collect())
        } else {
            log_grid(self.lo, self.hi, self.points)
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Oracle cells per decade in x.
    #[arg(long, default_value_t = 100)]
    pub per_decade_x: usize,
    /// Oracle output times per decade.
    #[arg(long, default_value_t = 20)]
    pub per_decade_t: usize,
    /// Oracle time steps between output times.
    #[arg(long, default_value_t = 256)]
    pub substeps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub params: Params,
    #[arg(long, default_value = "1:1e4:41")]
    pub t_grid: TGrid,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RatesArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Fit window `lo:hi`; by default one decade ending where the oracle
    /// error reaches 10% of the remainder.
    #[arg(long)]
    pub window: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Functional {
    /// P(τ_b > t), or P(t < τ_b < ∞) for index +ν.
    Tail,
    /// P(ρ_∞ > t) for index +ν, ρ_∞ the time of the global infimum.
    RhoInf,
    /// E[f(R_t) | τ₀ > s] under index −ν, f(r) = min(r, cap).
    Conditioned,
    /// P(S + U > t), S = τ_b from a, U = τ₀ from b, against P_a(τ₀ > t).
    Convolution,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: Params,
    #[arg(long, value_enum, default_value = "tail")]
    pub functional: Functional,
    #[arg(long)]
    pub t: f64,
    /// Conditioning horizon for `conditioned`.
    #[arg(long, default_value_t = 1e4)]
    pub s: f64,
    /// Cap in f(r) = min(r, cap) for `conditioned`.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub cap: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n: u64,
    /// Euler step (Lamperti clock for hitting times, real time for
    /// `conditioned`).
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Independent random streams; fixes the result together with the seed.
    #[arg(long, default_value_t = besselhit::simulate::DEFAULT_STREAMS)]
    pub streams: u64,
    /// Largest tolerated fraction of censored paths.
    #[arg(long, default_value_t = besselhit::simulate::DEFAULT_CENSOR_LIMIT)]
    pub censor_limit: f64,
    #[arg(long, default_value_t = 100_000_000)]
    pub max_steps: u64,
    /// Turn off the Brownian-bridge crossing test.
    #[arg(long)]
    pub no_bridge: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Identities,
    Asymptotics,
    Simulation,
    Oracle,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: SuiteArg,
    /// Restrict `asymptotics` to one index.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 20240611)]
    pub seed: u64,
    /// Multiplies every Monte Carlo sample size.
    #[arg(long, default_value_t = 1.0)]
    pub mc_scale: f64,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn t_grid_parses() {
        let g: TGrid = "1:1e4:5".parse().unwrap();
        assert_eq!(g.times().unwrap().len(), 5);
        assert!((g.times().unwrap()[1] - 10.0).abs() < 1e-12);
        let g: TGrid = "1:3:3:lin".parse().unwrap();
        assert_eq!(g.times().unwrap(), vec![1.0, 2.0, 3.0]);
        assert!("1:1e4".parse::<TGrid>().is_err());
        assert!("5:1:3".parse::<TGrid>().is_err());
        assert!("1:2:1".parse::<TGrid>().is_err());
        assert!("1:2:3:cubic".parse::<TGrid>().is_err());
    }
}
