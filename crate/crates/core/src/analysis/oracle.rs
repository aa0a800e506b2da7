use std::path::Path;

use serde::{Deserialize, Serialize};

use super::curve::{CurvePoint, Source, TailCurve};
use crate::error::{ensure, Result};
use crate::pde_oracle::{load_or_solve, SurvivalGrid, SurvivalSolution};

/// Resolution of the oracle grid used for tail curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub t_min: f64,
    pub per_decade_x: usize,
    pub per_decade_t: usize,
    pub substeps: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            t_min: 1e-3,
            per_decade_x: 100,
            per_decade_t: 20,
            substeps: 256,
        }
    }
}

impl OracleSettings {
    /// Half the spatial and temporal resolution; the pair gives the error
    /// estimate.
    pub fn halved(&self) -> Self {
        Self {
            per_decade_x: (self.per_decade_x / 2).max(1),
            substeps: (self.substeps / 2).max(1),
            ..*self
        }
    }

    pub fn grid(&self, a: f64, b: f64, t_max: f64) -> Result<SurvivalGrid> {
        SurvivalGrid::for_tail(b, a, self.t_min, t_max, self.per_decade_x, self.per_decade_t, self.substeps)
    }
}

/// P^{(−ν)}_a(τ_b > t) from the oracle at the requested times, with the
/// difference to a half-resolution solve as error estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTail {
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub curve: TailCurve,
    pub errors: Vec<f64>,
}

impl OracleTail {
    pub fn error_at(&self, t: f64) -> Option<f64> {
        let i = self.curve.points().iter().position(|p| (p.t - t).abs() <= 1e-9 * t)?;
        Some(self.errors[i])
    }
}

/// u(a, t) at each t, interpolated linearly in (log t, log u) between output
/// times, which is exact for power laws.
fn sample(sol: &SurvivalSolution, a: f64, ts: &[f64]) -> Result<Vec<f64>> {
    let series = sol.series_at(a)?;
    let grid = &sol.ts;
    ts.iter()
        .map(|&t| {
            let k = grid.partition_point(|&s| s < t);
            ensure(k < grid.len(), || format!("t = {t} outside the solved range"))?;
            let (t0, u0) = series[k.max(1) - 1];
            let (t1, u1) = series[k];
            if (t1 - t).abs() <= 1e-12 * t || k <= 1 || u0 <= 0.0 || u1 <= 0.0 {
                return sol.tail_at(a, t);
            }
            let w = (t / t0).ln() / (t1 / t0).ln();
            Ok((u0.ln() * (1.0 - w) + u1.ln() * w).exp())
        })
        .collect()
}

/// Oracle tail curve on `ts` (which must lie in [t_min, max ts]). Solutions
/// are cached under `cache` when given.
pub fn oracle_tail(
    nu: f64,
    a: f64,
    b: f64,
    ts: &[f64],
    settings: &OracleSettings,
    cache: Option<&Path>,
) -> Result<OracleTail> {
    ensure(!ts.is_empty(), || "empty time grid".into())?;
    let t_max = ts.iter().cloned().fold(f64::MIN, f64::max);
    ensure(ts.iter().all(|&t| t >= settings.t_min), || {
        format!("times must be at least t_min = {}", settings.t_min)
    })?;
    let fine = load_or_solve(nu, &settings.grid(a, b, t_max)?, cache)?;
    let coarse = load_or_solve(nu, &settings.halved().grid(a, b, t_max)?, cache)?;
    let u = sample(&fine, a, ts)?;
    let v = sample(&coarse, a, ts)?;
    let points = ts
        .iter()
        .zip(&u)
        .map(|(&t, &x)| CurvePoint::new(t, x, Source::Oracle))
        .collect();
    Ok(OracleTail {
        nu,
        a,
        b,
        curve: TailCurve::probabilities(points)?,
        errors: u.iter().zip(&v).map(|(x, y)| (x - y).abs()).collect(),
    })
}
