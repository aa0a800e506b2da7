use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placement of the spatial nodes on [b, x_max].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spacing {
    Uniform,
    /// x_i − b grows geometrically with the given ratio (> 1), so the mesh
    /// is finest at the absorbing level.
    Graded { ratio: f64 },
    /// x_i = b·q^i, uniform in log x. Requires b > 0.
    Logarithmic,
}

/// Placement of the output time nodes on (0, t_max]; t = 0 is always node 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeSpacing {
    Uniform,
    /// n_t nodes log-spaced from t_min to t_max inclusive.
    Geometric { t_min: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalGrid {
    pub b: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub t_max: f64,
    pub n_t: usize,
    /// Time weighting of the θ-scheme; 1/2 is Crank–Nicolson.
    pub theta: f64,
    pub spacing: Spacing,
    pub time_spacing: TimeSpacing,
    /// Internal steps per output interval.
    pub substeps: usize,
    /// A point that must coincide with a node (typically the start a).
    pub anchor: Option<f64>,
    /// Combine the solve with one on the bisected mesh to cancel the O(h²)
    /// spatial error.
    pub richardson: bool,
}

pub const MIN_NODES: usize = 16;

impl SurvivalGrid {
    /// A grid tuned for reading P_a(τ_b > t) on log-spaced times up to
    /// `t_max`: x_max = a + 10√t_max, log spacing with `per_decade_x` nodes
    /// per decade in x, and `per_decade_t` output nodes per decade in t
    /// starting at `t_min`.
    pub fn for_tail(
        b: f64,
        a: f64,
        t_min: f64,
        t_max: f64,
        per_decade_x: usize,
        per_decade_t: usize,
        substeps: usize,
    ) -> Result<Self> {
        if !(b > 0.0 && b < a) {
            return Err(Error::Domain(format!("need 0 < b < a, got b={b}, a={a}")));
        }
        if !(t_min > 0.0 && t_min < t_max) {
            return Err(Error::Domain(format!("need 0 < t_min < t_max, got {t_min}, {t_max}")));
        }
        let x_max = a + 10.0 * t_max.sqrt();
        let decades_x = (x_max / b).log10();
        let decades_t = (t_max / t_min).log10();
        let grid = Self {
            b,
            x_max,
            n_x: ((decades_x * per_decade_x as f64).ceil() as usize + 1).max(MIN_NODES),
            t_max,
            n_t: ((decades_t * per_decade_t as f64).round() as usize + 1).max(MIN_NODES),
            theta: 0.5,
            spacing: Spacing::Logarithmic,
            time_spacing: TimeSpacing::Geometric { t_min },
            substeps,
            anchor: Some(a),
            richardson: true,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// The same grid with `factor` times the resolution in x and in t.
    pub fn refined(&self, factor: usize) -> Self {
        let f = factor.max(1);
        let mut g = *self;
        g.n_x = (self.n_x - 1) * f + 1;
        g.substeps = self.substeps * f;
        if let Spacing::Graded { ratio } = self.spacing {
            g.spacing = Spacing::Graded {
                ratio: ratio.powf(1.0 / f as f64),
            };
        }
        g
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if !(self.b >= 0.0 && self.b < self.x_max && self.x_max.is_finite()) {
            return bad(format!("need 0 <= b < x_max, got b={}, x_max={}", self.b, self.x_max));
        }
        if self.n_x < MIN_NODES || self.n_t < MIN_NODES {
            return bad(format!(
                "need at least {MIN_NODES} nodes in x and t, got n_x={}, n_t={}",
                self.n_x, self.n_t
            ));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0, 1], got {}", self.theta));
        }
        if self.substeps == 0 {
            return bad("substeps must be at least 1".into());
        }
        match self.spacing {
            Spacing::Graded { ratio } if !(ratio > 1.0) => {
                return bad(format!("graded spacing needs ratio > 1, got {ratio}"))
            }
            Spacing::Logarithmic if self.b <= 0.0 => {
                return bad("logarithmic spacing needs b > 0".into())
            }
            _ => {}
        }
        if let TimeSpacing::Geometric { t_min } = self.time_spacing {
            if !(t_min > 0.0 && t_min < self.t_max) {
                return bad(format!("geometric times need 0 < t_min < t_max, got {t_min}"));
            }
        }
        if let Some(a) = self.anchor {
            if !(a > self.b && a < self.x_max) {
                return bad(format!("anchor {a} must lie inside (b, x_max)"));
            }
        }
        Ok(())
    }

    /// Spatial nodes, starting at b and ending at or just past x_max. With an
    /// anchor the node count may differ slightly from `n_x`.
    pub fn nodes(&self) -> Vec<f64> {
        let (b, x_max) = (self.b, self.x_max);
        let intervals = (self.n_x - 1) as f64;
        match self.spacing {
            Spacing::Uniform => {
                let mut h = (x_max - b) / intervals;
                if let Some(a) = self.anchor {
                    let m = ((a - b) / h).round().max(1.0);
                    h = (a - b) / m;
                }
                let n = ((x_max - b) / h - 1e-9).ceil() as usize;
                (0..=n).map(|i| b + h * i as f64).collect()
            }
            Spacing::Logarithmic => {
                let mut step = (x_max / b).ln() / intervals;
                if let Some(a) = self.anchor {
                    let m = ((a / b).ln() / step).round().max(1.0);
                    step = (a / b).ln() / m;
                }
                let n = ((x_max / b).ln() / step - 1e-9).ceil() as usize;
                (0..=n).map(|i| b * (step * i as f64).exp()).collect()
            }
            Spacing::Graded { ratio } => {
                // x_i = b + h0 (r^i − 1)/(r − 1)
                let r = ratio;
                let span = |h0: f64, i: f64| h0 * (r.powf(i) - 1.0) / (r - 1.0);
                let mut h0 = (x_max - b) * (r - 1.0) / (r.powf(intervals) - 1.0);
                if let Some(a) = self.anchor {
                    let m = ((1.0 + (a - b) * (r - 1.0) / h0).ln() / r.ln()).round().max(1.0);
                    h0 = (a - b) * (r - 1.0) / (r.powf(m) - 1.0);
                }
                let mut out = vec![b];
                let mut i = 1.0;
                loop {
                    let x = b + span(h0, i);
                    out.push(x);
                    if x >= x_max * (1.0 - 1e-12) {
                        break;
                    }
                    i += 1.0;
                }
                out
            }
        }
    }

    /// Output times, t = 0 first.
    pub fn times(&self) -> Vec<f64> {
        let n = self.n_t;
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        match self.time_spacing {
            TimeSpacing::Uniform => {
                out.extend((1..=n).map(|k| self.t_max * k as f64 / n as f64));
            }
            TimeSpacing::Geometric { t_min } => {
                let span = (self.t_max / t_min).ln();
                out.extend((0..n).map(|k| {
                    if k + 1 == n {
                        self.t_max
                    } else {
                        t_min * (span * k as f64 / (n - 1) as f64).exp()
                    }
                }));
            }
        }
        out
    }
}
