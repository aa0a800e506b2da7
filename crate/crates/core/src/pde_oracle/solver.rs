use serde::{Deserialize, Serialize};

use super::grid::{Spacing, SurvivalGrid};
use crate::error::{Error, Result};

/// Tolerance on u leaving [0, 1] before a solve is declared unstable.
pub const INSTABILITY_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Standard,
    /// Admits b = 0 so that the solver can be compared with the closed form.
    Validation,
}

/// u[k][i] ≈ P^{(−ν)}_{x_i}(τ_b > t_k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSolution {
    pub nu: f64,
    pub grid: SurvivalGrid,
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    pub u: Vec<Vec<f64>>,
}

/// ∫_lo^hi x^p dx.
fn power_integral(p: f64, lo: f64, hi: f64) -> f64 {
    if (p + 1.0).abs() < 1e-12 {
        (hi / lo).ln()
    } else {
        (hi.powf(p + 1.0) - lo.powf(p + 1.0)) / (p + 1.0)
    }
}

/// Finite-volume discretisation of L u = (w u')' / (2w), w = x^{1−2ν}.
/// Rows are nodes 1..n; node 0 is the absorbing boundary.
struct Operator {
    /// weighted dual-cell volumes ∫ w dx
    mass: Vec<f64>,
    /// half the face conductances, 2ν/(x_{i+1}^{2ν} − x_i^{2ν}) / 2, face i between nodes i and i+1
    cond: Vec<f64>,
}

impl Operator {
    fn new(nu: f64, xs: &[f64]) -> Self {
        let n = xs.len();
        let p = 1.0 - 2.0 * nu;
        let cond = xs
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                // x^{2ν} differences; written via expm1 to keep precision for close nodes
                let diff = if lo > 0.0 {
                    lo.powf(2.0 * nu) * (2.0 * nu * (hi / lo).ln()).exp_m1()
                } else {
                    hi.powf(2.0 * nu)
                };
                nu / diff
            })
            .collect();
        let mut mass = vec![0.0; n];
        for i in 1..n {
            let left = 0.5 * (xs[i - 1] + xs[i]);
            let right = if i + 1 < n { 0.5 * (xs[i] + xs[i + 1]) } else { xs[i] };
            mass[i] = power_integral(p, left, right);
        }
        Self { mass, cond }
    }

    /// (L u)_i·mass_i for i ≥ 1, with u_0 = 0 and zero flux past the last node.
    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        for i in 1..n {
            let left = self.cond[i - 1] * (u[i] - u[i - 1]);
            let right = if i + 1 < n { self.cond[i] * (u[i + 1] - u[i]) } else { 0.0 };
            out[i] = right - left;
        }
    }
}

/// LU factors of (mass − s·A) for the Thomas algorithm.
struct Factored {
    diag: Vec<f64>,
    upper: Vec<f64>,
    lower: Vec<f64>,
}

impl Factored {
    fn new(op: &Operator, s: f64) -> Self {
        let n = op.mass.len();
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut lower = vec![0.0; n];
        for i in 1..n {
            let cl = op.cond[i - 1];
            let cr = if i + 1 < n { op.cond[i] } else { 0.0 };
            lower[i] = if i > 1 { -s * cl } else { 0.0 };
            upper[i] = -s * cr;
            diag[i] = op.mass[i] + s * (cl + cr);
        }
        // forward elimination stores the modified diagonal and multipliers
        for i in 2..n {
            let m = lower[i] / diag[i - 1];
            lower[i] = m;
            diag[i] -= m * upper[i - 1];
        }
        Self { diag, upper, lower }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        for i in 2..n {
            rhs[i] -= self.lower[i] * rhs[i - 1];
        }
        rhs[n - 1] /= self.diag[n - 1];
        for i in (1..n - 1).rev() {
            rhs[i] = (rhs[i] - self.upper[i] * rhs[i + 1]) / self.diag[i];
        }
    }
}

/// Factors for (M − s·A), rebuilt only when s changes.
fn factored<'a>(cache: &'a mut Option<(f64, Factored)>, op: &Operator, s: f64) -> &'a Factored {
    if !matches!(cache, Some((c, _)) if *c == s) {
        *cache = Some((s, Factored::new(op, s)));
    }
    &cache.as_ref().expect("factored above").1
}

pub fn solve_survival(nu: f64, b: f64, grid: &SurvivalGrid) -> Result<SurvivalSolution> {
    solve_survival_with(nu, b, grid, Mode::Standard)
}

pub fn solve_survival_with(
    nu: f64,
    b: f64,
    grid: &SurvivalGrid,
    mode: Mode,
) -> Result<SurvivalSolution> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Domain(format!("nu must be positive, got {nu}")));
    }
    grid.validate()?;
    if b != grid.b {
        return Err(Error::Invalid(format!("b = {b} differs from the grid level {}", grid.b)));
    }
    if b == 0.0 && mode == Mode::Standard {
        return Err(Error::Domain(
            "b = 0 has a closed form (tau0_tail); the oracle only admits it in validation mode"
                .into(),
        ));
    }
    let xs = grid.nodes();
    let ts = grid.times();
    let coarse = march(nu, &xs, &ts, grid)?;
    let u = if grid.richardson {
        // nodal errors are O(h²) with a smooth expansion on a smoothly mapped
        // mesh, so one halving removes the leading term. The extrapolation
        // can leave [0, 1] in the early boundary layer; projecting back only
        // moves values toward the true one.
        let fine_xs = bisect(&xs, grid.spacing);
        let fine = march(nu, &fine_xs, &ts, grid)?;
        coarse
            .iter()
            .zip(&fine)
            .map(|(c, f)| {
                c.iter()
                    .enumerate()
                    .map(|(i, &ci)| ((4.0 * f[2 * i] - ci) / 3.0).clamp(0.0, 1.0))
                    .collect()
            })
            .collect()
    } else {
        coarse
    };

    Ok(SurvivalSolution {
        nu,
        grid: *grid,
        xs,
        ts,
        u,
    })
}

/// The mesh with a node inserted at the middle of every cell, in the
/// coordinate the mesh is uniform in.
fn bisect(xs: &[f64], spacing: Spacing) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * xs.len() - 1);
    for w in xs.windows(2) {
        out.push(w[0]);
        out.push(match spacing {
            Spacing::Logarithmic => (w[0] * w[1]).sqrt(),
            Spacing::Graded { .. } | Spacing::Uniform => 0.5 * (w[0] + w[1]),
        });
    }
    out.push(*xs.last().expect("non-empty mesh"));
    out
}

/// u at every output time on the nodes `xs`.
fn march(nu: f64, xs: &[f64], ts: &[f64], grid: &SurvivalGrid) -> Result<Vec<Vec<f64>>> {
    let n = xs.len();
    let op = Operator::new(nu, xs);

    let mut u = vec![1.0; n];
    u[0] = 0.0;
    let mut out = Vec::with_capacity(ts.len());
    out.push(u.clone());

    let mut lu = vec![0.0; n];
    let mut prev = u.clone();
    let mut cache: Option<(f64, Factored)> = None;

    for k in 1..ts.len() {
        let (t0, t1) = (ts[k - 1], ts[k]);
        let steps = substeps(grid, k, t0, t1);
        if k == 1 {
            // variable-step BDF2 from t = 0: L-stable like implicit Euler, so the
            // boundary layer does not ring, but second order
            let mut dt_prev = 0.0;
            for (lo, hi) in steps {
                let dt = hi - lo;
                let (s, scale, w2) = if dt_prev == 0.0 {
                    (dt, 1.0, 0.0)
                } else {
                    let w = dt / dt_prev;
                    let c = (1.0 + 2.0 * w) / (1.0 + w);
                    (dt / c, (1.0 + w) / c, w * w / ((1.0 + w) * c))
                };
                let mut rhs = vec![0.0; n];
                for i in 1..n {
                    rhs[i] = op.mass[i] * (scale * u[i] - w2 * prev[i]);
                }
                factored(&mut cache, &op, s).solve(&mut rhs);
                prev = std::mem::replace(&mut u, rhs);
                dt_prev = dt;
            }
        } else {
            for (lo, hi) in steps {
                let dt = hi - lo;
                let theta = grid.theta;
                // M u' = A u (A already carries the ½)  →  (M − θ dt A) u⁺ = (M + (1−θ) dt A) u
                let s_expl = (1.0 - theta) * dt;
                if s_expl != 0.0 {
                    op.apply(&u, &mut lu);
                    for i in 1..n {
                        u[i] = op.mass[i] * u[i] + s_expl * lu[i];
                    }
                } else {
                    for i in 1..n {
                        u[i] *= op.mass[i];
                    }
                }
                factored(&mut cache, &op, theta * dt).solve(&mut u);
            }
        }
        if let Some((i, &v)) = u
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= -INSTABILITY_SLACK && **v <= 1.0 + INSTABILITY_SLACK))
        {
            return Err(Error::Unstable {
                value: v,
                t: t1,
                x: xs[i],
            });
        }
        out.push(u.clone());
    }

    Ok(out)
}

/// Internal steps for output interval k. The first interval starts at t = 0,
/// where the solution is discontinuous at b, so its steps grow geometrically
/// from a tiny first step.
fn substeps(grid: &SurvivalGrid, k: usize, t0: f64, t1: f64) -> Vec<(f64, f64)> {
    let m = grid.substeps;
    if k == 1 {
        let m = m.max(8) * 16;
        let first = t1 * 1e-8;
        let r = (t1 / first).powf(1.0 / (m - 1) as f64);
        let mut pts = vec![0.0];
        pts.extend((0..m).map(|j| if j + 1 == m { t1 } else { first * r.powi(j as i32) }));
        return pts.windows(2).map(|w| (w[0], w[1])).collect();
    }
    (0..m)
        .map(|j| {
            let lo = t0 + (t1 - t0) * j as f64 / m as f64;
            let hi = if j + 1 == m { t1 } else { t0 + (t1 - t0) * (j + 1) as f64 / m as f64 };
            (lo, hi)
        })
        .collect()
}

impl SurvivalSolution {
    /// Bilinear interpolation of u at (x, t), clamped to [0, 1].
    pub fn tail_at(&self, x: f64, t: f64) -> Result<f64> {
        let (xs, ts) = (&self.xs, &self.ts);
        let x_hi = *xs.last().expect("non-empty grid");
        let t_hi = *ts.last().expect("non-empty grid");
        if !(x >= xs[0] && x <= x_hi && t >= 0.0 && t <= t_hi) {
            return Err(Error::OutOfGrid { x, t });
        }
        let (i, wx) = bracket(xs, x);
        let (k, wt) = bracket(ts, t);
        let at = |k: usize| self.u[k][i] * (1.0 - wx) + self.u[k][i + 1] * wx;
        let v = at(k) * (1.0 - wt) + at(k + 1) * wt;
        Ok(v.clamp(0.0, 1.0))
    }

    /// u at the node nearest to x for every output time, with the times.
    pub fn series_at(&self, x: f64) -> Result<Vec<(f64, f64)>> {
        let t_hi = *self.ts.last().expect("non-empty grid");
        let mut out = Vec::with_capacity(self.ts.len());
        for &t in &self.ts {
            out.push((t, self.tail_at(x, t.min(t_hi))?));
        }
        Ok(out)
    }
}

/// Index i and weight w with v = (1−w)·p[i] + w·p[i+1].
fn bracket(p: &[f64], v: f64) -> (usize, f64) {
    let n = p.len();
    let i = p.partition_point(|&q| q <= v).clamp(1, n - 1) - 1;
    let w = ((v - p[i]) / (p[i + 1] - p[i])).clamp(0.0, 1.0);
    (i, w)
}
