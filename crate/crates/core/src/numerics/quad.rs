//! Globally adaptive Gauss–Kronrod quadrature and semi-infinite mappings.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    /// Absolute error estimate, always ≥ 0.
    pub error_estimate: f64,
    pub evaluations: usize,
}

// 21-point Kronrod extension of the 10-point Gauss rule on [-1, 1].
// Odd-indexed abscissae are the Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_957_063,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const PANEL_EVALS: usize = 21;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_EVALUATIONS: usize = 1_000_000;

/// Adaptive integrator settings. Convergence is declared when the summed
/// panel error is below `max(abs_tol, rel_tol·|value|)`.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: DEFAULT_TOL,
            rel_tol: 0.0,
            max_evals: MAX_EVALUATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = kronrod.abs();
    let mut f1 = [0.0; 10];
    let mut f2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let a = f(center - dx);
        let b = f(center + dx);
        f1[j] = a;
        f2[j] = b;
        kronrod += WGK[j] * (a + b);
        abs_sum += WGK[j] * (a.abs() + b.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (a + b);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Panel {
        lo,
        hi,
        value,
        error,
    }
}

impl Quadrature {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    pub fn relative(rel_tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64) -> Result<QuadResult> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!(
                "integrate requires finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        let first = gauss_kronrod(&f, lo, hi);
        let mut evaluations = PANEL_EVALS;
        let mut value = first.value;
        let mut error = first.error;
        let mut heap = BinaryHeap::new();
        // panels too narrow to split further; their error stays in the total
        let mut frozen_error = 0.0;
        heap.push(first);

        loop {
            let target = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= target || error <= 100.0 * f64::EPSILON * value.abs() {
                break;
            }
            let Some(worst) = heap.pop() else {
                return Err(Error::NoConvergence {
                    best: QuadResult {
                        value,
                        error_estimate: error,
                        evaluations,
                    },
                });
            };
            if evaluations + 2 * PANEL_EVALS > self.max_evals {
                heap.push(worst);
                return Err(Error::NoConvergence {
                    best: QuadResult {
                        value,
                        error_estimate: error,
                        evaluations,
                    },
                });
            }
            let mid = 0.5 * (worst.lo + worst.hi);
            if mid <= worst.lo || mid >= worst.hi {
                frozen_error += worst.error;
                continue;
            }
            let left = gauss_kronrod(&f, worst.lo, mid);
            let right = gauss_kronrod(&f, mid, worst.hi);
            evaluations += 2 * PANEL_EVALS;
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
            // resum periodically to shed accumulated rounding in the running totals
            if evaluations % (PANEL_EVALS * 512) < 2 * PANEL_EVALS {
                value = heap.iter().map(|p| p.value).sum::<f64>();
                error = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
            }
        }
        Ok(QuadResult {
            value,
            error_estimate: error.max(0.0),
            evaluations,
        })
    }

    pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
        &self,
        f: F,
        lo: f64,
        tail: Tail,
    ) -> Result<QuadResult> {
        if !lo.is_finite() {
            return Err(Error::Domain(format!("lower limit must be finite, got {lo}")));
        }
        check_decay(&f, lo, tail)?;
        let guarded = |fv: f64, jac: f64| if fv == 0.0 { 0.0 } else { fv * jac };
        match tail {
            Tail::Algebraic if lo > 0.0 => self.integrate(
                |u: f64| {
                    let v = lo / u;
                    guarded(f(v), lo / (u * u))
                },
                0.0,
                1.0,
            ),
            Tail::Algebraic => self.integrate(
                |u: f64| {
                    let v = lo + (1.0 - u) / u;
                    guarded(f(v), 1.0 / (u * u))
                },
                0.0,
                1.0,
            ),
            Tail::AlgebraicDecay(q) => {
                if !(q > 1.0) {
                    return Err(Error::Domain(format!(
                        "algebraic decay exponent must exceed 1, got {q}"
                    )));
                }
                let p = 1.0 / (q - 1.0);
                if lo > 0.0 {
                    self.integrate(
                        |u: f64| {
                            let v = lo * u.powf(-p);
                            guarded(f(v), p * v / u)
                        },
                        0.0,
                        1.0,
                    )
                } else {
                    self.integrate(
                        |u: f64| {
                            let w = u.powf(-p);
                            guarded(f(lo + w - 1.0), p * w / u)
                        },
                        0.0,
                        1.0,
                    )
                }
            }
            Tail::Exponential => self.integrate(
                |u: f64| {
                    let v = lo - u.ln();
                    guarded(f(v), 1.0 / u)
                },
                0.0,
                1.0,
            ),
        }
    }
}

/// How the integrand decays at +∞; selects the substitution onto (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Tail {
    /// v = lo/u (or v = lo + (1−u)/u when lo ≤ 0).
    #[default]
    Algebraic,
    /// |f(v)| ~ v^{−q} with known q > 1; v = lo·u^{−1/(q−1)} makes the mapped
    /// integrand bounded at u = 0.
    AlgebraicDecay(f64),
    /// v = lo − ln u.
    Exponential,
}

fn check_decay<F: Fn(f64) -> f64>(f: &F, lo: f64, tail: Tail) -> Result<()> {
    let scale = lo.abs().max(1.0);
    let probe = |v: f64| match tail {
        Tail::Exponential => f(v).abs() * (v - lo).max(1.0),
        _ => f(v).abs() * v,
    };
    let (v1, v2) = match tail {
        Tail::Exponential => (lo + 40.0 * scale, lo + 80.0 * scale),
        _ => (scale * 1e6, scale * 1e12),
    };
    let (m1, m2) = (probe(v1), probe(v2));
    if !m2.is_finite() || (m2 > 1e-300 && m2 >= m1) {
        return Err(Error::Divergent { at: v2 });
    }
    Ok(())
}

/// ∫_lo^hi f with absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<QuadResult> {
    Quadrature::with_tol(tol).integrate(f, lo, hi)
}

/// ∫_lo^∞ f with the algebraic substitution.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, lo: f64, tol: f64) -> Result<QuadResult> {
    Quadrature::with_tol(tol).integrate_semi_infinite(f, lo, Tail::Algebraic)
}
