use std::path::Path;

use anyhow::{bail, Context, Result};
use besselhit::analysis::{
    closed_form_curve, convolution_tail, default_window, fit_rate_in, oracle_tail, remainder, rho_tail_scaled,
    Budget, OracleSettings, Suite, Verifier, CANCELLATION_ZERO,
};
use besselhit::closed_form::{
    c_const, expansion, halfindex_exact, kappa, leading_tail, rho_limits, tau0_tail, SecondScale,
};
use besselhit::simulate::{bessel_marginal_sample, conditioned_expectation, estimate_mean, estimate_tail};
use besselhit::{EulerConfig, LawQuery, McEstimate, Regime, Report, Sample, Sign, SignedIndex, TailCurve};
use serde_json::{json, Value};

use crate::args::{CurveArgs, Functional, OracleArgs, Params, RatesArgs, SimulateArgs, SuiteArg, VerifyArgs};
use crate::output::{json_num, pretty, Cell, Format, Table};

/// Rendered output and whether every check in it passed.
pub struct Outcome {
    pub text: String,
    pub pass: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, pass: true }
    }
}

fn index(p: &Params) -> Result<SignedIndex> {
    Ok(SignedIndex::new(p.nu, p.sign.into())?)
}

/// Validates (ν, a, b) through the library's own preconditions.
fn query(p: &Params, t: f64) -> Result<LawQuery> {
    Ok(LawQuery::new(index(p)?, p.a, p.b, t)?)
}

fn settings(o: &OracleArgs) -> OracleSettings {
    OracleSettings {
        per_decade_x: o.per_decade_x,
        per_decade_t: o.per_decade_t,
        substeps: o.substeps,
        ..OracleSettings::default()
    }
}

fn only(format: Format, allowed: &[Format], cmd: &str) -> Result<()> {
    if !allowed.contains(&format) {
        bail!("{cmd} does not support --format {format:?}");
    }
    Ok(())
}

/// Cancellations below the κ quadrature's accuracy are reported as exact zeros.
fn snap(c: f64) -> f64 {
    if c.abs() <= CANCELLATION_ZERO {
        0.0
    } else {
        c
    }
}

pub fn constants(p: &Params, format: Option<Format>) -> Result<Outcome> {
    let format = format.unwrap_or(Format::Json);
    only(format, &[Format::Json, Format::Csv], "constants")?;
    let q = query(p, 1.0)?;
    let idx = q.index;
    let nu = idx.nu();
    let e = expansion(&q)?;
    let k = match idx.regime() {
        Regime::NuLt1 => Some(kappa(nu)?),
        _ => None,
    };
    let fields: Vec<(&str, Value)> = vec![
        ("nu", json_num(nu)),
        ("sign", json!(idx.sign().to_string())),
        ("a", json_num(p.a)),
        ("b", json_num(p.b)),
        ("index", json_num(idx.value())),
        ("dimension", json_num(idx.dimension())),
        ("regime", json!(e.regime.tag())),
        ("c_nu", json_num(c_const(nu, p.a, p.b)?)),
        ("kappa", k.map_or(Value::Null, json_num)),
        ("cancellation", k.map_or(Value::Null, |k| json_num(snap(1.0 - nu * k)))),
        ("sign_flip_factor", json_num(q.sign_flip_factor())),
        ("leading_coeff", json_num(e.leading)),
        ("second_coeff", json_num(e.second_coeff.value())),
        (
            "second_coeff_kind",
            json!(match e.second_coeff {
                besselhit::closed_form::SecondCoeff::Point(_) => "point",
                besselhit::closed_form::SecondCoeff::UpperBound(_) => "upper_bound",
            }),
        ),
        (
            "second_scale",
            json!(match e.second_scale {
                SecondScale::TPow2Nu => "t^-2nu",
                SecondScale::LogTOverT2 => "log(t)/t^2",
                SecondScale::TPowNuPlus1Bounded => "t^-(nu+1)",
            }),
        ),
        ("snapped_to_one", json!(e.snapped_to_one)),
    ];
    let text = match format {
        Format::Csv => {
            let mut t = Table::new(&["name", "value"]);
            for (k, v) in &fields {
                let cell = match v {
                    Value::Number(n) => Cell::Num(n.as_f64().unwrap_or(f64::NAN)),
                    Value::String(s) => Cell::Text(s.clone()),
                    Value::Bool(b) => Cell::Bool(*b),
                    _ => Cell::Empty,
                };
                t.push(vec![(*k).into(), cell]);
            }
            t.to_csv()?
        }
        _ => pretty(&Value::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect()))?,
    };
    Ok(Outcome::ok(text))
}

/// Tail curve and per-point error: a closed form when one exists (b = 0 or
/// ν = 1/2), otherwise the oracle for index −ν, mapped to +ν by the sign flip.
fn tail_curve(c: &CurveArgs, cache: Option<&Path>) -> Result<(TailCurve, Vec<f64>)> {
    let p = &c.params;
    let q = query(p, 1.0)?;
    let ts = c.t_grid.times()?;
    if p.b == 0.0 || p.nu == 0.5 {
        let curve = closed_form_curve(q.index, p.a, p.b, &ts)?;
        let n = curve.len();
        return Ok((curve, vec![0.0; n]));
    }
    let s = settings(&c.oracle);
    if c.t_grid.lo < s.t_min {
        bail!("oracle tails start at t = {}, got t-grid from {}", s.t_min, c.t_grid.lo);
    }
    let o = oracle_tail(p.nu, p.a, p.b, &ts, &s, cache).context("oracle solve")?;
    Ok(match q.sign() {
        Sign::Minus => (o.curve, o.errors),
        Sign::Plus => {
            let f = q.sign_flip_factor();
            (o.curve.scaled(|_| f), o.errors.iter().map(|e| e * f).collect())
        }
    })
}

pub fn tail(c: &CurveArgs, format: Option<Format>, cache: Option<&Path>) -> Result<Outcome> {
    let format = format.unwrap_or(Format::Csv);
    only(format, &[Format::Json, Format::Csv], "tail")?;
    let p = &c.params;
    let (curve, errors) = tail_curve(c, cache)?;
    let rem = remainder(&curve, p.nu, p.a, p.b, p.sign.into())?;
    let mut t = Table::new(&["t", "tail", "error", "source", "leading", "remainder", "t_nu_tail"]);
    for ((pt, r), e) in curve.points().iter().zip(rem.points()).zip(&errors) {
        t.push(vec![
            pt.t.into(),
            pt.value.into(),
            (*e).into(),
            pt.source.tag().into(),
            (pt.value - r.value).into(),
            r.value.into(),
            (pt.t.powf(p.nu) * pt.value).into(),
        ]);
    }
    Ok(Outcome::ok(render(&t, format)?))
}

fn render(t: &Table, format: Format) -> Result<String> {
    match format {
        Format::Csv => t.to_csv(),
        _ => pretty(&t.to_json_rows()),
    }
}

/// Exponent of the second-order scale and the predicted coefficient.
fn predicted_rate(q: &LawQuery) -> Result<(f64, f64, &'static str)> {
    let e = expansion(q)?;
    let nu = q.nu();
    let (slope, label) = match e.second_scale {
        SecondScale::TPow2Nu => (-2.0 * nu, "t^-2nu"),
        SecondScale::LogTOverT2 => (-2.0, "log(t)/t^2"),
        SecondScale::TPowNuPlus1Bounded => (-(nu + 1.0), "t^-(nu+1)"),
    };
    Ok((slope, e.second_coeff.value(), label))
}

fn parse_window(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s.split_once(':').context("window must be lo:hi")?;
    let lo: f64 = lo.parse().context("window lo")?;
    let hi: f64 = hi.parse().context("window hi")?;
    if !(lo > 0.0 && hi > lo) {
        bail!("need 0 < lo < hi in window, got {lo}:{hi}");
    }
    Ok((lo, hi))
}

pub fn rates(r: &RatesArgs, format: Option<Format>, cache: Option<&Path>) -> Result<Outcome> {
    let format = format.unwrap_or(Format::Json);
    only(format, &[Format::Json, Format::Csv], "rates")?;
    let p = &r.curve.params;
    let q = query(p, 1.0)?;
    let (curve, errors) = tail_curve(&r.curve, cache)?;
    let rem = remainder(&curve, p.nu, p.a, p.b, p.sign.into())?;
    let (lo, hi) = match &r.window {
        Some(w) => parse_window(w)?,
        None => default_window(&rem, &errors)?,
    };
    let fit = fit_rate_in(&rem, lo, hi)?;
    let (slope, coeff, scale) = predicted_rate(&q)?;
    let e = expansion(&q)?;
    let last = rem.window(lo, hi).points().last().copied().context("empty window")?;
    let measured_coeff = last.value / e.second_scale.eval(p.nu, last.t);

    let mut t = Table::new(&["t", "remainder", "error", "scaled_remainder"]);
    for (pt, err) in rem.points().iter().zip(&errors) {
        t.push(vec![
            pt.t.into(),
            pt.value.into(),
            (*err).into(),
            (pt.value / e.second_scale.eval(p.nu, pt.t)).into(),
        ]);
    }
    let summary: Vec<(&str, Cell)> = vec![
        ("nu", p.nu.into()),
        ("sign", q.sign().to_string().into()),
        ("a", p.a.into()),
        ("b", p.b.into()),
        ("window_lo", lo.into()),
        ("window_hi", hi.into()),
        ("points", (rem.window(lo, hi).len() as u64).into()),
        ("slope", fit.slope.into()),
        ("intercept", fit.intercept.into()),
        ("residual_rms", fit.residual_rms.into()),
        ("predicted_slope", slope.into()),
        ("second_scale", scale.into()),
        ("predicted_coeff", coeff.into()),
        ("coeff_at_window_end", measured_coeff.into()),
    ];
    let text = match format {
        Format::Csv => {
            let mut s = Table::new(&summary.iter().map(|(k, _)| *k).collect::<Vec<_>>());
            s.push(summary.into_iter().map(|(_, v)| v).collect());
            s.to_csv()?
        }
        _ => {
            let mut cols: Vec<&'static str> = summary.iter().map(|(k, _)| *k).collect();
            cols.push("curve");
            let mut obj = Table::new(&cols[..cols.len() - 1]);
            obj.push(summary.into_iter().map(|(_, v)| v).collect());
            let mut v = obj.to_json_rows()[0].clone();
            v["curve"] = t.to_json_rows();
            pretty(&v)?
        }
    };
    Ok(Outcome::ok(text))
}

const SIM_COLUMNS: &[&str] = &[
    "functional", "nu", "sign", "a", "b", "t", "n", "estimate", "std_error", "ci95", "censored", "seeds",
    "expected", "expected_kind", "z", "tolerance", "pass",
];

fn sim_row(
    name: &str,
    p: &Params,
    sign: Sign,
    t: f64,
    e: &McEstimate,
    expected: Option<(f64, &str)>,
    tolerance: Option<f64>,
) -> Vec<Cell> {
    let (exp, kind) = expected.map_or((None, ""), |(v, k)| (Some(v), k));
    let pass = match (exp, tolerance) {
        (Some(v), Some(tol)) => Cell::Bool((e.mean - v).abs() <= tol),
        _ => Cell::Empty,
    };
    vec![
        name.into(),
        p.nu.into(),
        sign.to_string().into(),
        p.a.into(),
        p.b.into(),
        t.into(),
        e.n.into(),
        e.mean.into(),
        e.std_error().into(),
        e.ci95.into(),
        e.censored.into(),
        e.seeds.clone().into(),
        exp.into(),
        kind.into(),
        exp.map(|v| e.z_score(v)).into(),
        tolerance.into(),
        pass,
    ]
}

/// `scale`·X estimates turned back into X estimates.
fn unscale(e: McEstimate, scale: f64) -> McEstimate {
    McEstimate::new(e.n, e.mean / scale, e.variance / (scale * scale), e.censored, e.seeds)
}

pub fn simulate(s: &SimulateArgs, format: Option<Format>) -> Result<Outcome> {
    let format = format.unwrap_or(Format::Csv);
    only(format, &[Format::Json, Format::Csv], "simulate")?;
    let p = &s.params;
    let cfg = EulerConfig {
        dt: s.dt,
        bridge_correction: !s.no_bridge,
        max_steps: s.max_steps,
        ..EulerConfig::default()
    };
    cfg.validate()?;
    let plan = Sample {
        seed: s.seed,
        streams: s.streams,
        censor_limit: s.censor_limit,
    };
    let q = query(p, s.t)?;
    let mut t = Table::new(SIM_COLUMNS);
    match s.functional {
        Functional::Tail => {
            let e = estimate_tail(&q, s.n, &cfg, &plan)?;
            let exact = match (q.sign(), p.b == 0.0, p.nu == 0.5) {
                (Sign::Minus, true, _) => Some(tau0_tail(p.nu, p.a, s.t)?),
                (Sign::Plus, true, _) => Some(0.0),
                (Sign::Plus, false, true) => Some(halfindex_exact(p.a, p.b, s.t)?),
                (Sign::Minus, false, true) => Some(halfindex_exact(p.a, p.b, s.t)? * p.a / p.b),
                _ => None,
            };
            let (expected, tol) = match exact {
                Some(v) => (Some((v, "closed_form")), Some(4.0 * e.std_error() + s.dt)),
                None => (Some((leading_tail(&q)?, "leading_order")), None),
            };
            t.push(sim_row("tail", p, q.sign(), s.t, &e, expected, tol));
        }
        Functional::RhoInf => {
            if q.sign() != Sign::Plus {
                bail!("rho-inf is defined for index +nu; pass --sign plus");
            }
            let scale = s.t.powf(p.nu);
            let e = unscale(rho_tail_scaled(p.nu, p.a, s.t, s.n, &cfg, &plan)?, scale);
            let lim = rho_limits(p.nu, p.a, 0.0)?.tcor2_limit / scale;
            t.push(sim_row("rho_inf", p, Sign::Plus, s.t, &e, Some((lim, "leading_order")), None));
        }
        Functional::Conditioned => {
            if q.sign() != Sign::Minus {
                bail!("conditioned uses index -nu paths; pass --sign minus");
            }
            let cap = s.cap;
            let f = move |r: f64| r.min(cap);
            let e = conditioned_expectation(p.nu, p.a, s.t, s.s, f, s.n, &cfg, &plan)?;
            let reference_plan = Sample {
                seed: s.seed.wrapping_add(1),
                ..plan
            };
            let r = estimate_mean(s.n, &reference_plan, |rng| Ok(f(bessel_marginal_sample(p.nu, p.a, s.t, rng)?)))?;
            t.push(sim_row("conditioned", p, Sign::Minus, s.t, &e, Some((r.mean, "index_plus_limit")), None));
            t.push(sim_row("index_plus_marginal", p, Sign::Plus, s.t, &r, None, None));
        }
        Functional::Convolution => {
            if !(p.b > 0.0) || q.sign() != Sign::Minus {
                bail!("convolution needs b > 0 and --sign minus");
            }
            let e = convolution_tail(p.nu, p.a, p.b, s.t, s.n, &cfg, &plan)?;
            let exact = tau0_tail(p.nu, p.a, s.t)?;
            let tol = 4.0 * e.std_error() + s.dt;
            t.push(sim_row("convolution", p, Sign::Minus, s.t, &e, Some((exact, "closed_form")), Some(tol)));
        }
    }
    let pass = t.rows.iter().all(|r| r.last() != Some(&Cell::Bool(false)));
    Ok(Outcome {
        text: render(&t, format)?,
        pass,
    })
}

pub fn verify(v: &VerifyArgs, format: Option<Format>, cache: Option<&Path>) -> Result<Outcome> {
    let format = format.unwrap_or(Format::Json);
    if !(v.mc_scale > 0.0 && v.mc_scale.is_finite()) {
        bail!("--mc-scale must be positive, got {}", v.mc_scale);
    }
    let budget = Budget {
        seed: v.seed,
        mc_scale: v.mc_scale,
        oracle: settings(&v.oracle),
        cache: cache.map(Path::to_path_buf),
    };
    let verifier = Verifier::new(budget);
    let report = match (v.suite, v.nu) {
        (SuiteArg::Asymptotics, Some(nu)) => verifier.asymptotics_for(nu, v.a, v.b)?,
        (_, Some(_)) => bail!("--nu only applies to the asymptotics suite"),
        (SuiteArg::All, None) => {
            let mut all = Report::new("all");
            for s in [Suite::Identities, Suite::Asymptotics, Suite::Simulation, Suite::Oracle] {
                all.extend(verifier.suite(s)?.checks);
            }
            all
        }
        (s, None) => verifier.suite(match s {
            SuiteArg::Identities => Suite::Identities,
            SuiteArg::Asymptotics => Suite::Asymptotics,
            SuiteArg::Simulation => Suite::Simulation,
            _ => Suite::Oracle,
        })?,
    };
    let text = match format {
        Format::Json => report.to_json()?,
        Format::Text => report.to_text(),
        Format::Csv => {
            let mut t = Table::new(&["claim", "paper_location", "measured", "expected", "tolerance", "pass"]);
            for c in &report.checks {
                t.push(vec![
                    c.claim.clone().into(),
                    c.paper_location.clone().into(),
                    c.measured.into(),
                    c.expected.into(),
                    c.tolerance.into(),
                    c.pass.into(),
                ]);
            }
            t.to_csv()?
        }
    };
    Ok(Outcome {
        text,
        pass: report.pass(),
    })
}
