//! `verify`: runs identity suites and reports one CSV row per check.

use clap::Args;
use invgamma::inv_gamma::{laplace_functional_u, moments_l, sonine_convolution, LaplaceFunctionalForm, MomentKind, MomentRepresentation};
use invgamma::laplace_check::{catalog, verify_all, CatalogConfig};
use invgamma::nonlocal_ops::{caputo_image, marchaud_apply, caputo_apply, marchaud_image, rl_apply, solve_relaxation, GridFn, NamedDatum};
use invgamma::GammaParams;

use crate::config::{require_positive, RunConfig};
use crate::error::CliError;
use crate::output::Cell;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// One of: laplace, sonine, moments, operators, relaxation, all.
    pub suite: String,
    /// Horizons (sonine), times (moments) or relaxation check times.
    #[arg(long)]
    pub t: Option<String>,
    /// Moment orders (moments).
    #[arg(long)]
    pub q: Option<String>,
    /// Relaxation rate (relaxation).
    #[arg(long)]
    pub c: Option<f64>,
    /// Relaxation horizon.
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    /// Relaxation time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Grid step of the operator checks.
    #[arg(long)]
    pub dx: Option<f64>,
}

pub const SUITES: [&str; 5] = ["laplace", "sonine", "moments", "operators", "relaxation"];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub id: String,
    pub input: String,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(suite: &'static str, id: impl Into<String>, input: impl Into<String>, value: f64, reference: f64, error: f64, tolerance: f64) -> Self {
        Check {
            suite,
            id: id.into(),
            input: input.into(),
            value,
            reference,
            error,
            tolerance,
            pass: error <= tolerance,
        }
    }

    fn failed(suite: &'static str, id: impl Into<String>, input: impl Into<String>, err: &invgamma::Error, tolerance: f64) -> Self {
        let c = Check {
            suite,
            id: id.into(),
            input: input.into(),
            value: f64::NAN,
            reference: f64::NAN,
            error: f64::NAN,
            tolerance,
            pass: false,
        };
        eprintln!("invgamma: {} ({}): {err}", c.id, c.input);
        c
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Settings of every suite, resolved before anything runs.
#[derive(Debug, Clone)]
struct Plan {
    suites: Vec<&'static str>,
    sonine_t: Vec<f64>,
    moment_t: Vec<f64>,
    moment_q: Vec<f64>,
    relax_c: f64,
    relax_horizon: f64,
    relax_dt: f64,
    relax_t: Vec<f64>,
    dx: f64,
}

fn plan(cfg: &RunConfig, args: &VerifyArgs) -> Result<Plan, CliError> {
    let suites: Vec<&'static str> = match args.suite.as_str() {
        "all" => SUITES.to_vec(),
        s => vec![*SUITES
            .iter()
            .find(|&&k| k == s)
            .ok_or_else(|| CliError::Usage(format!("unknown suite `{s}`; expected one of {}, all", SUITES.join(", "))))?],
    };
    let r = &cfg.resolver;
    let sonine_t = r.required_grid(&args.t, "t", Some("0.5,1,2"))?;
    let moment_t = sonine_t.clone();
    let moment_q = r.required_grid(&args.q, "q", Some("1,2,2.5"))?;
    for &t in &sonine_t {
        require_positive("t", t)?;
    }
    if let Some(q) = moment_q.iter().find(|&&q| !(q >= 1.0)) {
        return Err(CliError::Usage(format!("invalid value for `q`: moment orders must be >= 1, got {q}")));
    }
    let relax_c = r.value(args.c, "c", 1.0)?;
    if !(relax_c >= 0.0 && relax_c.is_finite()) {
        return Err(CliError::Usage(format!("invalid value for `c`: must be nonnegative, got {relax_c}")));
    }
    let relax_horizon = require_positive("T", r.value(args.horizon, "T", 3.0)?)?;
    let relax_dt = require_positive("dt", r.value(args.dt, "dt", 1e-3)?)?;
    if relax_dt > relax_horizon / 4.0 {
        return Err(CliError::Usage(format!("invalid value for `dt`: {relax_dt} is too coarse for T = {relax_horizon}")));
    }
    let relax_t: Vec<f64> = [0.5, 1.0, 2.0, 3.0]
        .iter()
        .map(|f| f / 3.0 * relax_horizon)
        .collect();
    let dx = require_positive("dx", r.value(args.dx, "dx", 1e-3)?)?;
    if dx > 0.1 {
        return Err(CliError::Usage(format!("invalid value for `dx`: {dx} exceeds 0.1")));
    }
    Ok(Plan {
        suites,
        sonine_t,
        moment_t,
        moment_q,
        relax_c,
        relax_horizon,
        relax_dt,
        relax_t,
        dx,
    })
}

fn laplace_suite(cfg: &RunConfig, tol: Option<f64>) -> Result<Vec<Check>, CliError> {
    let idents = catalog(&CatalogConfig {
        params: cfg.params,
        ..CatalogConfig::default()
    })?;
    let mut out = Vec::new();
    for (ident, report) in idents.iter().zip(verify_all(&idents)) {
        let tolerance = tol.unwrap_or(ident.tolerance);
        match report {
            Ok(rep) => out.extend(rep.rows.iter().map(|row| {
                Check::new("laplace", &rep.id, format!("lambda={}", row.lambda), row.lhs, row.rhs, row.rel_err, tolerance)
            })),
            Err(e) => out.push(Check::failed("laplace", &ident.id, "", &e, tolerance)),
        }
    }
    Ok(out)
}

fn sonine_suite(cfg: &RunConfig, plan: &Plan, tol: Option<f64>) -> Vec<Check> {
    let tolerance = tol.unwrap_or(1e-6);
    plan.sonine_t
        .iter()
        .map(|&t| {
            let input = format!("T={t}");
            match sonine_convolution(cfg.params, t, &cfg.quad) {
                Ok(v) => Check::new("sonine", "sonine-unity", input, v, 1.0, (v - 1.0).abs(), tolerance),
                Err(e) => Check::failed("sonine", "sonine-unity", input, &e, tolerance),
            }
        })
        .collect()
}

fn moments_suite(cfg: &RunConfig, plan: &Plan, tol: Option<f64>) -> Vec<Check> {
    let tolerance = tol.unwrap_or(1e-5);
    let reps: Vec<MomentRepresentation> = MomentKind::ALL
        .iter()
        .map(|&k| MomentRepresentation {
            quad: cfg.quad,
            ..MomentRepresentation::new(k)
        })
        .collect();
    let mut out = Vec::new();
    for &t in &plan.moment_t {
        for &q in &plan.moment_q {
            let input = format!("t={t};q={q}");
            let values: Vec<_> = reps.iter().map(|r| moments_l(cfg.params, t, q, r)).collect();
            for i in 0..reps.len() {
                for j in i + 1..reps.len() {
                    let id = format!("{}/{}", reps[j].kind.id(), reps[i].kind.id());
                    out.push(match (&values[j], &values[i]) {
                        (Ok(v), Ok(r)) => Check::new("moments", id, input.clone(), *v, *r, rel(*v, *r), tolerance),
                        (Err(e), _) | (_, Err(e)) => Check::failed("moments", id, input.clone(), e, tolerance),
                    });
                }
            }
        }
    }
    out
}

fn holder_datum(step: f64) -> invgamma::Result<GridFn> {
    GridFn::from_fn(step, 4.0, |x| x.min(1.0))
}

fn operators_suite(cfg: &RunConfig, plan: &Plan, tol: Option<f64>) -> Vec<Check> {
    let p = cfg.params;
    let tolerance = tol.unwrap_or(1e-4);
    let mut out = Vec::new();
    for d in [NamedDatum::XExp, NamedDatum::OneMinusExp, NamedDatum::ExpDiff] {
        let phi = match d.sample(plan.dx, 3.0) {
            Ok(phi) => phi,
            Err(e) => {
                out.push(Check::failed("operators", format!("forms-{}", d.name()), "", &e, tolerance));
                continue;
            }
        };
        for x in [0.5, 1.0, 2.0] {
            let input = format!("x={x}");
            let forms = (|| Ok::<_, invgamma::Error>((marchaud_apply(&phi, p, x)?, rl_apply(&phi, p, x)?, caputo_apply(&phi, p, x)?)))();
            match forms {
                Ok((m, r, c)) => {
                    out.push(Check::new("operators", format!("rl/marchaud-{}", d.name()), input.clone(), r, m, (r - m).abs(), tolerance));
                    out.push(Check::new("operators", format!("caputo/marchaud-{}", d.name()), input, c, m, (c - m).abs(), tolerance));
                }
                Err(e) => out.push(Check::failed("operators", format!("forms-{}", d.name()), input, &e, tolerance)),
            }
        }
    }

    // |𝒟φ| ≤ a M Γ(α)/b^α for φ Hölder of order α with constant M; here α = M = 1
    let slack = tol.unwrap_or(0.05);
    let bound = p.a / p.b;
    match holder_datum(plan.dx).and_then(|phi| marchaud_image(&phi, p)) {
        Ok(img) => {
            let peak = img.values[1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            out.push(Check::new("operators", "holder-bound", "phi=min(x,1)", peak, bound, peak / bound - 1.0, slack));
        }
        Err(e) => out.push(Check::failed("operators", "holder-bound", "phi=min(x,1)", &e, slack)),
    }

    // ‖𝔇φ‖₁ ≤ ‖φ′‖₁ a/b on a truncated domain
    let horizon = 30.0;
    let young = NamedDatum::ExpDiff.sample(plan.dx, horizon).and_then(|phi| {
        let img = caputo_image(&phi, p)?;
        let l1 = trapezoid(&img.values.iter().map(|v| v.abs()).collect::<Vec<_>>(), plan.dx);
        let slope_l1: f64 = phi.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        Ok((l1, slope_l1 * p.a / p.b))
    });
    let young_tol = tol.unwrap_or(0.0);
    match young {
        Ok((l1, reference)) => out.push(Check::new("operators", "young-bound", format!("phi=exp-diff;X={horizon}"), l1, reference, l1 / reference - 1.0, young_tol)),
        Err(e) => out.push(Check::failed("operators", "young-bound", "phi=exp-diff", &e, young_tol)),
    }
    out
}

fn trapezoid(v: &[f64], step: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    step * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
}

/// Largest |u_solver − u_series| over every `stride`-th node.
fn relaxation_gap(p: GammaParams, c: f64, u: &GridFn, stride: usize, form: LaplaceFunctionalForm, cfg: &RunConfig) -> invgamma::Result<f64> {
    let mut gap = 0.0f64;
    for (i, &v) in u.values.iter().enumerate().step_by(stride) {
        let exact = laplace_functional_u(p, i as f64 * u.step, c, form, &cfg.series, &cfg.quad)?;
        gap = gap.max((v - exact).abs());
    }
    Ok(gap)
}

fn relaxation_suite(cfg: &RunConfig, plan: &Plan, tol: Option<f64>) -> Vec<Check> {
    let p = cfg.params;
    let c = plan.relax_c;
    let mut out = Vec::new();
    let t_series = tol.unwrap_or(1e-6);
    for &t in &plan.relax_t {
        let input = format!("t={t};c={c}");
        let pair = laplace_functional_u(p, t, c, LaplaceFunctionalForm::NuSeries, &cfg.series, &cfg.quad)
            .and_then(|s| Ok((s, laplace_functional_u(p, t, c, LaplaceFunctionalForm::NuIntegral, &cfg.series, &cfg.quad)?)));
        out.push(match pair {
            Ok((s, i)) => Check::new("relaxation", "series/integral", input, s, i, (s - i).abs(), t_series),
            Err(e) => Check::failed("relaxation", "series/integral", input, &e, t_series),
        });
    }

    let t_solver = tol.unwrap_or(1e-3);
    let t_resid = tol.unwrap_or(5e-3);
    let input = format!("T={};dt={};c={c}", plan.relax_horizon, plan.relax_dt);
    let u = match solve_relaxation(p, c, plan.relax_dt, plan.relax_horizon) {
        Ok(u) => u,
        Err(e) => {
            out.push(Check::failed("relaxation", "solver", input, &e, t_solver));
            return out;
        }
    };
    let steps = u.len() - 1;
    for (id, form, stride) in [
        ("solver/series", LaplaceFunctionalForm::NuSeries, 1),
        ("solver/integral", LaplaceFunctionalForm::NuIntegral, (steps / 30).max(1)),
    ] {
        out.push(match relaxation_gap(p, c, &u, stride, form, cfg) {
            Ok(gap) => Check::new("relaxation", id, input.clone(), gap, 0.0, gap, t_solver),
            Err(e) => Check::failed("relaxation", id, input.clone(), &e, t_solver),
        });
    }
    // Caputo residual away from the first cells, where the solution has a log singularity in slope
    let from = ((0.1 / plan.relax_dt).ceil() as usize).min(steps);
    out.push(match caputo_image(&u, p) {
        Ok(img) => {
            let r = (from..=steps).fold(0.0f64, |m, i| m.max((img.values[i] + c * u.values[i]).abs()));
            Check::new("relaxation", "caputo-residual", input, r, 0.0, r, t_resid)
        }
        Err(e) => Check::failed("relaxation", "caputo-residual", input, &e, t_resid),
    });
    out
}

pub fn run(cfg: &RunConfig, args: &VerifyArgs) -> Result<(), CliError> {
    let plan = plan(cfg, args)?;
    let tol = cfg.tol;
    let mut checks = Vec::new();
    for suite in &plan.suites {
        checks.extend(match *suite {
            "laplace" => laplace_suite(cfg, tol)?,
            "sonine" => sonine_suite(cfg, &plan, tol),
            "moments" => moments_suite(cfg, &plan, tol),
            "operators" => operators_suite(cfg, &plan, tol),
            "relaxation" => relaxation_suite(cfg, &plan, tol),
            _ => unreachable!(),
        });
    }
    let mut table = cfg.table(&["suite", "id", "input", "value", "reference", "error", "tolerance", "pass"]);
    for c in &checks {
        table.push(vec![
            c.suite.into(),
            c.id.clone().into(),
            c.input.clone().into(),
            c.value.into(),
            c.reference.into(),
            c.error.into(),
            c.tolerance.into(),
            Cell::from(c.pass),
        ]);
    }
    cfg.emit(&table)?;
    let mut failing: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| format!("{}:{}", c.suite, c.id)).collect();
    failing.dedup();
    if failing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(format!("failing checks: {}", failing.join(", "))))
    }
}
