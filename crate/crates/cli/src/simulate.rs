//! `simulate`: Monte Carlo samples and summaries with recorded seeds.

use clap::Args;
use invgamma::gamma_sub::levy_tail;
use invgamma::inv_gamma::{density_l, moments_l, survival_l, MomentKind, MomentRepresentation};
use invgamma::montecarlo::{
    brownian_timechange_moments, empirical_stats, ks_allowance, ks_distance, sample_gamma_path,
    sample_time_change, simulate_brownian_timechange, FirstPassageSampler, PassageSamples, Which,
};
use invgamma::GammaParams;

use crate::config::{require_positive, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, Table};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// One of: gamma-path, inverse-cdf, inverse-moments, brownian-timechange.
    pub target: String,
    /// Level(s) for the inverse subordinator, or time(s) of the time change.
    #[arg(long)]
    pub t: Option<String>,
    /// Number of paths.
    #[arg(long)]
    pub n: Option<usize>,
    /// Time step of the simulated paths.
    #[arg(long)]
    pub step: Option<f64>,
    /// Path horizon of gamma-path.
    #[arg(long = "T")]
    pub horizon_path: Option<f64>,
    /// Passage horizon; by default chosen from the mean and spread of the passage time.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Fine steps per coarse step of the passage sampler.
    #[arg(long)]
    pub bridge: Option<usize>,
    /// Evaluation points of inverse-cdf.
    #[arg(long)]
    pub x: Option<String>,
    /// Moment orders.
    #[arg(long)]
    pub q: Option<String>,
    /// Time change of brownian-timechange: l (inverse subordinator) or h (subordinator).
    #[arg(long)]
    pub which: Option<String>,
}

pub const TARGETS: [&str; 4] = ["gamma-path", "inverse-cdf", "inverse-moments", "brownian-timechange"];

const WARN_CENSORED: f64 = 0.01;
const MAX_CENSORED: f64 = 0.10;

fn series_rep(cfg: &RunConfig) -> MomentRepresentation {
    MomentRepresentation {
        quad: cfg.quad,
        ..MomentRepresentation::new(MomentKind::SeriesMu)
    }
}

/// Mean plus twelve standard deviations of L_t, at least ten coarse steps.
pub fn auto_horizon(p: GammaParams, t: f64, coarse_step: f64, rep: &MomentRepresentation) -> invgamma::Result<f64> {
    let m1 = moments_l(p, t, 1.0, rep)?;
    let m2 = moments_l(p, t, 2.0, rep)?;
    let sd = (m2 - m1 * m1).max(0.0).sqrt();
    Ok((m1 + 12.0 * sd).max(10.0 * coarse_step))
}

fn check_censoring(table: &mut Table, s: &PassageSamples) -> Result<(), CliError> {
    let f = s.censored_fraction();
    if f > MAX_CENSORED {
        return Err(CliError::Failure(format!(
            "{} of {} paths ({:.1}%) did not pass level {} before the horizon; raise --horizon",
            s.censored,
            s.total(),
            100.0 * f,
            s.level
        )));
    }
    if f > WARN_CENSORED {
        table.meta(
            "warning",
            format!("{:.2}% of paths censored at level {}; estimates are biased low", 100.0 * f, s.level),
        );
    }
    Ok(())
}

struct Settings {
    levels: Vec<f64>,
    n: usize,
    step: f64,
    bridge: usize,
    horizon: Option<f64>,
}

fn settings(cfg: &RunConfig, args: &SimulateArgs) -> Result<Settings, CliError> {
    let r = &cfg.resolver;
    let levels = r.required_grid(&args.t, "t", Some("1"))?;
    for &t in &levels {
        require_positive("t", t)?;
    }
    let n = r.value(args.n, "n", 100_000)?;
    if n == 0 {
        return Err(CliError::Usage("invalid value for `n`: must be >= 1".into()));
    }
    let step = require_positive("step", r.value(args.step, "step", 1e-3)?)?;
    let bridge = r.value(args.bridge, "bridge", 32)?;
    if bridge == 0 {
        return Err(CliError::Usage("invalid value for `bridge`: must be >= 1".into()));
    }
    let horizon = r.optional(args.horizon, "horizon")?.map(|h| require_positive("horizon", h)).transpose()?;
    Ok(Settings {
        levels,
        n,
        step,
        bridge,
        horizon,
    })
}

fn sampler(cfg: &RunConfig, s: &Settings, level: f64) -> Result<FirstPassageSampler, CliError> {
    let horizon = match s.horizon {
        Some(h) => h,
        None => auto_horizon(cfg.params, level, s.step * s.bridge as f64, &series_rep(cfg))?,
    };
    let sampler = FirstPassageSampler::new(cfg.params, s.step, horizon).with_bridge(s.bridge);
    sampler.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(sampler)
}

fn gamma_path(cfg: &RunConfig, args: &SimulateArgs) -> Result<Table, CliError> {
    let r = &cfg.resolver;
    let step = require_positive("step", r.value(args.step, "step", 0.01)?)?;
    let horizon = require_positive("T", r.value(args.horizon_path, "T", 1.0)?)?;
    if step > horizon {
        return Err(CliError::Usage(format!("invalid value for `step`: {step} exceeds T = {horizon}")));
    }
    let path = sample_gamma_path(cfg.params, step, horizon, cfg.seed)?;
    let mut table = cfg.table(&["t", "H"]);
    for (i, &h) in path.values.iter().enumerate() {
        table.push(vec![(i as f64 * step).into(), h.into()]);
    }
    Ok(table)
}

fn inverse_cdf(cfg: &RunConfig, args: &SimulateArgs) -> Result<Table, CliError> {
    let s = settings(cfg, args)?;
    let [t] = s.levels[..] else {
        return Err(CliError::Usage("inverse-cdf takes a single level `t`".into()));
    };
    let xs = cfg.resolver.required_grid(&args.x, "x", Some("0:4:0.05"))?;
    if let Some(x) = xs.iter().find(|&&x| x < 0.0) {
        return Err(CliError::Usage(format!("invalid value for `x`: must be nonnegative, got {x}")));
    }
    let sampler = sampler(cfg, &s, t)?;
    let p = cfg.params;
    let samples = sampler.sample(t, s.n, cfg.seed)?;
    let mut table = cfg.table(&["x", "ecdf", "cdf"]);
    check_censoring(&mut table, &samples)?;
    let stats = empirical_stats(&samples.times, &[])?;
    let cdf = |x: f64| if x == 0.0 { Ok(0.0) } else { survival_l(p, t, x).map(|s| 1.0 - s) };
    let mut ks_err = None;
    let d = ks_distance(&stats.ecdf, |x| {
        cdf(x).unwrap_or_else(|e| {
            ks_err.get_or_insert(e);
            f64::NAN
        })
    });
    if let Some(e) = ks_err {
        return Err(e.into());
    }
    // l(t, 0+) = Π̄(t)
    let mut peak = levy_tail(p, t)?;
    for &x in xs.iter().filter(|&&x| x > 0.0) {
        peak = peak.max(density_l(p, t, x, &cfg.quad)?);
    }
    let allowance = ks_allowance(stats.n, samples.step, peak);
    table.meta("n", s.n);
    table.meta("step", s.step);
    table.meta("horizon", sampler.horizon);
    table.meta("censored", samples.censored);
    table.meta("ks_distance", format!("{d:.6e}"));
    table.meta("ks_allowance", format!("{allowance:.6e}"));
    for x in xs {
        table.push(vec![x.into(), stats.ecdf_at(x).into(), cdf(x)?.into()]);
    }
    Ok(table)
}

fn orders(cfg: &RunConfig, args: &SimulateArgs, default: &str) -> Result<Vec<f64>, CliError> {
    cfg.resolver.required_grid(&args.q, "q", Some(default))
}

fn inverse_moments(cfg: &RunConfig, args: &SimulateArgs) -> Result<Table, CliError> {
    let s = settings(cfg, args)?;
    let qs = orders(cfg, args, "1,2")?;
    if let Some(q) = qs.iter().find(|&&q| !(q >= 1.0)) {
        return Err(CliError::Usage(format!("invalid value for `q`: must be >= 1, got {q}")));
    }
    let samplers = s.levels.iter().map(|&t| sampler(cfg, &s, t)).collect::<Result<Vec<_>, _>>()?;
    let rep = series_rep(cfg);
    let mut table = cfg.table(&["t", "q", "estimate", "estimate_lower", "stderr", "analytic"]);
    table.meta("n", s.n);
    table.meta("step", s.step);
    for (&t, sampler) in s.levels.iter().zip(&samplers) {
        let samples = sampler.sample(t, s.n, cfg.seed)?;
        check_censoring(&mut table, &samples)?;
        let upper = empirical_stats(&samples.times, &qs)?;
        let lower = empirical_stats(&samples.lower_times(), &qs)?;
        for &q in &qs {
            let (hi, lo) = (upper.moment(q).expect("order requested"), lower.moment(q).expect("order requested"));
            table.push(vec![
                t.into(),
                q.into(),
                hi.mean.into(),
                lo.mean.into(),
                hi.stderr.into(),
                moments_l(cfg.params, t, q, &rep)?.into(),
            ]);
        }
    }
    Ok(table)
}

fn brownian(cfg: &RunConfig, args: &SimulateArgs) -> Result<Table, CliError> {
    let s = settings(cfg, args)?;
    let which_text: String = cfg.resolver.value(args.which.clone(), "which", "l".to_string())?;
    let which = match which_text.as_str() {
        "l" => Which::SubordinatedL,
        "h" => Which::SubordinatedH,
        other => return Err(CliError::Usage(format!("invalid value for `which`: expected l or h, got `{other}`"))),
    };
    let qs = orders(cfg, args, "2,4")?;
    let int_orders = qs
        .iter()
        .map(|&q| {
            if q >= 0.0 && q.fract() == 0.0 && q <= 64.0 {
                Ok(q as u32)
            } else {
                Err(CliError::Usage(format!("invalid value for `q`: must be an integer in [0, 64], got {q}")))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rep = series_rep(cfg);
    let mut table = cfg.table(&["t", "q", "estimate", "stderr", "analytic"]);
    table.meta("which", &which_text);
    table.meta("n", s.n);
    table.meta("step", s.step);
    for &t in &s.levels {
        let sampler = match which {
            Which::SubordinatedL => sampler(cfg, &s, t)?,
            Which::SubordinatedH => FirstPassageSampler::new(cfg.params, s.step, t),
        };
        let times = sample_time_change(which, &sampler, t, s.n, cfg.seed)?;
        check_censoring(&mut table, &times)?;
        let b = simulate_brownian_timechange(&times.times, cfg.seed);
        let stats = empirical_stats(&b, &qs)?;
        for (&q, &qi) in qs.iter().zip(&int_orders) {
            let m = stats.moment(q).expect("order requested");
            let exact = brownian_timechange_moments(cfg.params, t, qi, which, &rep)?;
            table.push(vec![t.into(), Cell::from(q), m.mean.into(), m.stderr.into(), exact.value.into()]);
        }
    }
    Ok(table)
}

pub fn run(cfg: &RunConfig, args: &SimulateArgs) -> Result<(), CliError> {
    let table = match args.target.as_str() {
        "gamma-path" => gamma_path(cfg, args)?,
        "inverse-cdf" => inverse_cdf(cfg, args)?,
        "inverse-moments" => inverse_moments(cfg, args)?,
        "brownian-timechange" => brownian(cfg, args)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown target `{other}`; expected one of {}",
                TARGETS.join(", ")
            )))
        }
    };
    cfg.emit(&table)
}
