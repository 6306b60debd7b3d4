//! `eval`: any registered function on the Cartesian product of its input grids.

use clap::Args;
use invgamma::gamma_sub::{density_h, h_laplace_in_t, moments_h, potential_kappa, symbol_phi};
use invgamma::inv_gamma::{
    density_l, kernel_ell, laplace_functional_u, laplace_l_in_t, moments_l, LaplaceFunctionalForm, MomentKind,
    MomentRepresentation,
};
use invgamma::specfun::{digamma, exp_integral_e1, incomplete_digamma, lower_incomplete_gamma, volterra_mu, volterra_nu, VolterraArgs};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// One of: nu, mu, h, l, kappa, ell, phi, e1, gamma_inc, digamma, inc_digamma,
    /// u, moments_h, moments_l, h_laplace_t, l_laplace_t.
    pub function: String,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// Moment representation for moments_l: series-mu, integral-mu or gamma-ratio-integral.
    #[arg(long)]
    pub kind: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Domain {
    Any,
    Positive,
    NonNegative,
    AtLeastOne,
}

impl Domain {
    fn check(self, name: &str, v: f64) -> Result<(), CliError> {
        let ok = match self {
            Domain::Any => true,
            Domain::Positive => v > 0.0,
            Domain::NonNegative => v >= 0.0,
            Domain::AtLeastOne => v >= 1.0,
        };
        let what = match self {
            Domain::Any => "",
            Domain::Positive => "positive",
            Domain::NonNegative => "nonnegative",
            Domain::AtLeastOne => ">= 1",
        };
        if ok {
            Ok(())
        } else {
            Err(CliError::Usage(format!("invalid value for `{name}`: must be {what}, got {v}")))
        }
    }
}

struct Input {
    name: &'static str,
    default: Option<&'static str>,
    domain: Domain,
}

const fn input(name: &'static str, default: Option<&'static str>, domain: Domain) -> Input {
    Input { name, default, domain }
}

pub const FUNCTIONS: [&str; 16] = [
    "nu",
    "mu",
    "h",
    "l",
    "kappa",
    "ell",
    "phi",
    "e1",
    "gamma_inc",
    "digamma",
    "inc_digamma",
    "u",
    "moments_h",
    "moments_l",
    "h_laplace_t",
    "l_laplace_t",
];

fn inputs(function: &str) -> Option<Vec<Input>> {
    use Domain::*;
    Some(match function {
        "nu" => vec![input("x", None, Positive), input("alpha", Some("0"), Any)],
        "mu" => vec![
            input("x", None, Positive),
            input("beta", Some("0"), Any),
            input("alpha", Some("0"), Any),
        ],
        "h" | "l" => vec![input("t", None, Positive), input("x", None, NonNegative)],
        "kappa" => vec![input("x", None, Positive)],
        "ell" => vec![input("t", None, Positive)],
        "phi" => vec![input("lambda", None, NonNegative)],
        "e1" => vec![input("x", None, Positive)],
        "gamma_inc" => vec![input("s", None, Positive), input("z", None, NonNegative)],
        "digamma" => vec![input("z", None, Any)],
        "inc_digamma" => vec![input("s", None, Positive), input("z", None, Positive)],
        "u" => vec![input("t", None, NonNegative), input("c", Some("1"), NonNegative)],
        "moments_h" => vec![input("t", None, Positive), input("q", None, Any)],
        "moments_l" => vec![input("t", None, Positive), input("q", None, AtLeastOne)],
        "h_laplace_t" => vec![input("lambda", None, Positive), input("x", None, Positive)],
        "l_laplace_t" => vec![input("lambda", None, Positive), input("x", None, NonNegative)],
        _ => return None,
    })
}

fn flag<'a>(args: &'a EvalArgs, name: &str) -> &'a Option<String> {
    match name {
        "t" => &args.t,
        "x" => &args.x,
        "alpha" => &args.alpha,
        "beta" => &args.beta,
        "lambda" => &args.lambda,
        "s" => &args.s,
        "z" => &args.z,
        "q" => &args.q,
        "c" => &args.c,
        _ => unreachable!("no flag for input {name}"),
    }
}

pub fn parse_kind(text: &str) -> Result<MomentKind, CliError> {
    MomentKind::ALL
        .into_iter()
        .find(|k| k.id() == text)
        .ok_or_else(|| {
            let ids: Vec<&str> = MomentKind::ALL.iter().map(|k| k.id()).collect();
            CliError::Usage(format!("unknown moment kind `{text}`; expected one of {}", ids.join(", ")))
        })
}

/// Cartesian product with the first input varying slowest.
fn product(grids: &[Vec<f64>]) -> Vec<Vec<f64>> {
    grids.iter().fold(vec![Vec::new()], |acc, g| {
        acc.iter()
            .flat_map(|prefix| {
                g.iter().map(move |&v| {
                    let mut row = prefix.clone();
                    row.push(v);
                    row
                })
            })
            .collect()
    })
}

pub fn run(cfg: &RunConfig, args: &EvalArgs) -> Result<(), CliError> {
    let name = args.function.as_str();
    let spec = inputs(name).ok_or_else(|| {
        CliError::Usage(format!("unknown function `{name}`; expected one of {}", FUNCTIONS.join(", ")))
    })?;
    let r = &cfg.resolver;
    let mut grids = Vec::with_capacity(spec.len());
    for inp in &spec {
        let g = r.required_grid(flag(args, inp.name), inp.name, inp.default)?;
        for &v in &g {
            inp.domain.check(inp.name, v)?;
        }
        grids.push(g);
    }
    let kind_text: String = r.value(args.kind.clone(), "kind", MomentKind::SeriesMu.id().to_string())?;
    let rep = MomentRepresentation {
        quad: cfg.quad,
        ..MomentRepresentation::new(parse_kind(&kind_text)?)
    };

    let p = cfg.params;
    let quad = &cfg.quad;
    let value = |v: &[f64]| -> invgamma::Result<f64> {
        match name {
            "nu" => volterra_nu(v[0], v[1], quad),
            "mu" => volterra_mu(VolterraArgs::new(v[0], v[1], v[2]), quad),
            "h" => density_h(p, v[0], v[1]),
            "l" => density_l(p, v[0], v[1], quad),
            "kappa" => potential_kappa(p, v[0], quad),
            "ell" => kernel_ell(p, v[0]),
            "phi" => symbol_phi(p, v[0]),
            "e1" => exp_integral_e1(v[0]),
            "gamma_inc" => lower_incomplete_gamma(v[0], v[1]),
            "digamma" => digamma(v[0]),
            "inc_digamma" => incomplete_digamma(v[0], v[1], quad),
            "u" => laplace_functional_u(p, v[0], v[1], LaplaceFunctionalForm::Auto, &cfg.series, quad),
            "moments_h" => moments_h(p, v[0], v[1]),
            "moments_l" => moments_l(p, v[0], v[1], &rep),
            "h_laplace_t" => h_laplace_in_t(p, v[0], v[1], quad),
            "l_laplace_t" => laplace_l_in_t(p, v[0], v[1]),
            _ => unreachable!(),
        }
    };

    let mut header: Vec<&str> = spec.iter().map(|i| i.name).collect();
    header.push("value");
    let mut table = cfg.table(&header);
    if name == "moments_l" {
        table.meta("kind", rep.kind.id());
    }
    for point in product(&grids) {
        let v = value(&point).map_err(|e| {
            let at: Vec<String> = spec.iter().zip(&point).map(|(i, v)| format!("{}={v}", i.name)).collect();
            CliError::At {
                context: format!("{name} at {}", at.join(", ")),
                source: e,
            }
        })?;
        let mut row: Vec<_> = point.into_iter().map(Into::into).collect();
        row.push(v.into());
        table.push(row);
    }
    cfg.emit(&table)
}
