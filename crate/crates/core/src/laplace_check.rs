//! Numerical forward Laplace transforms and a catalog of transform identities
//! checked against their closed forms.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{require_finite, Error, Result};
use crate::gamma_sub::{
    cdf_h, density_h, h_laplace_in_t, laplace_h_in_x, levy_tail, potential_cumulative, potential_kappa,
    symbol_phi, tail_integral, GammaParams,
};
use crate::inv_gamma::{
    density_l, laplace_functional_u, laplace_l_in_t, moments_l, LaplaceFunctionalForm, MomentKind,
    MomentRepresentation,
};
use crate::quad::{integrate_with_breaks, ErrSlot, QuadSpec, SeriesSpec};
use crate::specfun::{gamma, volterra_mu, volterra_nu, VolterraArgs};

pub type RealFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// A function on (0, ∞) to be transformed, optionally with its antiderivative
/// ∫₀^s f for integrands too singular at the origin for plain quadrature.
#[derive(Clone)]
pub struct Transformand {
    pub f: RealFn,
    pub antiderivative: Option<RealFn>,
    /// Length of the first cell handled through the antiderivative.
    pub head: f64,
}

impl Transformand {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        Transformand {
            f: Arc::new(f),
            antiderivative: None,
            head: 0.0,
        }
    }

    pub fn with_antiderivative<G>(mut self, g: G, head: f64) -> Self
    where
        G: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        self.antiderivative = Some(Arc::new(g));
        self.head = head;
        self
    }
}

impl std::fmt::Debug for Transformand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transformand")
            .field("antiderivative", &self.antiderivative.is_some())
            .field("head", &self.head)
            .finish()
    }
}

const MAX_PROBES: i32 = 80;

/// ∫₀^∞ e^{−λs} f(s) ds.
pub fn forward_laplace<F>(f: F, lambda: f64, quad: &QuadSpec) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
{
    forward_laplace_of(&Transformand::new(f), lambda, quad)
}

/// Truncation point where the weighted integrand has decayed below the
/// absolute tolerance, found by doubling from the natural scale 1/λ.
fn truncation_point(f: &RealFn, lambda: f64, start: f64, quad: &QuadSpec) -> Result<(f64, Vec<f64>)> {
    let mut probes = Vec::new();
    let mut s = start.max(1.0 / lambda);
    let mut small = 0;
    for _ in 0..MAX_PROBES {
        let v = f(s)?;
        let weighted = (-lambda * s).exp() * v.abs() * s.max(1.0 / lambda);
        probes.push(s);
        if weighted < quad.abs_tol * 1e-2 {
            small += 1;
            if small == 2 {
                return Ok((s, probes));
            }
        } else {
            small = 0;
        }
        s *= 2.0;
    }
    Err(Error::Quadrature {
        context: "forward Laplace truncation".into(),
        achieved: f64::INFINITY,
        requested: quad.abs_tol,
        subdivisions: 0,
    })
}

/// Forward transform of a [`Transformand`]; the first cell uses
/// ∫₀^ε e^{−λs} f = e^{−λε} F(ε) + λ ∫₀^ε e^{−λs} F(s) ds when an antiderivative is given.
pub fn forward_laplace_of(t: &Transformand, lambda: f64, quad: &QuadSpec) -> Result<f64> {
    quad.validate()?;
    require_finite("forward_laplace", "lambda", lambda)?;
    if lambda <= 0.0 {
        return Err(Error::domain("forward_laplace", format!("lambda must be positive, got {lambda}")));
    }
    let (head, head_value) = match &t.antiderivative {
        Some(anti) if t.head > 0.0 => {
            let eps = t.head;
            let slot = ErrSlot::new();
            // s = ε e^{−u} turns the slowly varying F near 0 into a smooth integrand
            let r = integrate_with_breaks(
                |u| {
                    let s = eps * (-u).exp();
                    s * (-lambda * s).exp() * slot.wrap(anti(s))
                },
                0.0,
                45.0,
                &[2.0, 8.0],
                quad,
                "forward Laplace first cell",
            );
            let inner = slot.finish(r)?.value;
            (eps, (-lambda * eps).exp() * anti(eps)? + lambda * inner)
        }
        _ => (0.0, 0.0),
    };
    let (upper, mut breaks) = truncation_point(&t.f, lambda, head, quad)?;
    // geometric breaks resolve endpoint singularities at the origin
    if head == 0.0 {
        let first = breaks[0];
        breaks.extend((1..40).map(|k| first * 0.5f64.powi(k)));
    }
    let slot = ErrSlot::new();
    let f = &t.f;
    let r = integrate_with_breaks(
        |s| {
            let w = (-lambda * s).exp();
            if w == 0.0 {
                0.0
            } else {
                w * slot.wrap(f(s))
            }
        },
        head,
        upper,
        &breaks,
        &quad.with_subdivisions(quad.max_subdivisions.max(400)),
        "forward Laplace",
    );
    Ok(head_value + slot.finish(r)?.value)
}

/// A transform identity ∫₀^∞ e^{−λs} lhs(s) ds = rhs(λ) on a grid of λ.
#[derive(Clone)]
pub struct LaplaceIdentity {
    pub id: String,
    pub lhs: Transformand,
    pub rhs: RealFn,
    pub lambda_grid: Vec<f64>,
    /// The identity holds for λ above this value.
    pub threshold: f64,
    pub tolerance: f64,
    pub quad: QuadSpec,
}

impl std::fmt::Debug for LaplaceIdentity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LaplaceIdentity")
            .field("id", &self.id)
            .field("lambda_grid", &self.lambda_grid)
            .field("tolerance", &self.tolerance)
            .finish_non_exhaustive()
    }
}

impl LaplaceIdentity {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(Error::Config(format!("{}: empty λ grid", self.id)));
        }
        if let Some(l) = self.lambda_grid.iter().find(|&&l| !(l > self.threshold)) {
            return Err(Error::Config(format!(
                "{}: λ = {l} outside the validity region λ > {}",
                self.id, self.threshold
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("{}: tolerance must be positive", self.id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceRow {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub id: String,
    pub rows: Vec<LaplaceRow>,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl VerificationReport {
    pub const CSV_HEADER: &'static str = "id,lambda,lhs,rhs,rel_err";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                    self.id, r.lambda, r.lhs, r.rhs, r.rel_err
                )
            })
            .collect()
    }
}

pub fn verify_identity(ident: &LaplaceIdentity) -> Result<VerificationReport> {
    ident.validate()?;
    let rows = ident
        .lambda_grid
        .iter()
        .map(|&lambda| {
            let lhs = forward_laplace_of(&ident.lhs, lambda, &ident.quad)
                .map_err(|e| e.within(&ident.id))?;
            let rhs = (ident.rhs)(lambda).map_err(|e| e.within(&ident.id))?;
            let rel_err = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
            Ok(LaplaceRow {
                lambda,
                lhs,
                rhs,
                rel_err,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    Ok(VerificationReport {
        id: ident.id.clone(),
        pass: max_rel_err <= ident.tolerance,
        rows,
        max_rel_err,
        tolerance: ident.tolerance,
    })
}

/// Verifies identities concurrently; reports keep the input order.
pub fn verify_all(idents: &[LaplaceIdentity]) -> Vec<Result<VerificationReport>> {
    idents.par_iter().map(verify_identity).collect()
}

/// Fixed arguments of the catalog identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogConfig {
    pub params: GammaParams,
    /// Time at which h(t, ·) is transformed in space.
    pub t: f64,
    /// Level at which h(·, x) and l(·, x) are transformed in time.
    pub x: f64,
    pub c: f64,
    pub q: f64,
    pub nu_alpha: f64,
    pub mu_alpha: f64,
    pub mu_beta: f64,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig {
            params: GammaParams::default(),
            t: 0.7,
            x: 0.8,
            c: 1.0,
            q: 1.0,
            nu_alpha: 0.5,
            mu_alpha: 0.0,
            mu_beta: 1.0,
        }
    }
}

pub const CATALOG_IDS: [&str; 9] = [
    "tail-laplace",
    "h-space-laplace",
    "nu-laplace",
    "mu-laplace",
    "l-time-laplace",
    "moment-laplace",
    "h-time-laplace",
    "potential-laplace",
    "u-laplace",
];

fn identity(
    id: &str,
    lhs: Transformand,
    rhs: RealFn,
    lambda_grid: &[f64],
    threshold: f64,
    tolerance: f64,
) -> LaplaceIdentity {
    LaplaceIdentity {
        id: id.to_string(),
        lhs,
        rhs,
        lambda_grid: lambda_grid.to_vec(),
        threshold,
        tolerance,
        quad: QuadSpec {
            abs_tol: 1e-13,
            rel_tol: 1e-10,
            max_subdivisions: 400,
            upper_cutoff_tol: 1e-13,
        },
    }
}

/// The nine built-in transform identities.
pub fn catalog(cfg: &CatalogConfig) -> Result<Vec<LaplaceIdentity>> {
    let p = cfg.params;
    p.validate()?;
    let inner = QuadSpec::default().tightened(1e-2);
    let positive = [0.5, 1.0, 2.0, 4.0];
    let above_one = [1.5, std::f64::consts::E, 5.0];
    let CatalogConfig {
        t,
        x,
        c,
        q,
        nu_alpha,
        mu_alpha,
        mu_beta,
        ..
    } = *cfg;
    let phi = move |l: f64| symbol_phi(p, l);
    let moment_rep = MomentRepresentation::new(MomentKind::SeriesMu);
    let series = SeriesSpec::default();

    Ok(vec![
        identity(
            "tail-laplace",
            Transformand::new(move |s| levy_tail(p, s))
                .with_antiderivative(move |s| Ok(tail_integral(p, s)), 1e-3),
            Arc::new(move |l| Ok(phi(l)? / l)),
            &positive,
            0.0,
            1e-6,
        ),
        identity(
            "h-space-laplace",
            Transformand::new(move |y| density_h(p, t, y)).with_antiderivative(move |y| cdf_h(p, t, y), 1e-3),
            Arc::new(move |l| laplace_h_in_x(p, t, l)),
            &positive,
            0.0,
            1e-8,
        ),
        identity(
            "nu-laplace",
            Transformand::new(move |y| volterra_nu(y, nu_alpha, &inner)),
            Arc::new(move |l: f64| Ok(1.0 / (l.powf(nu_alpha + 1.0) * l.ln()))),
            &above_one,
            1.0,
            1e-6,
        ),
        identity(
            "mu-laplace",
            Transformand::new(move |y| volterra_mu(VolterraArgs::new(y, mu_beta, mu_alpha), &inner)),
            Arc::new(move |l: f64| Ok(1.0 / (l.powf(mu_alpha + 1.0) * l.ln().powf(mu_beta + 1.0)))),
            &above_one,
            1.0,
            1e-6,
        ),
        identity(
            "l-time-laplace",
            Transformand::new(move |s| density_l(p, s, x, &inner)),
            Arc::new(move |l| laplace_l_in_t(p, l, x)),
            &positive,
            0.0,
            1e-6,
        ),
        identity(
            "moment-laplace",
            Transformand::new(move |s| moments_l(p, s, q, &moment_rep)),
            Arc::new(move |l| Ok(gamma(q + 1.0) / (l * phi(l)?.powf(q)))),
            &positive,
            0.0,
            1e-6,
        ),
        identity(
            "h-time-laplace",
            Transformand::new(move |s| density_h(p, s, x)),
            Arc::new(move |l| h_laplace_in_t(p, l, x, &inner)),
            &positive,
            0.0,
            1e-6,
        ),
        identity(
            "potential-laplace",
            Transformand::new(move |y| potential_kappa(p, y, &inner))
                .with_antiderivative(move |y| potential_cumulative(p, y, &inner), 1e-3),
            Arc::new(move |l| Ok(1.0 / phi(l)?)),
            &positive,
            0.0,
            1e-6,
        ),
        identity(
            "u-laplace",
            Transformand::new(move |s| {
                laplace_functional_u(p, s, c, LaplaceFunctionalForm::Auto, &series, &inner)
            }),
            Arc::new(move |l| {
                let ph = phi(l)?;
                Ok(ph / l / (c + ph))
            }),
            &positive,
            0.0,
            1e-6,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_transforms() {
        let q = QuadSpec::default();
        for &l in &[0.3, 1.0, 7.0] {
            assert!((forward_laplace(|_| Ok(1.0), l, &q).unwrap() * l - 1.0).abs() < 1e-10);
            assert!((forward_laplace(|s| Ok(s), l, &q).unwrap() * l * l - 1.0).abs() < 1e-10);
        }
        let log = forward_laplace(|s: f64| Ok(s.ln()), 1.0, &q).unwrap();
        assert!((log + crate::specfun::EULER_GAMMA).abs() < 1e-9);
    }

    #[test]
    fn nu_zero_at_e() {
        let q = QuadSpec::default();
        let inner = q.tightened(1e-2);
        let v = forward_laplace(move |y| volterra_nu(y, 0.0, &inner), std::f64::consts::E, &q).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn tail_transform_at_one() {
        let p = GammaParams::default();
        let q = QuadSpec::default();
        let v = forward_laplace(move |s| levy_tail(p, s), 1.0, &q).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn antiderivative_head_agrees() {
        let q = QuadSpec::default();
        let plain = Transformand::new(|s: f64| Ok(s.powf(-0.5)));
        let headed = plain.clone().with_antiderivative(|s: f64| Ok(2.0 * s.sqrt()), 1e-2);
        let exact = std::f64::consts::PI.sqrt() / 2f64.sqrt();
        for t in [plain, headed] {
            assert!((forward_laplace_of(&t, 2.0, &q).unwrap() - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn grid_must_respect_validity() {
        let mut cat = catalog(&CatalogConfig::default()).unwrap();
        let mut nu = cat.remove(2);
        nu.lambda_grid = vec![0.5];
        assert!(matches!(verify_identity(&nu), Err(Error::Config(_))));
    }

    #[test]
    fn nonpositive_lambda_rejected() {
        assert!(forward_laplace(|_| Ok(1.0), 0.0, &QuadSpec::default()).is_err());
    }

    #[test]
    fn report_rows_format() {
        let ident = identity(
            "one",
            Transformand::new(|_| Ok(1.0)),
            Arc::new(|l| Ok(1.0 / l)),
            &[1.0, 2.0],
            0.0,
            1e-9,
        );
        let r = verify_identity(&ident).unwrap();
        assert!(r.pass);
        assert_eq!(r.csv_rows().len(), 2);
        assert!(r.csv_rows()[0].starts_with("one,1.0000000000000000e0,"));
    }

    #[test]
    fn catalog_fast_entries_pass() {
        let cat = catalog(&CatalogConfig::default()).unwrap();
        assert_eq!(cat.iter().map(|c| c.id.as_str()).collect::<Vec<_>>(), CATALOG_IDS);
        for id in ["tail-laplace", "h-space-laplace", "l-time-laplace"] {
            let ident = cat.iter().find(|c| c.id == id).unwrap();
            let r = verify_identity(ident).unwrap();
            assert!(r.pass, "{id}: {}", r.max_rel_err);
        }
    }
}
