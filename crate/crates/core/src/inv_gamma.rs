//! The inverse process L_t = inf{s : H_s > t}: survival function, density,
//! Sonine kernel ℓ, real-order moments and the Laplace functional E e^{−cL_t}.

use crate::error::{require_positive, Error, Result};
use crate::gamma_sub::{potential_cumulative, potential_kappa, symbol_phi, GammaParams};
use crate::quad::{
    integrate_semi_infinite, integrate_with_breaks, sum_series, ErrSlot, GaussLegendre, QuadSpec,
    SeriesSpec,
};
use crate::specfun::{digamma_gap_weighted, e1_unchecked, exp_weighted_mu_integral, gamma_pq, ln_gamma, ln_mu};

/// Number of cells in the cubic mesh s_k = t (k/K)³ of the integral forms.
const CUBIC_CELLS: usize = 12;

/// P(L_t > x) = γ(ax, bt)/Γ(ax).
pub fn survival_l(p: GammaParams, t: f64, x: f64) -> Result<f64> {
    p.validate()?;
    require_positive("survival_l", "t", t)?;
    require_positive("survival_l", "x", x)?;
    Ok(gamma_pq(p.a * x, p.b * t)?.0)
}

/// Density of L_t: a P(ax,bt) (ψ0(ax) − Ψ0(ax,bt)).
pub fn density_l(p: GammaParams, t: f64, x: f64, quad: &QuadSpec) -> Result<f64> {
    p.validate()?;
    require_positive("density_l", "t", t)?;
    require_positive("density_l", "x", x)?;
    Ok(p.a * digamma_gap_weighted(p.a * x, p.b * t, quad)?)
}

/// ℓ(t) = a E1(bt), the Sonine partner of the potential density.
pub fn kernel_ell(p: GammaParams, t: f64) -> Result<f64> {
    p.validate()?;
    require_positive("kernel_ell", "t", t)?;
    Ok(p.a * e1_unchecked(p.b * t))
}

/// ∫₀^∞ e^{−λt} l(t,x) dt = (Φ(λ)/λ) e^{−xΦ(λ)}.
pub fn laplace_l_in_t(p: GammaParams, lambda: f64, x: f64) -> Result<f64> {
    require_positive("laplace_l_in_t", "lambda", lambda)?;
    require_positive("laplace_l_in_t", "x", x)?;
    let phi = symbol_phi(p, lambda)?;
    Ok(phi / lambda * (-x * phi).exp())
}

/// ∫₀^T κ(z) ℓ(T − z) dz, identically 1 for a Sonine pair.
pub fn sonine_convolution(p: GammaParams, horizon: f64, quad: &QuadSpec) -> Result<f64> {
    p.validate()?;
    require_positive("sonine_convolution", "horizon", horizon)?;
    let inner = quad.tightened(1e-2);
    let eps = horizon * 1e-6;
    // by parts on (0, ε): K(ε)ℓ(T−ε) + ∫₀^ε K(z) a e^{−b(T−z)}/(T−z) dz
    let k_eps = potential_cumulative(p, eps, &inner)?;
    let mut head = k_eps * p.a * e1_unchecked(p.b * (horizon - eps));
    for (z, w) in GaussLegendre::new(8).mapped(0.0, eps) {
        let k = potential_cumulative(p, z, &inner)?;
        head += w * k * p.a * (-p.b * (horizon - z)).exp() / (horizon - z);
    }
    let mut breaks: Vec<f64> = (1..=20).map(|k| horizon * 0.5f64.powi(k)).collect();
    breaks.extend((1..=20).map(|k| horizon * (1.0 - 0.5f64.powi(k))));
    let slot = ErrSlot::new();
    let r = integrate_with_breaks(
        |z| slot.wrap(potential_kappa(p, z, &inner)) * p.a * e1_unchecked(p.b * (horizon - z)),
        eps,
        horizon,
        &breaks,
        &quad.with_subdivisions(quad.max_subdivisions.max(400)),
        "sonine convolution",
    );
    Ok(head + slot.finish(r)?.value)
}

/// Which closed form evaluates E L_t^q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentKind {
    /// (Γ(q+1)/a^q) Σ_n e^{−bt} μ(bt, q−1, n).
    SeriesMu,
    /// (bΓ(q+1)/a^q) ∫₀^t e^{−bs} μ(bs, q−1, −1) ds.
    IntegralMu,
    /// (q b^q/a^q) ∫₀^∞ y^{q−1} γ(by,bt)/Γ(by) dy.
    GammaRatioIntegral,
}

impl MomentKind {
    pub const ALL: [MomentKind; 3] = [
        MomentKind::SeriesMu,
        MomentKind::IntegralMu,
        MomentKind::GammaRatioIntegral,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            MomentKind::SeriesMu => "series-mu",
            MomentKind::IntegralMu => "integral-mu",
            MomentKind::GammaRatioIntegral => "gamma-ratio-integral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRepresentation {
    pub kind: MomentKind,
    pub series: SeriesSpec,
    pub quad: QuadSpec,
}

impl MomentRepresentation {
    pub fn new(kind: MomentKind) -> Self {
        MomentRepresentation {
            kind,
            series: SeriesSpec {
                tail_tol: 1e-12,
                max_terms: 10_000,
            },
            quad: QuadSpec::default(),
        }
    }
}

fn check_order(function: &'static str, q: f64) -> Result<()> {
    if q >= 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(function, format!("moment order must be >= 1, got {q}")))
    }
}

fn cubic_mesh(t: f64) -> Vec<f64> {
    (0..=CUBIC_CELLS)
        .map(|k| t * (k as f64 / CUBIC_CELLS as f64).powi(3))
        .collect()
}

/// ∫₀^t e^{−ρs} μ(cs, β, −1) ds: closed-form first cell, adaptive quadrature on the cubic mesh after it.
fn exp_weighted_order_minus_one(rho: f64, c: f64, beta: f64, t: f64, quad: &QuadSpec) -> Result<f64> {
    let mesh = cubic_mesh(t);
    let inner = quad.tightened(1e-2);
    let first = exp_weighted_mu_integral(rho, c, beta, -1.0, mesh[1], quad)?;
    let slot = ErrSlot::new();
    let r = integrate_with_breaks(
        |s| slot.wrap(ln_mu(c * s, beta, -1.0, &inner).map(|(l, sg)| sg * (l - rho * s).exp())),
        mesh[1],
        t,
        &mesh[2..],
        quad,
        "integral over the cubic mesh",
    );
    Ok(first + slot.finish(r)?.value)
}

/// E L_t^q for q ≥ 1.
pub fn moments_l(p: GammaParams, t: f64, q: f64, rep: &MomentRepresentation) -> Result<f64> {
    p.validate()?;
    require_positive("moments_l", "t", t)?;
    check_order("moments_l", q)?;
    let (a, b) = (p.a, p.b);
    let ln_pref = ln_gamma(q + 1.0) - q * a.ln();
    let context = rep.kind.id();
    let value = match rep.kind {
        MomentKind::SeriesMu => {
            let x = b * t;
            let sum = sum_series(
                |n| ln_mu(x, q - 1.0, n as f64, &rep.quad).map(|(l, s)| s * (l - x).exp()),
                &rep.series,
                context,
            )?;
            ln_pref.exp() * sum
        }
        MomentKind::IntegralMu => {
            let i = exp_weighted_order_minus_one(b, b, q - 1.0, t, &rep.quad)?;
            b * ln_pref.exp() * i
        }
        MomentKind::GammaRatioIntegral => {
            let slot = ErrSlot::new();
            let r = integrate_semi_infinite(
                |y: f64| slot.wrap(gamma_pq(b * y, b * t).map(|(pp, _)| y.powf(q - 1.0) * pp)),
                0.0,
                0.25 * t.max(1.0 / b),
                &rep.quad,
                context,
            );
            let i = slot.finish(r)?;
            q * (b / a).powf(q) * i
        }
    };
    Ok(value)
}

/// E L_t^q / (bt/a)^q, which tends to 1 as t grows.
pub fn moments_l_asymptotic_ratio(
    p: GammaParams,
    t: f64,
    q: f64,
    rep: &MomentRepresentation,
) -> Result<f64> {
    let m = moments_l(p, t, q, rep)?;
    Ok(m / (p.b * t / p.a).powf(q))
}

/// E L_t = (e^{−bt}/a) Σ_n ν(bt, n).
pub fn mean_l_nu_series(p: GammaParams, t: f64, series: &SeriesSpec, quad: &QuadSpec) -> Result<f64> {
    p.validate()?;
    require_positive("mean_l_nu_series", "t", t)?;
    let x = p.b * t;
    let sum = sum_series(
        |n| ln_mu(x, 0.0, n as f64, quad).map(|(l, s)| s * (l - x).exp()),
        series,
        "mean of L via nu series",
    )?;
    Ok(sum / p.a)
}

/// Which closed form evaluates u(t) = E e^{−cL_t}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LaplaceFunctionalForm {
    /// 1 − (c/a) e^{−bt} Σ_n e^{cn/a} ν(bt e^{−c/a}, n).
    NuSeries,
    /// 1 − b(c/a) e^{−c/a} ∫₀^t e^{−bs} ν(bs e^{−c/a}, −1) ds.
    NuIntegral,
    /// The series unless c/a > 5, where it suffers cancellation.
    Auto,
}

/// u(t) = E e^{−cL_t}, the solution of the relaxation equation 𝔇u = −cu, u(0) = 1.
pub fn laplace_functional_u(
    p: GammaParams,
    t: f64,
    c: f64,
    form: LaplaceFunctionalForm,
    series: &SeriesSpec,
    quad: &QuadSpec,
) -> Result<f64> {
    p.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("laplace_functional_u", format!("t must be >= 0, got {t}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::domain("laplace_functional_u", format!("c must be >= 0, got {c}")));
    }
    if t == 0.0 || c == 0.0 {
        return Ok(1.0);
    }
    let (a, b) = (p.a, p.b);
    let r = c / a;
    let form = match form {
        LaplaceFunctionalForm::Auto if r > 5.0 => LaplaceFunctionalForm::NuIntegral,
        LaplaceFunctionalForm::Auto => LaplaceFunctionalForm::NuSeries,
        f => f,
    };
    let x = b * t * (-r).exp();
    match form {
        LaplaceFunctionalForm::NuSeries => {
            let sum = sum_series(
                |n| {
                    ln_mu(x, 0.0, n as f64, quad)
                        .map(|(l, s)| s * (l - b * t + r * n as f64).exp())
                },
                series,
                "laplace functional series",
            )?;
            Ok(1.0 - r * sum)
        }
        _ => {
            let i = exp_weighted_order_minus_one(b, b * (-r).exp(), 0.0, t, quad)?;
            Ok(1.0 - b * r * (-r).exp() * i)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma_sub::{density_h, levy_tail};
    use crate::quad::integrate;
    use std::f64::consts::E;

    fn p(a: f64, b: f64) -> GammaParams {
        GammaParams::new(a, b).unwrap()
    }

    #[test]
    fn survival_values() {
        let v = survival_l(p(1.0, 1.0), 1.0, 1.0).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((survival_l(p(1.0, 1.0), 100.0, 1.0).unwrap() - 1.0).abs() < 1e-8);
        assert!(survival_l(p(1.0, 1.0), 1.0, 0.0).is_err());
    }

    #[test]
    fn survival_is_cdf_of_h_in_time() {
        // P(L_t > x) = P(H_x < t) = ∫₀^t h(x,s) ds
        let q = QuadSpec::default();
        let pp = p(2.0, 0.5);
        let (t, x): (f64, f64) = (2.0, 1.3);
        let s = pp.a * x;
        // s = w^{1/(ax)} removes the endpoint power
        let oracle = integrate(
            |w: f64| {
                let y = w.powf(1.0 / s);
                density_h(pp, x, y).unwrap() * y.powf(1.0 - s) / s
            },
            0.0,
            t.powf(s),
            &q,
            "cdf",
        )
        .unwrap();
        assert!((survival_l(pp, t, x).unwrap() - oracle).abs() < 1e-7);
    }

    #[test]
    fn density_is_minus_survival_slope() {
        let q = QuadSpec::default();
        let h = 1e-5;
        for &(a, b, t, x) in &[(1.0, 1.0, 1.0, 0.7), (2.0, 0.5, 3.0, 0.4), (0.7, 3.0, 0.2, 1.1)] {
            let pp = p(a, b);
            let fd = -(survival_l(pp, t, x + h).unwrap() - survival_l(pp, t, x - h).unwrap()) / (2.0 * h);
            assert!((density_l(pp, t, x, &q).unwrap() - fd).abs() < 1e-6, "({a},{b},{t},{x})");
        }
    }

    #[test]
    fn density_continuous_across_integer_shapes() {
        let q = QuadSpec::default();
        let pp = p(1.0, 1.0);
        for &x in &[1.0, 2.0] {
            let lo = density_l(pp, 1.5, x - 1e-7, &q).unwrap();
            let mid = density_l(pp, 1.5, x, &q).unwrap();
            let hi = density_l(pp, 1.5, x + 1e-7, &q).unwrap();
            assert!((lo - mid).abs() < 1e-6 && (hi - mid).abs() < 1e-6);
        }
    }

    #[test]
    fn density_at_origin_is_levy_tail() {
        let q = QuadSpec::default();
        let pp = p(1.0, 1.0);
        let tail = levy_tail(pp, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for &x in &[1e-2, 1e-3, 1e-4] {
            let gap = (density_l(pp, 1.0, x, &q).unwrap() - tail).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn ell_values() {
        let pp = p(1.0, 1.0);
        assert!((kernel_ell(pp, 1.0).unwrap() - levy_tail(pp, 1.0).unwrap()).abs() < 1e-16);
        assert!(kernel_ell(pp, 0.0).is_err());
    }

    #[test]
    fn laplace_of_density_closed_form() {
        let v = laplace_l_in_t(p(1.0, 1.0), E - 1.0, 1.0).unwrap();
        assert!((v - (-1.0f64).exp() / (E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn sonine_pair_convolves_to_one() {
        let q = QuadSpec::default();
        for &(a, b) in &[(1.0, 1.0), (2.0, 0.5), (0.7, 3.0)] {
            let v = sonine_convolution(p(a, b), 1.0, &q).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "({a},{b}): {v}");
        }
    }

    #[test]
    fn moment_forms_agree() {
        for &(a, b, t, q) in &[(1.0, 1.0, 2.0, 1.0), (2.0, 0.5, 1.0, 2.5)] {
            let vals: Vec<f64> = MomentKind::ALL
                .iter()
                .map(|&k| moments_l(p(a, b), t, q, &MomentRepresentation::new(k)).unwrap())
                .collect();
            for i in 0..3 {
                for j in 0..i {
                    assert!((vals[i] - vals[j]).abs() < 1e-7 * vals[j], "{vals:?}");
                }
            }
        }
        let rep = MomentRepresentation::new(MomentKind::SeriesMu);
        let m = moments_l(p(1.0, 1.0), 1.0, 1.0, &rep).unwrap();
        let nu = mean_l_nu_series(p(1.0, 1.0), 1.0, &rep.series, &rep.quad).unwrap();
        assert!((m - nu).abs() < 1e-8 * m);
        assert!(moments_l(p(1.0, 1.0), 1.0, 0.5, &rep).is_err());
    }

    #[test]
    fn laplace_functional_forms_agree() {
        let s = SeriesSpec::default();
        let q = QuadSpec::default();
        let pp = p(1.0, 1.0);
        let series = laplace_functional_u(pp, 1.0, 1.0, LaplaceFunctionalForm::NuSeries, &s, &q).unwrap();
        let integral = laplace_functional_u(pp, 1.0, 1.0, LaplaceFunctionalForm::NuIntegral, &s, &q).unwrap();
        assert!((series - integral).abs() < 1e-9);
        assert!(series > 0.0 && series < 1.0);
        assert_eq!(laplace_functional_u(pp, 0.0, 1.0, LaplaceFunctionalForm::Auto, &s, &q).unwrap(), 1.0);
        assert_eq!(laplace_functional_u(pp, 2.0, 0.0, LaplaceFunctionalForm::Auto, &s, &q).unwrap(), 1.0);
    }
}
