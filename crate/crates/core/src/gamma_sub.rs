//! The gamma subordinator H: Laplace symbol, Lévy tail, transition density,
//! moments, time-Laplace transform of the density and the potential density κ.

use crate::error::{require_finite, require_positive, Error, Result};
use crate::quad::QuadSpec;
use crate::specfun::{digamma, e1_unchecked, exp_weighted_mu_integral, gamma_pq, ln_gamma, ln_mu};

/// Parameters of the symbol Φ(λ) = a ln(1 + λ/b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    pub a: f64,
    pub b: f64,
}

impl GammaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let p = GammaParams { a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("GammaParams", "a", self.a)?;
        require_positive("GammaParams", "b", self.b)
    }
}

impl Default for GammaParams {
    fn default() -> Self {
        GammaParams { a: 1.0, b: 1.0 }
    }
}

/// One evaluation of the density h(t,x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPoint {
    pub t: f64,
    pub x: f64,
    pub value: f64,
    /// Set when the density diverges at the evaluation point.
    pub singular: bool,
}

/// Φ(λ) = a ln(1 + λ/b).
pub fn symbol_phi(p: GammaParams, lambda: f64) -> Result<f64> {
    p.validate()?;
    if !(lambda >= 0.0) {
        return Err(Error::domain("symbol_phi", format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(p.a * (lambda / p.b).ln_1p())
}

/// Π̄(t) = a E1(bt), the tail of the Lévy measure.
pub fn levy_tail(p: GammaParams, t: f64) -> Result<f64> {
    p.validate()?;
    require_positive("levy_tail", "t", t)?;
    Ok(p.a * e1_unchecked(p.b * t))
}

/// ∫₀^y Π̄(s) ds = a[y E1(by) + (1 − e^{−by})/b].
pub fn tail_integral(p: GammaParams, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let by = p.b * y;
    p.a * (y * e1_unchecked(by) - (-by).exp_m1() / p.b)
}

/// ∫₀^y s Π̄(s) ds = a[(y²/2) E1(by) − e^{−by}(y/b + 1/b²)/2 + 1/(2b²)].
pub fn tail_first_moment(p: GammaParams, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let (a, b) = (p.a, p.b);
    let by = b * y;
    // 1 − e^{−by}(1 + by) without cancellation for small by
    let gap = if by < 1e-3 {
        by * by * (0.5 - by / 3.0 + by * by / 8.0)
    } else {
        1.0 - (-by).exp() * (1.0 + by)
    };
    a * (0.5 * y * y * e1_unchecked(by) + gap / (2.0 * b * b))
}

fn density_h_checked(p: GammaParams, t: f64, x: f64) -> Result<(f64, bool)> {
    p.validate()?;
    require_positive("density_h", "t", t)?;
    require_finite("density_h", "x", x)?;
    let s = p.a * t;
    if x < 0.0 {
        return Ok((0.0, false));
    }
    if x == 0.0 {
        return Ok(if s < 1.0 {
            (f64::INFINITY, true)
        } else if s == 1.0 {
            (p.b, false)
        } else {
            (0.0, false)
        });
    }
    let l = s * p.b.ln() + (s - 1.0) * x.ln() - p.b * x - ln_gamma(s);
    Ok((l.exp(), false))
}

/// h(t,x) = b^{at} x^{at−1} e^{−bx}/Γ(at) for x > 0, zero for x < 0 and
/// `+∞` at x = 0 when at < 1.
pub fn density_h(p: GammaParams, t: f64, x: f64) -> Result<f64> {
    density_h_checked(p, t, x).map(|(v, _)| v)
}

pub fn density_h_point(p: GammaParams, t: f64, x: f64) -> Result<DensityPoint> {
    let (value, singular) = density_h_checked(p, t, x)?;
    Ok(DensityPoint {
        t,
        x,
        value,
        singular,
    })
}

/// P(H_t ≤ x) = P(at, bx).
pub fn cdf_h(p: GammaParams, t: f64, x: f64) -> Result<f64> {
    p.validate()?;
    require_positive("cdf_h", "t", t)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_pq(p.a * t, p.b * x)?.0)
}

/// E e^{−λH_t} = (b/(λ+b))^{at}.
pub fn laplace_h_in_x(p: GammaParams, t: f64, lambda: f64) -> Result<f64> {
    p.validate()?;
    require_positive("laplace_h_in_x", "t", t)?;
    if !(lambda >= 0.0) {
        return Err(Error::domain("laplace_h_in_x", format!("lambda must be >= 0, got {lambda}")));
    }
    Ok((-p.a * t * (lambda / p.b).ln_1p()).exp())
}

/// E H_t^q = Γ(at+q)/(b^q Γ(at)), q ≥ 1.
pub fn moments_h(p: GammaParams, t: f64, q: f64) -> Result<f64> {
    p.validate()?;
    require_positive("moments_h", "t", t)?;
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::domain("moments_h", format!("moment order must be >= 1, got {q}")));
    }
    let s = p.a * t;
    Ok((ln_gamma(s + q) - ln_gamma(s) - q * p.b.ln()).exp())
}

/// ∂h/∂t = a h(t,x) [ln x + ln b − ψ0(at)].
pub fn h_time_derivative(p: GammaParams, t: f64, x: f64) -> Result<f64> {
    require_positive("h_time_derivative", "x", x)?;
    let h = density_h(p, t, x)?;
    Ok(p.a * h * (x.ln() + p.b.ln() - digamma(p.a * t)?))
}

/// ∫₀^∞ e^{−λt} h(t,x) dt = e^{−bx}(b/a) e^{−λ/a} ν(bx e^{−λ/a}, −1).
pub fn h_laplace_in_t(p: GammaParams, lambda: f64, x: f64, quad: &QuadSpec) -> Result<f64> {
    p.validate()?;
    require_positive("h_laplace_in_t", "x", x)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain("h_laplace_in_t", format!("lambda must be positive, got {lambda}")));
    }
    let shift = lambda / p.a;
    let (l, s) = ln_mu(p.b * x * (-shift).exp(), 0.0, -1.0, quad)?;
    Ok(s * (l - p.b * x + (p.b / p.a).ln() - shift).exp())
}

/// κ(x) = (b/a) e^{−bx} ν(bx, −1), the potential density ∫₀^∞ h(t,x) dt.
pub fn potential_kappa(p: GammaParams, x: f64, quad: &QuadSpec) -> Result<f64> {
    p.validate()?;
    require_positive("potential_kappa", "x", x)?;
    let (l, s) = ln_mu(p.b * x, 0.0, -1.0, quad)?;
    Ok(s * (l - p.b * x + (p.b / p.a).ln()).exp())
}

/// ∫₀^x κ(y) dy, the expected time H spends below x.
pub fn potential_cumulative(p: GammaParams, x: f64, quad: &QuadSpec) -> Result<f64> {
    p.validate()?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(exp_weighted_mu_integral(p.b, p.b, 0.0, -1.0, x, quad)? * p.b / p.a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_semi_infinite};
    use crate::specfun::{digamma as psi, EULER_GAMMA};
    use std::f64::consts::{E, PI};

    fn p11() -> GammaParams {
        GammaParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn symbol_values() {
        assert_eq!(symbol_phi(p11(), 0.0).unwrap(), 0.0);
        assert!((symbol_phi(p11(), E - 1.0).unwrap() - 1.0).abs() < 1e-15);
        let p = GammaParams::new(2.0, 3.0).unwrap();
        assert!((symbol_phi(p, 3.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!(symbol_phi(p, -1.0).is_err());
        assert!(GammaParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn tail_antiderivatives_match_quadrature() {
        let q = QuadSpec {
            abs_tol: 1e-22,
            ..QuadSpec::default()
        };
        let p = GammaParams::new(1.3, 0.7).unwrap();
        for &y in &[1e-4, 0.2, 1.0, 5.0] {
            let f0 = integrate(|s| levy_tail(p, s).unwrap(), 0.0, y, &q, "F0").unwrap();
            assert!((tail_integral(p, y) - f0).abs() < 1e-10 * f0);
            let f1 = integrate(|s| s * levy_tail(p, s).unwrap(), 0.0, y, &q, "F1").unwrap();
            assert!((tail_first_moment(p, y) - f1).abs() < 1e-10 * f1, "y={y}");
        }
    }

    #[test]
    fn density_values_and_support() {
        assert!((density_h(p11(), 1.0, 0.5).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(density_h(GammaParams::new(2.0, 3.0).unwrap(), 1.0, -1.0).unwrap(), 0.0);
        let v = density_h(p11(), 0.5, 1.0).unwrap();
        assert!((v - (-1.0f64).exp() / PI.sqrt()).abs() < 1e-15);
        let pt = density_h_point(p11(), 0.5, 0.0).unwrap();
        assert!(pt.singular && pt.value.is_infinite());
        assert!(!density_h_point(p11(), 1.5, 0.0).unwrap().singular);
    }

    #[test]
    fn density_is_normalized() {
        let q = QuadSpec::default();
        for &t in &[0.3, 1.0, 5.0] {
            let s = t;
            // x = w^{1/s} removes the x^{s−1} singularity at the origin
            let head = integrate(
                |w: f64| {
                    let x = w.powf(1.0 / s);
                    (-x).exp() / (s * ln_gamma(s).exp())
                },
                0.0,
                1.0,
                &q,
                "head",
            )
            .unwrap();
            let tail =
                integrate_semi_infinite(|x| density_h(p11(), t, x).unwrap(), 1.0, 1.0, &q, "tail").unwrap();
            assert!((head + tail - 1.0).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn laplace_in_space() {
        assert!((laplace_h_in_x(p11(), 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let p = GammaParams::new(2.0, 1.0).unwrap();
        assert!((laplace_h_in_x(p, 0.75, 3.0).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(laplace_h_in_x(p, 0.75, 0.0).unwrap(), 1.0);
        let q = QuadSpec::default();
        let num = integrate_semi_infinite(
            |x| (-2.0 * x).exp() * density_h(p, 1.5, x).unwrap(),
            0.0,
            1.0,
            &q,
            "laplace",
        )
        .unwrap();
        assert!((num - laplace_h_in_x(p, 1.5, 2.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn moments() {
        assert!((moments_h(p11(), 1.0, 2.0).unwrap() - 2.0).abs() < 1e-14);
        let p = GammaParams::new(2.0, 3.0).unwrap();
        assert!((moments_h(p, 1.7, 1.0).unwrap() - 2.0 * 1.7 / 3.0).abs() < 1e-14);
        assert!(moments_h(p, 1.0, 0.5).is_err());
    }

    #[test]
    fn time_derivative() {
        let v = h_time_derivative(p11(), 1.0, 1.0).unwrap();
        assert!((v - (-1.0f64).exp() * EULER_GAMMA).abs() < 1e-15);
        let step = 1e-5;
        for &(t, x) in &[(2.0, 0.5), (0.4, 1.3), (3.0, 2.0)] {
            let fd = (density_h(p11(), t + step, x).unwrap() - density_h(p11(), t - step, x).unwrap())
                / (2.0 * step);
            assert!((fd - h_time_derivative(p11(), t, x).unwrap()).abs() < 1e-5);
        }
        let p = GammaParams::new(1.0, 1.0).unwrap();
        for &t in &[1e-2, 1e-3] {
            let v = density_h(p, t, 1.0).unwrap() * psi(t).unwrap();
            assert!((v + (-1.0f64).exp()).abs() < 2.0 * t);
        }
    }

    #[test]
    fn density_vanishes_for_extreme_times() {
        assert!(density_h(p11(), 1e-3, 1.0).unwrap() < 1e-3);
        assert!(density_h(p11(), 1e3, 1.0).unwrap() < 1e-300);
    }

    #[test]
    fn potential_is_time_integral_of_density() {
        let q = QuadSpec::default();
        let p = p11();
        // h(t,1) = e^{-1}/Γ(t) for a = b = 1
        let oracle = integrate_semi_infinite(
            |t| (-1.0f64).exp() * crate::specfun::rgamma(t),
            0.0,
            1.0,
            &q,
            "kappa oracle",
        )
        .unwrap();
        let k = potential_kappa(p, 1.0, &q).unwrap();
        assert!((k - oracle).abs() < 1e-9 * oracle);
        for &x in &[0.01, 0.1, 1.0, 10.0] {
            assert!(potential_kappa(p, x, &q).unwrap() > 0.0);
        }
    }

    #[test]
    fn h_laplace_in_t_matches_quadrature() {
        let q = QuadSpec::default();
        let p = GammaParams::new(1.5, 0.8).unwrap();
        for &(lambda, x) in &[(1.0, 1.0), (0.3, 2.0), (4.0, 0.2)] {
            let oracle = integrate_semi_infinite(
                |t| (-lambda * t).exp() * density_h(p, t, x).unwrap(),
                0.0,
                1.0,
                &q,
                "time laplace",
            )
            .unwrap();
            let v = h_laplace_in_t(p, lambda, x, &q).unwrap();
            assert!((v - oracle).abs() < 1e-8 * oracle, "λ={lambda} x={x}");
        }
        let near_zero = h_laplace_in_t(p, 1e-6, 0.7, &q).unwrap();
        let kappa = potential_kappa(p, 0.7, &q).unwrap();
        assert!((near_zero - kappa).abs() < 1e-4 * kappa);
    }

    #[test]
    fn potential_cumulative_matches_quadrature() {
        let q = QuadSpec::default();
        let p = GammaParams::new(2.0, 0.5).unwrap();
        let (x0, x1) = (0.05, 1.5);
        let k0 = potential_cumulative(p, x0, &q).unwrap();
        let k1 = potential_cumulative(p, x1, &q).unwrap();
        let between = integrate(|y| potential_kappa(p, y, &q).unwrap(), x0, x1, &q, "kappa").unwrap();
        assert!((k1 - k0 - between).abs() < 1e-9 * between);
        let h = 1e-5;
        let fd = (potential_cumulative(p, 0.7 + h, &q).unwrap() - potential_cumulative(p, 0.7 - h, &q).unwrap())
            / (2.0 * h);
        assert!((fd - potential_kappa(p, 0.7, &q).unwrap()).abs() < 1e-6);
    }
}
