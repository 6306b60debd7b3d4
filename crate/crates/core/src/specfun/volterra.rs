//! Volterra functions μ(x,β,α) = ∫₀^∞ x^{α+y} y^β / (Γ(β+1)Γ(α+y+1)) dy and ν(x,α) = μ(x,0,α).

use super::{digamma_any, gamma_pq, ln_gamma, ln_gamma_signed, trigamma};
use crate::error::{require_finite, require_positive, Error, Result};
use crate::quad::{
    integrate_semi_infinite, integrate_with_breaks, sum_series, ErrSlot, QuadSpec, SeriesSpec,
};

/// Arguments of μ(x,β,α).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraArgs {
    pub x: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl VolterraArgs {
    pub fn new(x: f64, beta: f64, alpha: f64) -> Self {
        VolterraArgs { x, alpha, beta }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("volterra_mu", "x", self.x)?;
        require_finite("volterra_mu", "alpha", self.alpha)?;
        if !(self.beta > -1.0 && self.beta.is_finite()) {
            return Err(Error::domain(
                "volterra_mu",
                format!("beta must exceed -1, got {}", self.beta),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Integrand {
    ln_x: f64,
    alpha: f64,
    beta: f64,
    ln_gamma_beta: f64,
}

impl Integrand {
    /// Log-magnitude and sign of x^{α+y} y^β / (Γ(β+1)Γ(α+y+1)).
    fn ln_term(&self, y: f64) -> (f64, f64) {
        let (lg, sign) = ln_gamma_signed(self.alpha + y + 1.0);
        let pow = if self.beta == 0.0 { 0.0 } else { self.beta * y.ln() };
        ((self.alpha + y) * self.ln_x + pow - self.ln_gamma_beta - lg, sign)
    }

    /// Same without the y^β factor when β < 0, used to locate the bulk.
    fn ln_bulk(&self, y: f64) -> f64 {
        let (lg, _) = ln_gamma_signed(self.alpha + y + 1.0);
        let pow = if self.beta > 0.0 { self.beta * y.ln() } else { 0.0 };
        (self.alpha + y) * self.ln_x + pow - self.ln_gamma_beta - lg
    }

    fn slope(&self, y: f64) -> f64 {
        let b = self.beta.max(0.0);
        let pow = if b > 0.0 { b / y } else { 0.0 };
        self.ln_x + pow - digamma_any(self.alpha + y + 1.0)
    }
}

/// ln|μ(x,β,α)| and the sign of μ.
pub(crate) fn ln_mu(x: f64, beta: f64, alpha: f64, quad: &QuadSpec) -> Result<(f64, f64)> {
    VolterraArgs::new(x, beta, alpha).validate()?;
    let g = Integrand {
        ln_x: x.ln(),
        alpha,
        beta,
        ln_gamma_beta: ln_gamma(beta + 1.0),
    };

    // Γ(α+y+1) has poles for y < y_start.
    let y_start = (-alpha - 1.0).max(0.0);
    let probe = y_start + 1e-9 * (1.0 + y_start);
    let mode = if g.slope(probe) <= 0.0 {
        y_start
    } else {
        let mut hi = y_start + 1.0;
        while g.slope(hi) > 0.0 {
            hi = y_start + 2.0 * (hi - y_start);
        }
        let mut lo = probe;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g.slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 * (1.0 + hi) {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let curvature = if mode > y_start {
        trigamma(alpha + mode + 1.0) + beta.max(0.0) / (mode * mode)
    } else {
        let d = g.slope(probe.max(1e-300)).abs();
        d * d
    };
    let sigma = (1.0 / curvature.max(1e-12).sqrt()).clamp(1e-6, 1e6);

    let mut w_star = g.ln_bulk(mode.max(1e-300));
    let mut poles = Vec::new();
    if y_start > 0.0 {
        let mut k = 0.0;
        while -alpha - 1.0 - k > 0.0 {
            let p = -alpha - 1.0 - k;
            poles.push(p);
            if p > 0.5 {
                w_star = w_star.max(g.ln_bulk(p - 0.5));
            }
            k += 1.0;
        }
        w_star = w_star.max(g.ln_bulk(1e-3f64.min(y_start * 0.5)));
    }
    if !w_star.is_finite() {
        w_star = 0.0;
    }

    // concave tail beyond the mode: ∫_Y^∞ e^{L} ≤ e^{L(Y)}/|L'(Y)|
    let tail_target = quad.upper_cutoff_tol * sigma.min(1.0) * 1e-2;
    let mut upper = mode + 8.0 * sigma + 1.0;
    let mut stride = sigma.max(1.0);
    for _ in 0..10_000 {
        let l = g.ln_bulk(upper) - w_star;
        let d = g.slope(upper);
        if d < 0.0 && l.exp() / d.abs().max(1e-3) < tail_target {
            break;
        }
        upper += stride;
        stride *= 1.5;
    }

    let mut breaks: Vec<f64> = vec![1.0, mode];
    for k in [0.5, 1.0, 3.0, 8.0] {
        breaks.push(mode - k * sigma);
        breaks.push(mode + k * sigma);
    }
    for k in 1..=6 {
        breaks.push(mode * 0.5f64.powi(k));
    }
    for k in 1..=12 {
        breaks.push(0.5f64.powi(k));
    }
    breaks.extend(&poles);
    breaks.retain(|&b| b > 0.0 && b < upper);

    let f = |y: f64| {
        let (l, s) = g.ln_term(y);
        s * (l - w_star).exp()
    };

    let integral = if beta < 0.0 {
        // y = v^{1/(1+β)} absorbs the y^β endpoint singularity on (0, 1]
        let split = 1.0f64.min(upper);
        let e = 1.0 / (1.0 + beta);
        let v_breaks: Vec<f64> = breaks
            .iter()
            .filter(|&&b| b < split)
            .map(|b| b.powf(1.0 + beta))
            .collect();
        let g0 = Integrand { beta: 0.0, ..g };
        let smooth = |v: f64| {
            let y = v.powf(e);
            let (l, s) = g0.ln_term(y);
            e * s * (l - w_star).exp()
        };
        let head = integrate_with_breaks(
            smooth,
            0.0,
            split.powf(1.0 + beta),
            &v_breaks,
            quad,
            "volterra mu head",
        )?;
        let tail = integrate_with_breaks(f, split, upper, &breaks, quad, "volterra mu")?;
        head.value + tail.value
    } else {
        integrate_with_breaks(f, 0.0, upper, &breaks, quad, "volterra mu")?.value
    };
    if integral == 0.0 {
        return Ok((f64::NEG_INFINITY, 1.0));
    }
    Ok((w_star + integral.abs().ln(), integral.signum()))
}

/// μ(x,β,α), computed on the log scale and exponentiated once.
pub fn volterra_mu(args: VolterraArgs, quad: &QuadSpec) -> Result<f64> {
    let (l, s) = ln_mu(args.x, args.beta, args.alpha, quad)?;
    if l > 709.0 {
        return Err(Error::Range {
            function: "volterra_mu",
            message: format!("μ({}, {}, {}) overflows", args.x, args.beta, args.alpha),
        });
    }
    Ok(s * l.exp())
}

/// ν(x,α) = μ(x,0,α).
pub fn volterra_nu(x: f64, alpha: f64, quad: &QuadSpec) -> Result<f64> {
    volterra_mu(VolterraArgs::new(x, 0.0, alpha), quad)
}

/// ν(x,α) through e^x ∫_α^{α+1} γ(y,x)/Γ(y) dy, defined here for α ≥ 0.
pub fn nu_via_incomplete_gamma(x: f64, alpha: f64, quad: &QuadSpec) -> Result<f64> {
    require_positive("nu_via_incomplete_gamma", "x", x)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::domain(
            "nu_via_incomplete_gamma",
            format!("alpha must be nonnegative, got {alpha}"),
        ));
    }
    let slot = ErrSlot::new();
    let r = integrate_with_breaks(
        |y| slot.wrap(gamma_pq(y, x).map(|(p, _)| p)),
        alpha,
        alpha + 1.0,
        &[],
        quad,
        "incomplete gamma form of nu",
    );
    let r = slot.finish(r)?;
    Ok(x.exp() * r.value)
}

/// n-th derivative of x ↦ μ(x,β,α), which equals μ(x,β,α−n).
pub fn mu_derivative_check(x: f64, beta: f64, alpha: f64, n: u32, quad: &QuadSpec) -> Result<f64> {
    volterra_mu(VolterraArgs::new(x, beta, alpha - n as f64), quad)
}

/// Σ_{k≥0} θ^k μ(x,k,α).
pub fn nu_shift_series(
    x: f64,
    alpha: f64,
    theta: f64,
    series: &SeriesSpec,
    quad: &QuadSpec,
) -> Result<f64> {
    require_positive("nu_shift_series", "x", x)?;
    require_finite("nu_shift_series", "theta", theta)?;
    if theta == 0.0 {
        return volterra_nu(x, alpha, quad);
    }
    sum_series(
        |k| {
            let (l, s) = ln_mu(x, k as f64, alpha, quad)?;
            Ok(s * theta.signum().powi(k as i32) * (l + k as f64 * theta.abs().ln()).exp())
        },
        series,
        "shift series of nu",
    )
}

/// ∫₀^X e^{−ρs} μ(cs,β,α) ds for α ≥ −1, with X = ∞ allowed when ρ > c.
///
/// Integrates by parts through d/ds μ(cs,β,α+1) = c μ(cs,β,α) until the
/// order reaches 1, which removes the singularity of low orders at s = 0.
pub fn exp_weighted_mu_integral(
    rho: f64,
    c: f64,
    beta: f64,
    alpha: f64,
    upper: f64,
    quad: &QuadSpec,
) -> Result<f64> {
    require_positive("exp_weighted_mu_integral", "c", c)?;
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::domain("exp_weighted_mu_integral", format!("rho must be >= 0, got {rho}")));
    }
    if !(alpha >= -1.0) {
        return Err(Error::domain(
            "exp_weighted_mu_integral",
            format!("alpha must be >= -1, got {alpha}"),
        ));
    }
    if !(upper > 0.0) {
        return Err(Error::domain("exp_weighted_mu_integral", format!("upper limit must be positive, got {upper}")));
    }
    if upper.is_infinite() && rho <= c {
        return Err(Error::domain(
            "exp_weighted_mu_integral",
            format!("infinite range needs rho > c, got rho={rho}, c={c}"),
        ));
    }
    let inner = quad.tightened(1e-2);
    let mut acc = 0.0;
    let mut weight = 1.0;
    let mut order = alpha;
    while order < 1.0 {
        if upper.is_finite() {
            let (l, s) = ln_mu(c * upper, beta, order + 1.0, &inner)?;
            acc += weight * s * (l - rho * upper).exp() / c;
        }
        weight *= rho / c;
        order += 1.0;
    }
    if weight == 0.0 {
        return Ok(acc);
    }
    let slot = ErrSlot::new();
    let integrand = |s: f64| {
        slot.wrap(ln_mu(c * s, beta, order, &inner).map(|(l, sg)| sg * (l - rho * s).exp()))
    };
    let direct = if upper.is_finite() {
        let breaks: Vec<f64> = (1..=8).map(|k| upper * 0.5f64.powi(k)).collect();
        let r = integrate_with_breaks(integrand, 0.0, upper, &breaks, quad, "exp-weighted mu integral");
        slot.finish(r)?.value
    } else {
        let h0 = (1.0 / (rho - c)).min(1.0);
        let r = integrate_semi_infinite(integrand, 0.0, h0, quad, "exp-weighted mu integral");
        slot.finish(r)?
    };
    Ok(acc + weight * direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_semi_infinite};
    use crate::specfun::{gamma, EULER_GAMMA};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn brute_mu(x: f64, beta: f64, alpha: f64) -> f64 {
        let q = QuadSpec::default().tightened(0.1).with_subdivisions(2000);
        integrate_semi_infinite(
            |y: f64| x.powf(alpha + y) * y.powf(beta) / (gamma(beta + 1.0) * gamma(alpha + y + 1.0)),
            0.0,
            0.25,
            &q,
            "brute mu",
        )
        .unwrap()
    }

    #[test]
    fn mu_matches_brute_force() {
        let q = QuadSpec::default();
        for &(x, beta, alpha) in &[(1.0, 1.0, 0.0), (2.0, 0.0, 0.0), (0.3, 2.0, 1.5), (5.0, 0.5, -0.5)] {
            let v = volterra_mu(VolterraArgs::new(x, beta, alpha), &q).unwrap();
            assert!(rel(v, brute_mu(x, beta, alpha)) < 1e-9, "({x},{beta},{alpha})");
        }
    }

    #[test]
    fn mu_with_negative_beta() {
        let q = QuadSpec::default();
        let v = volterra_mu(VolterraArgs::new(1.5, -0.5, 0.0), &q).unwrap();
        let tight = QuadSpec::default().tightened(0.1).with_subdivisions(4000);
        // substitute y = v² to remove the y^{-1/2} singularity in the oracle
        let oracle = integrate_semi_infinite(
            |v: f64| 2.0 * 1.5f64.powf(v * v) / (gamma(0.5) * gamma(v * v + 1.0)),
            0.0,
            0.5,
            &tight,
            "oracle",
        )
        .unwrap();
        assert!(rel(v, oracle) < 1e-9);
    }

    #[test]
    fn nu_forms_agree() {
        let q = QuadSpec::default();
        for &(x, alpha) in &[(2.0, 0.0), (0.5, 1.0), (7.0, 2.5)] {
            let a = volterra_nu(x, alpha, &q).unwrap();
            let b = nu_via_incomplete_gamma(x, alpha, &q).unwrap();
            assert!(rel(a, b) < 1e-8, "x={x} alpha={alpha}: {a} vs {b}");
        }
        assert!(nu_via_incomplete_gamma(1.0, -0.5, &q).is_err());
    }

    #[test]
    fn nu_large_argument_does_not_overflow_in_log_form() {
        let q = QuadSpec::default();
        let (l, s) = ln_mu(900.0, 1.0, -1.0, &q).unwrap();
        assert_eq!(s, 1.0);
        assert!(l > 890.0 && l < 910.0);
        assert!(volterra_mu(VolterraArgs::new(900.0, 1.0, -1.0), &q).is_err());
    }

    #[test]
    fn nu_small_argument_asymptotic() {
        let q = QuadSpec::default();
        let mut prev = f64::INFINITY;
        for &x in &[1e-4, 1e-6, 1e-8] {
            let lx = f64::ln(x);
            let r = x * lx * lx * volterra_nu(x, -1.0, &q).unwrap();
            assert!(r > 1.0 && r < prev, "x={x}: {r}");
            assert!((r - 1.0) < 3.0 * EULER_GAMMA / lx.abs(), "x={x}: {r}");
            prev = r;
        }
    }

    #[test]
    fn derivative_lowers_order() {
        let q = QuadSpec::default().tightened(1e-2);
        let h = 1e-4;
        let mu = |x: f64, b: f64, a: f64| volterra_mu(VolterraArgs::new(x, b, a), &q).unwrap();
        let fd1 = (mu(1.0 + h, 0.0, 1.0) - mu(1.0 - h, 0.0, 1.0)) / (2.0 * h);
        assert!((fd1 - mu_derivative_check(1.0, 0.0, 1.0, 1, &q).unwrap()).abs() < 1e-7);
        let fd2 = (mu(2.0 + h, 1.0, 2.0) - 2.0 * mu(2.0, 1.0, 2.0) + mu(2.0 - h, 1.0, 2.0)) / (h * h);
        assert!((fd2 - mu_derivative_check(2.0, 1.0, 2.0, 2, &q).unwrap()).abs() < 1e-5);
        assert_eq!(mu_derivative_check(1.3, 0.5, 0.7, 0, &q).unwrap(), mu(1.3, 0.5, 0.7));
    }

    #[test]
    fn derivative_through_pole_region() {
        let q = QuadSpec::default().tightened(1e-2);
        let h = 1e-4;
        let mu = |x: f64| volterra_mu(VolterraArgs::new(x, 0.0, -0.5), &q).unwrap();
        let fd = (mu(1.5 + h) - mu(1.5 - h)) / (2.0 * h);
        let exact = mu_derivative_check(1.5, 0.0, -0.5, 1, &q).unwrap();
        assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "{fd} vs {exact}");
    }

    #[test]
    fn shift_series_identity() {
        let q = QuadSpec::default();
        let s = SeriesSpec::default();
        for &(x, alpha, theta) in &[(1.0, 0.0, 0.5), (0.5, 1.0, -0.3)] {
            let lhs = nu_shift_series(x, alpha, theta, &s, &q).unwrap();
            let rhs = (-alpha * theta).exp() * volterra_nu(x * f64::exp(theta), alpha, &q).unwrap();
            assert!(rel(lhs, rhs) < 1e-9, "({x},{alpha},{theta})");
        }
    }

    #[test]
    fn exp_weighted_integral_matches_direct_quadrature() {
        let q = QuadSpec::default();
        // ∫₀^2 e^{-s} μ(s,1,0) ds, regular at 0, by straightforward quadrature
        let direct = integrate(
            |s: f64| (-s).exp() * volterra_mu(VolterraArgs::new(s, 1.0, 0.0), &q.tightened(1e-2)).unwrap(),
            0.0,
            2.0,
            &q,
            "direct",
        )
        .unwrap();
        let v = exp_weighted_mu_integral(1.0, 1.0, 1.0, 0.0, 2.0, &q).unwrap();
        assert!(rel(v, direct) < 1e-9);
        // Laplace transform of ν(·,−1) at λ = 2: 1/ln 2
        let v = exp_weighted_mu_integral(2.0, 1.0, 0.0, -1.0, f64::INFINITY, &q).unwrap();
        assert!(rel(v, 1.0 / 2f64.ln()) < 1e-9, "{v}");
        assert!(exp_weighted_mu_integral(1.0, 1.0, 0.0, -1.0, f64::INFINITY, &q).is_err());
    }
}
