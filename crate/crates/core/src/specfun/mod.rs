//! Scalar special functions: gamma family, digamma, incomplete gamma and
//! incomplete digamma, the exponential integral E1, and the Volterra
//! functions ν and μ.

mod volterra;

pub use volterra::{
    exp_weighted_mu_integral, mu_derivative_check, nu_shift_series, nu_via_incomplete_gamma,
    volterra_mu, volterra_nu, VolterraArgs,
};
pub(crate) use volterra::ln_mu;


use std::f64::consts::PI;

use crate::error::{require_positive, Error, Result};
use crate::quad::{integrate_with_breaks, QuadSpec};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        return ln_gamma_positive(x + 1.0) - x.ln();
    }
    if x >= 10.0 {
        let r = 1.0 / x;
        let r2 = r * r;
        let series = r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 / 1680.0)));
        return (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series;
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + 7.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// sin(πx) with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - x.round();
    let s = (PI * r).sin();
    if (x.round() as i64).rem_euclid(2) == 0 {
        s
    } else {
        -s
    }
}

/// ln Γ(x) for x > 0; `+∞` at 0 and NaN for negative arguments.
pub fn ln_gamma(x: f64) -> f64 {
    if x > 0.0 {
        ln_gamma_positive(x)
    } else if x == 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    }
}

/// ln |Γ(x)| and the sign of Γ(x) for any real x that is not a pole.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x > 0.0 {
        return (ln_gamma_positive(x), 1.0);
    }
    let s = sin_pi(x);
    if s == 0.0 {
        return (f64::INFINITY, 1.0);
    }
    (
        PI.ln() - s.abs().ln() - ln_gamma_positive(1.0 - x),
        s.signum(),
    )
}

/// Γ(x) for any real x; infinite at the poles.
pub fn gamma(x: f64) -> f64 {
    let (l, s) = ln_gamma_signed(x);
    s * l.exp()
}

/// 1/Γ(x), an entire function vanishing at the non-positive integers.
pub fn rgamma(x: f64) -> f64 {
    let (l, s) = ln_gamma_signed(x);
    s * (-l).exp()
}

fn digamma_unchecked(mut x: f64) -> f64 {
    if x <= 0.0 {
        // reflection; caller guarantees x is not a pole
        return digamma_unchecked(1.0 - x) - PI / (PI * x).tan();
    }
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / x;
    let r2 = r * r;
    let tail = r2
        * (1.0 / 12.0
            - r2 * (1.0 / 120.0
                - r2 * (1.0 / 252.0
                    - r2 * (1.0 / 240.0
                        - r2 * (1.0 / 132.0 - r2 * (691.0 / 32_760.0 - r2 / 12.0))))));
    acc + x.ln() - 0.5 * r - tail
}

/// ψ0 for any real argument except the poles; used for log-derivatives of 1/Γ.
pub(crate) fn digamma_any(x: f64) -> f64 {
    digamma_unchecked(x)
}

/// Digamma function ψ0(z) = Γ'(z)/Γ(z), z > 0.
pub fn digamma(z: f64) -> Result<f64> {
    require_positive("digamma", "z", z)?;
    Ok(digamma_unchecked(z))
}

/// Trigamma function ψ1(x) for x > 0.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / x;
    let r2 = r * r;
    let tail = r
        + 0.5 * r2
        + r * r2
            * (1.0 / 6.0
                - r2 * (1.0 / 30.0
                    - r2 * (1.0 / 42.0 - r2 * (1.0 / 30.0 - r2 * (5.0 / 66.0 - r2 * 691.0 / 2730.0)))));
    acc + tail
}

const ITMAX: usize = 1_000_000;

/// (P(a,x), Q(a,x)), the regularized lower and upper incomplete gamma functions.
pub(crate) fn gamma_pq(a: f64, x: f64) -> Result<(f64, f64)> {
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let ln_pref = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..ITMAX {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-17 {
                let p = (sum.ln() + ln_pref).exp();
                return Ok((p, 1.0 - p));
            }
        }
        Err(Error::Series {
            context: format!("incomplete gamma series at a={a}, x={x}"),
            terms: ITMAX,
            last_term: del,
        })
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..ITMAX {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                let q = (h.ln() + ln_pref).exp();
                return Ok((1.0 - q, q));
            }
        }
        Err(Error::Series {
            context: format!("incomplete gamma continued fraction at a={a}, x={x}"),
            terms: ITMAX,
            last_term: h,
        })
    }
}

fn check_incomplete_args(function: &'static str, a: f64, z: f64) -> Result<()> {
    require_positive(function, "a", a)?;
    if z.is_nan() || z < 0.0 {
        return Err(Error::domain(function, format!("z must be nonnegative, got {z}")));
    }
    Ok(())
}

/// Regularized lower incomplete gamma P(a,z) = γ(a,z)/Γ(a).
pub fn regularized_gamma_p(a: f64, z: f64) -> Result<f64> {
    check_incomplete_args("regularized_gamma_p", a, z)?;
    Ok(gamma_pq(a, z)?.0)
}

/// Regularized upper incomplete gamma Q(a,z) = 1 − P(a,z).
pub fn regularized_gamma_q(a: f64, z: f64) -> Result<f64> {
    check_incomplete_args("regularized_gamma_q", a, z)?;
    Ok(gamma_pq(a, z)?.1)
}

/// Lower incomplete gamma γ(a,z) = ∫₀^z e^{−y} y^{a−1} dy.
pub fn lower_incomplete_gamma(a: f64, z: f64) -> Result<f64> {
    check_incomplete_args("lower_incomplete_gamma", a, z)?;
    let p = gamma_pq(a, z)?.0;
    if p == 0.0 {
        return Ok(0.0);
    }
    Ok((p.ln() + ln_gamma(a)).exp())
}

/// Exponential integral E1(x) = ∫ₓ^∞ e^{−z}/z dz.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    require_positive("exp_integral_e1", "x", x)?;
    Ok(e1_unchecked(x))
}

pub(crate) fn e1_unchecked(x: f64) -> f64 {
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x / kf;
            let add = -term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else if x > 745.0 {
        0.0
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Gamma-weighted integral on the log scale:
/// `(1/Γ(s)) ∫ y^{s−1} e^{−y} g(ln y) dy` over `y ∈ (e^{u_lo}, e^{u_hi})`,
/// with `u_lo = −∞` and `u_hi = +∞` allowed.
pub(crate) fn gamma_log_weighted<G>(
    s: f64,
    u_lo: f64,
    u_hi: f64,
    g: G,
    quad: &QuadSpec,
    context: &str,
) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    const SPAN: f64 = 72.0;
    let w = |u: f64| s * u - u.exp();
    let mode = s.ln();
    let peak = mode.clamp(u_lo, u_hi);
    let w_star = w(peak);
    let lo = if u_lo.is_finite() {
        u_lo
    } else {
        peak - 1.0 - (SPAN + peak.exp()) / s
    };
    let hi = if u_hi.is_finite() {
        u_hi
    } else {
        let mut u = peak.max(mode);
        let mut stepu = 0.25;
        while w(u) - w_star > -SPAN {
            u += stepu;
            stepu *= 1.5;
        }
        u
    };
    if !(hi > lo) {
        return Ok(0.0);
    }
    let lo = lo.max(peak - 1.0 - (SPAN + peak.exp()) / s);
    let breaks = [peak, peak - 1.0, peak + 1.0, peak - 1.0 / s, peak - 10.0 / s];
    let r = integrate_with_breaks(
        |u| (w(u) - w_star).exp() * g(u),
        lo,
        hi,
        &breaks,
        quad,
        context,
    )?;
    Ok(r.value * (w_star - ln_gamma(s)).exp())
}

/// Incomplete digamma Ψ0(a,z) = ∫₀^z y^{a−1}e^{−y} ln y dy / γ(a,z).
pub fn incomplete_digamma(a: f64, z: f64, quad: &QuadSpec) -> Result<f64> {
    require_positive("incomplete_digamma", "a", a)?;
    require_positive("incomplete_digamma", "z", z)?;
    let u_hi = z.ln();
    let num = gamma_log_weighted(a, f64::NEG_INFINITY, u_hi, |u| u, quad, "incomplete digamma numerator")?;
    let den = gamma_log_weighted(a, f64::NEG_INFINITY, u_hi, |_| 1.0, quad, "incomplete digamma denominator")?;
    if den == 0.0 {
        return Err(Error::Range {
            function: "incomplete_digamma",
            message: format!("γ({a},{z}) underflows"),
        });
    }
    Ok(num / den)
}

/// P(s,z)·(ψ0(s) − Ψ0(s,z)), evaluated on whichever side of the gamma law avoids cancellation.
pub(crate) fn digamma_gap_weighted(s: f64, z: f64, quad: &QuadSpec) -> Result<f64> {
    let psi = digamma_unchecked(s);
    let u = z.ln();
    if z > s {
        gamma_log_weighted(s, u, f64::INFINITY, |v| v - psi, quad, "upper log-moment")
    } else {
        gamma_log_weighted(s, f64::NEG_INFINITY, u, |v| psi - v, quad, "lower log-moment")
    }
}
