//! Discretized convolution-type non-local operators built from the gamma
//! symbol, and solvers for the space-nonlocal, time-nonlocal, Abel and
//! relaxation problems.
//!
//! Grid functions are sampled on a uniform mesh starting at 0 and are
//! interpreted as their piecewise-linear interpolant, extended by zero to the
//! negative half-line. All operators integrate that interpolant exactly
//! against the kernel.

use std::sync::Arc;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{require_nonnegative, require_positive, Error, Result};
use crate::gamma_sub::{
    cdf_h, levy_tail, potential_cumulative, potential_kappa, tail_first_moment, tail_integral,
    GammaParams,
};
use crate::inv_gamma::survival_l;
use crate::quad::{integrate, GaussLegendre, QuadSpec};
use crate::specfun::{e1_unchecked, gamma_pq};

/// Samples of a function on the uniform grid `0, Δ, 2Δ, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    pub step: f64,
    pub values: Vec<f64>,
    /// The function vanishes on the negative half-line.
    pub zero_extension: bool,
}

impl GridFn {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self> {
        let g = GridFn {
            step,
            values,
            zero_extension: true,
        };
        g.validate()?;
        Ok(g)
    }

    /// Samples `f` at `0, Δ, ..., ⌊X/Δ⌉Δ`.
    pub fn from_fn<F: FnMut(f64) -> f64>(step: f64, horizon: f64, mut f: F) -> Result<Self> {
        require_positive("GridFn", "step", step)?;
        require_positive("GridFn", "horizon", horizon)?;
        let n = (horizon / step).round() as usize;
        GridFn::new(step, (0..=n).map(|i| f(i as f64 * step)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!("grid step must be positive, got {}", self.step)));
        }
        if self.values.is_empty() {
            return Err(Error::Config("grid function has no samples".into()));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("grid value at index {i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| i as f64 * self.step).collect()
    }

    /// Piecewise-linear interpolant; zero left of the origin.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return if self.zero_extension {
                Ok(0.0)
            } else {
                Err(Error::Grid(format!("x = {x} lies left of the grid")))
            };
        }
        let pos = x / self.step;
        let last = self.values.len() - 1;
        if pos > last as f64 + 1e-9 {
            return Err(Error::Grid(format!(
                "x = {x} lies beyond the grid support [0, {}]",
                self.horizon()
            )));
        }
        let i = (pos.floor() as usize).min(last);
        if i == last {
            return Ok(self.values[last]);
        }
        let w = pos - i as f64;
        Ok(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }

    /// Node index of `x`, or `None` if `x` is not within rounding of a node.
    fn node_of(&self, x: f64) -> Option<usize> {
        let pos = x / self.step;
        let n = pos.round();
        ((pos - n).abs() < 1e-6 && n >= 0.0).then_some(n as usize)
    }
}

/// Named initial data for the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedDatum {
    Zero,
    /// 1 on (0, ∞); does not vanish at the origin.
    Indicator,
    /// min(x, 1).
    Ramp,
    /// x e^{−x}.
    XExp,
    /// e^{−x}; does not vanish at the origin.
    ExpDecay,
    /// 1 − e^{−x}.
    OneMinusExp,
    /// e^{−x} − e^{−2x}.
    ExpDiff,
}

impl NamedDatum {
    pub const ALL: [NamedDatum; 7] = [
        NamedDatum::Zero,
        NamedDatum::Indicator,
        NamedDatum::Ramp,
        NamedDatum::XExp,
        NamedDatum::ExpDecay,
        NamedDatum::OneMinusExp,
        NamedDatum::ExpDiff,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NamedDatum::Zero => "zero",
            NamedDatum::Indicator => "indicator",
            NamedDatum::Ramp => "ramp",
            NamedDatum::XExp => "xexp",
            NamedDatum::ExpDecay => "expdecay",
            NamedDatum::OneMinusExp => "one-minus-exp",
            NamedDatum::ExpDiff => "exp-diff",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        NamedDatum::ALL.into_iter().find(|d| d.name() == name)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            NamedDatum::Zero => 0.0,
            NamedDatum::Indicator => 1.0,
            NamedDatum::Ramp => x.min(1.0),
            NamedDatum::XExp => x * (-x).exp(),
            NamedDatum::ExpDecay => (-x).exp(),
            NamedDatum::OneMinusExp => -(-x).exp_m1(),
            NamedDatum::ExpDiff => (-x).exp() - (-2.0 * x).exp(),
        }
    }

    pub fn sample(&self, step: f64, horizon: f64) -> Result<GridFn> {
        GridFn::from_fn(step, horizon, |x| self.eval(x))
    }
}

/// Configuration of the space- and time-nonlocal problems.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalProblemSpec {
    pub params: GammaParams,
    pub step_space: f64,
    pub step_time: f64,
    pub horizon_time: f64,
    pub horizon_space: f64,
    pub initial_datum: GridFn,
    /// Accept a datum that does not vanish at the origin, such as the indicator of (0, ∞).
    pub relaxed_datum: bool,
    /// Solution rows are kept every `output_stride` time steps.
    pub output_stride: usize,
}

impl NonlocalProblemSpec {
    pub fn new(params: GammaParams, initial_datum: GridFn, step_time: f64, horizon_time: f64) -> Self {
        NonlocalProblemSpec {
            params,
            step_space: initial_datum.step,
            step_time,
            horizon_time,
            horizon_space: initial_datum.horizon(),
            initial_datum,
            relaxed_datum: false,
            output_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.initial_datum.validate()?;
        for (name, v) in [
            ("step_space", self.step_space),
            ("step_time", self.step_time),
            ("horizon_time", self.horizon_time),
            ("horizon_space", self.horizon_space),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if (self.initial_datum.step - self.step_space).abs() > 1e-12 * self.step_space {
            return Err(Error::Config(format!(
                "datum step {} differs from step_space {}",
                self.initial_datum.step, self.step_space
            )));
        }
        if self.initial_datum.horizon() + 1e-9 * self.step_space < self.horizon_space {
            return Err(Error::Grid(format!(
                "datum covers [0, {}] but the space horizon is {}",
                self.initial_datum.horizon(),
                self.horizon_space
            )));
        }
        if self.step_time > self.horizon_time {
            return Err(Error::Config("step_time exceeds horizon_time".into()));
        }
        if self.output_stride == 0 {
            return Err(Error::Config("output_stride must be >= 1".into()));
        }
        Ok(())
    }

    fn space_nodes(&self) -> usize {
        (self.horizon_space / self.step_space).round() as usize + 1
    }

    /// Times `kΔt` for the kept rows, including 0 and the horizon.
    pub fn output_times(&self) -> Vec<f64> {
        let steps = (self.horizon_time / self.step_time).round() as usize;
        let mut ks: Vec<usize> = (0..=steps).step_by(self.output_stride).collect();
        if *ks.last().unwrap() != steps {
            ks.push(steps);
        }
        ks.into_iter().map(|k| k as f64 * self.step_time).collect()
    }
}

/// A solution sampled at a list of times on a uniform space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub times: Vec<f64>,
    pub step_space: f64,
    /// `values[i][j]` is the solution at `times[i]` and `x = j Δx`.
    pub values: Vec<Vec<f64>>,
}

impl SpaceTimeField {
    pub fn row(&self, i: usize) -> GridFn {
        GridFn {
            step: self.step_space,
            values: self.values[i].clone(),
            zero_extension: true,
        }
    }

    /// Value at the kept time closest to `t` and interpolated in x.
    pub fn at(&self, t: f64, x: f64) -> Result<f64> {
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::Grid("empty field".into()))?;
        if (self.times[i] - t).abs() > 1e-9 * (1.0 + t) {
            return Err(Error::Grid(format!("time {t} is not a kept output time")));
        }
        self.row(i).eval(x)
    }
}

/// c[n] = Σ_{k=0}^{n} w[k] f[n−k] for n < min(len w, len f).
pub(crate) fn causal_convolve(w: &[f64], f: &[f64]) -> Vec<f64> {
    let n = w.len().min(f.len());
    if n == 0 {
        return Vec::new();
    }
    let nonneg = w[..n].iter().chain(&f[..n]).all(|&v| v >= 0.0);
    let mut out = if n <= 256 {
        (0..n)
            .map(|i| (0..=i).map(|k| w[k] * f[i - k]).sum())
            .collect::<Vec<f64>>()
    } else {
        fft_convolve(&w[..n], &f[..n])
    };
    if nonneg {
        // rounding in the transform can leave tiny negatives where the exact sum is zero
        for v in &mut out {
            *v = v.max(0.0);
        }
    }
    out
}

fn fft_convolve(w: &[f64], f: &[f64]) -> Vec<f64> {
    let n = w.len();
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd: Arc<dyn rustfft::Fft<f64>> = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let pack = |v: &[f64]| {
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(size, Complex::new(0.0, 0.0));
        buf
    };
    let mut a = pack(w);
    let mut b = pack(f);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    a[..n].iter().map(|c| c.re * scale).collect()
}

/// ∫₀^{x_n} f(x_n − y) m(dy) for the piecewise-linear interpolant of `f`, given the
/// cell moments m0_k = ∫_{cell k} m(dy) and m1_k = ∫_{cell k} (y − kΔ) m(dy).
fn product_convolve(f: &[f64], m0: &[f64], m1: &[f64], step: f64) -> Vec<f64> {
    let n = f.len();
    let w0: Vec<f64> = m0.iter().zip(m1).map(|(a, b)| a - b / step).collect();
    let w1: Vec<f64> = m1.iter().map(|b| b / step).collect();
    let c0 = causal_convolve(&w0, f);
    let c1 = causal_convolve(&w1, f);
    let mut out = vec![0.0; n];
    for i in 1..n {
        out[i] = c0[i] - w0[i] * f[0] + c1[i - 1];
    }
    out
}

const GL_SWITCH: usize = 8;

/// Cell weights of the tail kernel on `[kΔ, (k+1)Δ]`, k = 0..=n.
struct KernelWeights {
    /// ∫ e^{−by}/y dy (zero for the first cell).
    marchaud0: Vec<f64>,
    /// ∫ (y − kΔ) e^{−by}/y dy.
    marchaud1: Vec<f64>,
    /// ∫ Π̄(y) dy.
    tail0: Vec<f64>,
    /// ∫ (y − kΔ) Π̄(y) dy.
    tail1: Vec<f64>,
}

impl KernelWeights {
    fn new(p: GammaParams, step: f64, n: usize) -> Self {
        let gl = GaussLegendre::new(8);
        let b = p.b;
        let mut w = KernelWeights {
            marchaud0: vec![0.0; n + 1],
            marchaud1: vec![0.0; n + 1],
            tail0: vec![0.0; n + 1],
            tail1: vec![0.0; n + 1],
        };
        for k in 0..=n {
            let lo = k as f64 * step;
            let hi = lo + step;
            if k < GL_SWITCH {
                let a0 = if k == 0 {
                    0.0
                } else {
                    e1_unchecked(b * lo) - e1_unchecked(b * hi)
                };
                w.marchaud0[k] = a0;
                w.marchaud1[k] = ((-b * lo).exp() - (-b * hi).exp()) / b - lo * a0;
                let t0 = tail_integral(p, hi) - tail_integral(p, lo);
                w.tail0[k] = t0;
                w.tail1[k] = tail_first_moment(p, hi) - tail_first_moment(p, lo) - lo * t0;
            } else {
                for (y, wt) in gl.mapped(lo, hi) {
                    let kern = (-b * y).exp() / y;
                    let tail = p.a * e1_unchecked(b * y);
                    w.marchaud0[k] += wt * kern;
                    w.marchaud1[k] += wt * (y - lo) * kern;
                    w.tail0[k] += wt * tail;
                    w.tail1[k] += wt * (y - lo) * tail;
                }
            }
        }
        w
    }
}

fn check_grid_support(phi: &GridFn, x: f64) -> Result<()> {
    phi.validate()?;
    if !(x > 0.0) {
        return Err(Error::domain("nonlocal operator", format!("x must be positive, got {x}")));
    }
    if x > phi.horizon() + 1e-9 * phi.step {
        return Err(Error::Grid(format!(
            "operator evaluated at x = {x} beyond the grid support [0, {}]",
            phi.horizon()
        )));
    }
    Ok(())
}

fn origin_value(phi: &GridFn, finite: f64) -> f64 {
    if phi.values[0] == 0.0 {
        finite
    } else {
        f64::INFINITY.copysign(phi.values[0])
    }
}

/// Marchaud form a ∫₀^∞ (φ(x) − φ(x−y)) e^{−by}/y dy at every node.
pub fn marchaud_image(phi: &GridFn, p: GammaParams) -> Result<GridFn> {
    phi.validate()?;
    p.validate()?;
    let f = &phi.values;
    let n = f.len();
    let step = phi.step;
    let w = KernelWeights::new(p, step, n);
    let ca = causal_convolve(&w.marchaud0, f);
    let cb = causal_convolve(&w.marchaud1, f);
    let e1_step = e1_unchecked(p.b * step);
    let mut out = vec![0.0; n];
    for i in 1..n {
        let jumps = ca[i] - w.marchaud0[i] * f[0];
        // Σ_{k<i} B_k (f_{i−k−1} − f_{i−k})
        let slopes = cb[i - 1] - (cb[i] - w.marchaud1[i] * f[0]);
        out[i] = p.a * (f[i] * e1_step - jumps - slopes / step);
    }
    out[0] = origin_value(phi, 0.0);
    Ok(GridFn {
        step,
        values: out,
        zero_extension: true,
    })
}

/// ∫₀^x φ(x−y) Π̄(y) dy at every node.
pub fn tail_convolution(phi: &GridFn, p: GammaParams) -> Result<GridFn> {
    phi.validate()?;
    p.validate()?;
    let w = KernelWeights::new(p, phi.step, phi.len());
    Ok(GridFn {
        step: phi.step,
        values: product_convolve(&phi.values, &w.tail0, &w.tail1, phi.step),
        zero_extension: true,
    })
}

/// Riemann–Liouville form d/dx ∫₀^x φ(x−y) Π̄(y) dy at every node, by centered differences.
pub fn rl_image(phi: &GridFn, p: GammaParams) -> Result<GridFn> {
    let conv = tail_convolution(phi, p)?;
    let c = &conv.values;
    let n = c.len();
    if n < 3 {
        return Err(Error::Grid("at least three nodes are needed to differentiate".into()));
    }
    let h = phi.step;
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (c[i + 1] - c[i - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * c[n - 1] - 4.0 * c[n - 2] + c[n - 3]) / (2.0 * h);
    out[0] = origin_value(phi, 0.0);
    Ok(GridFn {
        step: h,
        values: out,
        zero_extension: true,
    })
}

/// Caputo form ∫₀^x φ′(x−y) Π̄(y) dy at every node, with φ′ the slope of the interpolant.
pub fn caputo_image(phi: &GridFn, p: GammaParams) -> Result<GridFn> {
    phi.validate()?;
    p.validate()?;
    let f = &phi.values;
    let n = f.len();
    let h = phi.step;
    let w = KernelWeights::new(p, h, n);
    let mut slopes = vec![0.0; n];
    for j in 1..n {
        slopes[j] = (f[j] - f[j - 1]) / h;
    }
    let mut out = causal_convolve(&w.tail0, &slopes);
    out[0] = 0.0;
    Ok(GridFn {
        step: h,
        values: out,
        zero_extension: true,
    })
}

fn pick(image: &GridFn, x: f64) -> Result<f64> {
    match image.node_of(x) {
        Some(i) => Ok(image.values[i]),
        None => image.eval(x),
    }
}

/// Marchaud form at a single point.
pub fn marchaud_apply(phi: &GridFn, p: GammaParams, x: f64) -> Result<f64> {
    check_grid_support(phi, x)?;
    pick(&marchaud_image(phi, p)?, x)
}

/// Riemann–Liouville form at a single point.
pub fn rl_apply(phi: &GridFn, p: GammaParams, x: f64) -> Result<f64> {
    check_grid_support(phi, x)?;
    pick(&rl_image(phi, p)?, x)
}

/// Caputo form at a single point.
pub fn caputo_apply(phi: &GridFn, p: GammaParams, x: f64) -> Result<f64> {
    check_grid_support(phi, x)?;
    pick(&caputo_image(phi, p)?, x)
}

fn check_datum(spec: &NonlocalProblemSpec) -> Result<()> {
    spec.validate()?;
    if !spec.relaxed_datum && spec.initial_datum.values[0].abs() > 1e-12 {
        return Err(Error::Config(format!(
            "initial datum must vanish at the origin, got f(0) = {}; enable the relaxed datum to allow a jump",
            spec.initial_datum.values[0]
        )));
    }
    Ok(())
}

/// Cell masses and first moments of the law of H_t on the space grid.
fn h_cell_moments(p: GammaParams, t: f64, step: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = p.a * t;
    let mean_scale = s / p.b;
    let mut m0 = vec![0.0; n];
    let mut m1 = vec![0.0; n];
    let mut prev = (0.0, 1.0, 0.0, 1.0);
    for k in 0..n {
        let hi = (k + 1) as f64 * step;
        let (p0, q0) = gamma_pq(s, p.b * hi)?;
        let (p1, q1) = gamma_pq(s + 1.0, p.b * hi)?;
        let mass = if p0 < 0.5 { p0 - prev.0 } else { prev.1 - q0 };
        let first = if p1 < 0.5 { p1 - prev.2 } else { prev.3 - q1 };
        m0[k] = mass.max(0.0);
        m1[k] = (mean_scale * first - k as f64 * step * mass).clamp(0.0, step * m0[k]);
        prev = (p0, q0, p1, q1);
    }
    Ok((m0, m1))
}

/// v(t,·) = ∫₀^x f(x−y) h(t,y) dy for one time, at every node of the datum grid.
pub fn space_nonlocal_row(f: &GridFn, p: GammaParams, t: f64) -> Result<Vec<f64>> {
    f.validate()?;
    if t == 0.0 {
        return Ok(f.values.clone());
    }
    require_positive("space_nonlocal_row", "t", t)?;
    let (m0, m1) = h_cell_moments(p, t, f.step, f.len())?;
    Ok(product_convolve(&f.values, &m0, &m1, f.step))
}

/// Solution v(t,x) = E f(x − H_t) 1{H_t < x} of ∂_t v = −𝒟_x v, v(0,·) = f.
pub fn solve_space_nonlocal(spec: &NonlocalProblemSpec) -> Result<SpaceTimeField> {
    check_datum(spec)?;
    let n = spec.space_nodes();
    let datum = GridFn {
        values: spec.initial_datum.values[..n].to_vec(),
        ..spec.initial_datum.clone()
    };
    let times = spec.output_times();
    let values = times
        .iter()
        .map(|&t| space_nonlocal_row(&datum, spec.params, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpaceTimeField {
        times,
        step_space: spec.step_space,
        values,
    })
}

/// ∂_t v + 𝒟_x v at one time, with the time derivative from centered differences of step `dt`.
pub fn space_nonlocal_residual(
    f: &GridFn,
    p: GammaParams,
    t: f64,
    dt: f64,
) -> Result<GridFn> {
    if !(t > dt && dt > 0.0) {
        return Err(Error::Config(format!("residual needs t > dt > 0, got t={t}, dt={dt}")));
    }
    let before = space_nonlocal_row(f, p, t - dt)?;
    let after = space_nonlocal_row(f, p, t + dt)?;
    let now = GridFn {
        step: f.step,
        values: space_nonlocal_row(f, p, t)?,
        zero_extension: true,
    };
    let op = rl_image(&now, p)?;
    let values = (0..f.len())
        .map(|i| (after[i] - before[i]) / (2.0 * dt) + op.values[i])
        .collect();
    Ok(GridFn {
        step: f.step,
        values,
        zero_extension: true,
    })
}

/// Cell masses and first moments of the law of L_t on the space grid.
fn l_cell_moments(p: GammaParams, t: f64, step: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let gl = GaussLegendre::new(8);
    let mut m0 = vec![0.0; n];
    let mut m1 = vec![0.0; n];
    let (mut s_lo, mut g_lo) = (1.0, 0.0);
    for k in 0..n {
        let lo = k as f64 * step;
        let hi = lo + step;
        let (s_hi, g_hi) = gamma_pq(p.a * hi, p.b * t)?;
        let use_survival = s_lo < 0.5;
        m0[k] = if use_survival { s_lo - s_hi } else { g_hi - g_lo }.max(0.0);
        // by parts against the survival function or its complement
        let mut cell = 0.0;
        for (y, w) in gl.mapped(lo, hi) {
            let (s, g) = gamma_pq(p.a * y, p.b * t)?;
            cell += w * if use_survival { s } else { g };
        }
        let moment = if use_survival {
            cell - step * s_hi
        } else {
            step * g_hi - cell
        };
        m1[k] = moment.clamp(0.0, step * m0[k]);
        s_lo = s_hi;
        g_lo = g_hi;
    }
    Ok((m0, m1))
}

/// r(t,·) = ∫₀^x f(x−y) l(t,y) dy for one time.
pub fn time_nonlocal_row(f: &GridFn, p: GammaParams, t: f64) -> Result<Vec<f64>> {
    f.validate()?;
    if t == 0.0 {
        return Ok(f.values.clone());
    }
    require_positive("time_nonlocal_row", "t", t)?;
    let (m0, m1) = l_cell_moments(p, t, f.step, f.len())?;
    Ok(product_convolve(&f.values, &m0, &m1, f.step))
}

/// Solution r(t,x) = E f(x − L_t) 1{L_t < x} of the time-nonlocal problem.
pub fn solve_time_nonlocal(spec: &NonlocalProblemSpec) -> Result<SpaceTimeField> {
    spec.validate()?;
    let n = spec.space_nodes();
    let datum = GridFn {
        values: spec.initial_datum.values[..n].to_vec(),
        ..spec.initial_datum.clone()
    };
    let times = spec.output_times();
    let values = times
        .iter()
        .map(|&t| time_nonlocal_row(&datum, spec.params, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpaceTimeField {
        times,
        step_space: spec.step_space,
        values,
    })
}

/// w(x) = ∫₀^x f(x−y) κ(y) dy, the solution of 𝒟^Φ w = f.
pub fn solve_abel(f: &GridFn, p: GammaParams) -> Result<GridFn> {
    f.validate()?;
    p.validate()?;
    let quad = QuadSpec::default();
    let inner = quad.tightened(1e-2);
    let step = f.step;
    let n = f.len();
    let gl_near = GaussLegendre::new(10);
    let gl_far = GaussLegendre::new(4);
    let mut m0 = vec![0.0; n];
    let mut m1 = vec![0.0; n];
    // first cell: κ has a 1/(y ln² y) singularity, so substitute y = Δ e^{−s}
    m0[0] = potential_cumulative(p, step, &inner)?;
    let slot = crate::quad::ErrSlot::new();
    let r = integrate(
        |s| {
            let y = step * (-s).exp();
            slot.wrap(potential_kappa(p, y, &inner).map(|k| y * y * k))
        },
        0.0,
        40.0,
        &quad,
        "first moment of the potential on the first cell",
    );
    m1[0] = slot.finish(r)?;
    for k in 1..n {
        let lo = k as f64 * step;
        let gl = if k < GL_SWITCH { &gl_near } else { &gl_far };
        for (y, w) in gl.mapped(lo, lo + step) {
            let kap = potential_kappa(p, y, &inner)?;
            m0[k] += w * kap;
            m1[k] += w * (y - lo) * kap;
        }
    }
    Ok(GridFn {
        step,
        values: product_convolve(&f.values, &m0, &m1, step),
        zero_extension: true,
    })
}

/// Geometric refinement of the first cell down to this size.
const FIRST_CELL_FLOOR: f64 = 1e-8;
const FIRST_CELL_RATIO: f64 = 1.5;

/// Solves 𝔇_t u = −c u, u(0) = 1, by product integration of the piecewise-linear
/// solution against Π̄ on a mesh whose first cell is refined geometrically.
pub fn solve_relaxation(p: GammaParams, c: f64, step: f64, horizon: f64) -> Result<GridFn> {
    p.validate()?;
    require_positive("solve_relaxation", "step", step)?;
    require_positive("solve_relaxation", "horizon", horizon)?;
    require_nonnegative("solve_relaxation", "c", c)?;
    let steps = (horizon / step).round() as usize;
    if steps == 0 {
        return Err(Error::Config("horizon shorter than one step".into()));
    }
    if c == 0.0 {
        return GridFn::new(step, vec![1.0; steps + 1]);
    }

    let mut nodes = vec![0.0];
    let mut j = 0;
    while step * FIRST_CELL_RATIO.powi(-(j + 1)) > FIRST_CELL_FLOOR {
        j += 1;
    }
    for k in (1..=j).rev() {
        nodes.push(step * FIRST_CELL_RATIO.powi(-k));
    }
    let graded = nodes.len(); // index of t = Δ
    for i in 1..=steps {
        nodes.push(i as f64 * step);
    }
    let m = nodes.len();

    let gl = GaussLegendre::new(4);
    // ∫_{lo}^{hi} Π̄(s) ds for lo < hi, switching to Gauss–Legendre for thin far cells
    let cell_weight = |lo: f64, hi: f64| -> f64 {
        if hi - lo < 1e-3 * lo {
            gl.integrate(|s| p.a * e1_unchecked(p.b * s), lo, hi)
        } else {
            tail_integral(p, hi) - tail_integral(p, lo)
        }
    };
    // uniform cells: weight depends on the lag only
    let lag_weights: Vec<f64> = (0..=steps)
        .map(|d| {
            if d == 0 {
                0.0
            } else {
                cell_weight((d - 1) as f64 * step, d as f64 * step)
            }
        })
        .collect();

    let mut u = vec![1.0; m];
    let mut slopes = vec![0.0; m];
    for n in 1..m {
        let tn = nodes[n];
        let mut history = 0.0;
        for k in 0..n - 1 {
            let w = if k >= graded {
                lag_weights[n - k]
            } else {
                cell_weight(tn - nodes[k + 1], tn - nodes[k])
            };
            history += slopes[k] * w;
        }
        let h = tn - nodes[n - 1];
        let diag = cell_weight(0.0, h) / h;
        u[n] = (u[n - 1] * diag - history) / (diag + c);
        slopes[n - 1] = (u[n] - u[n - 1]) / h;
        if !(u[n] >= -1e-12 && u[n] <= 1.0 + 1e-12) {
            return Err(Error::Instability(format!(
                "relaxation solution left [0, 1] at t = {tn}: u = {}",
                u[n]
            )));
        }
    }
    let mut out = vec![1.0];
    out.extend_from_slice(&u[graded..]);
    GridFn::new(step, out)
}

/// P(H_t < x) = 1 − survival of H, the space solution for the indicator datum.
pub fn indicator_space_solution(p: GammaParams, t: f64, x: f64) -> Result<f64> {
    cdf_h(p, t, x)
}

/// P(L_t < x), the time-nonlocal solution for the indicator datum.
pub fn indicator_time_solution(p: GammaParams, t: f64, x: f64) -> Result<f64> {
    Ok(1.0 - survival_l(p, t, x)?)
}

/// ∫₀^x Π̄(y) dy, the image of φ(x) = x under the non-local derivative.
pub fn linear_image(p: GammaParams, x: f64) -> f64 {
    tail_integral(p, x)
}

/// Π̄(x), the Marchaud image of the indicator of (0, ∞).
pub fn indicator_image(p: GammaParams, x: f64) -> Result<f64> {
    levy_tail(p, x)
}
