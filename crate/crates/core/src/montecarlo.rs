//! Seeded simulation of the gamma subordinator and its first-passage inverse,
//! with empirical statistics and goodness-of-fit helpers.
//!
//! Every path draws from its own ChaCha stream selected by the path index, so
//! results do not depend on how the work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::error::{require_positive, Error, Result};
use crate::gamma_sub::{moments_h, GammaParams};
use crate::inv_gamma::{moments_l, MomentRepresentation};
use crate::quad::CompensatedSum;
use crate::specfun::gamma_pq;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exact gamma variates with unit scale, drawn in log space so that very small
/// shapes do not underflow.
#[derive(Debug, Clone, Copy)]
struct LogGamma {
    base: Gamma<f64>,
    shape: f64,
    boosted: bool,
}

impl LogGamma {
    fn new(shape: f64) -> Result<Self> {
        require_positive("gamma variate", "shape", shape)?;
        let boosted = shape < 1.0;
        let base_shape = if boosted { shape + 1.0 } else { shape };
        let base = Gamma::new(base_shape, 1.0)
            .map_err(|e| Error::domain("gamma variate", e.to_string()))?;
        Ok(LogGamma {
            base,
            shape,
            boosted,
        })
    }

    /// ln X with X ~ Gamma(shape, 1); X = Y U^{1/shape} with Y ~ Gamma(shape + 1) for small shapes.
    fn sample_ln<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let y: f64 = self.base.sample(rng);
        if self.boosted {
            let u: f64 = 1.0 - rng.random::<f64>();
            y.ln() + u.ln() / self.shape
        } else {
            y.ln()
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_ln(rng).exp()
    }
}

/// H sampled at `0, Δ, 2Δ, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub step: f64,
    pub values: Vec<f64>,
    pub seed: u64,
}

impl PathSample {
    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }
}

fn check_step(function: &'static str, step: f64, horizon: f64) -> Result<usize> {
    require_positive(function, "step", step)?;
    require_positive(function, "horizon", horizon)?;
    let n = (horizon / step).round() as usize;
    if n == 0 {
        return Err(Error::Config(format!("{function}: horizon shorter than one step")));
    }
    Ok(n)
}

/// Gamma path on stream `stream` of `seed`.
pub fn sample_gamma_path_stream(
    p: GammaParams,
    step: f64,
    horizon: f64,
    seed: u64,
    stream: u64,
) -> Result<PathSample> {
    p.validate()?;
    let n = check_step("sample_gamma_path", step, horizon)?;
    let inc = LogGamma::new(p.a * step)?;
    let mut rng = stream_rng(seed, stream);
    let mut values = Vec::with_capacity(n + 1);
    let mut h = 0.0;
    values.push(h);
    for _ in 0..n {
        h += inc.sample(&mut rng) / p.b;
        values.push(h);
    }
    Ok(PathSample { step, values, seed })
}

/// Gamma path with independent Gamma(aΔ, rate b) increments.
pub fn sample_gamma_path(p: GammaParams, step: f64, horizon: f64, seed: u64) -> Result<PathSample> {
    sample_gamma_path_stream(p, step, horizon, seed, 0)
}

/// `n` independent copies of H_t, each summed from increments of size `step`.
pub fn sample_h(p: GammaParams, t: f64, step: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    let cells = check_step("sample_h", step, t)?;
    let cell = t / cells as f64;
    let inc = LogGamma::new(p.a * cell)?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let mut acc = CompensatedSum::default();
            for _ in 0..cells {
                acc.add(inc.sample(&mut rng));
            }
            acc.value() / p.b
        })
        .collect())
}

/// Outcome of reading the first passage above a level off a sampled path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Passage {
    /// The passage lies in `[time − Δ, time]`; `time` is the first grid time with H ≥ level.
    Hit { time: f64, lower: f64 },
    /// The path stays below the level up to the horizon.
    Censored { horizon: f64, reached: f64 },
}

impl Passage {
    pub fn time(&self) -> Option<f64> {
        match self {
            Passage::Hit { time, .. } => Some(*time),
            Passage::Censored { .. } => None,
        }
    }
}

/// First grid time at which the path reaches `level`.
pub fn inverse_passage(path: &PathSample, level: f64) -> Passage {
    if level <= 0.0 {
        return Passage::Hit { time: 0.0, lower: 0.0 };
    }
    let i = path.values.partition_point(|&h| h < level);
    if i == path.values.len() {
        return Passage::Censored {
            horizon: path.horizon(),
            reached: *path.values.last().unwrap(),
        };
    }
    let time = i as f64 * path.step;
    Passage::Hit {
        time,
        lower: (time - path.step).max(0.0),
    }
}

/// Samples L_t by coarse steps of `bridge · Δ`, refining the crossing cell with
/// the exact Dirichlet bridge of the gamma increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstPassageSampler {
    pub params: GammaParams,
    pub step: f64,
    pub bridge: usize,
    pub horizon: f64,
}

/// Passage samples of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageSamples {
    pub level: f64,
    pub step: f64,
    pub coarse_step: f64,
    /// Upper grid estimates on the fine grid, one per uncensored path, in path order.
    pub times: Vec<f64>,
    /// The same passages read on the coarse grid.
    pub coarse_times: Vec<f64>,
    pub censored: usize,
}

impl PassageSamples {
    pub fn total(&self) -> usize {
        self.times.len() + self.censored
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.total().max(1) as f64
    }

    /// Lower ends of the passage bands.
    pub fn lower_times(&self) -> Vec<f64> {
        self.times.iter().map(|t| (t - self.step).max(0.0)).collect()
    }
}

impl FirstPassageSampler {
    pub fn new(params: GammaParams, step: f64, horizon: f64) -> Self {
        FirstPassageSampler {
            params,
            step,
            bridge: 32,
            horizon,
        }
    }

    pub fn with_bridge(mut self, bridge: usize) -> Self {
        self.bridge = bridge;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        check_step("FirstPassageSampler", self.step, self.horizon)?;
        if self.bridge == 0 {
            return Err(Error::Config("bridge refinement must be >= 1".into()));
        }
        Ok(())
    }

    fn draw(&self, level: f64, coarse: &LogGamma, fine: &LogGamma, rng: &mut ChaCha8Rng) -> Option<(f64, f64)> {
        if level <= 0.0 {
            return Some((0.0, 0.0));
        }
        let b = self.params.b;
        let m = self.bridge;
        let coarse_step = self.step * m as f64;
        let cells = (self.horizon / coarse_step).ceil() as usize;
        let mut h = 0.0;
        let mut ln_w = vec![0.0; m];
        for k in 0..cells {
            let g = coarse.sample(rng) / b;
            if h + g < level {
                h += g;
                continue;
            }
            // fine increments given their sum are g times a symmetric Dirichlet vector
            for w in ln_w.iter_mut() {
                *w = fine.sample_ln(rng);
            }
            let top = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = ln_w.iter().map(|w| (w - top).exp()).collect();
            let total: f64 = weights.iter().sum();
            let mut acc = 0.0;
            let mut j = m;
            for (i, w) in weights.iter().enumerate() {
                acc += w;
                if h + g * acc / total >= level {
                    j = i + 1;
                    break;
                }
            }
            let start = k as f64 * coarse_step;
            return Some((start + j as f64 * self.step, start + coarse_step));
        }
        None
    }

    /// `n` passage samples above `level` from streams `0..n` of `seed`.
    pub fn sample(&self, level: f64, n: usize, seed: u64) -> Result<PassageSamples> {
        self.validate()?;
        if !level.is_finite() {
            return Err(Error::domain("FirstPassageSampler", "level must be finite"));
        }
        let coarse = LogGamma::new(self.params.a * self.step * self.bridge as f64)?;
        let fine = LogGamma::new(self.params.a * self.step)?;
        let draws: Vec<Option<(f64, f64)>> = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, i);
                self.draw(level, &coarse, &fine, &mut rng)
            })
            .collect();
        let mut out = PassageSamples {
            level,
            step: self.step,
            coarse_step: self.step * self.bridge as f64,
            times: Vec::with_capacity(n),
            coarse_times: Vec::with_capacity(n),
            censored: 0,
        };
        for d in draws {
            match d {
                Some((fine_t, coarse_t)) => {
                    out.times.push(fine_t);
                    out.coarse_times.push(coarse_t);
                }
                None => out.censored += 1,
            }
        }
        Ok(out)
    }
}

/// Sample mean of `x^q` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub order: f64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats {
    pub n: usize,
    pub moments: Vec<MomentEstimate>,
    /// Samples sorted ascending.
    pub ecdf: Vec<f64>,
}

impl EmpiricalStats {
    pub fn moment(&self, order: f64) -> Option<MomentEstimate> {
        self.moments.iter().copied().find(|m| m.order == order)
    }

    /// Fraction of samples ≤ x.
    pub fn ecdf_at(&self, x: f64) -> f64 {
        self.ecdf.partition_point(|&s| s <= x) as f64 / self.n as f64
    }
}

/// Mean and standard error of `values`.
pub fn mean_stderr(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::domain("mean_stderr", "no samples"));
    }
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<CompensatedSum>()
        .value();
    Ok((mean, (ss / (n - 1.0) / n).sqrt()))
}

pub fn empirical_stats(samples: &[f64], orders: &[f64]) -> Result<EmpiricalStats> {
    if samples.is_empty() {
        return Err(Error::domain("empirical_stats", "no samples"));
    }
    if let Some(x) = samples.iter().find(|x| x.is_nan()) {
        return Err(Error::domain("empirical_stats", format!("sample {x} is not a number")));
    }
    let moments = orders
        .iter()
        .map(|&q| {
            let powered: Vec<f64> = samples.iter().map(|x| x.powf(q)).collect();
            mean_stderr(&powered).map(|(mean, stderr)| MomentEstimate {
                order: q,
                mean,
                stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ecdf = samples.to_vec();
    ecdf.sort_by(f64::total_cmp);
    Ok(EmpiricalStats {
        n: samples.len(),
        moments,
        ecdf,
    })
}

/// sup_x |F_n(x) − F(x)| for sorted samples.
pub fn ks_distance<F: FnMut(f64) -> f64>(sorted: &[f64], mut cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// 95% Kolmogorov–Smirnov critical value plus the shift a grid bias of `step`
/// can cause in a distribution with density bounded by `max_density`.
pub fn ks_allowance(n: usize, step: f64, max_density: f64) -> f64 {
    1.36 / (n as f64).sqrt() + step * max_density
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson test on `bins` equal-probability bins of the target law.
pub fn chi_square_equiprobable<F>(samples: &[f64], bins: usize, mut cdf: F) -> Result<ChiSquare>
where
    F: FnMut(f64) -> Result<f64>,
{
    if samples.is_empty() || bins < 2 {
        return Err(Error::domain("chi_square_equiprobable", "need samples and at least two bins"));
    }
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let u = cdf(x)?;
        counts[((u * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expected = samples.len() as f64 / bins as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    let dof = bins - 1;
    let (_, q) = gamma_pq(dof as f64 / 2.0, statistic / 2.0)?;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: q,
    })
}

/// Time change composed with a Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    SubordinatedH,
    SubordinatedL,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeChangeMoment {
    pub value: f64,
    /// Set when the order is odd and the moment vanishes by symmetry.
    pub odd_symmetry: bool,
}

fn double_factorial_odd(q: u32) -> f64 {
    (1..q).step_by(2).map(f64::from).product()
}

/// E (B_{T_t})^q = (q−1)!! E T_t^{q/2} with T = H or L independent of B.
pub fn brownian_timechange_moments(
    p: GammaParams,
    t: f64,
    q: u32,
    which: Which,
    rep: &MomentRepresentation,
) -> Result<TimeChangeMoment> {
    p.validate()?;
    require_positive("brownian_timechange_moments", "t", t)?;
    if q % 2 == 1 {
        return Ok(TimeChangeMoment {
            value: 0.0,
            odd_symmetry: true,
        });
    }
    let half = f64::from(q / 2);
    let inner = if q == 0 {
        1.0
    } else {
        match which {
            Which::SubordinatedH => moments_h(p, t, half)?,
            Which::SubordinatedL => moments_l(p, t, half, rep)?,
        }
    };
    Ok(TimeChangeMoment {
        value: double_factorial_odd(q) * inner,
        odd_symmetry: false,
    })
}

/// Samples of B at the time change: √T · Z with Z standard normal on a separate stream.
pub fn simulate_brownian_timechange(
    times: &[f64],
    seed: u64,
) -> Vec<f64> {
    times
        .par_iter()
        .enumerate()
        .map(|(i, &tc)| {
            let mut rng = stream_rng(seed ^ 0x9e37_79b9_7f4a_7c15, i as u64);
            let z: f64 = StandardNormal.sample(&mut rng);
            tc.sqrt() * z
        })
        .collect()
}

/// Samples of the time change T_t for the Brownian composition.
pub fn sample_time_change(
    which: Which,
    sampler: &FirstPassageSampler,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<PassageSamples> {
    match which {
        Which::SubordinatedL => sampler.sample(t, n, seed),
        Which::SubordinatedH => {
            let values = sample_h(sampler.params, t, sampler.step.max(t / 64.0), n, seed)?;
            Ok(PassageSamples {
                level: t,
                step: 0.0,
                coarse_step: 0.0,
                coarse_times: values.clone(),
                times: values,
                censored: 0,
            })
        }
    }
}

/// Monte Carlo estimate of E f(x − T) 1{T < x} with its standard error.
pub fn mc_expectation<F: Fn(f64) -> f64>(samples: &[f64], x: f64, f: F) -> Result<(f64, f64)> {
    let values: Vec<f64> = samples
        .iter()
        .map(|&s| if s < x { f(x - s) } else { 0.0 })
        .collect();
    mean_stderr(&values)
}
