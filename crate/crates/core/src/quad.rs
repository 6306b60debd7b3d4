//! Adaptive Gauss–Kronrod quadrature, fixed Gauss–Legendre rules, series
//! summation and compensated accumulation.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances and truncation policy for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Relative magnitude below which the tail of a semi-infinite integral is dropped.
    pub upper_cutoff_tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-9,
            max_subdivisions: 200,
            upper_cutoff_tol: 1e-12,
        }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::Config(format!("abs_tol must be >= 0, got {}", self.abs_tol)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Config(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Config("max_subdivisions must be >= 1".into()));
        }
        if !(self.upper_cutoff_tol > 0.0) {
            return Err(Error::Config(format!(
                "upper_cutoff_tol must be positive, got {}",
                self.upper_cutoff_tol
            )));
        }
        Ok(())
    }

    /// Same spec with both tolerances scaled by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        QuadSpec {
            abs_tol: self.abs_tol * factor,
            rel_tol: (self.rel_tol * factor).max(1e-15),
            upper_cutoff_tol: self.upper_cutoff_tol * factor,
            ..*self
        }
    }

    pub fn with_subdivisions(&self, max_subdivisions: usize) -> Self {
        QuadSpec {
            max_subdivisions,
            ..*self
        }
    }
}

/// Tail tolerance and term cap for infinite series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSpec {
    pub tail_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesSpec {
    fn default() -> Self {
        SeriesSpec {
            tail_tol: 1e-12,
            max_terms: 1_000_000,
        }
    }
}

impl SeriesSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0) {
            return Err(Error::Config(format!("tail_tol must be positive, got {}", self.tail_tol)));
        }
        if self.max_terms == 0 {
            return Err(Error::Config("max_terms must be >= 1".into()));
        }
        Ok(())
    }
}

/// Captures the first error raised inside an integrand closure, which must return a plain `f64`.
#[derive(Debug, Default)]
pub(crate) struct ErrSlot(RefCell<Option<Error>>);

impl ErrSlot {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    /// Unwraps `r`, stashing an error and returning NaN in its place.
    pub(crate) fn wrap(&self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    /// The stashed error takes precedence over the integration outcome.
    pub(crate) fn finish<T>(self, r: Result<T>) -> Result<T> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => r,
        }
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Sums `term(n)` for `n = 0, 1, ...` until a term falls below
/// `tail_tol * |sum|` while the magnitudes are no longer growing.
pub fn sum_series<F>(mut term: F, spec: &SeriesSpec, context: &str) -> Result<f64>
where
    F: FnMut(usize) -> Result<f64>,
{
    let mut acc = CompensatedSum::new();
    let mut prev = f64::INFINITY;
    let mut last = 0.0;
    for n in 0..spec.max_terms {
        let t = term(n)?;
        if !t.is_finite() {
            return Err(Error::Series {
                context: context.to_string(),
                terms: n + 1,
                last_term: t,
            });
        }
        acc.add(t);
        last = t;
        let s = acc.value().abs();
        if n > 0 && t.abs() <= prev && t.abs() <= spec.tail_tol * s.max(f64::MIN_POSITIVE) {
            return Ok(acc.value());
        }
        if t == 0.0 && prev == 0.0 {
            return Ok(acc.value());
        }
        prev = t.abs();
    }
    Err(Error::Series {
        context: context.to_string(),
        terms: spec.max_terms,
        last_term: last,
    })
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208632316300,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = 0.0;
    let mut resk = fc * WGK[10];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Segment { a, b, value, error }
}

/// Result of an adaptive integration with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

/// Globally adaptive GK21 over `[a, b]`, split first at the interior `breaks`.
pub fn integrate_with_breaks<F>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadSpec,
    context: &str,
) -> Result<QuadResult>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points: Vec<f64> = vec![lo];
    let mut interior: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&p| p > lo && p < hi && p.is_finite())
        .collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    points.extend(interior);
    points.push(hi);

    let mut heap = BinaryHeap::with_capacity(points.len() + spec.max_subdivisions);
    for w in points.windows(2) {
        heap.push(gk21(&mut f, w[0], w[1]));
    }
    let mut subdivisions = 0;
    loop {
        let total: f64 = heap.iter().map(|s| s.value).collect::<CompensatedSum>().value();
        let err: f64 = heap.iter().map(|s| s.error).sum();
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if err <= target {
            return Ok(QuadResult {
                value: sign * total,
                error: err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("nonempty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if subdivisions >= spec.max_subdivisions || !(mid > worst.a && mid < worst.b) {
            return Err(Error::Quadrature {
                context: context.to_string(),
                achieved: err,
                requested: target,
                subdivisions,
            });
        }
        heap.push(gk21(&mut f, worst.a, mid));
        heap.push(gk21(&mut f, mid, worst.b));
        subdivisions += 1;
    }
}

/// Adaptive integral over a finite interval.
pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadSpec, context: &str) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_with_breaks(f, a, b, &[], spec, context).map(|r| r.value)
}

/// Integral over `[a, ∞)`, marching over chunks whose width doubles from `h0`
/// until a chunk contributes less than `upper_cutoff_tol` of the running total.
pub fn integrate_semi_infinite<F>(
    mut f: F,
    a: f64,
    h0: f64,
    spec: &QuadSpec,
    context: &str,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(h0 > 0.0) {
        return Err(Error::Config(format!("initial chunk width must be positive, got {h0}")));
    }
    let mut total = CompensatedSum::new();
    let mut left = a;
    let mut width = h0;
    let mut small_chunks = 0;
    for _ in 0..2000 {
        let right = left + width;
        let chunk = integrate_with_breaks(&mut f, left, right, &[], spec, context)?.value;
        total.add(chunk);
        let scale = total.value().abs() + spec.abs_tol;
        let edge = f(right).abs() * width;
        if chunk.abs() <= spec.upper_cutoff_tol * scale && edge <= spec.upper_cutoff_tol * scale {
            small_chunks += 1;
            if small_chunks >= 2 {
                return Ok(total.value());
            }
        } else {
            small_chunks = 0;
        }
        left = right;
        width = (width * 2.0).min(h0.max(1.0) * 1e6);
    }
    Err(Error::Quadrature {
        context: format!("{context} (semi-infinite tail)"),
        achieved: f64::NAN,
        requested: spec.upper_cutoff_tol,
        subdivisions: 2000,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes mapped to `[a, b]` paired with their scaled weights.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
