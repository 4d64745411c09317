//! Deterministic numerical integration.
//!
//! Every analytical quantity in the crate is a proper integral over a bounded
//! interval whose integrand is smooth except at a handful of known breakpoints.
//! The engine here is a globally adaptive Gauss–Kronrod (10/21) bisection
//! scheme that splits at caller-supplied breakpoints before anything else,
//! plus a nested driver for iterated integrals with dependent limits and a
//! small tensor-grid [`Tabulation`] used to cache expensive densities.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Limits and tolerances of a one-dimensional integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSpec {
    pub lower: f64,
    pub upper: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl IntegrationSpec {
    pub const DEFAULT_REL_TOL: f64 = 1e-8;
    pub const DEFAULT_ABS_TOL: f64 = 1e-12;
    pub const DEFAULT_MAX_SUBDIVISIONS: usize = 200;

    pub fn new(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            rel_tol: Self::DEFAULT_REL_TOL,
            abs_tol: Self::DEFAULT_ABS_TOL,
            max_subdivisions: Self::DEFAULT_MAX_SUBDIVISIONS,
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    /// Same tolerances over new limits.
    pub fn over(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    /// Tolerances divided by `factor`, used for inner levels of nested integrals.
    pub fn tightened(mut self, factor: f64) -> Self {
        self.rel_tol /= factor;
        self.abs_tol /= factor;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite()) {
            return Err(Error::domain(
                "integrate",
                format!("non-finite limits [{}, {}]", self.lower, self.upper),
            ));
        }
        if self.lower > self.upper {
            return Err(Error::domain(
                "integrate",
                format!("lower limit {} exceeds upper limit {}", self.lower, self.upper),
            ));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::domain("integrate", "tolerances must be positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::domain("integrate", "subdivision budget must be positive"));
        }
        Ok(())
    }
}

/// Values the adaptive integrator can accumulate: scalars, and fixed-size
/// vectors when several related integrands share one set of nodes.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    /// Magnitude used for error control (max-norm for vectors).
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

/// Fixed-length vector integrand value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lanes<const N: usize>(pub [f64; N]);

impl<const N: usize> Add for Lanes<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Lanes<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul<f64> for Lanes<N> {
    type Output = Self;
    fn mul(mut self, k: f64) -> Self {
        for a in self.0.iter_mut() {
            *a *= k;
        }
        self
    }
}

impl<const N: usize> QuadValue for Lanes<N> {
    fn zero() -> Self {
        Lanes([0.0; N])
    }
    fn magnitude(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Result of an adaptive integration with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
    pub subdivisions: usize,
}

// Kronrod 21-point abscissae (positive half, descending), Kronrod weights,
// and the weights of the embedded 10-point Gauss rule (odd Kronrod nodes).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_145_590,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Nodes and weights of the 21-point Kronrod rule on `[a, b]`, for callers
/// that reuse integrand values across many integrals over the same cells.
pub fn kronrod_rule(a: f64, b: f64) -> [(f64, f64); 21] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(center, half * WGK[10]); 21];
    for j in 0..10 {
        out[2 * j] = (center - half * XGK[j], half * WGK[j]);
        out[2 * j + 1] = (center + half * XGK[j], half * WGK[j]);
    }
    out
}

struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> (V, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = V::zero();
    let mut abs_sum = fc.magnitude() * WGK[10];
    let mut values = [(V::zero(), V::zero()); 10];
    for (j, slot) in values.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let sum = f1 + f2;
        kronrod = kronrod + sum * WGK[j];
        abs_sum += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            gauss = gauss + sum * WG[j / 2];
        }
        *slot = (f1, f2);
    }
    let mean = kronrod * 0.5;
    let mut asc = WGK[10] * (fc - mean).magnitude();
    for (j, (f1, f2)) in values.iter().enumerate() {
        asc += WGK[j] * ((*f1 - mean).magnitude() + (*f2 - mean).magnitude());
    }
    let scale = half.abs();
    let asc = asc * scale;
    let abs_sum = abs_sum * scale;
    let mut err = ((kronrod - gauss) * half).magnitude();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_sum);
    }
    (kronrod * half, err)
}

/// Adaptive integration of a scalar or vector integrand over `spec`, splitting
/// first at every breakpoint that lies strictly inside the interval.
pub fn integrate_adaptive<V, F>(mut f: F, spec: &IntegrationSpec, breakpoints: &[f64]) -> Result<Estimate<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    spec.validate()?;
    let (lo, hi) = (spec.lower, spec.upper);
    if lo == hi {
        return Ok(Estimate {
            value: V::zero(),
            error: 0.0,
            evaluations: 0,
            subdivisions: 0,
        });
    }

    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&p| p.is_finite() && p > lo && p < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);

    let mut heap = BinaryHeap::with_capacity(spec.max_subdivisions + edges.len());
    let mut evaluations = 0usize;
    let mut total = V::zero();
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let (value, error) = gauss_kronrod(&mut f, w[0], w[1]);
        evaluations += 21;
        total = total + value;
        total_err += error;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }

    let tolerance = |total: &V| spec.abs_tol.max(spec.rel_tol * total.magnitude());
    let mut subdivisions = 0usize;
    // Panels too narrow to split further are parked here with their error.
    let mut frozen_err = 0.0;
    let mut frozen: Vec<Panel<V>> = Vec::new();

    while total_err > tolerance(&total) {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) <= 1e-14 * (worst.a.abs() + worst.b.abs()) {
            frozen_err += worst.error;
            frozen.push(worst);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        if subdivisions >= spec.max_subdivisions {
            heap.push(worst);
            let err = total_err;
            return Err(Error::NonConvergence {
                level: 0,
                estimate: err,
                tolerance: tolerance(&total),
                subdivisions,
            });
        }
        subdivisions += 1;
        let (v1, e1) = gauss_kronrod(&mut f, worst.a, mid);
        let (v2, e2) = gauss_kronrod(&mut f, mid, worst.b);
        evaluations += 42;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }

    // Resum to shed the drift of the incremental updates.
    let mut value = V::zero();
    for p in heap.iter().chain(frozen.iter()) {
        value = value + p.value;
    }
    let error = frozen_err + heap.iter().map(|p| p.error).sum::<f64>();
    if !value.magnitude().is_finite() {
        return Err(Error::domain("integrate", "integrand produced a non-finite value"));
    }
    Ok(Estimate {
        value,
        error,
        evaluations,
        subdivisions,
    })
}

/// Integrate a scalar function over `[spec.lower, spec.upper]`.
pub fn integrate_1d<F: FnMut(f64) -> f64>(f: F, spec: &IntegrationSpec) -> Result<f64> {
    integrate_adaptive(f, spec, &[]).map(|e| e.value)
}

/// Integrate with an explicit list of interior breakpoints.
pub fn integrate_with_breakpoints<F: FnMut(f64) -> f64>(f: F, spec: &IntegrationSpec, breakpoints: &[f64]) -> Result<f64> {
    integrate_adaptive(f, spec, breakpoints).map(|e| e.value)
}

const MAX_NESTING: usize = 3;

type LimitFn<'a> = Box<dyn Fn(&[f64]) -> (f64, f64) + Sync + 'a>;
type BreakFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a>;

struct Level<'a> {
    spec: IntegrationSpec,
    limits: Option<LimitFn<'a>>,
    breakpoints: Option<BreakFn<'a>>,
}

/// Iterated integral of depth at most three, outermost level first.
///
/// Inner limits may depend on the outer variables. Level `k` runs at the
/// tolerances of its own spec divided by `10^k`.
#[derive(Default)]
pub struct NestedIntegral<'a> {
    levels: Vec<Level<'a>>,
}

impl<'a> NestedIntegral<'a> {
    pub const MAX_DEPTH: usize = MAX_NESTING;

    pub fn new() -> Self {
        Self { levels: Vec::new() }
    }

    /// Add a level with the fixed limits carried by `spec`.
    pub fn fixed(mut self, spec: IntegrationSpec) -> Self {
        self.levels.push(Level {
            spec,
            limits: None,
            breakpoints: None,
        });
        self
    }

    /// Add a level whose limits are computed from the outer variables.
    pub fn dependent(mut self, spec: IntegrationSpec, limits: impl Fn(&[f64]) -> (f64, f64) + Sync + 'a) -> Self {
        self.levels.push(Level {
            spec,
            limits: Some(Box::new(limits)),
            breakpoints: None,
        });
        self
    }

    /// Attach a breakpoint generator to the most recently added level.
    pub fn with_breakpoints(mut self, points: impl Fn(&[f64]) -> Vec<f64> + Sync + 'a) -> Self {
        if let Some(level) = self.levels.last_mut() {
            level.breakpoints = Some(Box::new(points));
        }
        self
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        if self.levels.is_empty() || self.levels.len() > Self::MAX_DEPTH {
            return Err(Error::domain(
                "integrate_nested",
                format!("depth {} outside 1..={}", self.levels.len(), Self::MAX_DEPTH),
            ));
        }
        self.level(0, [0.0; MAX_NESTING], &f)
    }

    fn level(&self, k: usize, outer: [f64; MAX_NESTING], f: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
        let level = &self.levels[k];
        let (lo, hi) = match &level.limits {
            Some(limits) => limits(&outer[..k]),
            None => (level.spec.lower, level.spec.upper),
        };
        if hi <= lo {
            return Ok(0.0);
        }
        let spec = level.spec.over(lo, hi).tightened(10f64.powi(k as i32));
        let breaks = level.breakpoints.as_ref().map(|b| b(&outer[..k])).unwrap_or_default();
        let last = k + 1 == self.levels.len();
        let failure: Cell<Option<Error>> = Cell::new(None);
        let result = integrate_adaptive(
            |x| {
                let mut vars = outer;
                vars[k] = x;
                if last {
                    return f(&vars[..=k]);
                }
                match self.level(k + 1, vars, f) {
                    Ok(v) => v,
                    Err(e) => {
                        let prev = failure.take();
                        failure.set(Some(prev.unwrap_or(e)));
                        0.0
                    }
                }
            },
            &spec,
            &breaks,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        result.map(|e| e.value).map_err(|e| e.nested(k))
    }
}

/// Convenience wrapper: nested integral of `f` over fixed or dependent levels.
pub fn integrate_nested(f: impl Fn(&[f64]) -> f64, integral: &NestedIntegral<'_>) -> Result<f64> {
    integral.integrate(f)
}

/// Interpolation order of a [`Tabulation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    /// Local four-point Lagrange interpolation along each axis.
    Cubic,
}

#[derive(Debug, Clone)]
struct Axis {
    nodes: Vec<f64>,
    // (start, step) when the nodes are equispaced
    uniform: Option<(f64, f64)>,
}

impl Axis {
    fn new(nodes: Vec<f64>) -> Self {
        let n = nodes.len();
        let step = (nodes[n - 1] - nodes[0]) / (n - 1) as f64;
        let uniform = nodes
            .iter()
            .enumerate()
            .all(|(i, &x)| (x - (nodes[0] + step * i as f64)).abs() <= 1e-9 * step.abs().max(1e-300))
            .then_some((nodes[0], step));
        Self { nodes, uniform }
    }

    /// Index `i` such that nodes[i] <= x < nodes[i+1], clamped to valid cells.
    fn cell(&self, x: f64) -> usize {
        let n = self.nodes.len();
        let i = match self.uniform {
            Some((start, step)) => {
                let t = ((x - start) / step).floor();
                if t.is_nan() || t < 0.0 {
                    0
                } else {
                    t as usize
                }
            }
            None => self.nodes.partition_point(|&v| v <= x).saturating_sub(1),
        };
        i.min(n - 2)
    }

    /// Stencil of node indices and weights for `x` (clamped to the axis range).
    fn stencil(&self, x: f64, order: Interpolation) -> ([usize; 4], [f64; 4], usize) {
        let n = self.nodes.len();
        let x = x.clamp(self.nodes[0], self.nodes[n - 1]);
        let i = self.cell(x);
        match order {
            Interpolation::Cubic if n >= 4 => {
                let s = i.saturating_sub(1).min(n - 4);
                let idx = [s, s + 1, s + 2, s + 3];
                let mut w = [1.0; 4];
                for (j, wj) in w.iter_mut().enumerate() {
                    let xj = self.nodes[idx[j]];
                    for (m, &im) in idx.iter().enumerate() {
                        if m != j {
                            let xm = self.nodes[im];
                            *wj *= (x - xm) / (xj - xm);
                        }
                    }
                }
                (idx, w, 4)
            }
            _ => {
                let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
                let t = (x - x0) / (x1 - x0);
                ([i, i + 1, 0, 0], [1.0 - t, t, 0.0, 0.0], 2)
            }
        }
    }
}

/// Values of a function sampled on a tensor-product grid.
#[derive(Debug, Clone)]
pub struct Tabulation {
    axes: Vec<Axis>,
    values: Vec<f64>,
    order: Interpolation,
}

impl Tabulation {
    /// Build from explicit grid axes and row-major values (last axis fastest).
    pub fn new(grid_axes: Vec<Vec<f64>>, values: Vec<f64>, order: Interpolation) -> Result<Self> {
        if grid_axes.is_empty() {
            return Err(Error::domain("Tabulation", "at least one axis is required"));
        }
        let mut expected = 1usize;
        for (k, axis) in grid_axes.iter().enumerate() {
            if axis.len() < 2 {
                return Err(Error::domain("Tabulation", format!("axis {k} needs at least two nodes")));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::domain("Tabulation", format!("axis {k} is not strictly increasing")));
            }
            expected *= axis.len();
        }
        if values.len() != expected {
            return Err(Error::domain(
                "Tabulation",
                format!("{} values for a grid of {expected} nodes", values.len()),
            ));
        }
        Ok(Self {
            axes: grid_axes.into_iter().map(Axis::new).collect(),
            values,
            order,
        })
    }

    /// Sample `f` at every grid node.
    pub fn from_fn(grid_axes: Vec<Vec<f64>>, order: Interpolation, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let nodes = grid_points(&grid_axes);
        let values = nodes.iter().map(|p| f(p)).collect();
        Self::new(grid_axes, values, order)
    }

    /// Evaluate at `point`; coordinates outside the grid are clamped to it.
    pub fn eval(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.axes.len(), "dimension mismatch");
        match self.axes.len() {
            1 => {
                let (idx, w, n) = self.axes[0].stencil(point[0], self.order);
                (0..n).map(|j| w[j] * self.values[idx[j]]).sum()
            }
            2 => {
                let (ia, wa, na) = self.axes[0].stencil(point[0], self.order);
                let (ib, wb, nb) = self.axes[1].stencil(point[1], self.order);
                let stride = self.axes[1].nodes.len();
                let mut acc = 0.0;
                for a in 0..na {
                    let row = ia[a] * stride;
                    let mut inner = 0.0;
                    for b in 0..nb {
                        inner += wb[b] * self.values[row + ib[b]];
                    }
                    acc += wa[a] * inner;
                }
                acc
            }
            _ => self.eval_general(point),
        }
    }

    fn eval_general(&self, point: &[f64]) -> f64 {
        let stencils: Vec<_> = self.axes.iter().zip(point).map(|(axis, &x)| axis.stencil(x, self.order)).collect();
        let mut strides = vec![1usize; self.axes.len()];
        for k in (0..self.axes.len() - 1).rev() {
            strides[k] = strides[k + 1] * self.axes[k + 1].nodes.len();
        }
        let mut counter = vec![0usize; self.axes.len()];
        let mut acc = 0.0;
        loop {
            let mut weight = 1.0;
            let mut offset = 0;
            for (k, (idx, w, _)) in stencils.iter().enumerate() {
                weight *= w[counter[k]];
                offset += idx[counter[k]] * strides[k];
            }
            acc += weight * self.values[offset];
            let mut k = self.axes.len();
            loop {
                if k == 0 {
                    return acc;
                }
                k -= 1;
                counter[k] += 1;
                if counter[k] < stencils[k].2 {
                    break;
                }
                counter[k] = 0;
            }
        }
    }

    pub fn grid_axes(&self) -> Vec<&[f64]> {
        self.axes.iter().map(|a| a.nodes.as_slice()).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.order
    }
}

/// All grid nodes in row-major order.
pub fn grid_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    points
}

/// `n` equispaced nodes from `a` to `b` inclusive.
/// Cubic Lagrange weights for nodes 0, 1, 2, 3 at position `x`.
pub(crate) fn lagrange4(x: f64) -> [f64; 4] {
    let (a, b, c, d) = (x, x - 1.0, x - 2.0, x - 3.0);
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

// Nodes cluster toward both ends of a segment so that square-root edges
// become smooth in the node coordinate.
pub(crate) fn cosine_node(t: f64) -> f64 {
    0.5 * (1.0 - (std::f64::consts::PI * t).cos())
}

pub(crate) fn cosine_coordinate(f: f64) -> f64 {
    (1.0 - 2.0 * f.clamp(0.0, 1.0)).acos() / std::f64::consts::PI
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { b } else { a + step * i as f64 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(a: f64, b: f64) -> IntegrationSpec {
        IntegrationSpec::new(a, b)
    }

    #[test]
    fn constant_and_linear_are_exact() {
        assert!((integrate_1d(|_| 1.0, &spec(0.0, 1.0)).unwrap() - 1.0).abs() < 1e-15);
        let v = integrate_1d(|x| 2.0 * x, &spec(0.0, 1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kronrod_rule_integrates_degree_31_exactly() {
        // A single 21-point Kronrod panel is exact through degree 31.
        for deg in [5, 19, 31] {
            let est = integrate_adaptive(|x: f64| x.powi(deg), &spec(0.0, 1.0), &[]).unwrap();
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((est.value - exact).abs() < 1e-14, "degree {deg}: {}", est.value);
        }
    }

    #[test]
    fn fixed_kronrod_rule_matches_panel_integral() {
        let rule = kronrod_rule(-1.0, 2.0);
        let width: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((width - 3.0).abs() < 1e-14);
        let v: f64 = rule.iter().map(|(x, w)| w * x.powi(31)).sum();
        let exact = (2f64.powi(32) - 1.0) / 32.0;
        assert!((v - exact).abs() < 1e-13 * exact);
    }

    #[test]
    fn exponential_moment_matches_midpoint_oracle() {
        // Midpoint rule with 10^7 panels, compensated summation.
        let (a, b, n) = (0.0, 50.0, 10_000_000usize);
        let h = (b - a) / n as f64;
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for i in 0..n {
            let x = a + (i as f64 + 0.5) * h;
            let y = x * (-x / 15.0).exp() * h - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        let v = integrate_1d(|x| x * (-x / 15.0).exp(), &spec(a, b)).unwrap();
        assert!(((v - sum) / sum).abs() < 1e-8, "{v} vs {sum}");
    }

    #[test]
    fn breakpoints_resolve_kinks() {
        let f = |x: f64| (x - 0.3).abs();
        let exact = 0.5 * (0.3f64.powi(2) + 0.7f64.powi(2));
        let v = integrate_with_breakpoints(f, &spec(0.0, 1.0), &[0.3]).unwrap();
        assert!((v - exact).abs() < 1e-14);
        let est = integrate_adaptive(f, &spec(0.0, 1.0), &[0.3]).unwrap();
        assert_eq!(est.subdivisions, 0);
    }

    #[test]
    fn budget_exhaustion_is_nonconvergence() {
        let s = spec(0.0, 1.0).with_max_subdivisions(3).with_tolerances(1e-14, 1e-300);
        let err = integrate_1d(|x: f64| (1.0 / x.max(1e-300)).sqrt().sin() / x.sqrt().max(1e-300), &s).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { level: 0, .. }));
    }

    #[test]
    fn reversed_limits_are_rejected() {
        assert!(matches!(integrate_1d(|x| x, &spec(1.0, 0.0)), Err(Error::Domain { .. })));
    }

    #[test]
    fn vector_lanes_integrate_componentwise() {
        let est = integrate_adaptive(|x: f64| Lanes([1.0, x, x * x]), &spec(0.0, 3.0), &[]).unwrap();
        let [a, b, c] = est.value.0;
        assert!((a - 3.0).abs() < 1e-14 && (b - 4.5).abs() < 1e-13 && (c - 9.0).abs() < 1e-13);
    }

    fn disk(d: f64, big_d: f64) -> NestedIntegral<'static> {
        NestedIntegral::new()
            .fixed(spec(0.0, 2.0 * PI))
            .dependent(spec(0.0, 1.0), move |outer| {
                let t = outer[0];
                (0.0, (big_d * big_d - d * d * t.sin().powi(2)).sqrt() + d * t.cos())
            })
    }

    #[test]
    fn nested_disk_area_is_offset_independent() {
        let area = PI * 2500.0;
        let centered = disk(0.0, 50.0).integrate(|v| v[1]).unwrap();
        assert!(((centered - area) / area).abs() < 1e-10);
        let offset = disk(20.0, 50.0).integrate(|v| v[1]).unwrap();
        assert!(((offset - area) / area).abs() < 1e-6);
    }

    #[test]
    fn nested_blockage_measure_matches_riemann_oracle() {
        // Total LOS measure of a disk of radius 50 seen from offset 20, blockage 1/15.
        let (d, big_d, mu) = (20.0, 50.0, 1.0 / 15.0);
        let n = 10_000usize;
        let (h_t, mut sum) = (2.0 * PI / n as f64, 0.0);
        for i in 0..n {
            let t = (i as f64 + 0.5) * h_t;
            let r = (big_d * big_d - d * d * t.sin().powi(2)).sqrt() + d * t.cos();
            let h_x = r / n as f64;
            let mut inner = 0.0;
            for j in 0..n {
                let x = (j as f64 + 0.5) * h_x;
                inner += x * (-mu * x).exp();
            }
            sum += inner * h_x * h_t;
        }
        let v = disk(d, big_d).integrate(|v| v[1] * (-mu * v[1]).exp()).unwrap();
        assert!(((v - sum) / sum).abs() < 1e-6, "{v} vs {sum}");
    }

    #[test]
    fn nested_failure_reports_inner_level() {
        let integral = NestedIntegral::new()
            .fixed(spec(0.0, 1.0))
            .dependent(spec(0.0, 1.0).with_max_subdivisions(1).with_tolerances(1e-15, 1e-300), |_| {
                (0.0, 1.0)
            });
        let err = integral
            .integrate(|v| (v[1] - 0.123).abs().sqrt() * (50.0 * v[1]).sin())
            .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { level: 1, .. }), "{err:?}");
    }

    #[test]
    fn tabulation_rejects_bad_grids() {
        assert!(Tabulation::new(vec![vec![0.0, 0.0, 1.0]], vec![0.0; 3], Interpolation::Linear).is_err());
        assert!(Tabulation::new(vec![vec![0.0, 1.0]], vec![0.0; 3], Interpolation::Linear).is_err());
    }

    fn max_interp_error(n: usize, order: Interpolation) -> f64 {
        let f = |x: f64, y: f64| (1.3 * x).sin() * (0.7 * y).cos() + 0.2 * x * y;
        let tab = Tabulation::from_fn(vec![linspace(0.0, 2.0, n), linspace(-1.0, 1.5, n)], order, |p| f(p[0], p[1])).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..97 {
            for j in 0..89 {
                let x = 2.0 * i as f64 / 96.0;
                let y = -1.0 + 2.5 * j as f64 / 88.0;
                worst = worst.max((tab.eval(&[x, y]) - f(x, y)).abs());
            }
        }
        worst
    }

    #[test]
    fn interpolation_error_follows_its_order_under_dyadic_refinement() {
        for (order, rate) in [(Interpolation::Linear, 2.0), (Interpolation::Cubic, 4.0)] {
            let coarse = max_interp_error(17, order);
            let fine = max_interp_error(33, order);
            let observed = (coarse / fine).log2();
            assert!(observed > rate - 0.5, "{order:?}: observed order {observed}");
        }
    }

    #[test]
    fn nonuniform_axis_interpolates_linear_data_exactly() {
        let axis = vec![0.0, 0.1, 0.5, 0.6, 2.0, 3.5];
        let tab = Tabulation::from_fn(vec![axis], Interpolation::Cubic, |p| 3.0 * p[0] - 1.0).unwrap();
        for x in [0.05, 0.33, 1.7, 3.4] {
            assert!((tab.eval(&[x]) - (3.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn three_dimensional_linear_tabulation() {
        let axes = vec![linspace(0.0, 1.0, 3), linspace(0.0, 1.0, 4), linspace(0.0, 1.0, 5)];
        let tab = Tabulation::from_fn(axes, Interpolation::Linear, |p| p[0] + 2.0 * p[1] - p[2]).unwrap();
        assert!((tab.eval(&[0.3, 0.7, 0.2]) - (0.3 + 1.4 - 0.2)).abs() < 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn linearity(a in -3.0..3.0f64, b in -3.0..3.0f64, k in 0.1..4.0f64) {
                let s = spec(0.0, 2.0);
                let f = |x: f64| (k * x).sin();
                let g = |x: f64| (x / k).exp();
                let lhs = integrate_1d(|x| a * f(x) + b * g(x), &s).unwrap();
                let rhs = a * integrate_1d(f, &s).unwrap() + b * integrate_1d(g, &s).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + lhs.abs()));
            }

            #[test]
            fn interval_additivity(mid in 0.01..4.99f64, k in 0.2..3.0f64) {
                let f = |x: f64| x * (-x / k).exp() + (3.0 * x).cos();
                let whole = integrate_1d(f, &spec(0.0, 5.0)).unwrap();
                let split = integrate_1d(f, &spec(0.0, mid)).unwrap() + integrate_1d(f, &spec(mid, 5.0)).unwrap();
                prop_assert!((whole - split).abs() <= 1e-8 * (1.0 + whole.abs()));
            }
        }
    }
}
