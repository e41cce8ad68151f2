//! Uniform grids, composite-trapezoid quadrature and sampled functions.
//!
//! Every function in the crate is carried as its values on the nodes of a
//! [`Grid`]. Norms and integrals use the trapezoid weights of that grid, so a
//! grid at level `L` has `2^L + 1` nodes and integrates smooth functions to
//! `O(h^2)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest node count [`refine`] will produce unless a tighter limit is given.
pub const DEFAULT_MAX_NODES: usize = (1 << 22) + 1;

/// Validate an exponent from the open range `(1, inf)`.
pub fn check_exponent(p: f64) -> Result<f64> {
    if p.is_finite() && p > 1.0 {
        Ok(p)
    } else {
        Err(Error::BadExponent(p))
    }
}

/// Hölder conjugate `p / (p - 1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// The odd power map `|t|^(p-1) sgn(t)`.
///
/// Its inverse is `signed_power(., conjugate(p))`.
#[inline]
pub fn signed_power(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        return t;
    }
    if t == 0.0 {
        return 0.0;
    }
    t.signum() * t.abs().powf(p - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidInput(format!(
                "interval [{a}, {b}] must be finite with a < b"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn unit() -> Self {
        Self { a: 0.0, b: 1.0 }
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    interval: Interval,
    level: u32,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Uniform grid with `2^level + 1` nodes.
    pub fn uniform(interval: Interval, level: u32) -> Result<Self> {
        Self::uniform_with_limit(interval, level, DEFAULT_MAX_NODES)
    }

    pub fn uniform_with_limit(interval: Interval, level: u32, max_nodes: usize) -> Result<Self> {
        if level >= 40 {
            return Err(Error::ResourceLimit {
                requested: usize::MAX,
                limit: max_nodes,
            });
        }
        let cells = 1usize << level;
        let count = cells + 1;
        if count > max_nodes {
            return Err(Error::ResourceLimit {
                requested: count,
                limit: max_nodes,
            });
        }
        let h = interval.length() / cells as f64;
        let mut nodes: Vec<f64> = (0..count).map(|j| interval.a + j as f64 * h).collect();
        nodes[cells] = interval.b;
        let mut weights = vec![h; count];
        weights[0] = 0.5 * h;
        weights[cells] = 0.5 * h;
        Ok(Self {
            interval,
            level,
            nodes,
            weights,
        })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mesh width.
    pub fn step(&self) -> f64 {
        self.interval.length() / (self.nodes.len() - 1) as f64
    }

    /// Index `m` and fraction `theta` with `x = (1-theta) x_m + theta x_{m+1}`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let last = self.nodes.len() - 1;
        let s = ((x - self.interval.a) / self.step()).clamp(0.0, last as f64);
        let m = (s.floor() as usize).min(last - 1);
        (m, s - m as f64)
    }

    /// Quadrature of pointwise values against the trapezoid weights.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Grid one level finer; node set is a superset of the input's.
pub fn refine(grid: &Grid) -> Result<Grid> {
    refine_with_limit(grid, DEFAULT_MAX_NODES)
}

pub fn refine_with_limit(grid: &Grid, max_nodes: usize) -> Result<Grid> {
    Grid::uniform_with_limit(grid.interval, grid.level + 1, max_nodes)
}

/// Values of a function on the nodes of a grid.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample {v}")));
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values already known to be finite and sized.
    pub(crate) fn from_parts(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.len();
        Self::from_parts(grid, vec![c; n])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &SampledFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SampledFunction {
        Self::from_parts(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> SampledFunction {
        self.map(|v| c * v)
    }

    /// Pointwise `x_(p)`.
    pub fn signed_power(&self, p: f64) -> SampledFunction {
        self.map(|v| signed_power(v, p))
    }

    /// `self - c * other`.
    pub fn sub_scaled(&self, c: f64, other: &SampledFunction) -> Result<SampledFunction> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - c * b)
            .collect();
        Ok(Self::from_parts(self.grid.clone(), values))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Quadrature inner product.
    pub fn dot(&self, other: &SampledFunction) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .grid
            .weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * a * b)
            .sum())
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Linear interpolation between nodes.
    pub fn eval(&self, x: f64) -> f64 {
        let (m, t) = self.grid.locate(x);
        (1.0 - t) * self.values[m] + t * self.values[m + 1]
    }
}

/// Quadrature approximation of `(int |f|^p)^(1/p)`.
pub fn lp_norm(f: &SampledFunction, p: f64) -> f64 {
    let w = f.grid.weights();
    let s: f64 = if p == 2.0 {
        w.iter().zip(&f.values).map(|(w, v)| w * v * v).sum()
    } else {
        w.iter()
            .zip(&f.values)
            .map(|(w, v)| if *v == 0.0 { 0.0 } else { w * v.abs().powf(p) })
            .sum()
    };
    s.powf(1.0 / p)
}

/// Tolerance rules for counting zeros of sampled data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodalCountPolicy {
    /// Samples with `|v| <= abs_floor * max|v|` count as zero.
    pub abs_floor: f64,
    /// A touching zero closer than this many nonzero nodes to another zero
    /// merges into it.
    pub cluster_width: usize,
}

impl Default for NodalCountPolicy {
    fn default() -> Self {
        Self {
            abs_floor: 1e-8,
            cluster_width: 2,
        }
    }
}

impl NodalCountPolicy {
    pub fn new(abs_floor: f64, cluster_width: usize) -> Result<Self> {
        if !(abs_floor > 0.0 && abs_floor <= 1e-3) || cluster_width < 1 {
            return Err(Error::InvalidInput(format!(
                "nodal policy needs abs_floor in (0, 1e-3] and cluster_width >= 1, got {abs_floor}, {cluster_width}"
            )));
        }
        Ok(Self {
            abs_floor,
            cluster_width,
        })
    }

    fn signs(&self, f: &SampledFunction) -> Result<Vec<i8>> {
        let max = f.max_abs();
        if max == 0.0 {
            return Err(Error::AllZero);
        }
        let floor = self.abs_floor * max;
        Ok(f.values
            .iter()
            .map(|&v| {
                if v.abs() <= floor {
                    0
                } else if v > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ZeroEvent {
    Crossing { start: usize, end: usize },
    Touch { start: usize, end: usize },
}

impl ZeroEvent {
    fn span(self) -> (usize, usize) {
        match self {
            ZeroEvent::Crossing { start, end } | ZeroEvent::Touch { start, end } => (start, end),
        }
    }
}

/// Interior zero events; zero runs attached to an endpoint are not interior.
fn zero_events(signs: &[i8]) -> Vec<ZeroEvent> {
    let mut events = Vec::new();
    let Some(first) = signs.iter().position(|&s| s != 0) else {
        return events;
    };
    let mut prev_idx = first;
    let mut prev = signs[first];
    for (j, &s) in signs.iter().enumerate().skip(first + 1) {
        if s == 0 {
            continue;
        }
        // nodes strictly between prev_idx and j are zero
        let (start, end) = (prev_idx + 1, j);
        if s != prev {
            events.push(ZeroEvent::Crossing { start, end });
        } else if j > prev_idx + 1 {
            events.push(ZeroEvent::Touch { start, end });
        }
        prev_idx = j;
        prev = s;
    }
    events
}

/// Number of distinct interior zeros `Z(f)`.
///
/// Zero events closer than `cluster_width` nonzero nodes form one cluster; a
/// cluster counts its sign changes, or one if it only touches zero.
pub fn count_zeros(f: &SampledFunction, policy: &NodalCountPolicy) -> Result<usize> {
    let signs = policy.signs(f)?;
    let events = zero_events(&signs);
    let mut count = 0;
    let mut crossings = 0;
    let mut last_end: Option<usize> = None;
    for ev in events {
        let (start, end) = ev.span();
        if let Some(e) = last_end {
            if start >= e + policy.cluster_width {
                count += crossings.max(1);
                crossings = 0;
            }
        }
        if matches!(ev, ZeroEvent::Crossing { .. }) {
            crossings += 1;
        }
        last_end = Some(end);
    }
    if last_end.is_some() {
        count += crossings.max(1);
    }
    Ok(count)
}

/// Number of strict sign alternations `P(f)`.
pub fn count_sign_changes(f: &SampledFunction, policy: &NodalCountPolicy) -> Result<usize> {
    let signs = policy.signs(f)?;
    let mut count = 0;
    let mut prev = 0i8;
    for s in signs.into_iter().filter(|&s| s != 0) {
        if prev != 0 && s != prev {
            count += 1;
        }
        prev = s;
    }
    Ok(count)
}

/// Interior zero locations by linear interpolation at sign changes.
pub fn sign_change_locations(f: &SampledFunction, policy: &NodalCountPolicy) -> Result<Vec<f64>> {
    let signs = policy.signs(f)?;
    let x = f.grid.nodes();
    let v = &f.values;
    let mut out = Vec::new();
    let mut prev: Option<usize> = None;
    for (j, &s) in signs.iter().enumerate() {
        if s == 0 {
            continue;
        }
        if let Some(i) = prev {
            if signs[i] != s {
                if j == i + 1 {
                    let t = v[i] / (v[i] - v[j]);
                    out.push(x[i] + t * (x[j] - x[i]));
                } else {
                    out.push(0.5 * (x[i + 1] + x[j - 1]));
                }
            }
        }
        prev = Some(j);
    }
    Ok(out)
}
