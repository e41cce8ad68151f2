//! Constructive fixed-point scheme for spectral triples.
//!
//! Starting from `f_0` with `||f_0||_p = 1` the scheme computes
//!
//! ```text
//! g_k = T f_k,    f_{k+1} = (lambda_k T*((g_k)_(q)))_(p'),    ||f_{k+1}||_p = 1
//! ```
//!
//! Because the discrete `T`, `T*` are exact adjoints, the sandwich
//! `||g_k||_q <= lambda_k^(-1/q) <= ||g_{k+1}||_q` survives discretisation,
//! so `lambda_k` never increases and `||g_k||_q` never decreases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{conjugate, count_zeros, lp_norm, signed_power, NodalCountPolicy, SampledFunction};
use crate::operator::{AdjointPair, ProblemSpec};

/// Point `z` of the l1 unit sphere in `R^(n+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPattern {
    z: Vec<f64>,
}

impl SignPattern {
    /// Rescales `z` onto the l1 sphere.
    pub fn new(z: Vec<f64>) -> Result<Self> {
        let l1: f64 = z.iter().map(|v| v.abs()).sum();
        if z.is_empty() || !l1.is_finite() || l1 == 0.0 {
            return Err(Error::InvalidInput("sign pattern must have a nonzero entry".into()));
        }
        Ok(Self {
            z: z.into_iter().map(|v| v / l1).collect(),
        })
    }

    /// `z = (0, ..., 0, 1)` in `R^(n+1)`.
    pub fn positive(n: usize) -> Self {
        let mut z = vec![0.0; n + 1];
        z[n] = 1.0;
        Self { z }
    }

    /// Equal blocks with alternating signs, starting positive.
    pub fn alternating(n: usize) -> Self {
        let w = 1.0 / (n + 1) as f64;
        Self {
            z: (0..=n).map(|i| if i % 2 == 0 { w } else { -w }).collect(),
        }
    }

    /// Alternating signs with the given interior breakpoints in `(0, 1)`.
    pub fn from_breakpoints(breaks: &[f64]) -> Result<Self> {
        let mut prev = 0.0;
        let mut z = Vec::with_capacity(breaks.len() + 1);
        for (i, &t) in breaks.iter().chain(std::iter::once(&1.0)).enumerate() {
            if !(t >= prev && t <= 1.0) {
                return Err(Error::InvalidInput(format!("breakpoints must increase within [0, 1], got {t}")));
            }
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            z.push(s * (t - prev));
            prev = t;
        }
        Self::new(z)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }

    /// Number of interior sign changes the pattern can carry.
    pub fn n(&self) -> usize {
        self.z.len() - 1
    }
}

#[derive(Debug, Clone)]
pub struct SpectralTriple {
    pub g: SampledFunction,
    pub f: SampledFunction,
    pub lambda: f64,
    pub nodal_count: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TolMet,
    MaxIter,
    Stagnation,
}

/// Per-step record of the monotone quantities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    pub lambdas: Vec<f64>,
    pub g_norms: Vec<f64>,
    pub nodal_counts: Vec<usize>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl IterationTrace {
    /// Largest violation of `lambda_{k+1} <= lambda_k`.
    pub fn lambda_increase(&self) -> f64 {
        self.lambdas.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Largest violation of `||g_{k+1}|| >= ||g_k||`.
    pub fn g_norm_decrease(&self) -> f64 {
        self.g_norms.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }

    pub fn is_monotone(&self, slack: f64) -> bool {
        self.lambda_increase() <= slack && self.g_norm_decrease() <= slack
    }

    pub fn nodal_nonincreasing(&self) -> bool {
        self.nodal_counts.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    /// Relative change of lambda that counts as converged.
    pub tol: f64,
    /// Relative defect of the fixed-point equation required at acceptance.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Consecutive steps with relative lambda change below 1e-15 before giving up.
    pub stagnation_window: usize,
    pub policy: NodalCountPolicy,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            residual_tol: 1e-9,
            max_iter: 10_000,
            stagnation_window: 50,
            policy: NodalCountPolicy::default(),
        }
    }
}

impl IterationConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// One step of the scheme.
#[derive(Debug, Clone)]
pub struct Step {
    pub g: SampledFunction,
    pub f_next: SampledFunction,
    pub lambda: f64,
}

/// `f_0(x, z)`: `sgn(z_j)` on the `j`-th block of width `|z_j| (b - a)`.
pub fn initial_sign_function(spec: &ProblemSpec, z: &SignPattern) -> SampledFunction {
    let iv = spec.interval;
    let mut edges = Vec::with_capacity(z.z.len());
    let mut acc = 0.0;
    for &zj in &z.z {
        acc += zj.abs();
        edges.push(iv.a + acc * iv.length());
    }
    let last = edges.len() - 1;
    edges[last] = iv.b;
    let values = spec
        .grid
        .nodes()
        .iter()
        .map(|&x| {
            let j = edges.partition_point(|&e| e <= x).min(last);
            // skip empty blocks that share this edge
            let mut j = j;
            while z.z[j] == 0.0 && j < last {
                j += 1;
            }
            z.z[j].signum() * f64::from(u8::from(z.z[j] != 0.0))
        })
        .collect();
    SampledFunction::from_parts(spec.grid.clone(), values)
}

fn weighted_lp(values: &[f64], w: &[f64], p: f64) -> f64 {
    let s: f64 = values
        .iter()
        .zip(w)
        .map(|(v, w)| if *v == 0.0 { 0.0 } else { w * v.abs().powf(p) })
        .sum();
    s.powf(1.0 / p)
}

/// One step for any operator with an exact adjoint.
pub fn iterate_once_with<O: AdjointPair + ?Sized>(op: &O, p: f64, q: f64, f: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let w = op.grid().weights();
    let g = op.forward(f);
    if g.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroImage);
    }
    let gq: Vec<f64> = g.iter().map(|&v| signed_power(v, q)).collect();
    let t = op.adjoint(&gq);
    let pc = conjugate(p);
    let mut phi: Vec<f64> = t.iter().map(|&v| signed_power(v, pc)).collect();
    let norm = weighted_lp(&phi, w, p);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroImage);
    }
    let lambda = norm.powf(-(p - 1.0));
    for v in &mut phi {
        *v /= norm;
    }
    Ok((g, phi, lambda))
}

pub fn iterate_once(spec: &ProblemSpec, f: &SampledFunction) -> Result<Step> {
    if !f.same_grid(&SampledFunction::constant(spec.grid.clone(), 0.0)) {
        return Err(Error::GridMismatch);
    }
    let (g, f_next, lambda) = iterate_once_with(spec, spec.p, spec.q, f.values())?;
    Ok(Step {
        g: SampledFunction::from_parts(spec.grid.clone(), g),
        f_next: SampledFunction::from_parts(spec.grid.clone(), f_next),
        lambda,
    })
}

fn relative_power_gap(a: &[f64], b: &[f64], w: &[f64], p: f64) -> f64 {
    let pc = conjugate(p);
    let diff: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| signed_power(x, p) - signed_power(y, p))
        .collect();
    let base: Vec<f64> = a.iter().map(|&x| signed_power(x, p)).collect();
    weighted_lp(&diff, w, pc) / weighted_lp(&base, w, pc)
}

/// Run the scheme for any operator with an exact adjoint.
pub fn run_iteration_with<O: AdjointPair + ?Sized>(
    op: &O,
    p: f64,
    q: f64,
    f0: &[f64],
    cfg: &IterationConfig,
) -> Result<(SpectralTriple, IterationTrace)> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let grid = op.grid().clone();
    let w = grid.weights();
    let n0 = weighted_lp(f0, w, p);
    if n0 == 0.0 {
        return Err(Error::InvalidInput("initial function is zero".into()));
    }
    let mut f: Vec<f64> = f0.iter().map(|v| v / n0).collect();
    let mut trace = IterationTrace {
        lambdas: Vec::new(),
        g_norms: Vec::new(),
        nodal_counts: Vec::new(),
        residuals: Vec::new(),
        iterations: 0,
        converged: false,
        stop_reason: StopReason::MaxIter,
    };
    let mut flat = 0usize;
    for k in 0..cfg.max_iter.max(1) {
        let (g, f_next, lambda) = iterate_once_with(op, p, q, &f)?;
        let g_fn = SampledFunction::from_parts(grid.clone(), g);
        let resid = relative_power_gap(&f, &f_next, w, p);
        trace.lambdas.push(lambda);
        trace.g_norms.push(lp_norm(&g_fn, q));
        trace.nodal_counts.push(count_zeros(&g_fn, &cfg.policy)?);
        trace.residuals.push(resid);
        trace.iterations = k + 1;
        if k >= 1 {
            let prev = trace.lambdas[k - 1];
            let change = (lambda - prev).abs();
            if change <= cfg.tol * lambda && resid <= cfg.residual_tol {
                trace.converged = true;
                trace.stop_reason = StopReason::TolMet;
                let nodal_count = *trace.nodal_counts.last().expect("nonempty");
                let triple = SpectralTriple {
                    g: g_fn,
                    f: SampledFunction::from_parts(grid.clone(), f),
                    lambda,
                    nodal_count,
                    residual: resid,
                };
                return Ok((triple, trace));
            }
            if change < 1e-15 * lambda {
                flat += 1;
                if flat >= cfg.stagnation_window {
                    trace.stop_reason = StopReason::Stagnation;
                    return Err(Error::NotConverged(Box::new(trace)));
                }
            } else {
                flat = 0;
            }
        }
        f = f_next;
    }
    trace.stop_reason = StopReason::MaxIter;
    Err(Error::NotConverged(Box::new(trace)))
}

pub fn run_iteration(
    spec: &ProblemSpec,
    f0: &SampledFunction,
    cfg: &IterationConfig,
) -> Result<(SpectralTriple, IterationTrace)> {
    if f0.values().len() != spec.grid.len() {
        return Err(Error::GridMismatch);
    }
    run_iteration_with(spec, spec.p, spec.q, f0.values(), cfg)
}

/// Relative defect of `f_(p) = lambda T*((Tf)_(q))` in `L_{p'}`.
pub fn residual(spec: &ProblemSpec, triple: &SpectralTriple) -> f64 {
    residual_with(spec, spec.p, spec.q, triple.f.values(), triple.lambda)
}

pub fn residual_with<O: AdjointPair + ?Sized>(op: &O, p: f64, q: f64, f: &[f64], lambda: f64) -> f64 {
    let w = op.grid().weights();
    let g = op.forward(f);
    let gq: Vec<f64> = g.iter().map(|&v| signed_power(v, q)).collect();
    let t = op.adjoint(&gq);
    let lhs: Vec<f64> = f.iter().map(|&v| signed_power(v, p)).collect();
    let diff: Vec<f64> = lhs.iter().zip(&t).map(|(l, t)| l - lambda * t).collect();
    let pc = conjugate(p);
    weighted_lp(&diff, w, pc) / weighted_lp(&lhs, w, pc)
}

/// The dual pair `s = (Tf)_(q)`, `lambda* = lambda_(p')`.
pub fn dual_transform(spec: &ProblemSpec, triple: &SpectralTriple) -> (SampledFunction, f64) {
    let g = spec.forward(triple.f.values());
    let s = SampledFunction::from_parts(spec.grid.clone(), g).signed_power(spec.q);
    (s, signed_power(triple.lambda, spec.p_conj()))
}

/// Relative defect of `s_(q') = lambda* T((T*s)_(p'))` in `L_q`.
pub fn dual_defect(spec: &ProblemSpec, s: &SampledFunction, lambda_star: f64) -> f64 {
    let w = spec.grid.weights();
    let ts: Vec<f64> = spec.adjoint(s.values()).iter().map(|&v| signed_power(v, spec.p_conj())).collect();
    let rhs = spec.forward(&ts);
    let lhs: Vec<f64> = s.values().iter().map(|&v| signed_power(v, spec.q_conj())).collect();
    let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| l - lambda_star * r).collect();
    weighted_lp(&diff, w, spec.q) / weighted_lp(&lhs, w, spec.q)
}

/// `(T*s)_(p')` normalised in `L_p`: the primal `f` recovered from a dual solution.
pub fn dual_to_primal(spec: &ProblemSpec, s: &SampledFunction) -> SampledFunction {
    let f = SampledFunction::from_parts(spec.grid.clone(), spec.adjoint(s.values())).signed_power(spec.p_conj());
    let n = lp_norm(&f, spec.p);
    f.scale(1.0 / n)
}
