//! Spectral triples with a prescribed number of interior zeros.
//!
//! The plain fixed-point scheme only settles on the ground state: started from
//! a pattern with `n >= 1` sign changes it drifts towards `n = 0`. Higher
//! triples are therefore produced by a discrete shooting method that solves the
//! very same discrete system. Marching from `a` with the state `(G_j, H_j)`
//! (prefix and suffix sums of the adjoint pair) turns the fixed-point equation
//! into a one-parameter family in `lambda`; the `n`-th triple is the point where
//! the defect of `H(b) = 0` acquires its `(n+1)`-th sign change.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{conjugate, count_sign_changes, count_zeros, lp_norm, signed_power, NodalCountPolicy, SampledFunction};
use crate::iteration::{
    initial_sign_function, iterate_once_with, residual_with, run_iteration_with, IterationConfig, SignPattern,
    SpectralTriple,
};
use crate::operator::{suffix_integral, ProblemSpec};

/// Which end of `sp_n` to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Max,
    Min,
}

impl Mode {
    /// `max` feeds the bound for `q < p`, `min` the one for `p < q`.
    pub fn default_for(p: f64, q: f64) -> Self {
        if q < p {
            Mode::Max
        } else {
            Mode::Min
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Mode::Max),
            "min" => Ok(Mode::Min),
            _ => Err(Error::InvalidInput(format!("mode must be `max` or `min`, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n: usize,
    pub mode: Mode,
    pub starts: usize,
    pub rng_seed: u64,
    /// Relative lambda tolerance of the fixed-point scheme.
    pub inner_tol: f64,
    /// Relative width of the final lambda bracket in the shooting stage.
    pub outer_tol: f64,
    /// Bisection steps allowed in the shooting stage.
    pub max_outer: usize,
    /// Fixed-point steps tried before switching to shooting when `n >= 1`.
    pub seed_iterations: usize,
    pub policy: NodalCountPolicy,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n: 0,
            mode: Mode::Max,
            starts: 1,
            rng_seed: 0,
            inner_tol: 1e-12,
            outer_tol: 1e-14,
            max_outer: 200,
            seed_iterations: 50,
            policy: NodalCountPolicy::default(),
        }
    }
}

impl SearchConfig {
    pub fn new(n: usize, mode: Mode) -> Self {
        Self {
            n,
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::InvalidInput("at least one start is required".into()));
        }
        if !(self.inner_tol > 0.0 && self.outer_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidInput("max_outer must be positive".into()));
        }
        Ok(())
    }

    fn iteration(&self, max_iter: usize) -> IterationConfig {
        IterationConfig {
            tol: self.inner_tol,
            max_iter,
            policy: self.policy,
            ..IterationConfig::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub n: usize,
    pub lambda_extreme: f64,
    pub best_triple: SpectralTriple,
    /// Distinct eigenvalues found, each with the first start that produced it.
    pub all_found: Vec<(f64, SignPattern)>,
    pub starts_used: usize,
    pub starts_converged: usize,
}

/// Marching solver for the discrete eigenproblem on a fixed spec.
pub struct DiscreteShooter<'a> {
    spec: &'a ProblemSpec,
    pc: f64,
    /// `(w_j/2) u_j`
    half_wu: Vec<f64>,
    /// `(w_j/2) v_j^q`
    half_wvq: Vec<f64>,
}

struct March {
    changes: usize,
    defect: f64,
    f: Vec<f64>,
}

impl<'a> DiscreteShooter<'a> {
    pub fn new(spec: &'a ProblemSpec) -> Self {
        let w = spec.grid.weights();
        let half_wu = w.iter().zip(spec.u()).map(|(w, u)| 0.5 * w * u).collect();
        let half_wvq = w
            .iter()
            .zip(spec.v())
            .map(|(w, v)| 0.5 * w * v.powf(spec.q))
            .collect();
        Self {
            spec,
            pc: conjugate(spec.p),
            half_wu,
            half_wvq,
        }
    }

    /// Solves `G = a0 + k (lu (c - m G_(q)))_(p')` for `G`; the right side is
    /// decreasing in `G`, so the root is unique and bracketed by `a0` and
    /// `a0 + K(a0)`.
    fn node_solve(&self, a0: f64, c: f64, k: f64, lu: f64, m: f64) -> f64 {
        let q = self.spec.q;
        let pc = self.pc;
        let kf = |g: f64| k * signed_power(lu * (c - m * signed_power(g, q)), pc);
        let k0 = kf(a0);
        if k0 == 0.0 || m == 0.0 {
            return a0 + k0;
        }
        let (mut lo, mut hi) = if k0 > 0.0 { (a0, a0 + k0) } else { (a0 + k0, a0) };
        let mut g = 0.5 * (lo + hi);
        let mut dx_old = hi - lo;
        let mut dx = dx_old;
        for _ in 0..300 {
            let phi = g - a0 - kf(g);
            if phi == 0.0 {
                return g;
            }
            if phi < 0.0 {
                lo = g;
            } else {
                hi = g;
            }
            let x = lu * (c - m * signed_power(g, q));
            let dphi = 1.0 + k * (pc - 1.0) * x.abs().powf(pc - 2.0) * lu * m * (q - 1.0) * g.abs().powf(q - 2.0);
            let newton = g - phi / dphi;
            // Newton only when it stays inside and halves the previous step
            if newton.is_finite() && newton > lo && newton < hi && (2.0 * phi).abs() <= (dx_old * dphi).abs() {
                dx_old = dx;
                dx = newton - g;
                g = newton;
            } else {
                dx_old = dx;
                dx = 0.5 * (hi - lo);
                g = lo + dx;
            }
            if dx.abs() <= 2.0 * f64::EPSILON * g.abs() || hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
                return g;
            }
        }
        g
    }

    /// Marches with `H(a) = c` at the given `lambda`.
    fn march(&self, lambda: f64, c: f64, record: bool) -> March {
        let u = self.spec.u();
        let v = self.spec.v();
        let w = self.spec.grid.weights();
        let q = self.spec.q;
        let pc = self.pc;
        let last = u.len() - 1;
        let mut f = if record { vec![0.0; last + 1] } else { Vec::new() };

        let mut changes = 0usize;
        let mut prev_sign = 0.0f64;
        let mut push = |x: f64, changes: &mut usize| {
            let s = if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            };
            if s != 0.0 {
                if prev_sign != 0.0 && s != prev_sign {
                    *changes += 1;
                }
                prev_sign = s;
            }
        };

        // node 0: G = 0, H = c
        let f0 = signed_power(lambda * u[0] * c, pc);
        if record {
            f[0] = f0;
        }
        push(c, &mut changes);
        let mut acc_y = w[0] * u[0] * f0;
        let mut acc_z = 0.0;
        for j in 1..last {
            let cj = c - acc_z;
            let g = self.node_solve(acc_y, cj, self.half_wu[j], lambda * u[j], self.half_wvq[j]);
            let zj = v[j] * signed_power(v[j] * g, q);
            let hj = cj - 0.5 * w[j] * zj;
            let fj = signed_power(lambda * u[j] * hj, pc);
            if record {
                f[j] = fj;
            }
            push(hj, &mut changes);
            acc_y += w[j] * u[j] * fj;
            acc_z += w[j] * zj;
        }
        let zn = v[last] * signed_power(v[last] * acc_y, q);
        let defect = c - acc_z - w[last] * zn;
        push(defect, &mut changes);
        March { changes, defect, f }
    }

    /// Number of sign changes of `(H_0, ..., H_{N-1}, defect)`.
    pub fn count(&self, lambda: f64, c: f64) -> usize {
        self.march(lambda, c, false).changes
    }

    /// Smallest `lambda` whose marching sequence has `n + 1` sign changes.
    pub fn eigenvalue(&self, n: usize, c: f64, seed: f64, cfg: &SearchConfig) -> Result<f64> {
        let seed = if seed.is_finite() && seed > 0.0 { seed } else { 1.0 };
        let (mut lo, mut hi) = (seed, seed);
        let mut guard = 0;
        if self.count(seed, c) > n {
            loop {
                lo *= 0.5;
                guard += 1;
                if self.count(lo, c) <= n {
                    break;
                }
                if guard > 2000 || lo == 0.0 {
                    return Err(Error::BracketFailed { lo, hi });
                }
            }
        } else {
            loop {
                hi *= 2.0;
                guard += 1;
                if self.count(hi, c) > n {
                    break;
                }
                if guard > 2000 || !hi.is_finite() {
                    return Err(Error::BracketFailed { lo, hi });
                }
            }
        }
        for _ in 0..cfg.max_outer {
            if hi - lo <= cfg.outer_tol * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count(mid, c) > n {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let rl = self.march(lo, c, false).defect;
        let rh = self.march(hi, c, false).defect;
        if rl != rh && rl.signum() != rh.signum() {
            let t = rl / (rl - rh);
            return Ok(lo + t * (hi - lo));
        }
        Ok(if rl.abs() <= rh.abs() { lo } else { hi })
    }

    /// Builds the normalised triple for the `n`-th eigenvalue.
    pub fn triple(&self, n: usize, c: f64, seed: f64, cfg: &SearchConfig) -> Result<SpectralTriple> {
        let spec = self.spec;
        let lambda_raw = self.eigenvalue(n, c, seed, cfg)?;
        let f = self.march(lambda_raw, c, true).f;
        let f = SampledFunction::from_parts(spec.grid.clone(), f);
        let norm = lp_norm(&f, spec.p);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::ZeroImage);
        }
        let f = f.scale(1.0 / norm);
        let lambda = lambda_raw * norm.powf(spec.q - spec.p);
        let g = SampledFunction::from_parts(spec.grid.clone(), spec_forward(spec, f.values()));
        let nodal_count = count_zeros(&g, &cfg.policy)?;
        if nodal_count != n {
            return Err(Error::NodalCountMissed {
                wanted: n,
                achieved: nodal_count,
            });
        }
        let residual = residual_with(spec, spec.p, spec.q, f.values(), lambda);
        Ok(SpectralTriple {
            g,
            f,
            lambda,
            nodal_count,
            residual,
        })
    }
}

fn spec_forward(spec: &ProblemSpec, f: &[f64]) -> Vec<f64> {
    use crate::operator::AdjointPair;
    spec.forward(f)
}

/// A triple with exactly `n` interior zeros of `g`, seeded by the pattern `z0`.
pub fn find_spectral_triple(spec: &ProblemSpec, n: usize, z0: &SignPattern, cfg: &SearchConfig) -> Result<SpectralTriple> {
    cfg.validate()?;
    let f0 = initial_sign_function(spec, z0);
    let budget = if n == 0 { 10_000 } else { cfg.seed_iterations };
    match run_iteration_with(spec, spec.p, spec.q, f0.values(), &cfg.iteration(budget)) {
        Ok((t, _)) if t.nodal_count == n => return Ok(t),
        Ok(_) | Err(Error::NotConverged(_)) => {}
        Err(e) => return Err(e),
    }
    // shooting scale and bracket seed taken from the first step of the start
    let norm = lp_norm(&f0, spec.p);
    let f0n: Vec<f64> = f0.values().iter().map(|v| v / norm).collect();
    let (g0, _, lambda0) = iterate_once_with(spec, spec.p, spec.q, &f0n)?;
    let vz: Vec<f64> = g0
        .iter()
        .zip(spec.v())
        .map(|(g, v)| v * signed_power(*g, spec.q))
        .collect();
    let mut c = suffix_integral(&vz, spec.grid.weights())[0].abs();
    if !(c > 0.0 && c.is_finite()) {
        c = 1.0;
    }
    DiscreteShooter::new(spec).triple(n, c, lambda0, cfg)
}

/// Start `i` of the multistart family. Start 0 is the alternating equal-block
/// pattern; later starts perturb the breakpoints with a per-start stream so
/// that the first `k` starts never depend on how many are requested.
pub fn start_pattern(n: usize, seed: u64, i: usize) -> SignPattern {
    if i == 0 {
        return SignPattern::alternating(n);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    let gaps: Vec<f64> = (0..=n).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-3).collect();
    let total: f64 = gaps.iter().sum();
    let z = gaps
        .iter()
        .enumerate()
        .map(|(k, g)| if k % 2 == 0 { g / total } else { -g / total })
        .collect();
    SignPattern::new(z).expect("positive gaps")
}

/// Multistart estimate of `max sp_n` or `min sp_n`.
pub fn lambda_extremes(spec: &ProblemSpec, cfg: &SearchConfig) -> Result<SpectrumResult> {
    cfg.validate()?;
    let n = cfg.n;
    let runs: Vec<(SignPattern, Result<SpectralTriple>)> = (0..cfg.starts)
        .into_par_iter()
        .map(|i| {
            let z = start_pattern(n, cfg.rng_seed, i);
            let t = find_spectral_triple(spec, n, &z, cfg);
            (z, t)
        })
        .collect();
    let mut found: Vec<(f64, SignPattern, SpectralTriple)> = Vec::new();
    for (z, t) in runs {
        if let Ok(t) = t {
            found.push((t.lambda, z, t));
        }
    }
    if found.is_empty() {
        return Err(Error::Empty(n));
    }
    let starts_converged = found.len();
    let better = |a: &(f64, SignPattern, SpectralTriple), b: &(f64, SignPattern, SpectralTriple)| {
        let ord = a.0.total_cmp(&b.0).then_with(|| cmp_slices(a.1.as_slice(), b.1.as_slice()));
        match cfg.mode {
            Mode::Max => ord.is_gt(),
            Mode::Min => ord.is_lt(),
        }
    };
    let mut best = 0;
    for k in 1..found.len() {
        if better(&found[k], &found[best]) {
            best = k;
        }
    }
    let mut distinct: Vec<(f64, SignPattern)> = Vec::new();
    for (l, z, _) in &found {
        if !distinct.iter().any(|(m, _)| (l - m).abs() <= 1e-6 * l.abs().max(m.abs())) {
            distinct.push((*l, z.clone()));
        }
    }
    distinct.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lambda_extreme, _, best_triple) = found.swap_remove(best);
    Ok(SpectrumResult {
        n,
        lambda_extreme,
        best_triple,
        all_found: distinct,
        starts_used: cfg.starts,
        starts_converged,
    })
}

fn cmp_slices(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o.is_ne() {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Sign changes of `Tf1 - eps Tf2` and of
/// `Tf1 - eps^((p-1)/(q-1)) (lambda2/lambda1)^(1/(q-1)) Tf2`.
pub fn sign_change_comparison(
    spec: &ProblemSpec,
    t1: &SpectralTriple,
    t2: &SpectralTriple,
    eps: f64,
    policy: &NodalCountPolicy,
) -> Result<(usize, usize)> {
    let g1 = SampledFunction::from_parts(spec.grid.clone(), spec_forward(spec, t1.f.values()));
    let g2 = SampledFunction::from_parts(spec.grid.clone(), spec_forward(spec, t2.f.values()));
    let (p, q) = (spec.p, spec.q);
    let scale = eps.powf((p - 1.0) / (q - 1.0)) * (t2.lambda / t1.lambda).powf(1.0 / (q - 1.0));
    let lhs = count_sign_changes(&g1.sub_scaled(eps, &g2)?, policy)?;
    let rhs = count_sign_changes(&g1.sub_scaled(scale, &g2)?, policy)?;
    Ok((lhs, rhs))
}

/// `sup ||Tf||_q` over the unit ball of `L_p`, i.e. `lambda_0^(-1/q)`.
pub fn operator_norm_estimate(spec: &ProblemSpec) -> Result<f64> {
    let cfg = SearchConfig::new(0, Mode::Max);
    let r = lambda_extremes(spec, &cfg)?;
    Ok(r.lambda_extreme.powf(-1.0 / spec.q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Interval;
    use std::f64::consts::PI;

    fn unit(p: f64, q: f64, level: u32) -> ProblemSpec {
        ProblemSpec::from_text(p, q, Interval::unit(), "1", "1", level).unwrap()
    }

    #[test]
    fn node_solve_satisfies_its_equation() {
        let s = unit(3.0, 1.5, 6);
        let sh = DiscreteShooter::new(&s);
        for &(a0, c, k, lu, m) in &[(0.3, 1.0, 0.01, 5.0, 0.02), (-0.2, -0.7, 0.5, 3.0, 0.9), (0.0, 1e-3, 0.1, 1.0, 2.0)] {
            let g = sh.node_solve(a0, c, k, lu, m);
            let rhs = a0 + k * signed_power(lu * (c - m * signed_power(g, 1.5)), 1.5);
            assert!((g - rhs).abs() < 1e-13, "{g} {rhs}");
        }
    }

    #[test]
    fn classical_modes() {
        let s = unit(2.0, 2.0, 12);
        let cfg = SearchConfig::default();
        for n in 0..6 {
            let t = find_spectral_triple(&s, n, &SignPattern::alternating(n), &cfg).unwrap();
            let want = ((n as f64 + 0.5) * PI).powi(2);
            assert!((t.lambda - want).abs() / want < 1e-3, "{n} {}", t.lambda);
            assert_eq!(t.nodal_count, n);
            assert!(t.residual < 1e-8, "{}", t.residual);
        }
    }

    #[test]
    fn shooting_agrees_with_iteration_on_ground_state() {
        let s = ProblemSpec::from_text(2.5, 1.8, Interval::unit(), "1+x", "exp(-x)", 10).unwrap();
        let cfg = SearchConfig::default();
        let it = find_spectral_triple(&s, 0, &SignPattern::positive(0), &cfg).unwrap();
        let sh = DiscreteShooter::new(&s).triple(0, 0.37, 1.0, &cfg).unwrap();
        assert!((it.lambda - sh.lambda).abs() / it.lambda < 1e-8, "{} {}", it.lambda, sh.lambda);
    }

    #[test]
    fn shooting_result_is_independent_of_scale() {
        let s = unit(3.0, 2.0, 10);
        let cfg = SearchConfig::default();
        let sh = DiscreteShooter::new(&s);
        let a = sh.triple(2, 1.0, 1.0, &cfg).unwrap();
        let b = sh.triple(2, 17.0, 400.0, &cfg).unwrap();
        assert!((a.lambda - b.lambda).abs() / a.lambda < 1e-9);
    }

    #[test]
    fn triples_are_fixed_points() {
        let s = unit(3.0, 2.0, 10);
        let cfg = SearchConfig::default();
        let t = find_spectral_triple(&s, 3, &SignPattern::alternating(3), &cfg).unwrap();
        let (_, f1, l1) = iterate_once_with(&s, 3.0, 2.0, t.f.values()).unwrap();
        assert!((l1 - t.lambda).abs() / t.lambda < 1e-8);
        let d: f64 = f1.iter().zip(t.f.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < 1e-6, "{d}");
        assert!((t.lambda.powf(-0.5) - lp_norm(&t.g, 2.0)).abs() < 1e-8);
    }

    #[test]
    fn extremes_agree_for_equal_exponents() {
        let s = ProblemSpec::from_text(2.0, 2.0, Interval::unit(), "1+x", "1", 9).unwrap();
        let mut cfg = SearchConfig::new(2, Mode::Max);
        cfg.starts = 4;
        let hi = lambda_extremes(&s, &cfg).unwrap();
        cfg.mode = Mode::Min;
        let lo = lambda_extremes(&s, &cfg).unwrap();
        assert!((hi.lambda_extreme - lo.lambda_extreme).abs() <= 1e-8 * hi.lambda_extreme);
        assert_eq!(hi.all_found.len(), 1);
        assert_eq!(hi.best_triple.nodal_count, 2);
    }

    #[test]
    fn more_starts_never_lower_the_max() {
        let s = unit(3.0, 2.0, 9);
        let mut cfg = SearchConfig::new(2, Mode::Max);
        let one = lambda_extremes(&s, &cfg).unwrap().lambda_extreme;
        cfg.starts = 8;
        let r = lambda_extremes(&s, &cfg).unwrap();
        assert!(r.lambda_extreme >= one);
        assert_eq!(r.starts_used, 8);
        assert!(r.starts_converged >= 1);
    }

    #[test]
    fn start_patterns_are_nested_and_valid() {
        for i in 0..10 {
            let a = start_pattern(4, 7, i);
            let b = start_pattern(4, 7, i);
            assert_eq!(a, b);
            let l1: f64 = a.as_slice().iter().map(|v| v.abs()).sum();
            assert!((l1 - 1.0).abs() < 1e-12);
            for (k, z) in a.as_slice().iter().enumerate() {
                assert_eq!(z.signum(), if k % 2 == 0 { 1.0 } else { -1.0 });
            }
        }
        assert_ne!(start_pattern(4, 7, 1), start_pattern(4, 8, 1));
    }

    #[test]
    fn operator_norm_of_volterra() {
        let s = unit(2.0, 2.0, 12);
        let nrm = operator_norm_estimate(&s).unwrap();
        assert!((nrm - 2.0 / PI).abs() < 1e-5, "{nrm}");
        let s2 = ProblemSpec::from_text(2.0, 2.0, Interval::unit(), "1", "2", 12).unwrap();
        let nrm2 = operator_norm_estimate(&s2).unwrap();
        assert!((nrm2 - 2.0 * nrm).abs() < 1e-9 * nrm);
    }

    #[test]
    fn comparison_of_first_two_modes() {
        let s = unit(2.0, 2.0, 11);
        let cfg = SearchConfig::default();
        let t0 = find_spectral_triple(&s, 0, &SignPattern::positive(0), &cfg).unwrap();
        let t1 = find_spectral_triple(&s, 1, &SignPattern::alternating(1), &cfg).unwrap();
        let (l, r) = sign_change_comparison(&s, &t0, &t1, 0.5, &cfg.policy).unwrap();
        assert!(l <= r, "{l} {r}");
        let (l0, r0) = sign_change_comparison(&s, &t0, &t1, 1e-9, &cfg.policy).unwrap();
        assert_eq!((l0, r0), (0, 0));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("max".parse::<Mode>().unwrap(), Mode::Max);
        assert!("avg".parse::<Mode>().is_err());
        assert_eq!(Mode::default_for(3.0, 2.0), Mode::Max);
        assert_eq!(Mode::default_for(2.0, 3.0), Mode::Min);
    }
}
