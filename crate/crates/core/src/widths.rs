//! Numerical estimates of the Kolmogorov, Bernstein and approximation widths
//! that sandwich the spectral numbers `lambda_n^(-1/q)`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{lp_norm, sign_change_locations, signed_power, SampledFunction};
use crate::iteration::{iterate_once_with, run_iteration_with, IterationConfig, SpectralTriple};
use crate::operator::{prefix_integral, AdjointPair, BlockPartition, ConstrainedOperator, Cut, ProblemSpec, ZeroAnchors};
use crate::search::{find_spectral_triple, lambda_extremes, start_pattern, Mode, SearchConfig};
use crate::iteration::SignPattern;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthsConfig {
    /// Largest number of fixed-point steps applied to the sphere samples.
    pub k_iters: usize,
    /// Sign patterns sampled on the sphere.
    pub samples: usize,
    pub rng_seed: u64,
}

impl Default for WidthsConfig {
    fn default() -> Self {
        Self {
            k_iters: 50,
            samples: 64,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthsReport {
    pub n: usize,
    pub kolmogorov_lb: f64,
    pub bernstein_val: f64,
    pub approx_ub: f64,
    /// `lambda_hat_n^(-1/q)`
    pub lambda_hat_pow: f64,
    /// `lambda_check_n^(-1/q)`
    pub lambda_check_pow: f64,
    /// `(max_{i <= n} lambda_hat_i)^(-1/q)`
    pub union_hat_pow: f64,
}

impl WidthsReport {
    pub const CSV_HEADER: &'static str = "n,kolmogorov_lb,bernstein_val,approx_ub,lambda_hat_pow,lambda_check_pow,union_hat_pow";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.n,
            self.kolmogorov_lb,
            self.bernstein_val,
            self.approx_ub,
            self.lambda_hat_pow,
            self.lambda_check_pow,
            self.union_hat_pow
        )
    }

    pub fn to_csv(reports: &[WidthsReport]) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in reports {
            let _ = writeln!(out, "{}", r.csv_row());
        }
        out
    }
}

/// Interior zeros of the cumulative integral `G = int_a^x u f`, located by
/// linear interpolation so that the interpolated `G` vanishes there.
fn cumulative_zeros(spec: &ProblemSpec, f: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let y: Vec<f64> = f.iter().zip(spec.u()).map(|(f, u)| f * u).collect();
    let big_g = prefix_integral(&y, spec.grid.weights());
    let x = spec.grid.nodes();
    let floor = 1e-12 * big_g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut zeros = Vec::new();
    let mut cells = Vec::new();
    let mut prev: Option<usize> = None;
    for j in 1..big_g.len() {
        if big_g[j].abs() <= floor {
            continue;
        }
        if let Some(i) = prev {
            if big_g[i].signum() != big_g[j].signum() {
                if j == i + 1 {
                    let t = big_g[i] / (big_g[i] - big_g[j]);
                    zeros.push(x[i] + t * (x[j] - x[i]));
                    cells.push(i);
                } else {
                    let m = (i + j) / 2;
                    zeros.push(x[m]);
                    cells.push(m);
                }
            }
        }
        prev = Some(j);
    }
    (zeros, cells)
}

/// `inf_alpha (sum |alpha_i|^q c_i)^(1/q) / (sum |alpha_i|^p d_i)^(1/p)`.
///
/// With masses `m_i = |alpha_i|^p d_i` on the simplex the numerator becomes
/// `sum m_i^(q/p) e_i`, `e_i = c_i d_i^(-q/p)`: convex for `q > p` (interior
/// minimiser `m_i ~ e_i^(-p/(q-p))`), concave otherwise (minimum at a vertex).
pub fn bernstein_infimum(c: &[f64], d: &[f64], p: f64, q: f64) -> Result<f64> {
    if c.len() != d.len() || c.is_empty() {
        return Err(Error::InvalidInput("block lists must be nonempty and of equal length".into()));
    }
    for (i, (&ci, &di)) in c.iter().zip(d).enumerate() {
        if !(ci > 0.0 && di > 0.0) {
            return Err(Error::DegenerateBlock(i));
        }
    }
    let e: Vec<f64> = c.iter().zip(d).map(|(c, d)| c * d.powf(-q / p)).collect();
    if q > p {
        let raw: Vec<f64> = e.iter().map(|e| e.powf(-p / (q - p))).collect();
        let total: f64 = raw.iter().sum();
        let s: f64 = raw.iter().zip(&e).map(|(r, e)| (r / total).powf(q / p) * e).sum();
        Ok(s.powf(1.0 / q))
    } else {
        Ok(e.iter().fold(f64::INFINITY, |m, &v| m.min(v)).powf(1.0 / q))
    }
}

/// Lower estimate of the Bernstein width from the split of a spectral triple
/// at the zeros of `g`.
///
/// Block boundaries sit inside the cell of each zero, at the point where the
/// running sum of `|f|^p - lambda |g|^q` vanishes; each block then carries the
/// identity `||f_i||_p^p = lambda ||g_i||_q^q` exactly.
pub fn bernstein_value(spec: &ProblemSpec, triple: &SpectralTriple) -> Result<f64> {
    let (p, q) = (spec.p, spec.q);
    let f = triple.f.values();
    let g = spec.forward(f);
    let w = spec.grid.weights();
    let x = spec.grid.nodes();
    let (zeros, _) = cumulative_zeros(spec, f);
    let fp: Vec<f64> = f.iter().zip(w).map(|(f, w)| w * f.abs().powf(p)).collect();
    let gq: Vec<f64> = g.iter().zip(w).map(|(g, w)| w * g.abs().powf(q)).collect();
    let delta: Vec<f64> = fp.iter().zip(&gq).map(|(a, b)| a - triple.lambda * b).collect();
    let mut running = vec![0.0; delta.len() + 1];
    for (j, d) in delta.iter().enumerate() {
        running[j + 1] = running[j] + d;
    }
    let mut cuts = Vec::with_capacity(zeros.len());
    for &t in &zeros {
        let best = (0..delta.len())
            .filter(|&m| delta[m] != 0.0 && running[m] * running[m + 1] <= 0.0)
            .min_by(|&a, &b| (x[a] - t).abs().total_cmp(&(x[b] - t).abs()))
            .ok_or(Error::DegenerateBlock(cuts.len() + 1))?;
        cuts.push((best, (-running[best] / delta[best]).clamp(0.0, 1.0)));
    }
    let blocks = zeros.len() + 1;
    let mut c = vec![0.0; blocks];
    let mut d = vec![0.0; blocks];
    let mut block = 0;
    for j in 0..delta.len() {
        if block < cuts.len() && cuts[block].0 == j {
            let th = cuts[block].1;
            c[block] += th * gq[j];
            d[block] += th * fp[j];
            block += 1;
            c[block] += (1.0 - th) * gq[j];
            d[block] += (1.0 - th) * fp[j];
        } else {
            c[block] += gq[j];
            d[block] += fp[j];
        }
    }
    bernstein_infimum(&c, &d, p, q)
}

/// Suffix cuts for the rank-`n` approximant: between consecutive anchors,
/// the point where the suffix mass of `v g_(q)` vanishes.
fn mass_cuts(spec: &ProblemSpec, triple: &SpectralTriple, anchors: &[f64]) -> Result<Vec<Cut>> {
    let w = spec.grid.weights();
    let x = spec.grid.nodes();
    let g = spec.forward(triple.f.values());
    let z: Vec<f64> = g
        .iter()
        .zip(spec.v())
        .zip(w)
        .map(|((g, v), w)| w * v * signed_power(*g, spec.q))
        .collect();
    let n = z.len();
    let mut suffix = vec![0.0; n + 1];
    for j in (0..n).rev() {
        suffix[j] = suffix[j + 1] + z[j];
    }
    let mut cuts = Vec::new();
    for (i, pair) in anchors.windows(2).enumerate() {
        let (lo, hi) = (pair[0], pair[1]);
        let mid = 0.5 * (lo + hi);
        let m = (0..n)
            .filter(|&m| x[m] > lo && x[m] < hi && z[m] != 0.0 && suffix[m] * suffix[m + 1] <= 0.0)
            .min_by(|&a, &b| (x[a] - mid).abs().total_cmp(&(x[b] - mid).abs()))
            .ok_or(Error::DegenerateBlock(i + 1))?;
        cuts.push(Cut {
            node: m,
            left_fraction: (1.0 + suffix[m + 1] / z[m]).clamp(0.0, 1.0),
        });
    }
    Ok(cuts)
}

/// Upper estimate of the approximation number `a_n` through the extremal
/// problem for `T+ = T - T_n`, with `T_n` anchored at the zeros of `g`.
pub fn approximation_upper_bound(spec: &ProblemSpec, triple: &SpectralTriple) -> Result<f64> {
    let (zeros, _) = cumulative_zeros(spec, triple.f.values());
    let anchors = ZeroAnchors::from_interior(spec.interval, &zeros)?;
    let cuts = mass_cuts(spec, triple, anchors.as_slice())?;
    let partition = BlockPartition::from_cuts(&spec.grid, anchors, cuts)?;
    let op = ConstrainedOperator::new(spec, partition);
    let cfg = IterationConfig {
        tol: 1e-13,
        max_iter: 5_000,
        ..IterationConfig::default()
    };
    // the spectral f itself and a flat start; both values bound the supremum from below
    let mut lambda = f64::INFINITY;
    for start in [triple.f.values().to_vec(), vec![1.0; spec.grid.len()]] {
        let l = match run_iteration_with(&op, spec.p, spec.q, &start, &cfg) {
            Ok((t, _)) => t.lambda,
            // lambda_k^(-1/q) never exceeds the supremum, so the last value is usable
            Err(Error::NotConverged(trace)) => *trace.lambdas.last().ok_or(Error::ZeroImage)?,
            Err(e) => return Err(e),
        };
        lambda = lambda.min(l);
    }
    Ok(lambda.powf(-1.0 / spec.q))
}

/// Sign function of the alternating pattern with breakpoints `t` (in `(0,1)`
/// coordinates), averaged over the cell of each node so that it depends
/// continuously on the breakpoints.
fn cell_averaged_sign(spec: &ProblemSpec, t: &[f64]) -> Vec<f64> {
    let iv = spec.interval;
    let x = spec.grid.nodes();
    let h = spec.grid.step();
    let edges: Vec<f64> = t.iter().map(|t| iv.a + t * iv.length()).collect();
    // S(y) = int_a^y sgn
    let prim = |y: f64| {
        let mut s = 0.0;
        let mut left = iv.a;
        let mut sign = 1.0;
        for &e in edges.iter().chain(std::iter::once(&iv.b)) {
            if y <= left {
                break;
            }
            s += sign * (y.min(e) - left);
            left = e;
            sign = -sign;
        }
        s
    };
    x.iter()
        .map(|&xj| {
            let lo = (xj - 0.5 * h).max(iv.a);
            let hi = (xj + 0.5 * h).min(iv.b);
            (prim(hi) - prim(lo)) / (hi - lo)
        })
        .collect()
}

/// `||g_j||_q` for `j = 0..=k`, starting from the normalised `f_0`.
fn norm_path(spec: &ProblemSpec, f0: &[f64], k: usize) -> Result<Vec<f64>> {
    let (p, q) = (spec.p, spec.q);
    let w = spec.grid.weights();
    let s: f64 = f0.iter().zip(w).map(|(f, w)| w * f.abs().powf(p)).sum();
    let mut f: Vec<f64> = f0.iter().map(|v| v / s.powf(1.0 / p)).collect();
    let mut out = Vec::with_capacity(k + 1);
    for _ in 0..=k {
        let (g, next, _) = iterate_once_with(spec, p, q, &f)?;
        out.push(lp_norm(&SampledFunction::from_parts(spec.grid.clone(), g), q));
        f = next;
    }
    Ok(out)
}

/// `g_k` for the pattern with breakpoints `t`.
fn iterate_k(spec: &ProblemSpec, t: &[f64], k: usize) -> Result<SampledFunction> {
    let (p, q) = (spec.p, spec.q);
    let mut f = cell_averaged_sign(spec, t);
    let w = spec.grid.weights();
    let s: f64 = f.iter().zip(w).map(|(f, w)| w * f.abs().powf(p)).sum();
    for v in &mut f {
        *v /= s.powf(1.0 / p);
    }
    let mut g = Vec::new();
    for _ in 0..=k {
        let (gk, next, _) = iterate_once_with(spec, p, q, &f)?;
        g = gk;
        f = next;
    }
    Ok(SampledFunction::from_parts(spec.grid.clone(), g))
}

fn breakpoints(z: &SignPattern) -> Vec<f64> {
    let mut acc = 0.0;
    let s = z.as_slice();
    s[..s.len() - 1]
        .iter()
        .map(|v| {
            acc += v.abs();
            acc
        })
        .collect()
}

/// Newton solve for breakpoints `t` such that `g_k(tau_i; t) = 0` at the given
/// targets: the Borsuk point of the odd map `z -> (g_k(tau_i; z))_i`.
fn borsuk_point(spec: &ProblemSpec, targets: &[f64], t0: &[f64], k: usize) -> Option<(Vec<f64>, SampledFunction)> {
    let n = targets.len();
    let h = spec.grid.step() / spec.interval.length();
    let resid = |t: &[f64]| -> Option<(DVector<f64>, SampledFunction)> {
        let g = iterate_k(spec, t, k).ok()?;
        let scale = g.max_abs();
        Some((DVector::from_iterator(n, targets.iter().map(|&x| g.eval(x) / scale)), g))
    };
    let valid = |t: &[f64]| {
        t.first().is_some_and(|&a| a > h)
            && t.last().is_some_and(|&b| b < 1.0 - h)
            && t.windows(2).all(|w| w[1] - w[0] > h)
    };
    let mut t = t0.to_vec();
    let (mut r, mut g) = resid(&t)?;
    for _ in 0..40 {
        if r.amax() <= 1e-11 {
            return Some((t, g));
        }
        let step = 0.25 * h;
        let mut jac = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut tp = t.clone();
            let mut tm = t.clone();
            tp[c] += step;
            tm[c] -= step;
            let (rp, _) = resid(&tp)?;
            let (rm, _) = resid(&tm)?;
            jac.set_column(c, &((rp - rm) / (2.0 * step)));
        }
        let dir = jac.lu().solve(&(-&r))?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<f64> = t.iter().zip(dir.iter()).map(|(a, d)| a + alpha * d).collect();
            if valid(&cand) {
                if let Some((rc, gc)) = resid(&cand) {
                    if rc.amax() < r.amax() {
                        t = cand;
                        r = rc;
                        g = gc;
                        accepted = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (r.amax() <= 1e-9).then_some((t, g))
}

/// Sampled estimate of `max_k min_{z in O_n} ||g_k(., z)||_q`, a lower bound
/// for the Kolmogorov width `d_n` up to the sampling of the sphere.
///
/// Besides the sampled patterns each step `k` contributes the Borsuk point
/// where `g_k` vanishes at the zeros of the `n`-th spectral function, found by
/// Newton continuation in `k`. Steps are taken only while that point can be
/// resolved in floating point: perturbations in the leading directions grow
/// like `(lambda_n / lambda_0)^k`, so `k` stops before the growth reaches 1e10.
pub fn kolmogorov_lower_bound(spec: &ProblemSpec, n: usize, k_iters: usize, samples: usize, rng_seed: u64) -> Result<f64> {
    if k_iters == 0 {
        return Err(Error::InvalidInput("k_iters must be at least 1".into()));
    }
    if n == 0 {
        let f0 = vec![1.0; spec.grid.len()];
        return Ok(*norm_path(spec, &f0, k_iters)?.last().expect("nonempty"));
    }
    let cfg = SearchConfig::default();
    let top = find_spectral_triple(spec, 0, &SignPattern::positive(0), &cfg)?;
    let mode = find_spectral_triple(spec, n, &SignPattern::alternating(n), &cfg)?;
    let amp = (mode.lambda / top.lambda).powf((2.0 / spec.q).max(2.0 / spec.p));
    let cap = ((10.0 * std::f64::consts::LN_10) / amp.ln()).floor().max(1.0) as usize;
    let k_max = k_iters.min(cap);

    let sampled: Vec<Vec<f64>> = (0..samples.max(1))
        .into_par_iter()
        .map(|i| {
            let t = breakpoints(&start_pattern(n, rng_seed, i));
            norm_path(spec, &cell_averaged_sign(spec, &t), k_max)
        })
        .collect::<Result<_>>()?;

    let targets = sign_change_locations(&mode.g, &cfg.policy)?;
    if targets.len() != n {
        return Err(Error::NodalCountMissed {
            wanted: n,
            achieved: targets.len(),
        });
    }
    let iv = spec.interval;
    let mut t: Vec<f64> = sign_change_locations(&mode.f, &cfg.policy)?
        .into_iter()
        .take(n)
        .map(|x| (x - iv.a) / iv.length())
        .collect();
    if t.len() != n {
        t = breakpoints(&SignPattern::alternating(n));
    }
    let mut best = 0.0f64;
    for k in 0..=k_max {
        let mut est = sampled.iter().map(|s| s[k]).fold(f64::INFINITY, f64::min);
        match borsuk_point(spec, &targets, &t, k) {
            Some((tk, g)) => {
                est = est.min(lp_norm(&g, spec.q));
                t = tk;
            }
            // unresolved: this and later steps say nothing reliable
            None => break,
        }
        best = best.max(est);
    }
    Ok(best)
}

/// All width estimates for one `n`.
pub fn widths_report(spec: &ProblemSpec, n: usize, search: &SearchConfig, widths: &WidthsConfig) -> Result<WidthsReport> {
    let q = spec.q;
    let hat = lambda_extremes(spec, &SearchConfig { n, mode: Mode::Max, ..*search })?;
    let check = lambda_extremes(spec, &SearchConfig { n, mode: Mode::Min, ..*search })?;
    let mut union_max = hat.lambda_extreme;
    for i in 0..n {
        let r = lambda_extremes(spec, &SearchConfig { n: i, mode: Mode::Max, ..*search })?;
        union_max = union_max.max(r.lambda_extreme);
    }
    Ok(WidthsReport {
        n,
        kolmogorov_lb: kolmogorov_lower_bound(spec, n, widths.k_iters, widths.samples, widths.rng_seed)?,
        bernstein_val: bernstein_value(spec, &check.best_triple)?,
        approx_ub: approximation_upper_bound(spec, &hat.best_triple)?,
        lambda_hat_pow: hat.lambda_extreme.powf(-1.0 / q),
        lambda_check_pow: check.lambda_extreme.powf(-1.0 / q),
        union_hat_pow: union_max.powf(-1.0 / q),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Interval;
    use std::f64::consts::PI;

    fn unit(p: f64, q: f64, level: u32) -> ProblemSpec {
        ProblemSpec::from_text(p, q, Interval::unit(), "1", "1", level).unwrap()
    }

    fn brute_force(c: &[f64], d: &[f64], p: f64, q: f64) -> f64 {
        // grid over the first coordinates of the mass simplex
        let steps = 400;
        let mut best = f64::INFINITY;
        let k = c.len();
        let mut idx = vec![0usize; k - 1];
        loop {
            let used: usize = idx.iter().sum();
            if used <= steps {
                let mut m: Vec<f64> = idx.iter().map(|&i| i as f64 / steps as f64).collect();
                m.push((steps - used) as f64 / steps as f64);
                let num: f64 = m.iter().zip(c.iter().zip(d)).map(|(m, (c, d))| (m / d).powf(q / p) * c).sum();
                best = best.min(num.powf(1.0 / q));
            }
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    return best;
                }
                idx[pos] += 1;
                if idx[pos] <= steps {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn bernstein_closed_form_matches_grid() {
        let c = [0.3, 0.7, 0.2];
        let d = [0.5, 0.2, 0.3];
        for (p, q) in [(2.0, 3.0), (3.0, 2.0), (2.0, 2.0), (1.5, 4.0)] {
            let exact = bernstein_infimum(&c, &d, p, q).unwrap();
            let grid = brute_force(&c, &d, p, q);
            assert!(exact <= grid * (1.0 + 1e-12), "{p} {q}");
            assert!((exact - grid).abs() < 2e-3 * grid, "{p} {q} {exact} {grid}");
        }
        assert!(matches!(bernstein_infimum(&[1.0, 0.0], &[1.0, 1.0], 2.0, 2.0), Err(Error::DegenerateBlock(1))));
    }

    #[test]
    fn bernstein_scale_invariance() {
        let c = [0.3, 0.7];
        let d = [0.5, 0.2];
        let a = bernstein_infimum(&c, &d, 2.0, 3.0).unwrap();
        // alpha -> 2 alpha multiplies c by 2^q and d by 2^p
        let c2: Vec<f64> = c.iter().map(|v| v * 8.0).collect();
        let d2: Vec<f64> = d.iter().map(|v| v * 4.0).collect();
        assert!((bernstein_infimum(&c2, &d2, 2.0, 3.0).unwrap() - a).abs() < 1e-14);
    }

    #[test]
    fn bernstein_of_classical_modes() {
        let s = unit(2.0, 2.0, 11);
        let cfg = SearchConfig::default();
        let t0 = find_spectral_triple(&s, 0, &SignPattern::positive(0), &cfg).unwrap();
        let b0 = bernstein_value(&s, &t0).unwrap();
        assert!((b0 - t0.lambda.powf(-0.5)).abs() < 1e-12);
        let t1 = find_spectral_triple(&s, 1, &SignPattern::alternating(1), &cfg).unwrap();
        let b1 = bernstein_value(&s, &t1).unwrap();
        assert!((b1 - 1.0 / (1.5 * PI)).abs() < 1e-5, "{b1}");
        assert!((b1 - t1.lambda.powf(-0.5)).abs() < 1e-10);
    }

    #[test]
    fn approximation_bound_for_volterra() {
        let s = unit(2.0, 2.0, 11);
        let cfg = SearchConfig::default();
        let t0 = find_spectral_triple(&s, 0, &SignPattern::positive(0), &cfg).unwrap();
        let a0 = approximation_upper_bound(&s, &t0).unwrap();
        assert!((a0 - t0.lambda.powf(-0.5)).abs() < 1e-8, "{a0}");
        let t1 = find_spectral_triple(&s, 1, &SignPattern::alternating(1), &cfg).unwrap();
        let a1 = approximation_upper_bound(&s, &t1).unwrap();
        assert!((a1 - 1.0 / (1.5 * PI)).abs() < 1e-5, "{a1}");
        assert!(a1 <= t1.lambda.powf(-0.5) * (1.0 + 1e-6));
    }

    #[test]
    fn kolmogorov_estimates() {
        let s = unit(2.0, 2.0, 11);
        let k0 = kolmogorov_lower_bound(&s, 0, 40, 4, 0).unwrap();
        assert!((k0 - 2.0 / PI).abs() < 1e-5, "{k0}");
        let k1 = kolmogorov_lower_bound(&s, 1, 50, 16, 0).unwrap();
        assert!((k1 - 1.0 / (1.5 * PI)).abs() < 0.05 / (1.5 * PI), "{k1}");
        let k1_short = kolmogorov_lower_bound(&s, 1, 3, 16, 0).unwrap();
        assert!(k1_short <= k1);
        let cfg = SearchConfig::default();
        let t1 = find_spectral_triple(&s, 1, &SignPattern::alternating(1), &cfg).unwrap();
        let a1 = approximation_upper_bound(&s, &t1).unwrap();
        assert!(k1 <= a1 * (1.0 + 1e-6), "{k1} {a1} {}", t1.lambda.powf(-0.5));
    }

    #[test]
    fn cell_average_is_continuous_in_breakpoints() {
        let s = unit(2.0, 2.0, 6);
        let a = cell_averaged_sign(&s, &[0.3]);
        let b = cell_averaged_sign(&s, &[0.3 + 1e-9]);
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6);
        assert!(a.iter().all(|v| v.abs() <= 1.0 + 1e-15));
        assert_eq!(a[0], 1.0);
        assert_eq!(*a.last().unwrap(), -1.0);
    }

    #[test]
    fn report_csv_shape() {
        let r = WidthsReport {
            n: 1,
            kolmogorov_lb: 0.2,
            bernstein_val: 0.21,
            approx_ub: 0.22,
            lambda_hat_pow: 0.22,
            lambda_check_pow: 0.22,
            union_hat_pow: 0.6,
        };
        let csv = WidthsReport::to_csv(&[r]);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 7);
    }
}
