//! Discrete Hardy operator `T`, its adjoint, the anchor-constrained `T+` and
//! the rank-n approximant `T_n`.
//!
//! Cumulative integrals use the trapezoid rule at interior nodes. At the two
//! end nodes the rule is modified so that `(Tf)(a) = 0`, `(T*h)(b) = 0` and
//! `sum w (Tf) h = sum w f (T*h)` hold exactly in floating point arithmetic
//! (up to rounding). Concretely, with `y = u f` and trapezoid weights `w`,
//!
//! ```text
//! G_0 = 0,   G_j = sum_{k<j} w_k y_k + w_j y_j / 2   (0 < j < N),   G_N = sum_{k<N} w_k y_k
//! ```
//!
//! and `Tf = v G`; the adjoint is the mirror image summing to the right.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{check_exponent, conjugate, Grid, Interval, SampledFunction};
use crate::weight::WeightPair;

/// Everything that defines one problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub interval: Interval,
    pub p: f64,
    pub q: f64,
    pub weights: WeightPair,
    pub grid: Arc<Grid>,
}

impl ProblemSpec {
    pub fn new(p: f64, q: f64, weights: WeightPair) -> Result<Self> {
        check_exponent(p)?;
        check_exponent(q)?;
        if !weights.samples_u.same_grid(&weights.samples_v) {
            return Err(Error::GridMismatch);
        }
        let grid = weights.samples_u.grid().clone();
        Ok(Self {
            interval: grid.interval(),
            p,
            q,
            weights,
            grid,
        })
    }

    /// Build from weight expressions on a uniform grid of the given level.
    pub fn from_text(p: f64, q: f64, interval: Interval, u: &str, v: &str, level: u32) -> Result<Self> {
        let grid = Arc::new(Grid::uniform(interval, level)?);
        Self::new(p, q, WeightPair::parse(u, v, &grid)?)
    }

    /// Same problem on a grid of another level.
    pub fn at_level(&self, level: u32) -> Result<Self> {
        let grid = Arc::new(Grid::uniform(self.interval, level)?);
        Self::new(self.p, self.q, self.weights.resample(&grid)?)
    }

    pub fn with_exponents(&self, p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, self.weights.clone())
    }

    /// `p' = p / (p - 1)`.
    pub fn p_conj(&self) -> f64 {
        conjugate(self.p)
    }

    pub fn q_conj(&self) -> f64 {
        conjugate(self.q)
    }

    /// `r = 1/p' + 1/q`.
    pub fn r(&self) -> f64 {
        1.0 / self.p_conj() + 1.0 / self.q
    }

    pub fn u(&self) -> &[f64] {
        self.weights.samples_u.values()
    }

    pub fn v(&self) -> &[f64] {
        self.weights.samples_v.values()
    }

    fn check(&self, f: &SampledFunction) -> Result<()> {
        if f.grid().len() != self.grid.len() || **f.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Left cumulative integral with the end-node modification described above.
pub(crate) fn prefix_integral(y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for j in 1..n {
        acc += w[j - 1] * y[j - 1];
        out[j] = if j + 1 < n { acc + 0.5 * w[j] * y[j] } else { acc };
    }
    out
}

/// Right cumulative integral, the exact adjoint of [`prefix_integral`].
pub(crate) fn suffix_integral(z: &[f64], w: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for k in (0..n - 1).rev() {
        acc += w[k + 1] * z[k + 1];
        out[k] = if k > 0 { acc + 0.5 * w[k] * z[k] } else { acc };
    }
    out
}

/// A linear operator on sampled functions together with its exact discrete
/// adjoint in the trapezoid inner product.
pub trait AdjointPair: Sync {
    fn grid(&self) -> &Arc<Grid>;
    fn forward(&self, f: &[f64]) -> Vec<f64>;
    fn adjoint(&self, h: &[f64]) -> Vec<f64>;
}

impl AdjointPair for ProblemSpec {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn forward(&self, f: &[f64]) -> Vec<f64> {
        let u = self.u();
        let y: Vec<f64> = f.iter().zip(u).map(|(f, u)| f * u).collect();
        let mut g = prefix_integral(&y, self.grid.weights());
        for (g, v) in g.iter_mut().zip(self.v()) {
            *g *= v;
        }
        g
    }

    fn adjoint(&self, h: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = h.iter().zip(self.v()).map(|(h, v)| h * v).collect();
        let mut out = suffix_integral(&z, self.grid.weights());
        for (o, u) in out.iter_mut().zip(self.u()) {
            *o *= u;
        }
        out
    }
}

/// `(Tf)(x) = v(x) int_a^x f u`.
pub fn apply_t(spec: &ProblemSpec, f: &SampledFunction) -> Result<SampledFunction> {
    spec.check(f)?;
    Ok(SampledFunction::from_parts(spec.grid.clone(), spec.forward(f.values())))
}

/// `(T*h)(x) = u(x) int_x^b v h`.
pub fn apply_t_star(spec: &ProblemSpec, h: &SampledFunction) -> Result<SampledFunction> {
    spec.check(h)?;
    Ok(SampledFunction::from_parts(spec.grid.clone(), spec.adjoint(h.values())))
}

/// Zeros `a = a_0 < a_1 < ... < a_n` of a spectral function.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroAnchors {
    anchors: Vec<f64>,
}

impl ZeroAnchors {
    pub fn new(interval: Interval, anchors: Vec<f64>) -> Result<Self> {
        if anchors.first() != Some(&interval.a) {
            return Err(Error::InvalidInput("first anchor must be the left endpoint".into()));
        }
        if let Some(&x) = anchors.iter().find(|&&x| !(x >= interval.a && x <= interval.b)) {
            return Err(Error::AnchorOffGrid(x));
        }
        if anchors.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("anchors must be strictly increasing".into()));
        }
        Ok(Self { anchors })
    }

    /// `a_0 = a` followed by the given interior zeros.
    pub fn from_interior(interval: Interval, interior: &[f64]) -> Result<Self> {
        let mut anchors = vec![interval.a];
        anchors.extend_from_slice(interior);
        Self::new(interval, anchors)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.anchors
    }

    /// Number of interior anchors.
    pub fn n(&self) -> usize {
        self.anchors.len() - 1
    }
}

/// Boundary between consecutive blocks, placed at a node. Nodes left of
/// `node` belong to the left block, nodes right of it to the right block, and
/// `node` itself is shared with `left_fraction` going left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    pub node: usize,
    pub left_fraction: f64,
}

/// Anchors plus the partition of the grid into blocks `I_0, ..., I_n`.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    anchors: ZeroAnchors,
    cuts: Vec<Cut>,
    /// `(m, theta)` locating each anchor for interpolation of the cumulative integral.
    anchor_loc: Vec<(usize, f64)>,
}

impl BlockPartition {
    /// Blocks split at the given interior positions `b_1 < ... < b_n`.
    pub fn from_positions(grid: &Grid, anchors: ZeroAnchors, block_ends: &[f64]) -> Result<Self> {
        if block_ends.len() != anchors.n() {
            return Err(Error::InvalidInput(format!(
                "{} anchors need {} block boundaries, got {}",
                anchors.n() + 1,
                anchors.n(),
                block_ends.len()
            )));
        }
        let iv = grid.interval();
        if let Some(&x) = block_ends.iter().find(|&&x| !(x > iv.a && x <= iv.b)) {
            return Err(Error::AnchorOffGrid(x));
        }
        let a = anchors.as_slice();
        for (i, &b) in block_ends.iter().enumerate() {
            if b < a[i] || b > a[i + 1] {
                return Err(Error::InvalidInput(format!(
                    "block boundary {b} must lie between anchors {} and {}",
                    a[i],
                    a[i + 1]
                )));
            }
        }
        let x = grid.nodes();
        let cuts = block_ends
            .iter()
            .map(|&b| Cut {
                node: x.partition_point(|&t| t < b),
                left_fraction: 0.0,
            })
            .collect();
        Self::from_cuts(grid, anchors, cuts)
    }

    /// Blocks split at the interior anchors themselves.
    pub fn at_anchors(grid: &Grid, anchors: ZeroAnchors) -> Result<Self> {
        let ends = anchors.as_slice()[1..].to_vec();
        Self::from_positions(grid, anchors, &ends)
    }

    pub fn from_cuts(grid: &Grid, anchors: ZeroAnchors, cuts: Vec<Cut>) -> Result<Self> {
        if cuts.len() != anchors.n() {
            return Err(Error::InvalidInput("one cut per interior anchor required".into()));
        }
        if cuts.windows(2).any(|c| c[0].node > c[1].node)
            || cuts.iter().any(|c| c.node >= grid.len() || !(0.0..=1.0).contains(&c.left_fraction))
        {
            return Err(Error::InvalidInput("cuts must be ordered and inside the grid".into()));
        }
        let anchor_loc = anchors.as_slice().iter().map(|&x| grid.locate(x)).collect();
        Ok(Self {
            anchors,
            cuts,
            anchor_loc,
        })
    }

    pub fn anchors(&self) -> &ZeroAnchors {
        &self.anchors
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn blocks(&self) -> usize {
        self.cuts.len() + 1
    }

    /// Membership of node `j` in each block, as `(block, fraction)` pairs.
    fn membership(&self, n_nodes: usize) -> Vec<[(usize, f64); 2]> {
        let mut out = vec![[(0usize, 1.0f64), (0usize, 0.0f64)]; n_nodes];
        let mut block = 0;
        let mut ci = 0;
        for (j, slot) in out.iter_mut().enumerate() {
            while ci < self.cuts.len() && self.cuts[ci].node < j {
                block += 1;
                ci += 1;
            }
            if ci < self.cuts.len() && self.cuts[ci].node == j {
                // shared node; several cuts at one node collapse onto the last
                let mut right = block + 1;
                let lf = self.cuts[ci].left_fraction;
                let mut k = ci + 1;
                while k < self.cuts.len() && self.cuts[k].node == j {
                    right += 1;
                    k += 1;
                }
                *slot = [(block, lf), (right, 1.0 - lf)];
            } else {
                *slot = [(block, 1.0), (block, 0.0)];
            }
        }
        out
    }

    /// Interpolated cumulative integral `int_a^{a_i} y` from node values of G.
    fn anchor_values(&self, g_cum: &[f64]) -> Vec<f64> {
        self.anchor_loc
            .iter()
            .map(|&(m, t)| (1.0 - t) * g_cum[m] + t * g_cum[m + 1])
            .collect()
    }
}

/// `T_n f = sum_i chi_{I_i} v int_a^{a_i} u f`, a rank-at-most-n operator.
#[derive(Debug, Clone)]
pub struct RankNApproximant<'a> {
    spec: &'a ProblemSpec,
    partition: BlockPartition,
    membership: Vec<[(usize, f64); 2]>,
}

impl<'a> RankNApproximant<'a> {
    pub fn new(spec: &'a ProblemSpec, partition: BlockPartition) -> Self {
        let membership = partition.membership(spec.grid.len());
        Self {
            spec,
            partition,
            membership,
        }
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn rank_bound(&self) -> usize {
        self.partition.anchors.n()
    }

    fn block_levels(&self, f: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = f.iter().zip(self.spec.u()).map(|(f, u)| f * u).collect();
        let g_cum = prefix_integral(&y, self.spec.grid.weights());
        self.partition.anchor_values(&g_cum)
    }

    pub fn forward_values(&self, f: &[f64]) -> Vec<f64> {
        let levels = self.block_levels(f);
        self.membership
            .iter()
            .zip(self.spec.v())
            .map(|(m, v)| v * (m[0].1 * levels[m[0].0] + m[1].1 * levels[m[1].0]))
            .collect()
    }

    pub fn adjoint_values(&self, h: &[f64]) -> Vec<f64> {
        let w = self.spec.grid.weights();
        let mut beta = vec![0.0; self.partition.blocks()];
        for (j, m) in self.membership.iter().enumerate() {
            let z = w[j] * self.spec.v()[j] * h[j];
            beta[m[0].0] += m[0].1 * z;
            beta[m[1].0] += m[1].1 * z;
        }
        let n = w.len();
        let mut out = vec![0.0; n];
        // row m of the cumulative matrix divided by w_k: 1 for k < m, 1/2 at k = m
        let row = |m: usize, k: usize| -> f64 {
            if m == 0 || k > m {
                0.0
            } else if k < m {
                1.0
            } else if m + 1 < n {
                0.5
            } else {
                0.0
            }
        };
        for (i, &(m, t)) in self.partition.anchor_loc.iter().enumerate() {
            if beta[i] == 0.0 {
                continue;
            }
            for (k, o) in out.iter_mut().enumerate().take(m + 2) {
                *o += beta[i] * ((1.0 - t) * row(m, k) + t * row(m + 1, k));
            }
        }
        for (o, u) in out.iter_mut().zip(self.spec.u()) {
            *o *= u;
        }
        out
    }

    pub fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        self.spec.check(f)?;
        Ok(SampledFunction::from_parts(self.spec.grid.clone(), self.forward_values(f.values())))
    }
}

/// `T+ = T - T_n`: on block `I_i` it integrates from the anchor `a_i`.
#[derive(Debug, Clone)]
pub struct ConstrainedOperator<'a> {
    approx: RankNApproximant<'a>,
}

impl<'a> ConstrainedOperator<'a> {
    pub fn new(spec: &'a ProblemSpec, partition: BlockPartition) -> Self {
        Self {
            approx: RankNApproximant::new(spec, partition),
        }
    }

    pub fn partition(&self) -> &BlockPartition {
        self.approx.partition()
    }
}

impl AdjointPair for ConstrainedOperator<'_> {
    fn grid(&self) -> &Arc<Grid> {
        &self.approx.spec.grid
    }

    fn forward(&self, f: &[f64]) -> Vec<f64> {
        let mut g = self.approx.spec.forward(f);
        for (g, t) in g.iter_mut().zip(self.approx.forward_values(f)) {
            *g -= t;
        }
        g
    }

    fn adjoint(&self, h: &[f64]) -> Vec<f64> {
        let mut g = self.approx.spec.adjoint(h);
        for (g, t) in g.iter_mut().zip(self.approx.adjoint_values(h)) {
            *g -= t;
        }
        g
    }
}

/// `T+ f` with blocks split at the anchors.
pub fn apply_t_plus(spec: &ProblemSpec, anchors: &ZeroAnchors, f: &SampledFunction) -> Result<SampledFunction> {
    spec.check(f)?;
    let op = ConstrainedOperator::new(spec, BlockPartition::at_anchors(&spec.grid, anchors.clone())?);
    Ok(SampledFunction::from_parts(spec.grid.clone(), op.forward(f.values())))
}

pub fn build_rank_n_approximant<'a>(
    spec: &'a ProblemSpec,
    anchors: &ZeroAnchors,
    block_ends: &[f64],
) -> Result<RankNApproximant<'a>> {
    let partition = BlockPartition::from_positions(&spec.grid, anchors.clone(), block_ends)?;
    Ok(RankNApproximant::new(spec, partition))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::lp_norm;
    use std::f64::consts::PI;

    fn spec(u: &str, v: &str, level: u32) -> ProblemSpec {
        ProblemSpec::from_text(2.0, 2.0, Interval::unit(), u, v, level).unwrap()
    }

    fn f_of(s: &ProblemSpec, f: impl Fn(f64) -> f64) -> SampledFunction {
        SampledFunction::from_fn(s.grid.clone(), f).unwrap()
    }

    #[test]
    fn t_examples() {
        let s = spec("1", "1", 10);
        let h = s.grid.step();
        let g = apply_t(&s, &f_of(&s, |_| 1.0)).unwrap();
        for (x, gx) in s.grid.nodes().iter().zip(g.values()) {
            assert!((gx - x).abs() <= 0.5 * h + 1e-14);
        }
        assert_eq!(g.values()[0], 0.0);
        let n = g.values().len();
        assert!((g.values()[n - 2] - s.grid.nodes()[n - 2]).abs() < 1e-14);

        let s2 = spec("1+2*x", "1", 10);
        let g2 = apply_t(&s2, &f_of(&s2, |_| 1.0)).unwrap();
        for (x, gx) in s2.grid.nodes().iter().zip(g2.values()).take(n - 1) {
            assert!((gx - x - x * x).abs() < 1e-6);
        }

        let s3 = spec("1", "1", 12);
        let f = f_of(&s3, |x| 2f64.sqrt() * (PI * x / 2.0).cos());
        let g3 = apply_t(&s3, &f).unwrap();
        assert!((lp_norm(&g3, 2.0) - 2.0 / PI).abs() < 1e-6);
        for (x, gx) in s3.grid.nodes().iter().zip(g3.values()).take(4096) {
            assert!((gx - 2.0 * 2f64.sqrt() / PI * (PI * x / 2.0).sin()).abs() < 1e-6);
        }
    }

    #[test]
    fn t_star_examples() {
        let s = spec("1", "1", 10);
        let t = apply_t_star(&s, &f_of(&s, |_| 1.0)).unwrap();
        for (x, tx) in s.grid.nodes().iter().zip(t.values()).skip(1) {
            assert!((tx - (1.0 - x)).abs() < 1e-14);
        }
        assert_eq!(*t.values().last().unwrap(), 0.0);
        let zero = apply_t_star(&s, &f_of(&s, |_| 0.0)).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adjoint_identity_closed_forms() {
        let s = spec("1", "1", 12);
        // f = x, h = 1: int (Tf) h = int x^2/2 = 1/6 = int x (1 - x)
        let f = f_of(&s, |x| x);
        let h = f_of(&s, |_| 1.0);
        let lhs = apply_t(&s, &f).unwrap().dot(&h).unwrap();
        let rhs = f.dot(&apply_t_star(&s, &h).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
        assert!((lhs - 1.0 / 6.0).abs() < 1e-6);
        // f = 1, h = x: both 1/3
        let lhs = apply_t(&s, &h).unwrap().dot(&f).unwrap();
        let rhs = h.dot(&apply_t_star(&s, &f).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
        assert!((lhs - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn grid_mismatch() {
        let s = spec("1", "1", 6);
        let other = spec("1", "1", 7);
        let f = f_of(&other, |x| x);
        assert!(matches!(apply_t(&s, &f), Err(Error::GridMismatch)));
        assert!(matches!(apply_t_star(&s, &f), Err(Error::GridMismatch)));
    }

    #[test]
    fn t_plus_examples() {
        let s = spec("1", "1", 10);
        let one = f_of(&s, |_| 1.0);
        let none = ZeroAnchors::from_interior(s.interval, &[]).unwrap();
        let a = apply_t_plus(&s, &none, &one).unwrap();
        let b = apply_t(&s, &one).unwrap();
        assert_eq!(a.values(), b.values());

        let half = ZeroAnchors::from_interior(s.interval, &[0.5]).unwrap();
        let tp = apply_t_plus(&s, &half, &one).unwrap();
        for (x, v) in s.grid.nodes().iter().zip(tp.values()).take(1024) {
            let want = if *x < 0.5 { *x } else { x - 0.5 };
            assert!((v - want).abs() < 1e-12, "{x} {v}");
        }
    }

    #[test]
    fn t_plus_matches_t_when_anchors_are_zeros() {
        let s = spec("1+x", "exp(-x)", 11);
        let anchors = [0.3, 0.55, 0.8];
        let bounds = [0.0, 0.3, 0.55, 0.8];
        // subtracting a bump per block drives (Tf)(a_i) to zero anchor by anchor
        let base = |x: f64| (7.0 * x).sin() + 2.0;
        let mut vals: Vec<f64> = s.grid.nodes().iter().map(|&x| base(x)).collect();
        let x = s.grid.nodes().to_vec();
        let u = s.u().to_vec();
        let w = s.grid.weights().to_vec();
        let anchors_z = ZeroAnchors::from_interior(s.interval, &anchors).unwrap();
        let part = BlockPartition::at_anchors(&s.grid, anchors_z.clone()).unwrap();
        let h = s.grid.step();
        for i in 0..anchors.len() {
            // support kept two nodes away from both anchors so earlier anchors stay untouched
            let lo = bounds[i] + 2.0 * h;
            let hi = bounds[i + 1] - 2.0 * h;
            let indicator: Vec<f64> = x.iter().map(|&t| if t > lo && t < hi { 1.0 } else { 0.0 }).collect();
            let cum = |vals: &[f64]| {
                let y: Vec<f64> = vals.iter().zip(&u).map(|(a, b)| a * b).collect();
                let g = prefix_integral(&y, &w);
                part.anchor_values(&g)
            };
            let c = cum(&vals)[i + 1] / cum(&indicator)[i + 1];
            for (v, ind) in vals.iter_mut().zip(&indicator) {
                *v -= c * ind;
            }
        }
        let f = SampledFunction::new(s.grid.clone(), vals).unwrap();
        let tf = apply_t(&s, &f).unwrap();
        let tp = apply_t_plus(&s, &anchors_z, &f).unwrap();
        let diff = tf.sub_scaled(1.0, &tp).unwrap();
        assert!(lp_norm(&diff, 2.0) < 1e-10, "{}", lp_norm(&diff, 2.0));
    }

    #[test]
    fn rank_zero_approximant_is_zero() {
        let s = spec("1", "1", 8);
        let none = ZeroAnchors::from_interior(s.interval, &[]).unwrap();
        let tn = build_rank_n_approximant(&s, &none, &[]).unwrap();
        let f = f_of(&s, |x| (5.0 * x).cos());
        assert!(tn.apply(&f).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn anchors_validated() {
        let iv = Interval::unit();
        assert!(matches!(ZeroAnchors::from_interior(iv, &[1.5]), Err(Error::AnchorOffGrid(_))));
        assert!(ZeroAnchors::from_interior(iv, &[0.6, 0.4]).is_err());
        assert!(ZeroAnchors::new(iv, vec![0.2, 0.5]).is_err());
        let s = spec("1", "1", 6);
        let a = ZeroAnchors::from_interior(iv, &[0.5]).unwrap();
        assert!(build_rank_n_approximant(&s, &a, &[]).is_err());
        assert!(build_rank_n_approximant(&s, &a, &[0.7]).is_err());
    }

    #[test]
    fn rank_n_image_has_rank_at_most_n() {
        use nalgebra::DMatrix;
        use rand::{Rng, SeedableRng};
        let s = spec("1+x", "1", 8);
        let a = ZeroAnchors::from_interior(s.interval, &[0.2, 0.45, 0.7]).unwrap();
        let tn = build_rank_n_approximant(&s, &a, &[0.1, 0.3, 0.6]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = s.grid.len();
        let mut m = DMatrix::<f64>::zeros(n, 50);
        for c in 0..50 {
            let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let img = tn.forward_values(&f);
            for r in 0..n {
                m[(r, c)] = img[r];
            }
        }
        let sv = m.svd(false, false).singular_values;
        let top = sv.max();
        let rank = sv.iter().filter(|&&x| x > 1e-9 * top).count();
        assert!(rank <= 3, "rank {rank}");
        assert_eq!(rank, 3);
    }

    #[test]
    fn constrained_pair_is_exactly_adjoint() {
        let s = spec("1+x", "exp(x)", 9);
        let a = ZeroAnchors::from_interior(s.interval, &[0.33, 0.71]).unwrap();
        let part = BlockPartition::from_cuts(
            &s.grid,
            a,
            vec![Cut { node: 100, left_fraction: 0.3 }, Cut { node: 300, left_fraction: 0.8 }],
        )
        .unwrap();
        let op = ConstrainedOperator::new(&s, part);
        let f: Vec<f64> = s.grid.nodes().iter().map(|x| (9.0 * x).sin()).collect();
        let h: Vec<f64> = s.grid.nodes().iter().map(|x| (4.0 * x).cos() + x).collect();
        let w = s.grid.weights();
        let lhs: f64 = op.forward(&f).iter().zip(&h).zip(w).map(|((a, b), w)| a * b * w).sum();
        let rhs: f64 = op.adjoint(&h).iter().zip(&f).zip(w).map(|((a, b), w)| a * b * w).sum();
        assert!((lhs - rhs).abs() < 1e-14, "{lhs} {rhs}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn smooth(c: &[f64], x: f64) -> f64 {
            c[0] + c[1] * (3.0 * x).sin() + c[2] * (7.0 * x).cos() + c[3] * x * x
        }

        proptest! {
            #[test]
            fn adjointness(cf in proptest::collection::vec(-2.0f64..2.0, 4),
                           ch in proptest::collection::vec(-2.0f64..2.0, 4),
                           wi in 0usize..4) {
                let ws = [("1", "1"), ("1+x", "1"), ("exp(-x)", "1+sin(x)^2*0.5"), ("2", "1+x")];
                let s = spec(ws[wi].0, ws[wi].1, 9);
                let f = f_of(&s, |x| smooth(&cf, x));
                let h = f_of(&s, |x| smooth(&ch, x));
                let lhs = apply_t(&s, &f).unwrap().dot(&h).unwrap();
                let rhs = f.dot(&apply_t_star(&s, &h).unwrap()).unwrap();
                let scale = lp_norm(&f, 2.0) * lp_norm(&h, 2.0);
                prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1e-300));
            }

            #[test]
            fn positivity_and_boundary_values(cf in proptest::collection::vec(0.0f64..2.0, 4)) {
                let s = spec("1+x", "exp(x)", 8);
                let f = f_of(&s, |x| cf[0] + cf[1] * x + cf[2] * x * x + cf[3] * (1.0 - x));
                let g = apply_t(&s, &f).unwrap();
                let t = apply_t_star(&s, &f).unwrap();
                prop_assert!(g.values().iter().all(|&v| v >= 0.0));
                prop_assert!(t.values().iter().all(|&v| v >= 0.0));
                prop_assert_eq!(g.values()[0], 0.0);
                prop_assert_eq!(*t.values().last().unwrap(), 0.0);
            }

            #[test]
            fn linearity(alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
                let s = spec("1+x", "1", 8);
                let f = f_of(&s, |x| (2.0 * x).sin());
                let h = f_of(&s, |x| x * x - 0.3);
                let comb = f_of(&s, |x| alpha * (2.0 * x).sin() + beta * (x * x - 0.3));
                let lhs = apply_t(&s, &comb).unwrap();
                let tf = apply_t(&s, &f).unwrap();
                let th = apply_t(&s, &h).unwrap();
                for ((l, a), b) in lhs.values().iter().zip(tf.values()).zip(th.values()) {
                    prop_assert!((l - (alpha * a + beta * b)).abs() < 1e-14);
                }
            }
        }
    }
}
