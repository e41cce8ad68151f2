//! Reference values that do not go through the nonlinear engine.
//!
//! For `u = v = 1` the system `g = Tf`, `f_(p) = lambda T*(g_(q))` is the
//! boundary value problem
//!
//! ```text
//! w' = (y)_(p'),   y' = -lambda (w)_(q),   w(a) = 0,   y(b) = 0,
//! ```
//!
//! with `w = g` and `y = f_(p)`. The condition at `b` comes from `T*` vanishing
//! there, so `w'(b) = f(b) = 0`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{conjugate, signed_power, Interval};
use crate::operator::ProblemSpec;

/// Largest grid accepted by [`svd_eigen_p2`].
pub const SVD_MAX_NODES: usize = 4097;

/// `((n + 1/2) pi / (b - a))^2`.
pub fn classical_eigen_p2(n: usize, interval: Interval) -> f64 {
    ((n as f64 + 0.5) * std::f64::consts::PI / interval.length()).powi(2)
}

/// `pi_p = 2 pi / (p sin(pi / p))`.
pub fn pi_p(p: f64) -> f64 {
    let pi = std::f64::consts::PI;
    2.0 * pi / (p * (pi / p).sin())
}

/// Closed form for `p = q`, `u = v = 1`: `(p - 1) ((2n + 1) pi_p / (2 (b - a)))^p`.
pub fn closed_form_pp(p: f64, n: usize, interval: Interval) -> f64 {
    (p - 1.0) * ((2 * n + 1) as f64 * pi_p(p) / (2.0 * interval.length())).powf(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub ode_steps: usize,
    /// Relative width at which bisection on lambda stops.
    pub bracket_tol: f64,
    /// Initial bracket; it is widened by doubling or halving when needed.
    pub lambda_bracket: (f64, f64),
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            ode_steps: 20_000,
            bracket_tol: 1e-13,
            lambda_bracket: (0.5, 8.0),
        }
    }
}

impl ShootingConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.lambda_bracket;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidInput("lambda bracket must satisfy 0 < lo < hi".into()));
        }
        if self.ode_steps < 1000 {
            return Err(Error::InvalidInput("at least 1000 ode steps are required".into()));
        }
        if !(self.bracket_tol > 0.0) {
            return Err(Error::InvalidInput("bracket tolerance must be positive".into()));
        }
        Ok(())
    }
}

struct Shot {
    /// Sign changes of `y` over `(a, b]`, the end value included.
    changes: usize,
    y_end: f64,
    /// `int |y|^{p'} = ||w'||_p^p`
    energy: f64,
}

fn shoot(p: f64, q: f64, lambda: f64, interval: Interval, steps: usize) -> Shot {
    let pc = conjugate(p);
    let h = interval.length() / steps as f64;
    let rhs = |s: [f64; 3]| -> [f64; 3] {
        [
            signed_power(s[1], pc),
            -lambda * signed_power(s[0], q),
            s[1].abs().powf(pc),
        ]
    };
    let axpy = |s: [f64; 3], k: [f64; 3], t: f64| [s[0] + t * k[0], s[1] + t * k[1], s[2] + t * k[2]];
    let mut s = [0.0, 1.0, 0.0];
    let mut changes = 0;
    let mut sign = 1.0;
    for _ in 0..steps {
        let k1 = rhs(s);
        let k2 = rhs(axpy(s, k1, 0.5 * h));
        let k3 = rhs(axpy(s, k2, 0.5 * h));
        let k4 = rhs(axpy(s, k3, h));
        for i in 0..3 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if s[1] != 0.0 && s[1].signum() != sign {
            changes += 1;
            sign = s[1].signum();
        }
    }
    Shot {
        changes,
        y_end: s[1],
        energy: s[2],
    }
}

/// The `n`-th eigenvalue for `u = v = 1` by shooting, in the convention
/// `||f||_p = 1` used by the nonlinear engine.
pub fn shoot_pq_laplacian(p: f64, q: f64, n: usize, interval: Interval, cfg: &ShootingConfig) -> Result<f64> {
    crate::grid::check_exponent(p)?;
    crate::grid::check_exponent(q)?;
    cfg.validate()?;
    let steps = cfg.ode_steps;
    let count = |l: f64| shoot(p, q, l, interval, steps).changes;
    let (mut lo, mut hi) = cfg.lambda_bracket;
    for _ in 0..200 {
        if count(lo) <= n {
            break;
        }
        lo *= 0.5;
    }
    for _ in 0..200 {
        if count(hi) > n {
            break;
        }
        hi *= 2.0;
    }
    if count(lo) > n || count(hi) <= n {
        return Err(Error::BracketFailed { lo, hi });
    }
    while hi - lo > cfg.bracket_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) > n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (sl, sh) = (shoot(p, q, lo, interval, steps), shoot(p, q, hi, interval, steps));
    let lambda = if sl.y_end.signum() != sh.y_end.signum() && sl.y_end != sh.y_end {
        lo + sl.y_end / (sl.y_end - sh.y_end) * (hi - lo)
    } else {
        lo
    };
    let norm = shoot(p, q, lambda, interval, steps).energy.powf(1.0 / p);
    Ok(lambda * norm.powf(q - p))
}

/// Singular values `s_1 >= s_2 >= ...` of the quadrature matrix of `T` for
/// `p = q = 2`, measured in the trapezoid inner product.
pub fn svd_singular_values(spec: &ProblemSpec, count: usize) -> Result<Vec<f64>> {
    if spec.p != 2.0 || spec.q != 2.0 {
        return Err(Error::NotApplicable(format!(
            "the singular-value oracle needs p = q = 2, got p = {}, q = {}",
            spec.p, spec.q
        )));
    }
    let m = spec.grid.len();
    if m > SVD_MAX_NODES {
        return Err(Error::ResourceLimit {
            requested: m,
            limit: SVD_MAX_NODES,
        });
    }
    let w = spec.grid.weights();
    let (u, v) = (spec.u(), spec.v());
    let last = m - 1;
    // (Tf)_i = v_i sum_k c_ik u_k f_k with trapezoid-type coefficients c_ik
    let a = DMatrix::from_fn(m, m, |i, k| {
        let c = if i == 0 || k > i || (i == last && k == last) {
            0.0
        } else if k == i {
            0.5 * w[k]
        } else {
            w[k]
        };
        w[i].sqrt() * v[i] * c * u[k] / w[k].sqrt()
    });
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s.truncate(count);
    Ok(s)
}

/// `lambda_n = s_{n+1}^{-2}` for `n = 0, .., count - 1`.
pub fn svd_eigen_p2(spec: &ProblemSpec, count: usize) -> Result<Vec<f64>> {
    Ok(svd_singular_values(spec, count)?.iter().map(|s| s.powi(-2)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn classical_values() {
        assert!((classical_eigen_p2(0, Interval::unit()) - 2.467401).abs() < 1e-6);
        assert!((classical_eigen_p2(3, Interval::unit()) - 120.9026).abs() < 1e-4);
        let two = Interval::new(0.0, 2.0).unwrap();
        assert!((classical_eigen_p2(0, two) - PI * PI / 16.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_p3() {
        assert!((closed_form_pp(3.0, 0, Interval::unit()) - 3.5361).abs() < 1e-4);
        assert!((closed_form_pp(2.0, 4, Interval::unit()) - classical_eigen_p2(4, Interval::unit())).abs() < 1e-10);
        assert!((pi_p(2.0) - PI).abs() < 1e-15);
    }

    #[test]
    fn shooting_matches_classical() {
        let cfg = ShootingConfig::default();
        for n in [0, 1, 4] {
            let l = shoot_pq_laplacian(2.0, 2.0, n, Interval::unit(), &cfg).unwrap();
            let want = classical_eigen_p2(n, Interval::unit());
            assert!((l - want).abs() / want < 1e-8, "{n} {l} {want}");
        }
    }

    #[test]
    fn shooting_matches_generalized_sine() {
        let cfg = ShootingConfig {
            ode_steps: 100_000,
            ..ShootingConfig::default()
        };
        for (p, n) in [(3.0, 0), (3.0, 2), (1.5, 1)] {
            let l = shoot_pq_laplacian(p, p, n, Interval::unit(), &cfg).unwrap();
            let want = closed_form_pp(p, n, Interval::unit());
            assert!((l - want).abs() / want < 1e-5, "{p} {n} {l} {want}");
        }
    }

    #[test]
    fn bad_bracket_rejected() {
        let cfg = ShootingConfig {
            lambda_bracket: (2.0, 1.0),
            ..ShootingConfig::default()
        };
        assert!(shoot_pq_laplacian(2.0, 2.0, 0, Interval::unit(), &cfg).is_err());
    }

    #[test]
    fn volterra_singular_values() {
        let spec = ProblemSpec::from_text(2.0, 2.0, Interval::unit(), "1", "1", 9).unwrap();
        let s = svd_singular_values(&spec, 6).unwrap();
        assert!((s[0] - 2.0 / PI).abs() < 1e-5);
        assert!((s[3] - 1.0 / (3.5 * PI)).abs() < 1e-5);
        assert!(s.windows(2).all(|w| w[0] > w[1] && w[1] > 0.0));
        let wrong = ProblemSpec::from_text(3.0, 2.0, Interval::unit(), "1", "1", 4).unwrap();
        assert!(matches!(svd_eigen_p2(&wrong, 1), Err(Error::NotApplicable(_))));
    }
}
