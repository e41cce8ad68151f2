//! The constant `c_pq`, the weight integral and limit tables for
//! `n lambda_n^(-1/q)`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_exponent, conjugate};
use crate::operator::ProblemSpec;
use crate::search::{lambda_extremes, SearchConfig};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for positive arguments (Lanczos, with reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    if x < 0.5 {
        return pi / ((pi * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * pi).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    if x < 0.5 {
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * pi).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn beta(a: f64, b: f64) -> f64 {
    if a + b < 20.0 {
        gamma(a) * gamma(b) / gamma(a + b)
    } else {
        (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
    }
}

/// `c_pq = (p')^(1/q) q^(1/p') (p' + q)^(1/p - 1/q) / (2 B(1/q, 1/p'))`.
pub fn constant_cpq(p: f64, q: f64) -> Result<f64> {
    check_exponent(p)?;
    check_exponent(q)?;
    let pc = conjugate(p);
    Ok(pc.powf(1.0 / q) * q.powf(1.0 / pc) * (pc + q).powf(1.0 / p - 1.0 / q) / (2.0 * beta(1.0 / q, 1.0 / pc)))
}

/// `(int (uv)^r)^(1/r)` with `r = 1/p' + 1/q`.
pub fn weight_integral(spec: &ProblemSpec) -> f64 {
    let r = spec.r();
    uv_power_integral(spec, r).powf(1.0 / r)
}

/// `(int (uv)^(1/r))^r`, the other reading of the weight factor.
pub fn weight_integral_alt(spec: &ProblemSpec) -> f64 {
    let r = spec.r();
    uv_power_integral(spec, 1.0 / r).powf(r)
}

fn uv_power_integral(spec: &ProblemSpec, e: f64) -> f64 {
    let vals: Vec<f64> = spec.u().iter().zip(spec.v()).map(|(u, v)| (u * v).powf(e)).collect();
    spec.grid.integrate(&vals)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub n: usize,
    pub lambda: f64,
    /// `n lambda_n^(-1/q)`
    pub n_lambda_pow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub rows: Vec<AsymptoticRow>,
    pub c_pq: f64,
    pub weight_integral: f64,
    pub weight_integral_alt: f64,
    pub predicted_limit: f64,
    pub extrapolated_limit: f64,
    pub relative_gap: f64,
}

/// Builds the table and a two-point extrapolation `s_n = L + c/n` from the
/// last two rows.
pub fn asymptote_report(spec: &ProblemSpec, lambdas: &[(usize, f64)]) -> Result<AsymptoticsReport> {
    if lambdas.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: lambdas.len(),
        });
    }
    let mut sorted = lambdas.to_vec();
    sorted.sort_by_key(|r| r.0);
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidInput("duplicate n in spectrum rows".into()));
    }
    if let Some((n, l)) = sorted.iter().find(|(_, l)| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidInput(format!("lambda_{n} = {l} is not positive")));
    }
    let q = spec.q;
    let rows: Vec<AsymptoticRow> = sorted
        .iter()
        .map(|&(n, lambda)| AsymptoticRow {
            n,
            lambda,
            n_lambda_pow: n as f64 * lambda.powf(-1.0 / q),
        })
        .collect();
    let (r1, r2) = (rows[rows.len() - 2], rows[rows.len() - 1]);
    let (n1, n2) = (r1.n as f64, r2.n as f64);
    let extrapolated_limit = (n2 * r2.n_lambda_pow - n1 * r1.n_lambda_pow) / (n2 - n1);
    let c_pq = constant_cpq(spec.p, q)?;
    let wi = weight_integral(spec);
    let predicted_limit = c_pq * wi;
    Ok(AsymptoticsReport {
        rows,
        c_pq,
        weight_integral: wi,
        weight_integral_alt: weight_integral_alt(spec),
        predicted_limit,
        extrapolated_limit,
        relative_gap: (extrapolated_limit - predicted_limit).abs() / predicted_limit,
    })
}

impl AsymptoticsReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,lambda,n_lambda_pow,predicted_limit,extrapolated_limit\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.n, r.lambda, r.n_lambda_pow, self.predicted_limit, self.extrapolated_limit
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `lambda_n` for `n = 0..=nmax`, each from [`lambda_extremes`] with the
/// search settings of `cfg` (its `n` is overridden).
pub fn spectrum_rows(spec: &ProblemSpec, nmax: usize, cfg: &SearchConfig) -> Result<Vec<(usize, f64)>> {
    (0..=nmax)
        .into_par_iter()
        .map(|n| {
            let c = SearchConfig { n, ..*cfg };
            lambda_extremes(spec, &c).map(|r| (n, r.lambda_extreme))
        })
        .collect()
}
