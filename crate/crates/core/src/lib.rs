//! Spectral triples of the nonlinear system `g = Tf`, `f_(p) = lambda T*(g_(q))`
//! for weighted Hardy-type operators on a bounded interval.
//!
//! The crate computes spectral triples classified by the number of interior
//! zeros of `g`, compares them with independent oracles, estimates the
//! Kolmogorov, Bernstein and approximation-number bounds that sandwich the
//! spectral numbers, and checks the asymptotic law
//! `n lambda_n^(-1/q) -> c_pq (int (uv)^r)^(1/r)`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod grid;
pub mod iteration;
pub mod operator;
pub mod oracle;
pub mod search;
pub mod weight;
pub mod widths;

pub use asymptotics::{asymptote_report, constant_cpq, spectrum_rows, weight_integral, AsymptoticsReport};
pub use error::{Error, Result};
pub use grid::{
    count_sign_changes, count_zeros, lp_norm, refine, signed_power, Grid, Interval, NodalCountPolicy,
    SampledFunction,
};
pub use iteration::{
    dual_transform, initial_sign_function, iterate_once, residual, run_iteration, IterationConfig, IterationTrace, SignPattern,
    SpectralTriple,
};
pub use operator::{apply_t, apply_t_plus, apply_t_star, build_rank_n_approximant, ProblemSpec, ZeroAnchors};
pub use oracle::{classical_eigen_p2, shoot_pq_laplacian, svd_eigen_p2, ShootingConfig};
pub use search::{
    find_spectral_triple, lambda_extremes, operator_norm_estimate, sign_change_comparison, Mode, SearchConfig, SpectrumResult,
};
pub use weight::{evaluate_weight, parse_weight, WeightExpr, WeightPair};
pub use widths::{
    approximation_upper_bound, bernstein_value, kolmogorov_lower_bound, widths_report, WidthsConfig, WidthsReport,
};
