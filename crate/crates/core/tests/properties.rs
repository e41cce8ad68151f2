use std::sync::Arc;

use hardy_core::{
    apply_t, count_sign_changes, initial_sign_function, lambda_extremes, run_iteration, Error, Grid, Interval,
    IterationConfig, Mode, NodalCountPolicy, ProblemSpec, SampledFunction, SearchConfig, SignPattern,
};
use proptest::prelude::*;

const WEIGHTS: [&str; 4] = ["1", "1+x", "exp(-x)", "1+sin(x)^2*0.5"];

fn spec(p: f64, q: f64, u: usize, v: usize, level: u32) -> ProblemSpec {
    ProblemSpec::from_text(p, q, Interval::unit(), WEIGHTS[u], WEIGHTS[v], level).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn iteration_traces_are_monotone(
        p in 1.2f64..4.0,
        q in 1.2f64..4.0,
        u in 0usize..4,
        v in 0usize..4,
        z in proptest::collection::vec(0.1f64..1.0, 1..5),
    ) {
        let s = spec(p, q, u, v, 8);
        let signed: Vec<f64> = z.iter().enumerate().map(|(k, w)| if k % 2 == 0 { *w } else { -*w }).collect();
        let f0 = initial_sign_function(&s, &SignPattern::new(signed).unwrap());
        let cfg = IterationConfig { max_iter: 500, ..IterationConfig::default() };
        let trace = match run_iteration(&s, &f0, &cfg) {
            Ok((t, trace)) => {
                prop_assert!(t.lambda > 0.0);
                trace
            }
            Err(Error::NotConverged(trace)) => *trace,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(trace.is_monotone(1e-10));
        prop_assert!(trace.nodal_nonincreasing());
    }

    #[test]
    fn image_has_no_more_sign_changes(
        breaks in proptest::collection::vec(0.05f64..0.95, 0..5),
        u in 0usize..4,
        v in 0usize..4,
    ) {
        let s = spec(2.0, 2.0, u, v, 10);
        let grid: Arc<Grid> = s.grid.clone();
        let mut b = breaks.clone();
        b.sort_by(f64::total_cmp);
        let f = SampledFunction::from_fn(grid, |x| {
            let k = b.iter().filter(|t| x > **t).count();
            if k % 2 == 0 { 1.0 } else { -1.0 }
        }).unwrap();
        let policy = NodalCountPolicy::default();
        let g = apply_t(&s, &f).unwrap();
        prop_assert!(count_sign_changes(&g, &policy).unwrap() <= count_sign_changes(&f, &policy).unwrap());
    }

    #[test]
    fn scaling_u_scales_lambda(c in 0.5f64..3.0, n in 0usize..3, p in 1.5f64..3.5) {
        let q = 2.0;
        let base = ProblemSpec::from_text(p, q, Interval::unit(), "1", "1", 9).unwrap();
        let scaled = ProblemSpec::from_text(p, q, Interval::unit(), &format!("{c}"), "1", 9).unwrap();
        let cfg = SearchConfig::new(n, Mode::Max);
        let l0 = lambda_extremes(&base, &cfg).unwrap().lambda_extreme;
        let l1 = lambda_extremes(&scaled, &cfg).unwrap().lambda_extreme;
        let want = l0 * c.powf(-q);
        prop_assert!((l1 - want).abs() <= 1e-7 * want, "{} vs {}", l1, want);
    }
}
