use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use hardy_core::asymptotics::AsymptoticRow;
use hardy_core::oracle::{closed_form_pp, pi_p};
use hardy_core::{
    asymptote_report, classical_eigen_p2, constant_cpq, lambda_extremes, lp_norm, run_iteration, shoot_pq_laplacian,
    spectrum_rows, svd_eigen_p2, widths_report, Interval, IterationConfig, Mode, ProblemSpec, SampledFunction,
    SearchConfig, ShootingConfig, SignPattern, WidthsConfig, WidthsReport,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{Format, OracleArgs, OracleKind, SelftestArgs, SolveArgs, SweepArgs, WidthsArgs};
use crate::problem::{resolve, Resolved, RunManifest};

/// Exit 1: the request itself is wrong. Exit 2: the solver gave up.
pub enum Failure {
    Usage(anyhow::Error),
    Solver(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<hardy_core::Error> for Failure {
    fn from(e: hardy_core::Error) -> Self {
        use hardy_core::Error as E;
        match e {
            E::NotConverged(_)
            | E::NodalCountMissed { .. }
            | E::Empty(_)
            | E::BracketFailed { .. }
            | E::ZeroImage
            | E::DegenerateBlock(_)
            | E::AllZero => Failure::Solver(e.into()),
            _ => Failure::Usage(e.into()),
        }
    }
}

pub type Outcome = Result<(), Failure>;

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render<T: Serialize>(manifest: &RunManifest, result: &T, format: Format, csv: impl FnOnce() -> String) -> String {
    match format {
        Format::Json => {
            let doc = json!({ "manifest": manifest, "result": result });
            format!("{}\n", serde_json::to_string_pretty(&doc).expect("report serializes"))
        }
        Format::Csv => {
            let head = serde_json::to_string(manifest).expect("manifest serializes");
            format!("# manifest: {head}\n{}", csv())
        }
    }
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn dump(path: &Path, f: &SampledFunction) -> anyhow::Result<()> {
    let mut s = String::from("x,value\n");
    for (x, v) in f.grid().nodes().iter().zip(f.values()) {
        let _ = writeln!(s, "{},{}", sci(*x), sci(*v));
    }
    std::fs::write(path, s).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Serialize)]
struct SolveResult {
    n: usize,
    lambda: f64,
    lambda_pow: f64,
    g_norm: f64,
    nodal_count: usize,
    residual: f64,
    mode: Mode,
    starts_used: usize,
    starts_converged: usize,
    distinct_lambdas: Vec<f64>,
}

pub fn solve(args: &SolveArgs) -> Outcome {
    let r = resolve(&args.common, 12)?;
    let cfg = r.search(args.n);
    let found = lambda_extremes(&r.spec, &cfg)?;
    let t = &found.best_triple;
    let q = r.spec.q;
    let res = SolveResult {
        n: args.n,
        lambda: found.lambda_extreme,
        lambda_pow: found.lambda_extreme.powf(-1.0 / q),
        g_norm: lp_norm(&t.g, q),
        nodal_count: t.nodal_count,
        residual: t.residual,
        mode: cfg.mode,
        starts_used: found.starts_used,
        starts_converged: found.starts_converged,
        distinct_lambdas: found.all_found.iter().map(|x| x.0).collect(),
    };
    if let Some(p) = &args.dump_f {
        dump(p, &t.f)?;
    }
    if let Some(p) = &args.dump_g {
        dump(p, &t.g)?;
    }
    let manifest = RunManifest::new("solve", Some(&r), serde_json::to_value(cfg).expect("config serializes"));
    let text = render(&manifest, &res, args.common.format, || {
        format!(
            "n,lambda,lambda_pow,g_norm,nodal_count,residual\n{},{},{},{},{},{}\n",
            res.n,
            sci(res.lambda),
            sci(res.lambda_pow),
            sci(res.g_norm),
            res.nodal_count,
            sci(res.residual)
        )
    });
    emit(args.common.out.as_deref(), &text)?;
    Ok(())
}

fn sweep(r: &Resolved, nmax: usize) -> Result<Vec<(usize, f64)>, Failure> {
    Ok(spectrum_rows(&r.spec, nmax, &r.search(0))?)
}

pub fn spectrum(args: &SweepArgs) -> Outcome {
    let r = resolve(&args.common, 12)?;
    let rows = sweep(&r, args.nmax)?;
    let q = r.spec.q;
    let table: Vec<AsymptoticRow> = rows
        .iter()
        .map(|&(n, lambda)| AsymptoticRow {
            n,
            lambda,
            n_lambda_pow: n as f64 * lambda.powf(-1.0 / q),
        })
        .collect();
    let manifest = RunManifest::new(
        "spectrum",
        Some(&r),
        json!({ "search": r.search(0), "nmax": args.nmax }),
    );
    let text = render(&manifest, &json!({ "rows": table }), args.common.format, || {
        let mut s = String::from("n,lambda,n_lambda_pow\n");
        for row in &table {
            let _ = writeln!(s, "{},{},{}", row.n, sci(row.lambda), sci(row.n_lambda_pow));
        }
        s
    });
    emit(args.common.out.as_deref(), &text)?;
    Ok(())
}

/// Whether `n lambda_n^(-1/q)` for `n >= 1` moves in one direction up to `noise`.
fn monotone_trend(rows: &[AsymptoticRow], noise: f64) -> bool {
    let s: Vec<f64> = rows.iter().filter(|r| r.n >= 1).map(|r| r.n_lambda_pow).collect();
    let up = s.windows(2).all(|w| w[1] >= w[0] - noise);
    let down = s.windows(2).all(|w| w[1] <= w[0] + noise);
    up || down
}

pub fn asymptote(args: &SweepArgs) -> Outcome {
    if args.nmax < 4 {
        return Err(Failure::Usage(anyhow::anyhow!("--nmax must be at least 4")));
    }
    let r = resolve(&args.common, 12)?;
    let rows = sweep(&r, args.nmax)?;
    let report = asymptote_report(&r.spec, &rows)?;
    let trend = monotone_trend(&report.rows, 1e-3);
    eprintln!(
        "predicted {:.8} extrapolated {:.8} relative gap {:.3e}",
        report.predicted_limit, report.extrapolated_limit, report.relative_gap
    );
    let manifest = RunManifest::new(
        "asymptote",
        Some(&r),
        json!({ "search": r.search(0), "nmax": args.nmax }),
    );
    let mut result = serde_json::to_value(&report).expect("report serializes");
    result["monotone_trend"] = json!(trend);
    let text = render(&manifest, &result, args.common.format, || {
        format!(
            "# c_pq={} weight_integral={} weight_integral_alt={} relative_gap={} monotone_trend={}\n{}",
            sci(report.c_pq),
            sci(report.weight_integral),
            sci(report.weight_integral_alt),
            sci(report.relative_gap),
            trend,
            report.to_csv()
        )
    });
    emit(args.common.out.as_deref(), &text)?;
    Ok(())
}

pub fn widths(args: &WidthsArgs) -> Outcome {
    let r = resolve(&args.common, 12)?;
    let wc = WidthsConfig {
        k_iters: args.k_iters,
        samples: args.samples,
        rng_seed: r.settings.seed,
    };
    let report = widths_report(&r.spec, args.n, &r.search(args.n), &wc)?;
    let manifest = RunManifest::new("widths", Some(&r), json!({ "search": r.search(args.n), "widths": wc }));
    let text = render(&manifest, &report, args.common.format, || {
        WidthsReport::to_csv(std::slice::from_ref(&report))
    });
    emit(args.common.out.as_deref(), &text)?;
    Ok(())
}

#[derive(Serialize)]
struct OracleResult {
    kind: &'static str,
    n: usize,
    lambda: f64,
    lambda_pow: f64,
}

pub fn oracle(args: &OracleArgs) -> Outcome {
    let r = resolve(&args.common, 10)?;
    let (p, q) = (r.spec.p, r.spec.q);
    let flat = r.desc.u.trim() == "1" && r.desc.v.trim() == "1";
    let kind = match args.kind {
        OracleKind::Auto if flat => OracleKind::Shoot,
        OracleKind::Auto if p == 2.0 && q == 2.0 => OracleKind::Svd,
        OracleKind::Auto => {
            return Err(Failure::Usage(anyhow::anyhow!(
                "no oracle covers p != q or p = q != 2 with non-constant weights"
            )))
        }
        k => k,
    };
    let shooting = ShootingConfig {
        ode_steps: args.ode_steps,
        ..ShootingConfig::default()
    };
    let (name, lambda) = match kind {
        OracleKind::Classical => {
            if !(flat && p == 2.0 && q == 2.0) {
                return Err(Failure::Usage(anyhow::anyhow!("the classical oracle needs p = q = 2 and u = v = 1")));
            }
            ("classical", classical_eigen_p2(args.n, r.spec.interval))
        }
        OracleKind::Shoot => {
            if !flat {
                return Err(Failure::Usage(anyhow::anyhow!("the shooting oracle needs u = v = 1")));
            }
            ("shoot", shoot_pq_laplacian(p, q, args.n, r.spec.interval, &shooting)?)
        }
        OracleKind::Svd => ("svd", svd_eigen_p2(&r.spec, args.n + 1)?[args.n]),
        OracleKind::Auto => unreachable!("resolved above"),
    };
    let res = OracleResult {
        kind: name,
        n: args.n,
        lambda,
        lambda_pow: lambda.powf(-1.0 / q),
    };
    let manifest = RunManifest::new("oracle", Some(&r), json!({ "kind": name, "shooting": shooting }));
    let text = render(&manifest, &res, args.common.format, || {
        format!("kind,n,lambda,lambda_pow\n{},{},{},{}\n", res.kind, res.n, sci(res.lambda), sci(res.lambda_pow))
    });
    emit(args.common.out.as_deref(), &text)?;
    Ok(())
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> hardy_core::Result<(bool, String)>) -> Check {
    match f() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn unit(p: f64, q: f64, u: &str, v: &str, level: u32) -> hardy_core::Result<ProblemSpec> {
    ProblemSpec::from_text(p, q, Interval::unit(), u, v, level)
}

pub fn selftest(args: &SelftestArgs) -> Outcome {
    use std::f64::consts::PI;
    let checks = vec![
        check("classical ground state", || {
            let s = unit(2.0, 2.0, "1", "1", 11)?;
            let r = lambda_extremes(&s, &SearchConfig::default())?;
            let e = rel(r.lambda_extreme, PI * PI / 4.0);
            Ok((e < 1e-5, format!("relative error {e:.2e}")))
        }),
        check("classical n = 3", || {
            let s = unit(2.0, 2.0, "1", "1", 11)?;
            let r = lambda_extremes(&s, &SearchConfig::new(3, Mode::Max))?;
            let e = rel(r.lambda_extreme, (3.5 * PI).powi(2));
            Ok((e < 1e-3, format!("relative error {e:.2e}")))
        }),
        check("c_22 = 1/pi", || {
            let e = (constant_cpq(2.0, 2.0)? - 1.0 / PI).abs();
            Ok((e < 1e-12, format!("error {e:.2e}")))
        }),
        check("c_pp identity", || {
            let mut worst = 0.0f64;
            for p in [1.5f64, 3.0, 5.0] {
                worst = worst.max((constant_cpq(p, p)? - (p - 1.0).powf(-1.0 / p) / pi_p(p)).abs());
            }
            Ok((worst < 1e-10, format!("worst error {worst:.2e}")))
        }),
        check("non-positive weight rejected", || {
            let bad = unit(2.0, 2.0, "x-2", "1", 6);
            Ok((matches!(bad, Err(hardy_core::Error::NotPositive { .. })), "u = x-2".into()))
        }),
        check("singular values match the engine", || {
            let s = unit(2.0, 2.0, "1+x", "1", 9)?;
            let svd = svd_eigen_p2(&s, 4)?;
            let mut worst = 0.0f64;
            for (n, l) in svd.iter().enumerate() {
                let r = lambda_extremes(&s, &SearchConfig::new(n, Mode::Max))?;
                worst = worst.max(rel(r.lambda_extreme, *l));
            }
            Ok((worst < 1e-6, format!("worst relative gap {worst:.2e}")))
        }),
        check("shooting p = q = 3", || {
            let l = shoot_pq_laplacian(3.0, 3.0, 0, Interval::unit(), &ShootingConfig::default())?;
            let e = rel(l, closed_form_pp(3.0, 0, Interval::unit()));
            Ok((e < 1e-4, format!("lambda {l:.6}, relative error {e:.2e}")))
        }),
        check("max and min agree for p = q", || {
            let s = unit(2.0, 2.0, "1+x", "exp(x)", 9)?;
            let mut cfg = SearchConfig::new(2, Mode::Max);
            cfg.starts = 3;
            let hi = lambda_extremes(&s, &cfg)?.lambda_extreme;
            cfg.mode = Mode::Min;
            let lo = lambda_extremes(&s, &cfg)?.lambda_extreme;
            let e = rel(hi, lo);
            Ok((e <= 1e-8, format!("relative gap {e:.2e}")))
        }),
        check("iteration is monotone", || {
            let s = unit(3.0, 1.7, "1+x", "exp(-x)", 10)?;
            let f0 = hardy_core::initial_sign_function(&s, &SignPattern::new(vec![0.2, -0.5, 0.3])?);
            let trace = match run_iteration(&s, &f0, &IterationConfig::default()) {
                Ok((_, t)) => t,
                Err(hardy_core::Error::NotConverged(t)) => *t,
                Err(e) => return Err(e),
            };
            Ok((trace.is_monotone(1e-10), format!("{} steps", trace.iterations)))
        }),
        check("widths collapse for p = q = 2", || {
            let s = unit(2.0, 2.0, "1", "1", 10)?;
            let w = widths_report(&s, 1, &SearchConfig::new(1, Mode::Max), &WidthsConfig::default())?;
            let target = 1.0 / (1.5 * PI);
            let worst = [w.kolmogorov_lb, w.bernstein_val, w.approx_ub]
                .iter()
                .map(|v| rel(*v, target))
                .fold(0.0, f64::max);
            Ok((worst < 0.05, format!("worst relative gap {worst:.2e}")))
        }),
    ];
    let mut text = String::new();
    for c in &checks {
        let _ = writeln!(text, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let _ = writeln!(text, "{} checks, {} failed", checks.len(), failed);
    emit(args.out.as_deref(), &text)?;
    if failed > 0 {
        return Err(Failure::Solver(anyhow::anyhow!("{failed} self-test checks failed")));
    }
    Ok(())
}
