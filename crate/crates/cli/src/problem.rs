//! Resolution of flags and `--spec` files into a problem and run settings.

use std::path::Path;

use anyhow::{bail, Context};
use hardy_core::{Interval, Mode, ProblemSpec, SearchConfig};
use serde::{Deserialize, Deserializer, Serialize};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::args::{Common, ModeArg};

/// Contents of a `--spec` file. Field names match the long flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    p: Option<f64>,
    q: Option<f64>,
    #[serde(default, deserialize_with = "interval_field")]
    interval: Option<(f64, f64)>,
    u: Option<String>,
    v: Option<String>,
    #[serde(alias = "grid-level")]
    grid_level: Option<u32>,
    tol: Option<f64>,
    seed: Option<u64>,
    starts: Option<usize>,
    mode: Option<String>,
}

fn interval_field<'de, D: Deserializer<'de>>(d: D) -> Result<Option<(f64, f64)>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Pair([f64; 2]),
    }
    match Option::<Raw>::deserialize(d)? {
        None => Ok(None),
        Some(Raw::Pair([a, b])) => Ok(Some((a, b))),
        Some(Raw::Text(s)) => parse_interval(&s).map(Some).map_err(serde::de::Error::custom),
    }
}

fn parse_interval(s: &str) -> anyhow::Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!("interval must be `a,b`, got `{s}`");
    }
    let a = parts[0].parse().with_context(|| format!("bad interval start `{}`", parts[0]))?;
    let b = parts[1].parse().with_context(|| format!("bad interval end `{}`", parts[1]))?;
    Ok((a, b))
}

/// The problem as the user specified it, echoed into every manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemDesc {
    pub p: f64,
    pub q: f64,
    pub interval: [f64; 2],
    pub u: String,
    pub v: String,
    pub grid_level: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub tol: f64,
    pub seed: u64,
    pub starts: usize,
    pub mode: Mode,
}

pub struct Resolved {
    pub desc: ProblemDesc,
    pub settings: Settings,
    pub spec: ProblemSpec,
}

impl Resolved {
    pub fn search(&self, n: usize) -> SearchConfig {
        SearchConfig {
            n,
            mode: self.settings.mode,
            starts: self.settings.starts,
            rng_seed: self.settings.seed,
            inner_tol: self.settings.tol,
            ..SearchConfig::default()
        }
    }
}

fn read_spec_file(path: &Path) -> anyhow::Result<SpecFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read spec file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid spec file {}", path.display()))
}

/// Flags override the spec file, which overrides the defaults. Errors here are
/// usage errors.
pub fn resolve(common: &Common, default_level: u32) -> anyhow::Result<Resolved> {
    let file = match &common.spec {
        Some(path) => read_spec_file(path)?,
        None => SpecFile::default(),
    };
    let p = common.p.or(file.p).context("missing --p")?;
    let q = common.q.or(file.q).context("missing --q")?;
    let (a, b) = match &common.interval {
        Some(s) => parse_interval(s)?,
        None => file.interval.unwrap_or((0.0, 1.0)),
    };
    let u = common.u.clone().or(file.u).unwrap_or_else(|| "1".into());
    let v = common.v.clone().or(file.v).unwrap_or_else(|| "1".into());
    let grid_level = common.grid_level.or(file.grid_level).unwrap_or(default_level);
    let tol = common.tol.or(file.tol).unwrap_or(1e-12);
    if !(tol > 0.0) {
        bail!("--tol must be positive");
    }
    let seed = common.seed.or(file.seed).unwrap_or(0);
    let starts = common.starts.or(file.starts).unwrap_or(1);
    if starts == 0 {
        bail!("--starts must be at least 1");
    }
    let mode = match (common.mode, file.mode) {
        (Some(ModeArg::Max), _) => Mode::Max,
        (Some(ModeArg::Min), _) => Mode::Min,
        (None, Some(m)) => m.parse()?,
        (None, None) => Mode::default_for(p, q),
    };
    let interval = Interval::new(a, b)?;
    let spec = ProblemSpec::from_text(p, q, interval, &u, &v, grid_level)?;
    Ok(Resolved {
        desc: ProblemDesc {
            p,
            q,
            interval: [a, b],
            u,
            v,
            grid_level,
        },
        settings: Settings { tol, seed, starts, mode },
        spec,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub spec: Option<ProblemDesc>,
    pub config: serde_json::Value,
    pub tool_version: String,
    pub rng_seed: u64,
    pub timestamp: String,
}

/// Taken from `SOURCE_DATE_EPOCH` (default 0) so that reruns are byte-identical.
pub fn timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .unwrap_or(0);
    OffsetDateTime::from_unix_timestamp(secs)
        .unwrap_or(OffsetDateTime::UNIX_EPOCH)
        .format(&Rfc3339)
        .unwrap_or_else(|_| "1970-01-01T00:00:00Z".into())
}

impl RunManifest {
    pub fn new(command: &str, resolved: Option<&Resolved>, config: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            spec: resolved.map(|r| r.desc.clone()),
            config,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            rng_seed: resolved.map_or(0, |r| r.settings.seed),
            timestamp: timestamp(),
        }
    }
}
