//! Flat key = value experiment configuration with dotted sections.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines ignored. Lists are comma-separated; grid spacings may be written
//! as fractions (`1/64`). Functionals are indexed: `functional.0.kind`,
//! `functional.0.alpha`, ... Unknown keys are rejected to catch typos.
//!
//! Sections:
//!   benchmark.*   kind = radial | manufactured | file; p/n/scale or path
//!   solve.*       enabled, tol, max_iter, damping, schedule
//!   sweep.*       axes: p, epsilon, h, alpha, gamma, alpha_tilde, k
//!   window.*      annulus r0/r1 around the benchmark center
//!   functional.<i>.*  kind, mask_policy, and fixed numeric parameters
//!   exponents.*   p, q, gamma, n, cz, f_has_sign (admissibility reports)
//!   cz.*          mode, q, cells, family, seed
//!   output.*      dir, formats

use plaplab_core::functionals::{FunctionalKind, FunctionalSpec, MaskPolicy};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("config line {0}: expected `key = value`, got `{1}`")]
    Syntax(usize, String),
    #[error("config key `{0}`: {1}")]
    BadValue(String, String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("missing required config key `{0}`")]
    Missing(String),
    #[error("config invalid: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub enum Benchmark {
    Radial { n: usize, scale: f64 },
    Manufactured,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct SolveSettings {
    pub enabled: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    /// Epsilon-continuation schedule for solves; the sweep epsilon is
    /// appended when smaller than the last entry.
    pub schedule: Vec<f64>,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            enabled: false,
            tol: plaplab_core::solver::defaults::TOL,
            max_iter: plaplab_core::solver::defaults::MAX_ITER,
            damping: plaplab_core::solver::defaults::DAMPING,
            schedule: vec![1e-2, 1e-3, 1e-4],
        }
    }
}

/// Sweep axes; empty vectors mean "axis absent".
#[derive(Debug, Clone, Default)]
pub struct Axes {
    pub p: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub cells: Vec<usize>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha_tilde: Vec<f64>,
    pub k: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExponentSettings {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub n: usize,
    pub cz: f64,
    pub f_has_sign: bool,
}

impl Default for ExponentSettings {
    fn default() -> Self {
        ExponentSettings { p: 2.0, q: 4.0, gamma: 1.0, n: 2, cz: 1.0, f_has_sign: true }
    }
}

#[derive(Debug, Clone)]
pub struct CzSettings {
    pub estimate: bool,
    pub q: f64,
    pub cells: usize,
    pub family: usize,
    pub seed: u64,
}

impl Default for CzSettings {
    fn default() -> Self {
        CzSettings { estimate: true, q: 2.0, cells: 128, family: 16, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings { dir: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json] }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub benchmark: Benchmark,
    pub solve: SolveSettings,
    pub axes: Axes,
    pub functionals: Vec<FunctionalSpec>,
    /// Annulus window radii around the benchmark center.
    pub window: Option<(f64, f64)>,
    pub exponents: ExponentSettings,
    pub cz: CzSettings,
    pub output: OutputSettings,
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let v = v.trim();
    if let Some((num, den)) = v.split_once('/') {
        let n: f64 = num.trim().parse().map_err(|_| bad(key, v))?;
        let d: f64 = den.trim().parse().map_err(|_| bad(key, v))?;
        return Ok(n / d);
    }
    v.parse().map_err(|_| bad(key, v))
}

fn bad(key: &str, v: &str) -> ConfigError {
    ConfigError::BadValue(key.to_string(), format!("cannot parse `{v}`"))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|t| parse_f64(key, t)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(bad(key, other)),
    }
}

/// Parses raw text into the key map; no semantics yet.
fn key_map(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.split_once('#') {
            Some((head, _)) => head,
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax(lineno + 1, raw.to_string()))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

const MASK_POLICIES: [(&str, MaskPolicy); 3] = [
    ("exclude_Zu", MaskPolicy::ExcludeZu),
    ("exclude_Zu_and_degenerate_hessian", MaskPolicy::ExcludeZuAndDegenerateHessian),
    ("none", MaskPolicy::None),
];

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut map = key_map(text)?;
    let mut take = |k: &str| map.remove(k);

    let benchmark = match take("benchmark.kind").as_deref() {
        None | Some("radial") => {
            let n = take("benchmark.n")
                .map(|v| parse_f64("benchmark.n", &v).map(|x| x as usize))
                .transpose()?
                .unwrap_or(2);
            let scale = take("benchmark.scale")
                .map(|v| parse_f64("benchmark.scale", &v))
                .transpose()?
                .unwrap_or(1.0);
            Benchmark::Radial { n, scale }
        }
        Some("manufactured") => Benchmark::Manufactured,
        Some("file") => {
            let path = take("benchmark.path")
                .ok_or(ConfigError::Missing("benchmark.path".into()))?;
            Benchmark::File(PathBuf::from(path))
        }
        Some(other) => return Err(ConfigError::BadValue("benchmark.kind".into(), other.into())),
    };

    let mut solve = SolveSettings::default();
    if let Some(v) = take("solve.enabled") {
        solve.enabled = parse_bool("solve.enabled", &v)?;
    }
    if let Some(v) = take("solve.tol") {
        solve.tol = parse_f64("solve.tol", &v)?;
    }
    if let Some(v) = take("solve.max_iter") {
        solve.max_iter = parse_f64("solve.max_iter", &v)? as usize;
    }
    if let Some(v) = take("solve.damping") {
        solve.damping = parse_f64("solve.damping", &v)?;
    }
    if let Some(v) = take("solve.schedule") {
        solve.schedule = parse_list("solve.schedule", &v)?;
    }

    let mut axes = Axes::default();
    if let Some(v) = take("sweep.p") {
        axes.p = parse_list("sweep.p", &v)?;
    }
    if let Some(v) = take("sweep.epsilon") {
        axes.epsilon = parse_list("sweep.epsilon", &v)?;
    }
    if let Some(v) = take("sweep.h") {
        axes.cells = parse_list("sweep.h", &v)?
            .into_iter()
            .map(|h| {
                if !(h > 0.0 && h < 1.0) {
                    return Err(ConfigError::BadValue("sweep.h".into(), format!("h = {h}")));
                }
                Ok((1.0 / h).round() as usize)
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = take("sweep.alpha") {
        axes.alpha = parse_list("sweep.alpha", &v)?;
    }
    if let Some(v) = take("sweep.gamma") {
        axes.gamma = parse_list("sweep.gamma", &v)?;
    }
    if let Some(v) = take("sweep.alpha_tilde") {
        axes.alpha_tilde = parse_list("sweep.alpha_tilde", &v)?;
    }
    if let Some(v) = take("sweep.k") {
        axes.k = parse_list("sweep.k", &v)?;
    }

    let window = match (take("window.r0"), take("window.r1")) {
        (None, None) => None,
        (r0, r1) => {
            let r0 = parse_f64("window.r0", &r0.ok_or(ConfigError::Missing("window.r0".into()))?)?;
            let r1 = parse_f64("window.r1", &r1.ok_or(ConfigError::Missing("window.r1".into()))?)?;
            if !(0.0 <= r0 && r0 < r1) {
                return Err(ConfigError::Invalid(format!("window radii {r0} >= {r1}")));
            }
            Some((r0, r1))
        }
    };

    let mut exponents = ExponentSettings::default();
    if let Some(v) = take("exponents.p") {
        exponents.p = parse_f64("exponents.p", &v)?;
    }
    if let Some(v) = take("exponents.q") {
        exponents.q = parse_f64("exponents.q", &v)?;
    }
    if let Some(v) = take("exponents.gamma") {
        exponents.gamma = parse_f64("exponents.gamma", &v)?;
    }
    if let Some(v) = take("exponents.n") {
        exponents.n = parse_f64("exponents.n", &v)? as usize;
    }
    if let Some(v) = take("exponents.cz") {
        exponents.cz = parse_f64("exponents.cz", &v)?;
    }
    if let Some(v) = take("exponents.f_has_sign") {
        exponents.f_has_sign = parse_bool("exponents.f_has_sign", &v)?;
    }

    let mut cz = CzSettings::default();
    if let Some(v) = take("cz.mode") {
        cz.estimate = match v.as_str() {
            "estimate" => true,
            "known" => false,
            other => return Err(ConfigError::BadValue("cz.mode".into(), other.into())),
        };
    }
    if let Some(v) = take("cz.q") {
        cz.q = parse_f64("cz.q", &v)?;
    }
    if let Some(v) = take("cz.cells") {
        cz.cells = parse_f64("cz.cells", &v)? as usize;
    }
    if let Some(v) = take("cz.family") {
        cz.family = parse_f64("cz.family", &v)? as usize;
    }
    if let Some(v) = take("cz.seed") {
        cz.seed = parse_f64("cz.seed", &v)? as u64;
    }

    let mut output = OutputSettings::default();
    if let Some(v) = take("output.dir") {
        output.dir = PathBuf::from(v);
    }
    if let Some(v) = take("output.formats") {
        output.formats = v
            .split(',')
            .map(|t| match t.trim() {
                "csv" => Ok(Format::Csv),
                "json" => Ok(Format::Json),
                other => Err(ConfigError::BadValue("output.formats".into(), other.into())),
            })
            .collect::<Result<_, _>>()?;
    }

    // indexed functionals: functional.<i>.<key>
    let mut functionals = Vec::new();
    for i in 0.. {
        let prefix = format!("functional.{i}.");
        let keys: Vec<String> =
            map.keys().filter(|k| k.starts_with(&prefix)).cloned().collect();
        if keys.is_empty() {
            break;
        }
        let kind_key = format!("{prefix}kind");
        let kind_name = map
            .remove(&kind_key)
            .ok_or(ConfigError::Missing(kind_key.clone()))?;
        let kind = FunctionalKind::from_name(&kind_name)
            .ok_or_else(|| ConfigError::BadValue(kind_key, kind_name))?;
        let policy_key = format!("{prefix}mask_policy");
        let mask_policy = match map.remove(&policy_key) {
            None => MaskPolicy::ExcludeZu,
            Some(v) => MASK_POLICIES
                .iter()
                .find(|(name, _)| *name == v)
                .map(|(_, p)| *p)
                .ok_or(ConfigError::BadValue(policy_key, v))?,
        };
        let mut params = BTreeMap::new();
        for key in keys {
            if let Some(v) = map.remove(&key) {
                let name = key.strip_prefix(&prefix).unwrap().to_string();
                params.insert(name.clone(), parse_f64(&key, &v)?);
            }
        }
        functionals.push(FunctionalSpec { kind, params, mask_policy });
    }

    if let Some(stray) = map.keys().next() {
        return Err(ConfigError::UnknownKey(stray.clone()));
    }

    let config = ExperimentConfig {
        benchmark,
        solve,
        axes,
        functionals,
        window,
        exponents,
        cz,
        output,
    };
    validate(&config)?;
    Ok(config)
}

fn validate(c: &ExperimentConfig) -> Result<(), ConfigError> {
    if c.functionals.is_empty() && !c.solve.enabled {
        return Err(ConfigError::Invalid(
            "config declares no functionals and no solve task".into(),
        ));
    }
    for cells in &c.axes.cells {
        if !cells.is_power_of_two() {
            return Err(ConfigError::Invalid(format!(
                "h axis must list power-of-two refinements, got 1/{cells}"
            )));
        }
    }
    if c.solve.enabled {
        if c.solve.schedule.is_empty() {
            return Err(ConfigError::Invalid("solve.schedule is empty".into()));
        }
        if c.solve.schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ConfigError::Invalid(
                "solve.schedule must be strictly decreasing".into(),
            ));
        }
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
    parse(&text)
}
