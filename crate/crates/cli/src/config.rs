//! Line-oriented `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Every key may appear at most
//! once, unknown keys are rejected, and values are range-checked here so the
//! recipes can trust them.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    /// 1-based line, when the problem is tied to one.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line: Some(line), message: message.into() }
}

/// The recipes, one per acceptance criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    StationarityOracle,
    SymbolIdentities,
    Negativity,
    Linearization,
    DriftCheck,
    CharacteristicGradient,
    SdeVsExact,
    Cor1LogGrowth,
    Cor2Characteristic,
    Cor3She,
    GffVariance,
    QpochAsymptotics,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Experiment::StationarityOracle,
        Experiment::SymbolIdentities,
        Experiment::Negativity,
        Experiment::Linearization,
        Experiment::DriftCheck,
        Experiment::CharacteristicGradient,
        Experiment::SdeVsExact,
        Experiment::Cor1LogGrowth,
        Experiment::Cor2Characteristic,
        Experiment::Cor3She,
        Experiment::GffVariance,
        Experiment::QpochAsymptotics,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::StationarityOracle => "stationarity-oracle",
            Experiment::SymbolIdentities => "symbol-identities",
            Experiment::Negativity => "negativity",
            Experiment::Linearization => "linearization",
            Experiment::DriftCheck => "drift-check",
            Experiment::CharacteristicGradient => "characteristic-gradient",
            Experiment::SdeVsExact => "sde-vs-exact",
            Experiment::Cor1LogGrowth => "cor1-log-growth",
            Experiment::Cor2Characteristic => "cor2-characteristic",
            Experiment::Cor3She => "cor3-she",
            Experiment::GffVariance => "gff-variance",
            Experiment::QpochAsymptotics => "qpoch-asymptotics",
        }
    }

    /// 1-based acceptance criterion number.
    pub fn criterion(&self) -> usize {
        Self::ALL.iter().position(|e| e == self).unwrap() + 1
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parsed configuration. `None` means "use the recipe's default".
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub eps: Option<f64>,
    pub ell: Option<usize>,
    pub l: Option<usize>,
    pub n: Option<usize>,
    pub m1: Option<usize>,
    pub m: Option<usize>,
    pub m2: Option<usize>,
    pub q: Option<Vec<f64>>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub draws: Option<usize>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub deltas: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// All knobs at the recipe defaults.
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            c: None,
            d: None,
            eps: None,
            ell: None,
            l: None,
            n: None,
            m1: None,
            m: None,
            m2: None,
            q: None,
            dt: None,
            t_end: None,
            replicas: None,
            seed: None,
            draws: None,
            grid: None,
            tol: None,
            deltas: None,
            out: None,
        }
    }
}

pub const KEYS: [&str; 20] = [
    "experiment", "C", "D", "eps", "ell", "L", "N", "m1", "m", "m2", "q", "dt", "T", "replicas", "seed", "draws", "grid", "tol",
    "deltas", "out",
];

fn parse_num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| err(line, format!("invalid value {v:?} for {key}: {e}")))
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    let items: Vec<f64> = v.split(',').map(|s| parse_num(line, key, s.trim())).collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(err(line, format!("{key} needs at least one value")));
    }
    Ok(items)
}

fn check(line: usize, ok: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(err(line, msg()))
    }
}

fn positive(line: usize, key: &str, x: f64) -> Result<f64, ConfigError> {
    check(line, x > 0.0 && x.is_finite(), || format!("{key} must be positive and finite, got {x}"))?;
    Ok(x)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::new(Experiment::StationarityOracle);
    let mut experiment = None;
    let mut seen: Vec<&str> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| err(line, format!("expected `key = value`, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let known = KEYS.iter().find(|k| **k == key).ok_or_else(|| err(line, format!("unknown key {key:?}")))?;
        if seen.contains(known) {
            return Err(err(line, format!("duplicate key {key:?}")));
        }
        seen.push(known);
        if value.is_empty() {
            return Err(err(line, format!("missing value for {key}")));
        }
        match key {
            "experiment" => experiment = Some(value.parse::<Experiment>().map_err(|e| err(line, e))?),
            "C" => cfg.c = Some(positive(line, key, parse_num(line, key, value)?)?),
            "D" => cfg.d = Some(positive(line, key, parse_num(line, key, value)?)?),
            "eps" => {
                let e: f64 = parse_num(line, key, value)?;
                check(line, e > 0.0 && e < 1.0, || format!("eps must lie in (0, 1), got {e}"))?;
                cfg.eps = Some(e);
            }
            "ell" => cfg.ell = Some(parse_num(line, key, value)?),
            "L" => cfg.l = Some(parse_num(line, key, value)?),
            "N" => cfg.n = Some(parse_num(line, key, value)?),
            "m1" => cfg.m1 = Some(parse_num(line, key, value)?),
            "m" => {
                let m: usize = parse_num(line, key, value)?;
                check(line, m >= 2, || format!("m must be at least 2, got {m}"))?;
                cfg.m = Some(m);
            }
            "m2" => cfg.m2 = Some(parse_num(line, key, value)?),
            "q" => {
                let qs = parse_list(line, key, value)?;
                for &q in &qs {
                    check(line, (0.0..1.0).contains(&q), || format!("q must lie in [0, 1), got {q}"))?;
                }
                cfg.q = Some(qs);
            }
            "dt" => cfg.dt = Some(positive(line, key, parse_num(line, key, value)?)?),
            "T" => cfg.t_end = Some(positive(line, key, parse_num(line, key, value)?)?),
            "replicas" => {
                let r: usize = parse_num(line, key, value)?;
                check(line, r >= 2, || format!("replicas must be at least 2, got {r}"))?;
                cfg.replicas = Some(r);
            }
            "seed" => cfg.seed = Some(parse_num(line, key, value)?),
            "draws" => {
                let r: usize = parse_num(line, key, value)?;
                check(line, r >= 1, || "draws must be at least 1".to_string())?;
                cfg.draws = Some(r);
            }
            "grid" => {
                let g: usize = parse_num(line, key, value)?;
                check(line, g >= 4, || format!("grid must be at least 4, got {g}"))?;
                cfg.grid = Some(g);
            }
            "tol" => cfg.tol = Some(positive(line, key, parse_num(line, key, value)?)?),
            "deltas" => {
                let ds = parse_list(line, key, value)?;
                for &d in &ds {
                    check(line, d > 0.0 && d < 1.0, || format!("deltas must lie in (0, 1), got {d}"))?;
                }
                cfg.deltas = Some(ds);
            }
            "out" => cfg.out = Some(PathBuf::from(value)),
            _ => unreachable!("key list and match arms agree"),
        }
    }
    cfg.experiment = experiment.ok_or(ConfigError { line: None, message: "missing required key `experiment`".into() })?;
    if let (Some(c), Some(d)) = (cfg.c, cfg.d) {
        if c >= d {
            return Err(ConfigError { line: None, message: format!("need C < D, got C={c}, D={d}") });
        }
    }
    Ok(cfg)
}
