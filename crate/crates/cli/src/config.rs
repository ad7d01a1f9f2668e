//! Line-based `key = value` experiment configuration.
//!
//! ```text
//! # ER transition sweep
//! graphon = constant:0.5
//! freq = cauchy:0.5
//! coupling = random
//! n = 2000
//! K = 1.2:3.0:0.2
//! T = 200
//! ```
//!
//! Everything after `#` is a comment. Keys are case-sensitive and unknown
//! keys are rejected. Syntax errors stop at the offending line; value
//! errors are collected so that every violation is reported at once.

use std::fmt;
use std::path::PathBuf;

use kgraph::dynamics::{InitialCondition, MAX_DT};
use kgraph::frequency::FrequencyDistribution;
use kgraph::graphon::{Graphon, GridScheme};
use kgraph::meanfield::{Closure, DEFAULT_ORDER, MAX_MEANFIELD_DT};

use crate::specs::{parse_freq, parse_graphon, parse_initial, CouplingRange};

/// How node-to-node couplings are realised from the graphon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    /// Deterministic weights `W(ξ_i, ξ_j)`.
    Weighted,
    /// A W-random graph: edge `ij` present with probability `W(ξ_i, ξ_j)`.
    Random,
}

#[derive(Clone)]
pub struct ExperimentConfig {
    pub graphon_spec: String,
    pub graphon: Graphon,
    pub freq_spec: String,
    pub freq: FrequencyDistribution,
    pub n: usize,
    pub grid: GridScheme,
    pub coupling: CouplingMode,
    pub k: Option<CouplingRange>,
    pub t_end: f64,
    pub dt: f64,
    pub seeds: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub initial_spec: String,
    pub initial: InitialCondition,
    /// Particle steps between recorded samples in `simulate`.
    pub record_stride: usize,
    /// Write the binary phase sidecar in `simulate`.
    pub snapshots: bool,
    pub n_ladder: Vec<usize>,
    /// Times at which `compare` evaluates the distance proxy.
    pub checkpoints: Vec<f64>,
    /// Sampling interval shared by particle and mean-field series in `compare`.
    pub sample_dt: f64,
    pub order: usize,
    pub m_omega: usize,
    pub m_x: usize,
    pub meanfield_dt: f64,
    pub closure: Closure,
    /// Record per-position local order in `meanfield`.
    pub local: bool,
    pub kmax: usize,
    pub nystrom: usize,
}

impl fmt::Debug for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Every key accepted by [`parse_config`].
pub const KEYS: &[&str] = &[
    "graphon",
    "freq",
    "n",
    "grid",
    "coupling",
    "K",
    "T",
    "dt",
    "seeds",
    "seed",
    "out",
    "ic",
    "record_stride",
    "snapshots",
    "n_ladder",
    "checkpoints",
    "sample_dt",
    "M",
    "m_omega",
    "m_x",
    "meanfield_dt",
    "closure",
    "local",
    "kmax",
    "nystrom",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.problems.join("\n"))
    }
}

impl std::error::Error for ConfigError {}

impl From<ConfigError> for crate::CliError {
    fn from(e: ConfigError) -> Self {
        crate::CliError::Config(e.to_string())
    }
}

impl ExperimentConfig {
    /// Configuration with every optional key at its default.
    pub fn new(graphon_spec: &str, freq_spec: &str) -> Result<Self, ConfigError> {
        let fail = |m: String| ConfigError { problems: vec![m] };
        Ok(Self {
            graphon: parse_graphon(graphon_spec).map_err(fail)?,
            graphon_spec: graphon_spec.trim().to_owned(),
            freq: parse_freq(freq_spec).map_err(fail)?,
            freq_spec: freq_spec.trim().to_owned(),
            n: 1000,
            grid: GridScheme::Uniform,
            coupling: CouplingMode::Weighted,
            k: None,
            t_end: 100.0,
            dt: 0.05,
            seeds: 1,
            seed: 0,
            out: PathBuf::from("."),
            initial_spec: "incoherent".into(),
            initial: InitialCondition::Incoherent,
            record_stride: 10,
            snapshots: false,
            n_ladder: Vec::new(),
            checkpoints: Vec::new(),
            sample_dt: 0.1,
            order: DEFAULT_ORDER,
            m_omega: 200,
            m_x: 16,
            meanfield_dt: 0.01,
            closure: Closure::default(),
            local: false,
            kmax: 64,
            nystrom: 512,
        })
    }

    /// The K values to run; errors if the config names none.
    pub fn k_values(&self) -> Result<Vec<f64>, ConfigError> {
        self.k.map(|k| k.values()).ok_or_else(|| ConfigError {
            problems: vec!["this command needs `K`".into()],
        })
    }

    /// Checkpoint times, defaulting to the final time.
    pub fn checkpoint_times(&self) -> Vec<f64> {
        if self.checkpoints.is_empty() {
            vec![self.t_end]
        } else {
            self.checkpoints.clone()
        }
    }

    /// Cross-field checks; every violation is listed.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                problems.push(msg);
            }
        };
        check(self.n >= 2, format!("n = {} must be at least 2", self.n));
        check(
            self.dt > 0.0 && self.dt <= MAX_DT,
            format!("dt = {} must lie in (0, {MAX_DT}]", self.dt),
        );
        check(
            self.t_end > 0.0 && self.t_end.is_finite(),
            format!("T = {} must be positive", self.t_end),
        );
        check(self.seeds >= 1, "seeds must be at least 1".into());
        check(
            self.record_stride >= 1,
            "record_stride must be at least 1".into(),
        );
        check(
            self.meanfield_dt > 0.0 && self.meanfield_dt <= MAX_MEANFIELD_DT,
            format!(
                "meanfield_dt = {} must lie in (0, {MAX_MEANFIELD_DT}]",
                self.meanfield_dt
            ),
        );
        check(
            self.order >= 2,
            format!("M = {} must be at least 2", self.order),
        );
        check(
            self.m_omega >= 8,
            format!("m_omega = {} must be at least 8", self.m_omega),
        );
        check(
            self.m_x >= 8,
            format!("m_x = {} must be at least 8", self.m_x),
        );
        check(
            self.nystrom >= 8,
            format!("nystrom = {} must be at least 8", self.nystrom),
        );
        check(self.kmax >= 1, "kmax must be at least 1".into());
        check(
            self.n_ladder.iter().all(|&n| n >= 2) && self.n_ladder.windows(2).all(|w| w[0] < w[1]),
            format!(
                "n_ladder {:?} must be strictly increasing sizes of at least 2",
                self.n_ladder
            ),
        );
        for t in &self.checkpoints {
            check(
                *t > 0.0 && *t <= self.t_end,
                format!("checkpoint {t} must lie in (0, T = {}]", self.t_end),
            );
        }
        let multiple =
            |step: f64| (self.sample_dt / step - (self.sample_dt / step).round()).abs() < 1e-9;
        check(
            self.sample_dt > 0.0 && multiple(self.dt) && multiple(self.meanfield_dt),
            format!(
                "sample_dt = {} must be a positive multiple of dt = {} and meanfield_dt = {}",
                self.sample_dt, self.dt, self.meanfield_dt
            ),
        );
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { problems })
        }
    }

    /// Resolved configuration, one `key = value` per line in [`KEYS`]
    /// order. Parsing it back gives the same configuration, and its hash
    /// identifies a run.
    pub fn canonical(&self) -> String {
        let list = |v: &[String]| v.join(",");
        let lines: Vec<(&str, String)> = vec![
            ("graphon", self.graphon_spec.clone()),
            ("freq", self.freq_spec.clone()),
            ("n", self.n.to_string()),
            ("grid", grid_name(self.grid).into()),
            ("coupling", coupling_name(self.coupling).into()),
            ("K", self.k.map_or_else(|| "none".into(), |k| k.to_string())),
            ("T", self.t_end.to_string()),
            ("dt", self.dt.to_string()),
            ("seeds", self.seeds.to_string()),
            ("seed", self.seed.to_string()),
            ("out", self.out.display().to_string()),
            ("ic", self.initial_spec.clone()),
            ("record_stride", self.record_stride.to_string()),
            ("snapshots", self.snapshots.to_string()),
            (
                "n_ladder",
                list(
                    &self
                        .n_ladder
                        .iter()
                        .map(|n| n.to_string())
                        .collect::<Vec<_>>(),
                ),
            ),
            (
                "checkpoints",
                list(
                    &self
                        .checkpoints
                        .iter()
                        .map(|t| t.to_string())
                        .collect::<Vec<_>>(),
                ),
            ),
            ("sample_dt", self.sample_dt.to_string()),
            ("M", self.order.to_string()),
            ("m_omega", self.m_omega.to_string()),
            ("m_x", self.m_x.to_string()),
            ("meanfield_dt", self.meanfield_dt.to_string()),
            ("closure", closure_name(self.closure)),
            ("local", self.local.to_string()),
            ("kmax", self.kmax.to_string()),
            ("nystrom", self.nystrom.to_string()),
        ];
        lines
            .into_iter()
            .filter(|(_, v)| v != "none")
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| format!("{key}: {v:?} is not a number"))
        };
        let count = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| format!("{key}: {v:?} is not a nonnegative integer"))
        };
        let flag = |v: &str| match v {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(format!("{key}: {v:?} is not a boolean")),
        };
        match key {
            "graphon" => {
                self.graphon = parse_graphon(value)?;
                self.graphon_spec = value.to_owned();
            }
            "freq" => {
                self.freq = parse_freq(value)?;
                self.freq_spec = value.to_owned();
            }
            "n" => self.n = count(value)?,
            "grid" => {
                self.grid = match value {
                    "uniform" => GridScheme::Uniform,
                    "iid" => GridScheme::IidUniform,
                    _ => return Err(format!("grid: {value:?}; accepted: uniform, iid")),
                }
            }
            "coupling" => {
                self.coupling = match value {
                    "weighted" => CouplingMode::Weighted,
                    "random" => CouplingMode::Random,
                    _ => return Err(format!("coupling: {value:?}; accepted: weighted, random")),
                }
            }
            "K" => self.k = Some(CouplingRange::parse(value)?),
            "T" => self.t_end = num(value)?,
            "dt" => self.dt = num(value)?,
            "seeds" => self.seeds = count(value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| format!("seed: {value:?} is not a u64"))?
            }
            "out" => self.out = PathBuf::from(value),
            "ic" => {
                self.initial = parse_initial(value)?;
                self.initial_spec = value.to_owned();
            }
            "record_stride" => self.record_stride = count(value)?,
            "snapshots" => self.snapshots = flag(value)?,
            "n_ladder" => {
                self.n_ladder = split_list(value).map(count).collect::<Result<_, _>>()?;
            }
            "checkpoints" => {
                self.checkpoints = split_list(value).map(num).collect::<Result<_, _>>()?;
            }
            "sample_dt" => self.sample_dt = num(value)?,
            "M" => self.order = count(value)?,
            "m_omega" => self.m_omega = count(value)?,
            "m_x" => self.m_x = count(value)?,
            "meanfield_dt" => self.meanfield_dt = num(value)?,
            "closure" => self.closure = parse_closure(value)?,
            "local" => self.local = flag(value)?,
            "kmax" => self.kmax = count(value)?,
            "nystrom" => self.nystrom = count(value)?,
            _ => {
                return Err(format!(
                    "unknown key {key:?}; accepted: {}",
                    KEYS.join(", ")
                ))
            }
        }
        Ok(())
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn grid_name(g: GridScheme) -> &'static str {
    match g {
        GridScheme::Uniform => "uniform",
        GridScheme::IidUniform => "iid",
    }
}

fn coupling_name(c: CouplingMode) -> &'static str {
    match c {
        CouplingMode::Weighted => "weighted",
        CouplingMode::Random => "random",
    }
}

fn closure_name(c: Closure) -> String {
    match c {
        Closure::Hard => "hard".into(),
        Closure::Filtered { strength, power } => format!("filtered:{strength}:{power}"),
    }
}

/// `hard`, `filtered` (default strength and power) or `filtered:strength:power`.
fn parse_closure(value: &str) -> Result<Closure, String> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts[..] {
        ["hard"] => Ok(Closure::Hard),
        ["filtered"] => Ok(Closure::default()),
        ["filtered", s, p] => {
            let strength = s
                .parse::<f64>()
                .map_err(|_| format!("closure: {s:?} is not a number"))?;
            let power = p
                .parse::<i32>()
                .map_err(|_| format!("closure: {p:?} is not an integer"))?;
            if strength >= 0.0 && power >= 1 {
                Ok(Closure::Filtered { strength, power })
            } else {
                Err(format!(
                    "closure: strength must be ≥ 0 and power ≥ 1 in {value:?}"
                ))
            }
        }
        _ => Err(format!(
            "closure: {value:?}; accepted: hard, filtered, filtered:strength:power"
        )),
    }
}

/// Split `text` into `(line number, key, value)` settings.
fn settings(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let fail = |m: String| ConfigError {
            problems: vec![format!("line {line_no}: {m}")],
        };
        let Some((key, value)) = line.split_once('=') else {
            return Err(fail(format!("expected `key = value`, found {line:?}")));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(fail(format!(
                "unknown key {key:?}; accepted: {}",
                KEYS.join(", ")
            )));
        }
        if value.is_empty() {
            return Err(fail(format!("{key} has no value")));
        }
        if let Some((first, ..)) = out.iter().find(|(_, k, _)| k == key) {
            return Err(fail(format!("{key} already set on line {first}")));
        }
        out.push((line_no, key.to_owned(), value.to_owned()));
    }
    Ok(out)
}

/// Parse and validate a configuration file.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with(text, &[])
}

/// Like [`parse_config`], with `overrides` applied after the file settings
/// and before validation.
pub fn parse_config_with(
    text: &str,
    overrides: &[(&str, String)],
) -> Result<ExperimentConfig, ConfigError> {
    let entries = settings(text)?;
    let lookup = |key: &str| {
        overrides
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| (0, v.clone()))
            .or_else(|| {
                entries
                    .iter()
                    .find(|(_, k, _)| k == key)
                    .map(|(l, _, v)| (*l, v.clone()))
            })
    };
    let mut problems = Vec::new();
    // Placeholder specs keep the remaining keys checkable when one is bad.
    let mut config =
        ExperimentConfig::new("constant:1", "cauchy:1").expect("placeholder specs parse");
    for key in ["graphon", "freq"] {
        match lookup(key) {
            Some((line, value)) => {
                if let Err(m) = config.set(key, &value) {
                    problems.push(located(line, m));
                }
            }
            None => problems.push(format!("missing required key `{key}`")),
        }
    }
    let mut keys: Vec<&str> = entries.iter().map(|(_, k, _)| k.as_str()).collect();
    keys.extend(overrides.iter().map(|(k, _)| *k));
    for key in KEYS
        .iter()
        .filter(|k| keys.contains(k) && **k != "graphon" && **k != "freq")
    {
        let (line, value) = lookup(key).expect("key present");
        if let Err(m) = config.set(key, &value) {
            problems.push(located(line, m));
        }
    }
    if problems.is_empty() {
        config.validate()?;
        Ok(config)
    } else {
        if let Err(e) = config.validate() {
            problems.extend(e.problems);
        }
        Err(ConfigError { problems })
    }
}

fn located(line: usize, message: String) -> String {
    if line == 0 {
        format!("command line: {message}")
    } else {
        format!("line {line}: {message}")
    }
}
