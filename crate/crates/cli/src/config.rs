//! Run settings: command-line flags layered over an optional flat
//! `key = value` file, validated before any simulation starts.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A rejected parameter. Maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub param: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(param: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            param: param.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameter `{}`: {}", self.param, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Flags shared by every scenario.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trials per reported point.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Number of equispaced angles on [0, pi], endpoints included.
    #[arg(long, global = true)]
    pub gamma_grid: Option<usize>,
    /// Explicit angle in radians; repeatable. Replaces the grid.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Vec<f64>,
    /// Breakable fraction of the elastic; repeatable.
    #[arg(long, global = true)]
    pub epsilon: Vec<f64>,
    /// Elastic length L0.
    #[arg(long, global = true)]
    pub length: Option<f64>,
    /// Sequential breaks along the elastic-band trajectory.
    #[arg(long, global = true)]
    pub breaks: Option<u64>,
    /// Output file, or directory for `all`. Standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; inferred from the `--out` extension when omitted.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Assert the acceptance criteria of the scenario; exit 3 on failure.
    #[arg(long, global = true)]
    pub check: bool,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel trials.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_GAMMA_GRID: usize = 13;
pub const DEFAULT_EPSILONS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_BREAKS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub trials: u64,
    pub gammas: Vec<f64>,
    /// Empty when none were given.
    pub epsilons: Vec<f64>,
    pub length: f64,
    pub breaks: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub check: bool,
    pub threads: Option<usize>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| ConfigError::new(key, format!("cannot parse {value:?}: {e}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| parse(key, v))
        .collect()
}

/// Reads a config file into `opts`, leaving already-set flags alone.
pub fn merge_file(opts: &mut Options, path: &Path) -> Result<(), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
    merge_text(opts, &text)
}

pub fn merge_text(opts: &mut Options, text: &str) -> Result<(), ConfigError> {
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::new(
                "config",
                format!("line {}: expected key = value", n + 1),
            ));
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "seed" => opts.seed = opts.seed.or(Some(parse(&key, value)?)),
            "trials" => opts.trials = opts.trials.or(Some(parse(&key, value)?)),
            "gamma_grid" => opts.gamma_grid = opts.gamma_grid.or(Some(parse(&key, value)?)),
            "length" => opts.length = opts.length.or(Some(parse(&key, value)?)),
            "breaks" => opts.breaks = opts.breaks.or(Some(parse(&key, value)?)),
            "threads" => opts.threads = opts.threads.or(Some(parse(&key, value)?)),
            "gamma" if opts.gamma.is_empty() => opts.gamma = parse_list(&key, value)?,
            "epsilon" if opts.epsilon.is_empty() => opts.epsilon = parse_list(&key, value)?,
            "gamma" | "epsilon" => {}
            "out" => opts.out = opts.out.take().or_else(|| Some(PathBuf::from(value))),
            "format" if opts.format.is_none() => {
                opts.format = Some(Format::from_str(value, true).map_err(|_| {
                    ConfigError::new("format", format!("expected csv or json, got {value:?}"))
                })?)
            }
            "format" => {}
            _ => return Err(ConfigError::new(key, "unknown configuration key")),
        }
    }
    Ok(())
}

/// Equispaced angles on `[0, pi]`, both ends included.
pub fn gamma_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| {
            if k + 1 == points {
                PI
            } else {
                k as f64 * PI / (points - 1) as f64
            }
        })
        .collect()
}

impl Settings {
    pub fn resolve(mut opts: Options) -> Result<Self, ConfigError> {
        if let Some(path) = opts.config.clone() {
            merge_file(&mut opts, &path)?;
        }
        let trials = opts.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(ConfigError::new("trials", "must be at least 1"));
        }
        let gammas = if opts.gamma.is_empty() {
            let points = opts.gamma_grid.unwrap_or(DEFAULT_GAMMA_GRID);
            if points < 2 {
                return Err(ConfigError::new("gamma-grid", "needs at least 2 points"));
            }
            gamma_grid(points)
        } else {
            if let Some(g) = opts.gamma.iter().find(|g| !(0.0..=PI).contains(*g)) {
                return Err(ConfigError::new(
                    "gamma",
                    format!("{g} is outside [0, pi] radians"),
                ));
            }
            opts.gamma
        };
        if let Some(e) = opts.epsilon.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(ConfigError::new(
                "epsilon",
                format!("{e} is outside [0, 1]"),
            ));
        }
        let length = opts.length.unwrap_or(1.0);
        if !(length > 0.0 && length.is_finite()) {
            return Err(ConfigError::new(
                "length",
                format!("{length} is not a positive length"),
            ));
        }
        let breaks = opts.breaks.unwrap_or(DEFAULT_BREAKS);
        if breaks == 0 {
            return Err(ConfigError::new("breaks", "must be at least 1"));
        }
        if opts.threads == Some(0) {
            return Err(ConfigError::new("threads", "must be at least 1"));
        }
        let format = opts.format.unwrap_or_else(|| match &opts.out {
            Some(p)
                if p.extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("json")) =>
            {
                Format::Json
            }
            _ => Format::Csv,
        });
        Ok(Self {
            seed: opts.seed.unwrap_or(DEFAULT_SEED),
            trials,
            gammas,
            epsilons: opts.epsilon,
            length,
            breaks,
            out: opts.out,
            format,
            check: opts.check,
            threads: opts.threads,
        })
    }
}
