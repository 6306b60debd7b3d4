//! Grid syntax, the flat `key=value` config file and flag/file/default resolution.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use invgamma::{GammaParams, QuadSpec, SeriesSpec};

use crate::error::CliError;
use crate::output::{self, Table};
use crate::GlobalArgs;

const MAX_GRID_POINTS: usize = 10_000_000;

/// Parses `start:stop:step` ranges (inclusive) and comma-separated lists of
/// numbers or ranges, e.g. `0.5,1.5,11` or `0:4:0.01`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim) {
        if item.is_empty() {
            return Err(format!("empty entry in grid `{text}`"));
        }
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(parse_number(single)?),
            [start, stop, step] => out.extend(range(parse_number(start)?, parse_number(stop)?, parse_number(step)?)?),
            _ => return Err(format!("`{item}` is neither a number nor start:stop:step")),
        }
        if out.len() > MAX_GRID_POINTS {
            return Err(format!("grid `{text}` has more than {MAX_GRID_POINTS} points"));
        }
    }
    Ok(out)
}

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(step > 0.0) {
        return Err(format!("range step must be positive, got {step}"));
    }
    if stop < start {
        return Err(format!("range stop {stop} is below start {start}"));
    }
    let span = (stop - start) / step;
    let slack = 1e-9 * span.max(1.0);
    let n = (span + slack).floor();
    if n as usize > MAX_GRID_POINTS {
        return Err(format!("range {start}:{stop}:{step} has too many points"));
    }
    let n = n as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
    if (span - n as f64).abs() <= slack {
        v[n] = stop;
    }
    Ok(v)
}

/// Flat `key=value` file; `#` starts a comment line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got `{line}`", i + 1))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(format!("line {}: empty key", i + 1));
            }
            entries.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Resolves settings with precedence flag > config file > default.
#[derive(Debug, Clone, Default)]
pub struct Resolver {
    file: ConfigFile,
}

impl Resolver {
    pub fn new(file: ConfigFile) -> Self {
        Resolver { file }
    }

    pub fn value<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
    {
        Ok(self.optional(flag, key)?.unwrap_or(default))
    }

    pub fn optional<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{text}`"))),
            None => Ok(None),
        }
    }

    /// Grid from the flag, the file or the default text; `None` if none is given.
    pub fn grid(&self, flag: &Option<String>, key: &str, default: Option<&str>) -> Result<Option<Vec<f64>>, CliError> {
        let text = match (flag, self.file.get(key), default) {
            (Some(f), _, _) => f.clone(),
            (None, Some(f), _) => f.to_string(),
            (None, None, Some(d)) => d.to_string(),
            (None, None, None) => return Ok(None),
        };
        parse_grid(&text)
            .map(Some)
            .map_err(|e| CliError::Usage(format!("invalid grid for `{key}`: {e}")))
    }

    pub fn required_grid(&self, flag: &Option<String>, key: &str, default: Option<&str>) -> Result<Vec<f64>, CliError> {
        self.grid(flag, key, default)?
            .ok_or_else(|| CliError::Usage(format!("missing required grid `--{key}`")))
    }
}

/// Settings shared by every command, validated before any computation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: GammaParams,
    pub seed: u64,
    pub quad: QuadSpec,
    pub series: SeriesSpec,
    /// Overrides the pass tolerance of every verification check.
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    /// E.g. `solve abel`.
    pub command: String,
    pub resolver: Resolver,
}

pub const DEFAULT_SEED: u64 = 42;

impl RunConfig {
    pub fn resolve(g: &GlobalArgs, command: String) -> Result<Self, CliError> {
        let file = match &g.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let r = Resolver::new(file);
        let a = require_positive("a", r.value(g.a, "a", 1.0)?)?;
        let b = require_positive("b", r.value(g.b, "b", 1.0)?)?;
        let params = GammaParams::new(a, b).map_err(|e| CliError::Usage(e.to_string()))?;
        let seed = r.value(g.seed, "seed", DEFAULT_SEED)?;
        let defaults = QuadSpec::default();
        let quad = QuadSpec {
            abs_tol: require_nonnegative("abs-tol", r.value(g.abs_tol, "abs-tol", defaults.abs_tol)?)?,
            rel_tol: r.value(g.rel_tol, "rel-tol", defaults.rel_tol)?,
            max_subdivisions: r.value(g.max_subdivisions, "max-subdivisions", defaults.max_subdivisions)?,
            ..defaults
        };
        quad.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let series = SeriesSpec {
            tail_tol: r.value(g.series_tol, "series-tol", SeriesSpec::default().tail_tol)?,
            ..SeriesSpec::default()
        };
        series.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let tol = r.optional(g.tol, "tol")?.map(|t| require_nonnegative("tol", t)).transpose()?;
        let out = r.optional(g.out.clone(), "out")?;
        Ok(RunConfig {
            params,
            seed,
            quad,
            series,
            tol,
            out,
            command,
            resolver: r,
        })
    }

    /// Empty table carrying the command, parameter and seed metadata.
    pub fn table(&self, header: &[&str]) -> Table {
        let mut t = Table::new(header);
        t.meta("command", &self.command);
        t.meta("params", format!("a={},b={}", self.params.a, self.params.b));
        t.meta("seed", self.seed);
        t
    }

    pub fn emit(&self, table: &Table) -> Result<(), CliError> {
        output::emit(table, self.out.as_deref(), &self.command.replace(' ', "-"))
    }
}

pub fn require_positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("invalid value for `{key}`: must be positive, got {v}")))
    }
}

pub fn require_nonnegative(key: &str, v: f64) -> Result<f64, CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("invalid value for `{key}`: must be nonnegative, got {v}")))
    }
}
