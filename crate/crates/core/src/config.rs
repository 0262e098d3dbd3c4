//! Scenario configuration files.
//!
//! The format is TOML restricted to flat keys: top-level `key = value` pairs
//! set [`SystemParams`] fields, and each `[[sweep]]` table describes one
//! parameter sweep. `#` starts a comment. Unknown keys are rejected.
//!
//! ```toml
//! mu = 0.48
//! path_loss_db = 6
//!
//! [[sweep]]
//! variable = "path_loss_db"
//! start = 0
//! stop = 40
//! step = 2
//! schemes = ["tdma", "cdma:1", "lbs:500"]
//! n_active = "full"
//! output = "loss.csv"
//! format = "csv"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mac::SchemeSpec;
use crate::network::{SystemParams, PARAM_FIELDS};

/// Sweep variables that are not [`SystemParams`] fields.
pub const SCHEME_FIELDS: &[&str] = &["n_active", "weight", "listen_periods", "n_channels", "alpha_xt"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivePairs {
    /// As many pairs as the star has ports.
    Full,
    Fixed(usize),
}

impl ActivePairs {
    pub fn resolve(&self, p: &SystemParams) -> usize {
        match self {
            ActivePairs::Full => p.n_star,
            ActivePairs::Fixed(n) => *n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    KeyValue,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "keyvalue" => Ok(OutputFormat::KeyValue),
            other => Err(Error::Config(format!(
                "format `{other}`: expected `csv` or `keyvalue`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: String,
    pub values: Vec<f64>,
    pub schemes: Vec<SchemeSpec>,
    pub n_active: ActivePairs,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub ignore_capacity: bool,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawActive {
    Count(usize),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: String,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
    schemes: Vec<String>,
    n_active: Option<RawActive>,
    output: Option<PathBuf>,
    format: Option<String>,
    #[serde(default)]
    ignore_capacity: bool,
}

/// Expands `start, start + step, ...` up to and including `stop`.
pub fn expand_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Config(format!("sweep step must be > 0, got {step}")));
    }
    if !(start.is_finite() && stop.is_finite()) || stop < start {
        return Err(Error::Config(format!(
            "sweep range [{start}, {stop}] is empty or not finite"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

impl RawSweep {
    fn into_spec(self, index: usize) -> Result<SweepSpec> {
        let ctx = |msg: String| Error::Config(format!("sweep #{}: {msg}", index + 1));

        if !PARAM_FIELDS.contains(&self.variable.as_str())
            && !SCHEME_FIELDS.contains(&self.variable.as_str())
        {
            return Err(ctx(format!("`variable` = `{}` is not a known field", self.variable)));
        }
        let values = match (self.values, self.start, self.stop, self.step) {
            (Some(v), None, None, None) => v,
            (None, Some(a), Some(b), Some(s)) => expand_range(a, b, s).map_err(|e| ctx(e.to_string()))?,
            _ => {
                return Err(ctx(
                    "give either `values` or all of `start`, `stop`, `step`".into(),
                ))
            }
        };
        if values.is_empty() {
            return Err(ctx("`values` is empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(ctx("`schemes` is empty".into()));
        }
        let schemes = self
            .schemes
            .iter()
            .map(|s| s.parse::<SchemeSpec>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| ctx(e.to_string()))?;
        if matches!(self.variable.as_str(), "n_channels" | "alpha_xt")
            && !schemes.iter().any(|s| s.wdm.is_some())
        {
            return Err(ctx(format!("`{}` needs at least one wdm scheme", self.variable)));
        }
        let n_active = match self.n_active {
            None => ActivePairs::Full,
            Some(RawActive::Count(n)) if n >= 1 => ActivePairs::Fixed(n),
            Some(RawActive::Word(w)) if w == "full" => ActivePairs::Full,
            Some(_) => return Err(ctx("`n_active` must be a positive integer or \"full\"".into())),
        };
        let format = match self.format {
            Some(f) => f.parse().map_err(|e: Error| ctx(e.to_string()))?,
            None => OutputFormat::Csv,
        };
        Ok(SweepSpec {
            variable: self.variable,
            values,
            schemes,
            n_active,
            output: self.output,
            format,
            ignore_capacity: self.ignore_capacity,
        })
    }
}

/// Parses configuration text into validated parameters and sweeps.
pub fn parse_config(text: &str) -> Result<(SystemParams, Vec<SweepSpec>)> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;

    let raw_sweeps: Vec<RawSweep> = match table.remove("sweep") {
        Some(v) => v
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("[[sweep]]: {e}")))?,
        None => Vec::new(),
    };
    let params: SystemParams = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    params.validate()?;

    let sweeps = raw_sweeps
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.into_spec(i))
        .collect::<Result<Vec<_>>>()?;
    Ok((params, sweeps))
}

pub fn load_config(path: &Path) -> Result<(SystemParams, Vec<SweepSpec>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
