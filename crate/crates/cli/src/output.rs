use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::Context;
use nwave_core::diagnostics::{write_csv_rows, CsvRow};
use nwave_core::spectral::CSV_SCHEMA_VERSION;
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig};

/// Failure classes, one per exit code.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(nwave_core::Error),
    Threshold(Vec<String>),
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Threshold(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e}"),
            Failure::Threshold(v) => write!(f, "acceptance thresholds violated: {}", v.join("; ")),
            Failure::Io(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<nwave_core::Error> for Failure {
    fn from(e: nwave_core::Error) -> Self {
        match e {
            nwave_core::Error::Io(_) | nwave_core::Error::Csv(_) | nwave_core::Error::Json(_) => {
                Failure::Io(e.into())
            }
            e => Failure::Numerical(e),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

/// A measured value against its limit.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }
}

/// Turns failed checks into [`Failure::Threshold`] when `strict`.
pub fn enforce(checks: &[Check], strict: bool) -> Outcome {
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} = {:e} > {:e}", c.name, c.value, c.limit))
        .collect();
    if strict && !failed.is_empty() {
        return Err(Failure::Threshold(failed));
    }
    Ok(())
}

pub fn create_dir(dir: &Path) -> Outcome {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

pub fn write_rows<T: CsvRow>(dir: &Path, name: &str, rows: &[T]) -> Outcome {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_csv_rows(rows, BufWriter::new(file))?;
    Ok(())
}

pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Outcome {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).context("serialising JSON")?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    schema_version: u32,
    config: &'a ExperimentConfig,
}

/// `meta.json` with the fully resolved configuration.
pub fn write_meta(dir: &Path, command: &str, cfg: &ExperimentConfig) -> Outcome {
    write_json(
        dir,
        "meta.json",
        &Meta {
            tool: "nwave",
            version: env!("CARGO_PKG_VERSION"),
            command,
            schema_version: CSV_SCHEMA_VERSION,
            config: cfg,
        },
    )
}

/// Reads the configuration back from a run directory.
pub fn read_meta(dir: &Path) -> Outcome<ExperimentConfig> {
    let path = dir.join("meta.json");
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).context("parsing meta.json")?;
    let cfg: ExperimentConfig = serde_json::from_value(value["config"].clone())
        .map_err(|e| ConfigError(vec![format!("meta.json config: {e}")]))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}
