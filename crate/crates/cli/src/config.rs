//! Fully resolved run configurations. Every output file embeds the config
//! that produced it, and `depthcd replay` reruns it.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use depthcd::depth::{DepthKind, TieRule};
use depthcd::simlab::{Operation, ScenarioSpec};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

/// A comma-separated vector on the command line, a list in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(pub Vec<f64>);

impl FromStr for Vector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        crate::data::parse_vector(s).map(Vector)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BootstrapMode {
    /// Bootstrap-t when the estimator has a covariance estimate.
    Auto,
    Plain,
    T,
}

impl FromStr for BootstrapMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Self::Auto),
            "plain" | "regular" => Ok(Self::Plain),
            "t" | "bootstrap-t" => Ok(Self::T),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeChoice {
    Fisher,
    NormalScore,
}

impl FromStr for SchemeChoice {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "fisher" | "log" => Ok(Self::Fisher),
            "normal-score" | "normal" | "stouffer" => Ok(Self::NormalScore),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMethod {
    Gd,
    Jk,
    Clt,
    Hotelling,
    NaiveZ,
    Ho,
}

pub const BASELINE_NAMES: [&str; 6] = ["gd", "jk", "clt", "hotelling", "naive-z", "ho"];

impl FromStr for BaselineMethod {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "gd" => Self::Gd,
            "jk" | "kj" => Self::Jk,
            "clt" => Self::Clt,
            "hotelling" | "t2" => Self::Hotelling,
            "naive-z" | "naive" => Self::NaiveZ,
            "ho" | "hedges-olkin" => Self::Ho,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DepthConfig {
    pub file: PathBuf,
    pub point: Vec<f64>,
    pub depth: DepthKind,
    pub tie_rule: TieRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RegionConfig {
    pub level: f64,
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FuseConfig {
    pub files: Vec<PathBuf>,
    pub study_column: String,
    pub null: Option<Vec<f64>>,
    pub estimator: String,
    pub bootstrap: BootstrapMode,
    pub b: usize,
    pub depth: DepthKind,
    pub tie_rule: TieRule,
    pub scheme: SchemeChoice,
    pub weights: Option<Vec<f64>>,
    /// One map per study, or empty for identity maps throughout.
    pub maps: Vec<String>,
    pub seed: u64,
    pub region: Option<RegionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BaselineConfig {
    pub files: Vec<PathBuf>,
    pub study_column: String,
    pub method: BaselineMethod,
    pub null: Option<Vec<f64>>,
    pub seed: u64,
    pub mc_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SimulateConfig {
    pub task: Operation,
    pub spec: ScenarioSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SynthConfig {
    pub kind: String,
    pub seed: u64,
    pub airbus: usize,
    pub boeing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Depth(DepthConfig),
    Fuse(FuseConfig),
    Baseline(BaselineConfig),
    Simulate(SimulateConfig),
    Synth(SynthConfig),
}

/// Envelope shared by every JSON output.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub format_version: u32,
    pub tool_version: &'static str,
    pub config: &'a RunConfig,
    #[serde(flatten)]
    pub result: T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(config: &'a RunConfig, result: T) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            config,
            result,
        }
    }
}

/// Reads a per-command TOML file of flag values.
pub fn read_flag_file<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
struct Report {
    format_version: u32,
    config: RunConfig,
}

/// A previous output (JSON with a `config` member) or a TOML run config
/// tagged with `command`.
pub fn read_run_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let report: Report =
            serde_json::from_str(&text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
        if report.format_version != FORMAT_VERSION {
            return Err(CliError::parse(format!(
                "{}: format_version {} is not supported (expected {FORMAT_VERSION})",
                path.display(),
                report.format_version
            )));
        }
        Ok(report.config)
    } else {
        toml::from_str(&text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
    }
}
