//! JSON run and sweep configurations. The format is documented in
//! `docs/config.md` with a JSON schema next to it.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::IntegrationConfig;
use crate::io::svg::Channel;
use crate::model::{ModelParams, SystemState};
use crate::scenarios::{
    preset, Regime, RegimeThresholds, ScenarioSpec, SweepAxis, SweepSpec, DEFAULT_MAX_CELLS,
};

pub const DEFAULT_STRIDE: usize = 10;
pub const DEFAULT_OUT_DIR: &str = "out";
pub const OUT_DIR_ENV: &str = "NEVDYN_OUT";

fn yes() -> bool {
    true
}

fn default_stride() -> usize {
    DEFAULT_STRIDE
}

fn default_channels() -> Vec<Channel> {
    Channel::ALL.to_vec()
}

fn default_max_cells() -> usize {
    DEFAULT_MAX_CELLS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitFlags {
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub svg: bool,
    #[serde(default = "yes")]
    pub report: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        EmitFlags {
            csv: true,
            svg: true,
            report: true,
        }
    }
}

/// A single run: a preset name, or the model, initial state and integration
/// settings spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelParams<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<SystemState<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration: Option<IntegrationConfig<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_regime: Option<Regime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<RegimeThresholds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub emit: EmitFlags,
    #[serde(default = "default_channels")]
    pub channels: Vec<Channel>,
}

impl RunConfig {
    pub fn for_preset(name: &str) -> Self {
        RunConfig {
            name: None,
            preset: Some(name.to_string()),
            model: None,
            initial: None,
            integration: None,
            expected_regime: None,
            thresholds: None,
            out_dir: None,
            stride: DEFAULT_STRIDE,
            emit: EmitFlags::default(),
            channels: default_channels(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let inline = [
            self.model.is_some(),
            self.initial.is_some(),
            self.integration.is_some(),
        ];
        match (&self.preset, inline) {
            (Some(_), [false, false, false]) | (None, [true, true, true]) => {}
            (Some(_), _) => {
                return Err(Error::InvalidConfig(
                    "give either preset or model/initial/integration, not both".into(),
                ))
            }
            (None, _) => {
                return Err(Error::InvalidConfig(
                    "inline runs need all of model, initial and integration (or use preset)".into(),
                ))
            }
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be >= 1".into()));
        }
        if self.channels.is_empty() {
            return Err(Error::InvalidConfig("channels must not be empty".into()));
        }
        Ok(())
    }

    /// Resolves the run into a scenario.
    pub fn scenario(&self) -> Result<ScenarioSpec> {
        self.validate()?;
        let mut spec = match &self.preset {
            Some(p) => preset(p)?,
            None => ScenarioSpec {
                name: "run".to_string(),
                params: self.model.unwrap(),
                initial: self.initial.unwrap(),
                integration: self.integration.unwrap(),
                expected_regime: None,
                thresholds: RegimeThresholds::default(),
            },
        };
        if let Some(name) = &self.name {
            spec.name = name.clone();
        }
        if self.expected_regime.is_some() {
            spec.expected_regime = self.expected_regime;
        }
        if let Some(t) = self.thresholds {
            spec.thresholds = t;
        }
        Ok(spec)
    }
}

/// A parameter sweep over a preset or an inline base scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<ScenarioSpec>,
    pub axes: Vec<SweepAxis>,
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn sweep(&self) -> Result<SweepSpec> {
        let base = match (&self.base_preset, &self.base) {
            (Some(p), None) => preset(p)?,
            (None, Some(b)) => b.clone(),
            _ => {
                return Err(Error::InvalidConfig(
                    "give exactly one of base_preset and base".into(),
                ))
            }
        };
        let spec = SweepSpec {
            base,
            axes: self.axes.clone(),
            max_cells: self.max_cells,
        };
        spec.cell_count()?;
        Ok(spec)
    }
}

/// Deserializes JSON, reporting the path of the offending field on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse(format!("at {path}: {}", e.into_inner()))
    })
}

pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = parse_json(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_sweep_config(text: &str) -> Result<SweepConfig> {
    parse_json(text)
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Output directory: explicit flag, then `NEVDYN_OUT`, then the config's
/// `out_dir`, then `out`.
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    config
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}
