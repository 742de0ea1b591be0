//! Job files.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fluctuation::{ExitQuery, Panel, ResolventKind};
use crate::levy_model::{LevyModel, ModelSpec};
use crate::mc_oracle::McSettings;
use crate::omega_scale::{OmegaSpec, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: Format,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: ModelSpec,
    pub omega: Option<OmegaSpec>,
    pub grid: Option<SolverSettings>,
    #[serde(default)]
    pub query: serde_json::Value,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative table paths are resolved against.
    #[serde(skip)]
    pub base: Option<PathBuf>,
}

impl JobConfig {
    pub fn from_str(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: JobConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base = base.map(Path::to_path_buf);
        if let Some(om) = cfg.omega.take() {
            cfg.omega = Some(om.validated()?);
        }
        if let Some(g) = &cfg.grid {
            if !(g.h > 0.0 && g.x_max > 0.0 && g.h.is_finite() && g.x_max.is_finite()) {
                return Err(Error::Config(format!("grid needs x_max, h > 0, got {}, {}", g.x_max, g.h)));
            }
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_str(&text, path.parent())
    }

    pub fn model(&self) -> Result<LevyModel> {
        self.model.build(self.base.as_deref())
    }

    pub fn omega(&self) -> Result<&OmegaSpec> {
        self.omega.as_ref().ok_or_else(|| Error::Config("this command needs an \"omega\" block".into()))
    }

    pub fn grid(&self) -> Result<SolverSettings> {
        self.grid.ok_or_else(|| Error::Config("this command needs a \"grid\" block".into()))
    }

    pub fn query<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        let v = if self.query.is_null() { serde_json::json!({}) } else { self.query.clone() };
        serde_json::from_value(v).map_err(|e| Error::Config(format!("query: {e}")))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleQuery {
    /// Killing rate of the classical columns; defaults to the floor of `ω`, else 0.
    pub q: Option<f64>,
    #[serde(default)]
    pub h_omega: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitJob {
    pub points: Vec<ExitQuery>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventJob {
    pub kind: ResolventKind,
    pub x: f64,
    #[serde(default)]
    pub c: f64,
    pub panel: Panel,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupationJob {
    pub c: f64,
    #[serde(default = "default_points")]
    pub n: usize,
}

fn default_points() -> usize {
    50
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuinJob {
    pub gamma0: f64,
    pub gamma1: f64,
    pub d: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McTarget {
    TwoSidedUp,
    TwoSidedDown,
    ReflectedUp,
    ReflectedDual,
    OneSidedUp,
    Bankruptcy,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McJob {
    pub target: McTarget,
    pub x: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub z: f64,
    pub gamma0: Option<f64>,
    pub gamma1: Option<f64>,
    pub d: Option<f64>,
    #[serde(default)]
    pub mc: McSettings,
}
