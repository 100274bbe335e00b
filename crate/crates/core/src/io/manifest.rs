//! JSON run manifest: resolved configuration, derived quantities and the
//! diagnostics of every snapshot.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::config::RunConfig;
use crate::io::snapshot::PgmRange;
use crate::kernel::NonlocalMethod;
use crate::stepper::{Diagnostics, StabilityLimits};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL_NAME: &str = "nlkm";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub hx: f64,
    pub hy: f64,
    /// Time step actually used (the last step may be shorter to land on `t_end`).
    pub dt: f64,
    pub steps: u64,
    pub limits: StabilityLimits,
    pub stability_limit: f64,
    /// `max(‖w0‖∞, a)`, the monitored water bound.
    pub water_bound: f64,
    pub lambda_disc: Option<f64>,
    pub stencil_half_widths: Option<(usize, usize)>,
    /// Resolved evaluation path for the nonlocal operator.
    pub nonlocal_method: Option<NonlocalMethod>,
    pub fft_shape: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub diagnostics: Diagnostics,
    /// File names relative to the output directory.
    pub files: Vec<String>,
    pub pgm_n: Option<PgmRange>,
    pub pgm_w: Option<PgmRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Completed,
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    /// The configuration rendered as TOML, for reuse with `--config`.
    pub config_toml: String,
    pub output_dir: PathBuf,
    pub derived: DerivedQuantities,
    pub threads: usize,
    pub started_unix_seconds: f64,
    pub wall_seconds: f64,
    pub status: RunStatus,
    pub snapshots: Vec<SnapshotRecord>,
}

impl RunManifest {
    pub fn new(config: RunConfig, output_dir: PathBuf, derived: DerivedQuantities) -> Self {
        let started = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64());
        Self {
            tool: TOOL_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_toml: config.render(),
            config,
            output_dir,
            derived,
            threads: rayon::current_num_threads(),
            started_unix_seconds: started,
            wall_seconds: 0.0,
            status: RunStatus::Running,
            snapshots: Vec::new(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(path, &text)
    }

    pub fn from_json(path: &Path, text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("invalid manifest: {e}"),
        })
    }
}
