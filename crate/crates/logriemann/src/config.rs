//! Run configuration: one JSON file describing the map, the window, the
//! numerical tolerances and the output/render policy.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::BBox;
use crate::map::{EntireMap, MapSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub map: MapSpec,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub render: RenderConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WindowConfig {
    pub bbox: BBox,
    /// Sheet truncation depth of the separatrix family.
    pub k: i64,
    pub grid_n: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { bbox: BBox::square(6.0), k: 2, grid_n: 400 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlowConfig {
    pub tol: f64,
    pub arc_budget: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { tol: 1e-9, arc_budget: 60.0 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    /// JSON output path; stdout when absent.
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Keep every stride-th polyline sample.
    pub stride: usize,
    /// Fill colors by domain kind.
    pub color_base: String,
    pub color_line_domain: String,
    pub color_exceptional: String,
    pub color_separatrix: String,
    pub color_streamline: String,
    pub color_node: String,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            stride: 4,
            color_base: "#dbeafe".into(),
            color_line_domain: "#dcfce7".into(),
            color_exceptional: "#fee2e2".into(),
            color_separatrix: "#1d4ed8".into(),
            color_streamline: "#94a3b8".into(),
            color_node: "#b91c1c".into(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("bad config JSON: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window.bbox.is_empty() {
            return Err(Error::InvalidInput("window bbox is empty".into()));
        }
        if self.window.k < 1 {
            return Err(Error::InvalidInput("window k must be >= 1".into()));
        }
        if self.window.grid_n < 50 {
            return Err(Error::InvalidInput("grid_n must be >= 50".into()));
        }
        if !(self.flow.tol > 0.0 && self.flow.arc_budget > 0.0) {
            return Err(Error::InvalidInput("flow tolerances must be positive".into()));
        }
        if self.render.stride == 0 {
            return Err(Error::InvalidInput("render stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn build_map(&self) -> Result<EntireMap> {
        self.map.clone().build()
    }
}
