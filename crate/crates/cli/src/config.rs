//! Experiment configuration: JSON file plus command-line overrides.
//!
//! Every field defaults to the values of the navigation experiments, so
//! `spikepath run --env square` reproduces the reference square-arena run
//! with no config file at all.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use spikepath::network::{Environment, GenParams, NodePick, NodeId, Point2, PRESET_NAMES};
use spikepath::protocol::{InhibitionMode, TimingParams};

use crate::CliError;

/// Source/target selection: by environment corner, explicit point, or id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeSelector {
    Corner { corner: String },
    Point { point: [f64; 2] },
    Node { node: u32 },
}

impl NodeSelector {
    pub fn to_pick(&self, env: &Environment) -> Result<NodePick, CliError> {
        match self {
            NodeSelector::Corner { corner } => {
                let p = env.bbox.corner(corner).ok_or_else(|| {
                    CliError::Config(format!(
                        "unknown corner '{corner}' (expected bottom_left, bottom_right, top_left or top_right)"
                    ))
                })?;
                Ok(NodePick::Near(p))
            }
            NodeSelector::Point { point } => Ok(NodePick::Near(Point2::new(point[0], point[1]))),
            NodeSelector::Node { node } => Ok(NodePick::Id(NodeId(*node))),
        }
    }
}

/// Plot emission settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotConfig {
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_n_levels")]
    pub n_levels: usize,
    #[serde(default)]
    pub render: bool,
    /// IDW influence radius in meters; defaults to the annulus d_max.
    #[serde(default)]
    pub influence_radius: Option<f64>,
}

fn default_resolution() -> usize {
    200
}

fn default_n_levels() -> usize {
    12
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            resolution: default_resolution(),
            n_levels: default_n_levels(),
            render: false,
            influence_radius: None,
        }
    }
}

/// One experiment: environment, generation, timing, routing and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Preset name or path to an environment JSON file.
    #[serde(default = "default_environment")]
    pub environment: String,
    #[serde(default = "default_gen")]
    pub gen: GenParams,
    #[serde(default = "TimingParams::reference")]
    pub timing: TimingParams,
    #[serde(default = "default_inhibition")]
    pub inhibition: InhibitionMode,
    #[serde(default = "default_source")]
    pub source: NodeSelector,
    #[serde(default = "default_targets")]
    pub targets: Vec<NodeSelector>,
    /// Defaults to the neuron count when absent.
    #[serde(default)]
    pub max_iterations: Option<usize>,
    /// Per-iteration time budget in ms; engine default when absent.
    #[serde(default)]
    pub t_max_per_iteration: Option<f64>,
    #[serde(default)]
    pub plot: PlotConfig,
}

fn default_environment() -> String {
    "square".into()
}

fn default_gen() -> GenParams {
    GenParams::reference(1)
}

fn default_inhibition() -> InhibitionMode {
    InhibitionMode::Global
}

fn default_source() -> NodeSelector {
    NodeSelector::Corner {
        corner: "bottom_left".into(),
    }
}

fn default_targets() -> Vec<NodeSelector> {
    vec![NodeSelector::Corner {
        corner: "top_right".into(),
    }]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_value(serde_json::json!({})).expect("defaults")
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// Resolve the environment field: preset name first, then file path.
    pub fn resolve_environment(&self) -> Result<Environment, CliError> {
        resolve_environment(&self.environment)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.gen
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.timing
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.targets.is_empty() {
            return Err(CliError::Config("targets must be non-empty".into()));
        }
        Ok(())
    }
}

pub fn resolve_environment(spec: &str) -> Result<Environment, CliError> {
    if let Some(env) = Environment::preset(spec) {
        return Ok(env);
    }
    let path = PathBuf::from(spec);
    if path.exists() {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("cannot read environment file: {e}")))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid environment file: {e}")))?;
        return Environment::from_json(&value).map_err(|e| CliError::Config(e.to_string()));
    }
    Err(CliError::Config(format!(
        "unknown environment '{spec}'; presets are {} (or pass a path to an environment JSON file)",
        PRESET_NAMES.join(", ")
    )))
}

/// A seed sweep over a base experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub seeds: Vec<u64>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_parallelism() -> usize {
    1
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        self.base.validate()?;
        if self.seeds.is_empty() {
            return Err(CliError::Config("sweep needs at least one seed".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(CliError::Config("duplicate seeds in sweep".into()));
        }
        if self.parallelism == 0 {
            return Err(CliError::Config("parallelism must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_yields_reference_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg.environment, "square");
        assert_eq!(cfg.gen.n_neurons, 1000);
        assert_eq!(cfg.gen.p_min, 0.01);
        assert_eq!(cfg.timing.tau_proc_0, 10.0);
        assert_eq!(cfg.timing.dt_dendritic, 1.0);
        assert_eq!(cfg.inhibition, InhibitionMode::Global);
        assert_eq!(cfg.plot.resolution, 200);
        assert_eq!(cfg.plot.n_levels, 12);
    }

    #[test]
    fn selector_forms_parse() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"source": {"point": [0.1, 0.2]}, "targets": [{"node": 7}, {"corner": "top_left"}]}"#,
        )
        .unwrap();
        assert_eq!(
            cfg.source,
            NodeSelector::Point { point: [0.1, 0.2] }
        );
        assert_eq!(cfg.targets.len(), 2);
        let env = Environment::square();
        assert_eq!(
            cfg.targets[0].to_pick(&env).unwrap(),
            NodePick::Id(NodeId(7))
        );
    }

    #[test]
    fn unknown_environment_lists_presets() {
        let err = resolve_environment("hexagon").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("square") && msg.contains("t_maze"), "{msg}");
    }

    #[test]
    fn duplicate_sweep_seeds_rejected() {
        let spec = SweepSpec {
            base: ExperimentConfig::default(),
            seeds: vec![1, 2, 1],
            parallelism: 2,
        };
        assert!(spec.validate().is_err());
    }
}
