use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::assigner::{AssignerConfig, Strategy};
use crate::frontier_detection::{DEFAULT_GLOBAL_ETA, DEFAULT_LOCAL_ETA};
use crate::frontier_filter::FilterConfig;
use crate::geometry::{Point2, Pose};
use crate::gridmap::{load_pgm, OccupancyGrid, PgmThresholds};
use crate::maps::{builtin_scenario, load_builtin, BUILTIN_PREFIX};
use crate::robot_sim::RobotParams;

use super::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    /// PGM file, or `builtin:<name>` for a bundled map. Relative paths are
    /// resolved against the scenario file's directory.
    pub path: String,
    /// m per cell
    pub resolution: f64,
    pub origin: Point2,
    pub free_threshold: u8,
    pub occupied_threshold: u8,
}

impl Default for MapConfig {
    fn default() -> Self {
        let t = PgmThresholds::default();
        Self {
            path: format!("{BUILTIN_PREFIX}mapA"),
            resolution: 0.1,
            origin: Point2::default(),
            free_threshold: t.free,
            occupied_threshold: t.occupied,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub local_eta: f64,
    pub global_eta: f64,
    /// Growth steps per robot-local tree per tick.
    pub local_steps_per_tick: usize,
    /// Growth steps of the global tree per tick.
    pub global_steps_per_tick: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { local_eta: DEFAULT_LOCAL_ETA, global_eta: DEFAULT_GLOBAL_ETA, local_steps_per_tick: 1, global_steps_per_tick: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub map: MapConfig,
    /// One robot per start pose.
    pub starts: Vec<Pose>,
    pub strategy: Strategy,
    pub seed: u64,
    pub tick_dt: f64,
    pub assign_period: f64,
    pub merge_period: f64,
    /// Run the erode/dilate cleanup on every merge.
    pub postprocess: bool,
    /// Feed the previous cycle's frontiers back into mean shift together with
    /// the new detections, instead of starting from an empty buffer.
    pub carry_frontiers: bool,
    pub max_sim_time: f64,
    /// Fraction of reachable free cells that ends the run.
    pub coverage_target: f64,
    /// Seconds without any robot moving before the run is declared stuck.
    pub stall_timeout: f64,
    /// Write a merged-map PGM every this many seconds; off when absent.
    pub snapshot_interval: Option<f64>,
    pub assigner: AssignerConfig,
    pub filter: FilterConfig,
    pub detector: DetectorConfig,
    pub robot: RobotParams,
    /// Directory used to resolve a relative map path.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            map: MapConfig::default(),
            starts: vec![Pose::new(5.0, 6.0, 0.0)],
            strategy: Strategy::TmRrt,
            seed: 0,
            tick_dt: 0.1,
            assign_period: 1.0,
            merge_period: 1.0,
            postprocess: true,
            carry_frontiers: false,
            max_sim_time: 1200.0,
            coverage_target: 0.95,
            stall_timeout: 60.0,
            snapshot_interval: None,
            assigner: AssignerConfig::simulation(),
            filter: FilterConfig::default(),
            detector: DetectorConfig::default(),
            robot: RobotParams::default(),
            base_dir: None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} must be positive, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// A preset name (`mapA`, `mapB`, `arena`) or a path to a JSON file.
    /// `mapA.json` falls back to the preset when no such file exists.
    pub fn load(spec: &str) -> Result<Self, ConfigError> {
        let path = Path::new(spec);
        let preset = builtin_scenario(spec)
            .or_else(|| (!path.exists()).then(|| spec.strip_suffix(".json").and_then(builtin_scenario)).flatten());
        if let Some(text) = preset {
            return Self::from_json(text);
        }
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("tick_dt", self.tick_dt)?;
        positive("assign_period", self.assign_period)?;
        positive("merge_period", self.merge_period)?;
        positive("max_sim_time", self.max_sim_time)?;
        positive("stall_timeout", self.stall_timeout)?;
        positive("map.resolution", self.map.resolution)?;
        positive("robot.speed", self.robot.speed)?;
        positive("robot.lidar_range", self.robot.lidar_range)?;
        positive("detector.local_eta", self.detector.local_eta)?;
        positive("detector.global_eta", self.detector.global_eta)?;
        positive("filter.bandwidth", self.filter.bandwidth)?;
        positive("filter.info_radius", self.filter.info_radius)?;
        if let Some(s) = self.snapshot_interval {
            positive("snapshot_interval", s)?;
        }
        if !(self.coverage_target > 0.0 && self.coverage_target <= 1.0) {
            return Err(ConfigError::Invalid(format!("coverage_target must be in (0, 1], got {}", self.coverage_target)));
        }
        if self.robot.beam_count == 0 {
            return Err(ConfigError::Invalid("robot.beam_count must be at least 1".into()));
        }
        if self.starts.is_empty() {
            return Err(ConfigError::Invalid("at least one start pose is required".into()));
        }
        self.assigner.validate().map_err(|e| ConfigError::Invalid(format!("assigner: {e}")))?;
        Ok(())
    }

    /// Applies `key.path=value` overrides. Values are parsed as JSON and fall
    /// back to plain strings; keys must name existing fields.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, ConfigError> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut tree = serde_json::to_value(self).map_err(|e| ConfigError::Schema(e.to_string()))?;
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::Override(format!("{o:?} is not of the form key.path=value")))?;
            set_path(&mut tree, key.trim(), parse_value(raw.trim()))?;
        }
        let mut cfg: ScenarioConfig = serde_json::from_value(tree).map_err(|e| ConfigError::Schema(e.to_string()))?;
        cfg.base_dir = self.base_dir.clone();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads the ground-truth map.
    pub fn load_truth(&self) -> Result<OccupancyGrid, ConfigError> {
        let t = PgmThresholds { free: self.map.free_threshold, occupied: self.map.occupied_threshold };
        let grid = if let Some(name) = self.map.path.strip_prefix(BUILTIN_PREFIX) {
            load_builtin(name, self.map.resolution, self.map.origin, t)
        } else {
            let mut path = PathBuf::from(&self.map.path);
            if path.is_relative() {
                if let Some(base) = &self.base_dir {
                    path = base.join(path);
                }
            }
            load_pgm(&path, self.map.resolution, self.map.origin, t)
        };
        grid.map_err(|e| ConfigError::Map(format!("{}: {e}", self.map.path)))
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(tree: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError::Override(format!("{key}: {} is not a group", parts[..i].join("."))))?;
        let slot = obj.get_mut(*part).ok_or_else(|| ConfigError::Override(format!("unknown key {key:?}")))?;
        if i + 1 == parts.len() {
            *slot = value;
            return Ok(());
        }
        node = slot;
    }
    Err(ConfigError::Override(format!("empty key in override {key:?}")))
}
