//! One TOML-loadable config covering the whole stack. Every section and
//! field has a default, so an empty file is a valid config and partial
//! files override only what they name.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CameraIntrinsics;
use crate::perception::{RoiConfig, ScanConfig, SemanticConfig};
use crate::policy::{ControllerConfig, ScriptedConfig, TrainerConfig};
use crate::rewards::{ExploreRewardConfig, GoalRewardConfig};
use crate::sim::{DetectorConfig, SceneConfig};

/// Camera description in file-friendly units; build the working
/// intrinsics with [`CameraSpec::intrinsics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSpec {
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    pub max_range: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        CameraSpec { width: 80, height: 60, hfov_deg: 90.0, max_range: 3.0 }
    }
}

impl CameraSpec {
    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        CameraIntrinsics::from_hfov(
            self.width,
            self.height,
            self.hfov_deg.to_radians(),
            self.max_range,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    pub max_steps: usize,
    pub seed: u64,
    /// Worker threads for batch evaluation; 0 picks the machine default.
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { episodes: 20, max_steps: 200, seed: 0, workers: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavConfig {
    pub scene: SceneConfig,
    pub camera: CameraSpec,
    pub scan: ScanConfig,
    pub roi: RoiConfig,
    pub semantic: SemanticConfig,
    pub detector: DetectorConfig,
    pub goal_reward: GoalRewardConfig,
    pub explore_reward: ExploreRewardConfig,
    pub scripted: ScriptedConfig,
    pub controller: ControllerConfig,
    pub trainer: TrainerConfig,
    pub eval: EvalConfig,
}

impl NavConfig {
    pub fn from_toml_str(text: &str) -> Result<NavConfig> {
        let cfg: NavConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_path(path: &Path) -> Result<NavConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        self.camera.intrinsics()
    }

    /// Cross-field checks the individual sections cannot do alone.
    pub fn validate(&self) -> Result<()> {
        let k = self.camera.intrinsics()?;
        if self.scan.sectors == 0 {
            return Err(Error::config("config: scan.sectors must be positive"));
        }
        if !(self.scan.slice_half_width > 0.0) {
            return Err(Error::config("config: scan.slice_half_width must be positive"));
        }
        if !(self.roi.quantile > 0.0 && self.roi.quantile <= 1.0) {
            return Err(Error::config("config: roi.quantile must be in (0, 1]"));
        }
        if self.semantic.patches_x == 0
            || self.semantic.patches_y == 0
            || k.width % self.semantic.patches_x != 0
            || k.height % self.semantic.patches_y != 0
        {
            return Err(Error::config(format!(
                "config: semantic patch grid {}x{} must divide the {}x{} image",
                self.semantic.patches_x, self.semantic.patches_y, k.width, k.height
            )));
        }
        if self.semantic.embed_dim == 0 {
            return Err(Error::config("config: semantic.embed_dim must be positive"));
        }
        if !(0.0..1.0).contains(&self.semantic.relatedness) {
            return Err(Error::config("config: semantic.relatedness must be in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.detector.miss_prob) {
            return Err(Error::config("config: detector.miss_prob must be in [0, 1]"));
        }
        if !(self.detector.jitter_px >= 0.0) {
            return Err(Error::config("config: detector.jitter_px must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.detector.min_visible_frac) {
            return Err(Error::config("config: detector.min_visible_frac must be in [0, 1]"));
        }
        if self.eval.max_steps == 0 {
            return Err(Error::config("config: eval.max_steps must be positive"));
        }
        if self.eval.episodes == 0 {
            return Err(Error::config("config: eval.episodes must be positive"));
        }
        self.controller.validate()?;
        self.scripted.validate()?;
        self.trainer.validate()?;
        Ok(())
    }

    /// Stable fingerprint of the full config, for report headers and
    /// checkpoint compatibility checks. FNV-1a over the canonical JSON
    /// encoding; struct fields serialize in declaration order, so equal
    /// configs hash equal bytes. The worker count is pinned before
    /// hashing: it only schedules episodes, never changes a result, so
    /// two runs that differ in pool size share an identity.
    pub fn hash(&self) -> u64 {
        let mut canonical = self.clone();
        canonical.eval.workers = 0;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in json.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}
