//! Reward shaping for the two control regimes and the episode success
//! rule.
//!
//! Both engines fill the same [`RewardBreakdown`]; terms the engine does
//! not use stay zero, and `total` is always the sum of the fields in
//! declaration order, so logs can be re-audited term by term. Every term
//! has an enable flag so ablations can switch shaping off without
//! touching the magnitudes.

use serde::{Deserialize, Serialize};

use crate::geometry::CameraIntrinsics;
use crate::sim::{Action, Detection};

/// An episode counts as success only if the stop is announced closer than
/// this to the target box, in meters.
pub const SUCCESS_DISTANCE: f64 = 1.5;
/// The detection box center must sit inside the image with this margin
/// (fraction of width/height per side) for a stop to count.
pub const CENTER_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoalRewardConfig {
    pub enable_distance: bool,
    pub enable_parent: bool,
    pub enable_bbox: bool,
    pub enable_success: bool,
    pub enable_collision: bool,
    pub enable_step: bool,
    /// Scale on the signed per-step change in target distance.
    pub distance_scale: f64,
    /// One-time bonus when the target's parent class first enters view.
    pub parent_bonus: f64,
    /// Detection-area reward saturates at this fraction of the image.
    pub bbox_cap: f64,
    pub success_bonus: f64,
    pub collision_penalty: f64,
    pub step_penalty: f64,
}

impl Default for GoalRewardConfig {
    fn default() -> Self {
        GoalRewardConfig {
            enable_distance: true,
            enable_parent: true,
            enable_bbox: true,
            enable_success: true,
            enable_collision: true,
            enable_step: true,
            distance_scale: 1.0,
            parent_bonus: 1.0,
            bbox_cap: 0.1,
            success_bonus: 5.0,
            collision_penalty: -0.1,
            step_penalty: -0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExploreRewardConfig {
    pub enable_forward: bool,
    pub enable_direction: bool,
    pub enable_safety: bool,
    pub enable_step: bool,
    /// Per-step change in frontier depth is clamped to this magnitude.
    pub forward_clamp: f64,
    /// By default approaching the frontier (depth shrinking) is positive;
    /// this flips the term to reward the raw depth increase instead.
    pub literal_forward_sign: bool,
    pub direction_scale: f64,
    /// Offset penalty fires when the anisotropic offset exceeds this.
    pub direction_threshold: f64,
    /// Safety penalty fires at or below this normalized clearance.
    pub safety_threshold: f64,
    pub safety_sharpness: f64,
    pub step_penalty: f64,
}

impl Default for ExploreRewardConfig {
    fn default() -> Self {
        ExploreRewardConfig {
            enable_forward: true,
            enable_direction: true,
            enable_safety: true,
            enable_step: true,
            forward_clamp: 0.2,
            literal_forward_sign: false,
            direction_scale: -0.75,
            direction_threshold: 0.3,
            safety_threshold: 1.0 / 3.0,
            safety_sharpness: 2.0,
            step_penalty: -0.01,
        }
    }
}

/// Per-term reward decomposition. `total` equals the sum of every other
/// field, added in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_d: f64,
    pub r_parent: f64,
    pub r_bbox: f64,
    pub r_suc: f64,
    pub r_c: f64,
    pub r_fwd: f64,
    pub r_dir: f64,
    pub r_safe: f64,
    pub gamma: f64,
    pub total: f64,
}

impl RewardBreakdown {
    fn seal(mut self) -> Self {
        self.total = self.r_d
            + self.r_parent
            + self.r_bbox
            + self.r_suc
            + self.r_c
            + self.r_fwd
            + self.r_dir
            + self.r_safe
            + self.gamma;
        self
    }
}

/// Inputs for one goal-regime reward step. Distances are to the target
/// box before and after the action; `bbox_area` is the detection box area
/// as a fraction of the image, zero when nothing is detected.
#[derive(Debug, Clone, Copy)]
pub struct GoalStep {
    pub prev_distance: f64,
    pub distance: f64,
    /// True exactly once, on the observation where the target's parent
    /// class is first seen.
    pub parent_first_sighting: bool,
    pub bbox_area: f64,
    pub success: bool,
    pub collided: bool,
}

pub fn goal_reward(cfg: &GoalRewardConfig, s: &GoalStep) -> RewardBreakdown {
    let mut b = RewardBreakdown::default();
    if cfg.enable_distance {
        let delta = s.prev_distance - s.distance;
        // Scenes without the target class report infinite distance; the
        // shaping term is meaningless there and stays zero.
        if delta.is_finite() {
            b.r_d = cfg.distance_scale * delta;
        }
    }
    if cfg.enable_parent && s.parent_first_sighting {
        b.r_parent = cfg.parent_bonus;
    }
    if cfg.enable_bbox {
        b.r_bbox = s.bbox_area.min(cfg.bbox_cap);
    }
    if cfg.enable_success && s.success {
        b.r_suc = cfg.success_bonus;
    }
    if cfg.enable_collision && s.collided {
        b.r_c = cfg.collision_penalty;
    }
    if cfg.enable_step {
        b.gamma = cfg.step_penalty;
    }
    b.seal()
}

/// Inputs for one exploration-regime reward step. `z_prev`/`z_cur` are
/// the frontier region's mean depth before and after the action; `dx`,
/// `dy` its normalized image offset; `rho_min` the nearest normalized
/// scan range.
#[derive(Debug, Clone, Copy)]
pub struct ExploreStep {
    pub z_prev: f64,
    pub z_cur: f64,
    pub dx: f64,
    pub dy: f64,
    pub rho_min: f64,
}

pub fn explore_reward(cfg: &ExploreRewardConfig, s: &ExploreStep) -> RewardBreakdown {
    let mut b = RewardBreakdown::default();
    if cfg.enable_forward {
        let raw = if cfg.literal_forward_sign { s.z_cur - s.z_prev } else { s.z_prev - s.z_cur };
        b.r_fwd = raw.clamp(-cfg.forward_clamp, cfg.forward_clamp);
    }
    if cfg.enable_direction {
        // Vertical offset counts double: altitude mistakes are costlier
        // than lateral ones. The threshold compares squared magnitudes so
        // an offset built from the threshold value itself lands exactly
        // on the boundary and does not fire.
        let d2 = s.dx * s.dx + 4.0 * s.dy * s.dy;
        let thr2 = cfg.direction_threshold * cfg.direction_threshold;
        if d2 > thr2 {
            b.r_dir = cfg.direction_scale * d2.sqrt();
        }
    }
    if cfg.enable_safety && s.rho_min <= cfg.safety_threshold {
        b.r_safe = 1.0 - (cfg.safety_sharpness * (cfg.safety_threshold - s.rho_min)).exp();
    }
    if cfg.enable_step {
        b.gamma = cfg.step_penalty;
    }
    b.seal()
}

/// The stop rule: the agent must announce `Done` while the target is
/// detected with its box center well inside the image and the agent is
/// strictly within [`SUCCESS_DISTANCE`] of the target box.
pub fn success_check(
    det: &Detection,
    action: Action,
    distance_to_target: f64,
    k: &CameraIntrinsics,
) -> bool {
    if action != Action::Done || !det.present {
        return false;
    }
    let Some(b) = det.bbox else { return false };
    let (cu, cv) = ((b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0);
    let (w, h) = (k.width as f64, k.height as f64);
    cu >= CENTER_MARGIN * w
        && cu <= (1.0 - CENTER_MARGIN) * w
        && cv >= CENTER_MARGIN * h
        && cv <= (1.0 - CENTER_MARGIN) * h
        && distance_to_target < SUCCESS_DISTANCE
}
