//! Rule-based baseline policies.
//!
//! `ScriptedExplore` steers toward the deepest visible region while turning
//! away from near obstacles; it never stops. `ScriptedGoal` servoes the
//! detection bounding box to the image center and stops when the box is
//! large and centered; with no detection it falls back to a slow
//! scan-in-place sweep rather than the full exploration rules, so a
//! goal-only run measures the goal stage alone. `RandomPolicy` draws
//! uniformly over all six actions.
//!
//! All rule comparisons are written so an input exactly at a threshold
//! behaves the same on every platform: thresholds are compared with `<=` /
//! `>` directly on the configured values, no derived quantities.

use serde::{Deserialize, Serialize};

use super::interface::{ActionDistribution, EngineKind, Policy};
use crate::error::{Error, Result};
use crate::perception::FeatureBundle;
use crate::rng::rng_from;
use crate::sim::Action;

/// Thresholds shared by the scripted policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScriptedConfig {
    /// Turn away when the closest scan sector is at or below this fraction
    /// of max range.
    pub avoid_threshold: f64,
    /// Steer toward the depth frontier only while its offset magnitude
    /// exceeds this; below it the heading counts as aligned.
    pub dir_threshold: f64,
    /// Dead-band half-width around the image center for goal servoing.
    pub center_tolerance: f64,
    /// Minimum bbox area fraction before the goal policy stops.
    pub done_area: f64,
    /// Central window fraction the bbox center must lie in to stop.
    pub done_window: f64,
}

impl Default for ScriptedConfig {
    fn default() -> Self {
        ScriptedConfig {
            avoid_threshold: 0.1,
            dir_threshold: 0.3,
            center_tolerance: 0.15,
            done_area: 0.08,
            done_window: 0.8,
        }
    }
}

impl ScriptedConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.avoid_threshold) {
            return Err(Error::config("scripted: avoid_threshold must be in [0, 1]"));
        }
        if !(self.dir_threshold >= 0.0) {
            return Err(Error::config("scripted: dir_threshold must be non-negative"));
        }
        if !(self.center_tolerance > 0.0 && self.center_tolerance < 0.5) {
            return Err(Error::config("scripted: center_tolerance must be in (0, 0.5)"));
        }
        if !(self.done_area > 0.0 && self.done_area <= 1.0) {
            return Err(Error::config("scripted: done_area must be in (0, 1]"));
        }
        if !(self.done_window > 0.0 && self.done_window <= 1.0) {
            return Err(Error::config("scripted: done_window must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Turn away from the nearest scan sector. Sector 0 is the leftmost, so a
/// minimum in the right half means turning left clears faster.
fn avoid_turn(bundle: &FeatureBundle) -> Action {
    let n = bundle.scan().len();
    if bundle.rho_min_index() * 2 >= n {
        Action::TurnLeft
    } else {
        Action::TurnRight
    }
}

/// Frontier offset magnitude. The vertical component is doubled to match
/// the narrower vertical field of view, so equal pixel offsets up and
/// sideways pull with equal strength.
fn frontier_offset(bundle: &FeatureBundle) -> (f64, f64, f64) {
    let dx = bundle.roi_dx();
    let dy = bundle.roi_dy();
    (dx, dy, (dx * dx + 4.0 * dy * dy).sqrt())
}

/// Depth-frontier seeking with obstacle avoidance. Never emits Done.
#[derive(Debug, Clone)]
pub struct ScriptedExplore {
    cfg: ScriptedConfig,
}

impl ScriptedExplore {
    pub fn new(cfg: ScriptedConfig) -> Self {
        ScriptedExplore { cfg }
    }

    /// The rule table, in priority order: avoid a near obstacle, align
    /// vertically when the vertical offset dominates, align horizontally,
    /// otherwise advance.
    pub fn rule(cfg: &ScriptedConfig, bundle: &FeatureBundle) -> Action {
        if bundle.rho_min() <= cfg.avoid_threshold {
            return avoid_turn(bundle);
        }
        let (dx, dy, d) = frontier_offset(bundle);
        if d > cfg.dir_threshold {
            if (2.0 * dy).abs() > dx.abs() {
                // Image v grows downward, so a negative offset means the
                // frontier sits above the current heading.
                return if dy < 0.0 { Action::Ascend } else { Action::Descend };
            }
            return if dx > 0.0 { Action::TurnRight } else { Action::TurnLeft };
        }
        Action::Forward
    }
}

impl Default for ScriptedExplore {
    fn default() -> Self {
        ScriptedExplore::new(ScriptedConfig::default())
    }
}

impl Policy for ScriptedExplore {
    fn reset(&mut self, _episode_seed: u64) {}

    fn act(&mut self, bundle: &FeatureBundle) -> (ActionDistribution, Action) {
        let action = Self::rule(&self.cfg, bundle);
        (ActionDistribution::delta(action), action)
    }

    fn engine(&self) -> EngineKind {
        EngineKind::Explore
    }
}

/// One full turn of scanning followed by a short advance.
const SCAN_TURNS: usize = 12;
const SCAN_ADVANCES: usize = 3;

/// Bounding-box servoing with a stop rule; scan-in-place when the target
/// is not visible.
#[derive(Debug, Clone)]
pub struct ScriptedGoal {
    cfg: ScriptedConfig,
    /// Position in the scan-advance cycle; advances only on absent frames.
    scan_phase: usize,
}

impl Default for ScriptedGoal {
    fn default() -> Self {
        ScriptedGoal::new(ScriptedConfig::default())
    }
}

impl ScriptedGoal {
    pub fn new(cfg: ScriptedConfig) -> Self {
        ScriptedGoal { cfg, scan_phase: 0 }
    }

    /// The servoing rules for a visible target: stop when large and inside
    /// the central window, else center horizontally, then vertically, then
    /// close distance.
    pub fn servo(cfg: &ScriptedConfig, bundle: &FeatureBundle) -> Action {
        let cx = bundle.bbox_cx();
        let cy = bundle.bbox_cy();
        let half = cfg.done_window / 2.0;
        let centered = (cx - 0.5).abs() <= half && (cy - 0.5).abs() <= half;
        if bundle.bbox_area() >= cfg.done_area && centered {
            return Action::Done;
        }
        if (cx - 0.5).abs() > cfg.center_tolerance {
            return if cx > 0.5 { Action::TurnRight } else { Action::TurnLeft };
        }
        if (cy - 0.5).abs() > cfg.center_tolerance {
            return if cy < 0.5 { Action::Ascend } else { Action::Descend };
        }
        Action::Forward
    }

    /// Absent-target fallback: turn through a full revolution, then take a
    /// few steps forward (with the avoidance rule overriding the advance),
    /// and repeat. Covers far less ground than the exploration policy by
    /// design.
    fn scan_step(&mut self, bundle: &FeatureBundle) -> Action {
        let phase = self.scan_phase % (SCAN_TURNS + SCAN_ADVANCES);
        self.scan_phase += 1;
        if phase < SCAN_TURNS {
            return Action::TurnRight;
        }
        if bundle.rho_min() <= self.cfg.avoid_threshold {
            return avoid_turn(bundle);
        }
        Action::Forward
    }
}

impl Policy for ScriptedGoal {
    fn reset(&mut self, _episode_seed: u64) {
        self.scan_phase = 0;
    }

    fn act(&mut self, bundle: &FeatureBundle) -> (ActionDistribution, Action) {
        let action = if bundle.present() {
            Self::servo(&self.cfg, bundle)
        } else {
            self.scan_step(bundle)
        };
        (ActionDistribution::delta(action), action)
    }

    fn engine(&self) -> EngineKind {
        EngineKind::Goal
    }
}

/// Uniform draws over all six actions; the weakest exploration baseline.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: rand_chacha::ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new() -> Self {
        RandomPolicy { rng: rng_from(0) }
    }
}

impl Default for RandomPolicy {
    fn default() -> Self {
        Self::new()
    }
}

impl Policy for RandomPolicy {
    fn reset(&mut self, episode_seed: u64) {
        self.rng = rng_from(episode_seed);
    }

    fn act(&mut self, _bundle: &FeatureBundle) -> (ActionDistribution, Action) {
        let dist = ActionDistribution::uniform();
        let action = dist.sample(&mut self.rng);
        (dist, action)
    }

    fn engine(&self) -> EngineKind {
        EngineKind::Explore
    }
}
