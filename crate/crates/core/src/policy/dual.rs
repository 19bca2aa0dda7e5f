//! Switching controller that pairs an exploration policy with a
//! goal-reaching policy.
//!
//! Exploration runs until the target is first detected, then the goal
//! policy takes over. If the detection drops out for `revert_threshold`
//! consecutive frames the controller hands back to exploration; any later
//! detection switches to the goal policy again and clears the lost count.
//! The switch happens before the action is chosen, so the frame that first
//! shows the target is already acted on by the goal policy, and the frame
//! that completes the lost streak is acted on by the exploration policy.

use serde::{Deserialize, Serialize};

use super::interface::{ActionDistribution, EngineKind, Policy};
use crate::error::{Error, Result};
use crate::perception::FeatureBundle;
use crate::rng::child_seed;
use crate::sim::Action;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Consecutive detection-free frames tolerated before reverting to
    /// exploration.
    pub revert_threshold: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig { revert_threshold: 5 }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.revert_threshold == 0 {
            return Err(Error::config("controller: revert_threshold must be at least 1"));
        }
        Ok(())
    }
}

pub struct DualController {
    explore: Box<dyn Policy>,
    goal: Box<dyn Policy>,
    active: EngineKind,
    /// Consecutive absent frames since the last detection; meaningful only
    /// after the first detection.
    lost: usize,
    detected_once: bool,
    revert_threshold: usize,
}

impl DualController {
    pub fn new(explore: Box<dyn Policy>, goal: Box<dyn Policy>, cfg: &ControllerConfig) -> Self {
        DualController {
            explore,
            goal,
            active: EngineKind::Explore,
            lost: 0,
            detected_once: false,
            revert_threshold: cfg.revert_threshold,
        }
    }

    /// Advances the switching state machine with one detection flag.
    fn observe(&mut self, present: bool) {
        if present {
            self.detected_once = true;
            self.lost = 0;
            self.active = EngineKind::Goal;
        } else if self.active == EngineKind::Goal {
            self.lost += 1;
            if self.lost >= self.revert_threshold {
                self.active = EngineKind::Explore;
            }
        }
    }
}

impl Policy for DualController {
    fn reset(&mut self, episode_seed: u64) {
        self.active = EngineKind::Explore;
        self.lost = 0;
        self.detected_once = false;
        self.explore.reset(child_seed(episode_seed, "dual/explore"));
        self.goal.reset(child_seed(episode_seed, "dual/goal"));
    }

    fn act(&mut self, bundle: &FeatureBundle) -> (ActionDistribution, Action) {
        self.observe(bundle.present());
        debug_assert!(
            self.active == EngineKind::Explore
                || (self.detected_once && self.lost < self.revert_threshold),
            "goal policy active without a live detection window"
        );
        match self.active {
            EngineKind::Explore => self.explore.act(bundle),
            EngineKind::Goal => self.goal.act(bundle),
        }
    }

    fn engine(&self) -> EngineKind {
        self.active
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::{BBoxFeature, RoiFeature};

    /// Minimal policies that tag their actions, so tests can tell which
    /// side of the controller produced each step.
    struct Tagged(Action);

    impl Policy for Tagged {
        fn reset(&mut self, _seed: u64) {}
        fn act(&mut self, _bundle: &FeatureBundle) -> (ActionDistribution, Action) {
            (ActionDistribution::delta(self.0), self.0)
        }
        fn engine(&self) -> EngineKind {
            EngineKind::Explore
        }
    }

    fn controller(k: usize) -> DualController {
        DualController::new(
            Box::new(Tagged(Action::TurnLeft)),
            Box::new(Tagged(Action::Forward)),
            &ControllerConfig { revert_threshold: k },
        )
    }

    fn bundle(present: bool) -> FeatureBundle {
        let roi = RoiFeature { dx: 0.0, dy: 0.0, z_mean: 1.0, valid: true };
        let bb = BBoxFeature { present, area_ratio: 0.1, ..Default::default() };
        FeatureBundle::assemble(&[1.0; 4], &roi, &[0.0; 4], &bb, 0.5, 3.0)
    }

    /// Runs one present-flag sequence and returns the engine active at
    /// each step.
    fn engines(k: usize, flags: &[bool]) -> Vec<EngineKind> {
        let mut c = controller(k);
        c.reset(0);
        flags
            .iter()
            .map(|&p| {
                c.act(&bundle(p));
                c.engine()
            })
            .collect()
    }

    /// Reference model: the goal engine is active exactly when some
    /// detection exists at most k-1 frames back.
    fn oracle(k: usize, flags: &[bool]) -> Vec<EngineKind> {
        let mut out = Vec::new();
        for t in 0..flags.len() {
            let recent = (0..=t).rev().take(k).any(|i| flags[i]);
            out.push(if recent { EngineKind::Goal } else { EngineKind::Explore });
        }
        out
    }

    #[test]
    fn never_detected_stays_exploring() {
        let e = engines(5, &[false; 40]);
        assert!(e.iter().all(|k| *k == EngineKind::Explore));
    }

    #[test]
    fn switches_on_first_detection_frame() {
        let mut flags = vec![false; 7];
        flags.extend([true, true]);
        let e = engines(5, &flags);
        assert!(e[..7].iter().all(|k| *k == EngineKind::Explore));
        assert_eq!(e[7], EngineKind::Goal);
        assert_eq!(e[8], EngineKind::Goal);
    }

    #[test]
    fn reverts_on_the_kth_lost_frame() {
        // One detection, then absence: the goal policy rides out k-1
        // frames and exploration takes the kth.
        let mut flags = vec![true];
        flags.extend([false; 8]);
        let e = engines(5, &flags);
        assert_eq!(e[0], EngineKind::Goal);
        for t in 1..=4 {
            assert_eq!(e[t], EngineKind::Goal, "lost frame {t}");
        }
        for t in 5..=8 {
            assert_eq!(e[t], EngineKind::Explore, "lost frame {t}");
        }
    }

    #[test]
    fn redetection_resets_the_lost_count() {
        // Three lost frames, a flicker of detection, then absence again:
        // the streak starts over.
        let flags = [true, false, false, false, true, false, false, false, false, false];
        let got = engines(5, &flags);
        let want = oracle(5, &flags);
        assert_eq!(got, want);
    }

    #[test]
    fn state_machine_matches_oracle_exhaustively() {
        // Every present/absent sequence of length 12, for two thresholds.
        for k in [1, 5] {
            for bits in 0u32..(1 << 12) {
                let flags: Vec<bool> = (0..12).map(|i| bits >> i & 1 == 1).collect();
                assert_eq!(engines(k, &flags), oracle(k, &flags), "k={k} bits={bits:012b}");
            }
        }
    }

    #[test]
    fn actions_come_from_the_active_policy() {
        let mut c = controller(5);
        c.reset(0);
        assert_eq!(c.act(&bundle(false)).1, Action::TurnLeft);
        assert_eq!(c.act(&bundle(true)).1, Action::Forward);
        assert_eq!(c.act(&bundle(false)).1, Action::Forward);
        c.reset(0);
        // Reset restores the exploration side and clears history.
        assert_eq!(c.act(&bundle(false)).1, Action::TurnLeft);
    }

    #[test]
    fn zero_threshold_is_rejected() {
        assert!(ControllerConfig { revert_threshold: 0 }.validate().unwrap_err().is_config());
        assert!(ControllerConfig::default().validate().is_ok());
        assert_eq!(ControllerConfig::default().revert_threshold, 5);
    }
}
