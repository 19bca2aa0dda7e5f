//! Policy abstraction shared by scripted, random, and learned controllers.
//!
//! A policy is an episode-scoped object: `reset` rearms it with the episode
//! seed, then `act` maps each observation bundle to a distribution over the
//! six actions plus the concrete action taken. Internal state (scan-cycle
//! counters, recurrent averages, sampling streams) lives behind `&mut self`,
//! so a policy value is never shared across concurrent episodes.

use rand::Rng;

use crate::perception::FeatureBundle;
use crate::sim::Action;

/// Which reward engine governs a policy's steps. The dual controller flips
/// between the two; single-purpose policies report a constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Explore,
    Goal,
}

impl EngineKind {
    pub fn label(self) -> &'static str {
        match self {
            EngineKind::Explore => "explore",
            EngineKind::Goal => "goal",
        }
    }
}

/// Probability distribution over the six actions, in `Action::ALL` order.
/// Entries are non-negative and sum to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    probs: [f64; 6],
}

impl ActionDistribution {
    pub fn new(probs: [f64; 6]) -> Self {
        let sum: f64 = probs.iter().sum();
        debug_assert!(probs.iter().all(|p| *p >= 0.0), "negative probability");
        debug_assert!((sum - 1.0).abs() <= 1e-9, "probabilities sum to {sum}");
        ActionDistribution { probs }
    }

    /// All mass on one action.
    pub fn delta(action: Action) -> Self {
        let mut probs = [0.0; 6];
        probs[action.index()] = 1.0;
        ActionDistribution { probs }
    }

    pub fn uniform() -> Self {
        ActionDistribution { probs: [1.0 / 6.0; 6] }
    }

    /// Uniform over the actions with `mask[i]` set. At least one entry
    /// must be allowed.
    pub fn uniform_masked(mask: &[bool; 6]) -> Self {
        let n = mask.iter().filter(|m| **m).count();
        assert!(n > 0, "action mask allows nothing");
        let p = 1.0 / n as f64;
        let mut probs = [0.0; 6];
        for i in 0..6 {
            if mask[i] {
                probs[i] = p;
            }
        }
        ActionDistribution { probs }
    }

    pub fn probs(&self) -> &[f64; 6] {
        &self.probs
    }

    pub fn prob(&self, action: Action) -> f64 {
        self.probs[action.index()]
    }

    /// Highest-probability action; ties resolve to the lowest index.
    pub fn argmax(&self) -> Action {
        let mut best = 0;
        for i in 1..6 {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        Action::from_index(best)
    }

    /// Draws one action by inverse CDF on a single uniform variate. The
    /// final non-zero entry absorbs rounding shortfall so the draw always
    /// lands on a supported action.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Action {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last_supported = 0;
        for i in 0..6 {
            if self.probs[i] > 0.0 {
                last_supported = i;
                acc += self.probs[i];
                if u < acc {
                    return Action::from_index(i);
                }
            }
        }
        Action::from_index(last_supported)
    }

    /// Shannon entropy in nats; zero-probability entries contribute 0.
    pub fn entropy(&self) -> f64 {
        self.probs
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| -p * p.ln())
            .sum()
    }
}

/// Episode-scoped action selector. `reset` must be called before the first
/// `act` of every episode.
pub trait Policy {
    /// Rearms internal state for a new episode. Stochastic policies derive
    /// their sampling stream from `episode_seed`.
    fn reset(&mut self, episode_seed: u64);

    /// Maps one observation to a distribution and the action taken.
    fn act(&mut self, bundle: &FeatureBundle) -> (ActionDistribution, Action);

    /// The reward engine governing the action just chosen (and the next
    /// one, for single-engine policies).
    fn engine(&self) -> EngineKind;
}
