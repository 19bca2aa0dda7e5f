//! Policy selection from the command line.

use std::path::PathBuf;
use std::str::FromStr;

use voxnav_core::policy::{
    ActorCriticParams, ActorCriticPolicy, DualController, EngineKind, Policy, RandomPolicy,
    ScriptedExplore, ScriptedGoal,
};
use voxnav_core::{Error, NavConfig, Result};

/// Parsed form of the `--policy` flag.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    ScriptedDual,
    Random,
    Trained(PathBuf),
    ExploreOnly,
    GoalOnly,
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "scripted-dual" => Ok(PolicySpec::ScriptedDual),
            "random" => Ok(PolicySpec::Random),
            "explore-only" => Ok(PolicySpec::ExploreOnly),
            "goal-only" => Ok(PolicySpec::GoalOnly),
            _ => match s.strip_prefix("trained:") {
                Some(path) if !path.is_empty() => Ok(PolicySpec::Trained(PathBuf::from(path))),
                _ => Err(format!(
                    "unknown policy {s:?}; expected scripted-dual, random, \
                     explore-only, goal-only, or trained:<checkpoint>"
                )),
            },
        }
    }
}

impl PolicySpec {
    /// Loads whatever the spec needs from disk so that [`Builder::build`]
    /// is infallible and cheap inside the episode worker pool.
    pub fn prepare(&self, nav: &NavConfig) -> Result<Builder> {
        let inner = match self {
            PolicySpec::ScriptedDual => Inner::ScriptedDual(nav.clone()),
            PolicySpec::Random => Inner::Random,
            PolicySpec::ExploreOnly => Inner::Scripted(EngineKind::Explore, nav.clone()),
            PolicySpec::GoalOnly => Inner::Scripted(EngineKind::Goal, nav.clone()),
            PolicySpec::Trained(path) => {
                if !path.is_file() {
                    return Err(Error::config(format!(
                        "checkpoint {} does not exist",
                        path.display()
                    )));
                }
                Inner::Trained(ActorCriticParams::load(path)?)
            }
        };
        Ok(Builder { inner })
    }

    /// The engine a single-purpose spec trains. Dual and random policies
    /// have no single reward engine to optimize.
    pub fn train_engine(&self) -> Result<EngineKind> {
        match self {
            PolicySpec::ExploreOnly => Ok(EngineKind::Explore),
            PolicySpec::GoalOnly => Ok(EngineKind::Goal),
            _ => Err(Error::config(
                "train expects --policy explore-only or goal-only",
            )),
        }
    }
}

/// Stamps out fresh policy values, one per episode.
pub struct Builder {
    inner: Inner,
}

enum Inner {
    ScriptedDual(NavConfig),
    Random,
    Scripted(EngineKind, NavConfig),
    Trained(ActorCriticParams),
}

impl Builder {
    pub fn build(&self) -> Box<dyn Policy> {
        match &self.inner {
            Inner::ScriptedDual(nav) => Box::new(DualController::new(
                Box::new(ScriptedExplore::new(nav.scripted.clone())),
                Box::new(ScriptedGoal::new(nav.scripted.clone())),
                &nav.controller,
            )),
            Inner::Random => Box::new(RandomPolicy::new()),
            Inner::Scripted(EngineKind::Explore, nav) => {
                Box::new(ScriptedExplore::new(nav.scripted.clone()))
            }
            Inner::Scripted(EngineKind::Goal, nav) => Box::new(ScriptedGoal::new(nav.scripted.clone())),
            Inner::Trained(params) => Box::new(ActorCriticPolicy::from_params(params.clone())),
        }
    }
}
