//! Action selection: scripted baselines, the explore/goal switching
//! controller, and a small advantage actor-critic learner.

mod actor_critic;
mod dual;
mod interface;
mod scripted;
mod train;

pub use actor_critic::{
    engine_action_mask, ActorCriticParams, ActorCriticPolicy, ForwardPass, StepSample,
    TrainerConfig,
};
pub use dual::{ControllerConfig, DualController};
pub use interface::{ActionDistribution, EngineKind, Policy};
pub use scripted::{RandomPolicy, ScriptedConfig, ScriptedExplore, ScriptedGoal};
pub use train::{
    evaluate_mean_reward, train_actor_critic, RolloutEnv, RolloutStep, TrainOutcome,
};
