//! Episode-level advantage actor-critic training.
//!
//! Episodes run strictly sequentially and every random draw descends from
//! `TrainerConfig::seed`, so a training run is a pure function of the seed
//! and the environment: the learning curve reproduces bit for bit. One
//! gradient update happens per episode over the whole trajectory, with
//! discounted returns as value targets and return-minus-value advantages.


use super::actor_critic::{engine_action_mask, ActorCriticParams, StepSample, TrainerConfig};
use super::interface::{ActionDistribution, EngineKind};
use crate::error::{Error, Result};
use crate::perception::FeatureBundle;
use crate::rng::{child_seed, child_seed_indexed, rng_from};
use crate::sim::Action;

/// Upper bound on steps per episode; exceeding it means the environment
/// never terminates and the trainer is stuck, which is a caller bug.
const EPISODE_STEP_CEILING: usize = 100_000;

/// An episodic environment the trainer can roll out. Implementations
/// decide their own termination (goal reached, step budget, and so on) and
/// must be deterministic in the seed passed to `reset`.
pub trait RolloutEnv {
    /// Starts a new episode and returns its first observation.
    fn reset(&mut self, episode_seed: u64) -> FeatureBundle;

    /// Applies one action and returns the reward earned, the next
    /// observation, and whether the episode ended.
    fn step(&mut self, action: Action) -> RolloutStep;
}

pub struct RolloutStep {
    pub bundle: FeatureBundle,
    pub reward: f64,
    pub done: bool,
}

pub struct TrainOutcome {
    pub params: ActorCriticParams,
    /// Mean per-step reward of each episode, in training order.
    pub curve: Vec<f64>,
}

/// Adam over the flat parameter vector, with global-norm clipping applied
/// to each incoming gradient first.
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0, lr }
    }

    fn update(&mut self, theta: &mut [f64], grad: &[f64], clip: f64) {
        let norm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let scale = if norm > clip { clip / norm } else { 1.0 };
        self.t += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.t as i32);
        let bc2 = 1.0 - Self::BETA2.powi(self.t as i32);
        for i in 0..theta.len() {
            let g = grad[i] * scale;
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * g;
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            theta[i] -= self.lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

/// Trains a fresh network against `env` under the given reward engine.
/// The network's input width is fixed by the first observation; every
/// later observation must match it.
pub fn train_actor_critic(
    env: &mut dyn RolloutEnv,
    engine: EngineKind,
    cfg: &TrainerConfig,
    config_hash: u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mask = engine_action_mask(engine);
    let mut params: Option<ActorCriticParams> = None;
    let mut adam: Option<Adam> = None;
    let mut curve = Vec::with_capacity(cfg.episodes);

    for episode in 0..cfg.episodes {
        let ep_seed = child_seed_indexed(cfg.seed, "train/episode", episode as u64);
        let mut sampler = rng_from(child_seed_indexed(cfg.seed, "train/sample", episode as u64));
        let mut bundle = env.reset(ep_seed);

        let p = params.get_or_insert_with(|| {
            ActorCriticParams::new_random(2 * bundle.dim(), engine, cfg, config_hash)
        });
        let opt = adam.get_or_insert_with(|| Adam::new(p.n_params(), cfg.learning_rate));

        let mut memory = vec![0.0; bundle.dim()];
        let mut steps: Vec<StepSample> = Vec::new();
        let mut rewards: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        loop {
            assert_eq!(2 * bundle.dim(), p.input_dim, "observation width changed mid-training");
            let mut input = Vec::with_capacity(p.input_dim);
            input.extend_from_slice(bundle.as_slice());
            input.extend_from_slice(&memory);
            let fwd = p.forward(&input, &mask);
            let action = ActionDistribution::new(fwd.probs).sample(&mut sampler);

            let alpha = cfg.memory_decay;
            for (m, x) in memory.iter_mut().zip(bundle.as_slice()) {
                *m = alpha * *m + (1.0 - alpha) * x;
            }

            let outcome = env.step(action);
            steps.push(StepSample { input, action: action.index(), ret: 0.0, adv: 0.0 });
            values.push(fwd.value);
            rewards.push(outcome.reward);
            bundle = outcome.bundle;
            if outcome.done {
                break;
            }
            assert!(steps.len() < EPISODE_STEP_CEILING, "environment never terminates");
        }

        // Discounted returns, zero beyond the final step; advantages
        // against the rollout-time value estimates.
        let mut ret = 0.0;
        for t in (0..steps.len()).rev() {
            ret = rewards[t] + cfg.discount * ret;
            steps[t].ret = ret;
            steps[t].adv = ret - values[t];
        }

        let (loss, grad) = p.loss_and_grad(&steps, cfg);
        if !loss.is_finite() {
            return Err(Error::training(format!(
                "non-finite loss in episode {episode} ({} steps); first bad step {}",
                steps.len(),
                steps
                    .iter()
                    .position(|s| !p.loss(std::slice::from_ref(s), cfg).is_finite())
                    .unwrap_or(0),
            )));
        }
        opt.update(p.theta_mut(), &grad, cfg.grad_clip);
        if !p.is_finite() {
            return Err(Error::training(format!(
                "non-finite weight after the episode {episode} update"
            )));
        }

        curve.push(rewards.iter().sum::<f64>() / rewards.len() as f64);
    }

    Ok(TrainOutcome { params: params.expect("at least one episode"), curve })
}

/// Mean per-step reward of the greedy policy over `episodes` fresh seeds,
/// plus the standard error of the per-episode means. Used to compare a
/// trained policy against baselines on held-out seeds.
pub fn evaluate_mean_reward(
    env: &mut dyn RolloutEnv,
    policy: &mut dyn super::interface::Policy,
    seeds: &[u64],
) -> (f64, f64) {
    assert!(!seeds.is_empty());
    let mut means = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut bundle = env.reset(seed);
        policy.reset(child_seed(seed, "eval/policy"));
        let mut total = 0.0;
        let mut n = 0usize;
        loop {
            let (_, action) = policy.act(&bundle);
            let outcome = env.step(action);
            total += outcome.reward;
            n += 1;
            bundle = outcome.bundle;
            if outcome.done {
                break;
            }
            assert!(n < EPISODE_STEP_CEILING, "environment never terminates");
        }
        means.push(total / n as f64);
    }
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>()
        / (means.len().saturating_sub(1)).max(1) as f64;
    (mean, (var / means.len() as f64).sqrt())
}
