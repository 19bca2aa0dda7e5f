//! Advantage actor-critic network: a two-layer tanh trunk over the
//! observation bundle with a six-logit policy head and a scalar value head.
//!
//! The network input is the current bundle concatenated with an exponential
//! moving average of past bundles, which stands in for a recurrent state.
//! All weights live in one flat parameter vector so the optimizer, the
//! gradient check, and the checkpoint format all see the same layout:
//! `[w1 | b1 | wp | bp | wv | bv]` with `w1` row-major `hidden x input`,
//! `wp` row-major `6 x hidden`, and `wv` a single row of width `hidden`.
//! Gradients are hand-derived; `loss` and `loss_and_grad` must compute the
//! same scalar, and a finite-difference test holds them to that.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::interface::{ActionDistribution, EngineKind, Policy};
use crate::error::{Error, Result};
use crate::perception::FeatureBundle;
use crate::rng::{child_seed, rng_from};
use crate::sim::Action;

const ACTIONS: usize = 6;
const CHECKPOINT_VERSION: u32 = 1;

/// Optimization hyperparameters. `seed` drives weight initialization,
/// episode seeds, and action sampling for an entire training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Global gradient-norm ceiling applied before each update.
    pub grad_clip: f64,
    /// Decay of the bundle moving average fed to the network as memory.
    pub memory_decay: f64,
    pub episodes: usize,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            hidden: 64,
            learning_rate: 1e-3,
            discount: 0.99,
            entropy_coef: 0.01,
            value_coef: 0.5,
            grad_clip: 5.0,
            memory_decay: 0.8,
            episodes: 2000,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::config("trainer: hidden must be positive"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("trainer: learning_rate must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::config("trainer: discount must be in [0, 1]"));
        }
        if !(self.entropy_coef >= 0.0) {
            return Err(Error::config("trainer: entropy_coef must be non-negative"));
        }
        if !(self.value_coef >= 0.0) {
            return Err(Error::config("trainer: value_coef must be non-negative"));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::config("trainer: grad_clip must be positive"));
        }
        if !(0.0..1.0).contains(&self.memory_decay) {
            return Err(Error::config("trainer: memory_decay must be in [0, 1)"));
        }
        if self.episodes == 0 {
            return Err(Error::config("trainer: episodes must be positive"));
        }
        Ok(())
    }
}

/// Actions a policy trained for this engine may emit. Exploration has no
/// stop semantics, so Done is masked out of its action space.
pub fn engine_action_mask(engine: EngineKind) -> [bool; ACTIONS] {
    match engine {
        EngineKind::Explore => [true, true, true, true, true, false],
        EngineKind::Goal => [true; ACTIONS],
    }
}

/// One rollout step prepared for the batch update. `ret` is the discounted
/// return from this step on and `adv` the advantage against the rollout
/// value estimate; both are constants during differentiation.
#[derive(Debug, Clone)]
pub struct StepSample {
    pub input: Vec<f64>,
    pub action: usize,
    pub ret: f64,
    pub adv: f64,
}

/// Everything the policy and value heads produce for one input.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub hidden_act: Vec<f64>,
    pub logits: [f64; ACTIONS],
    /// Masked softmax of the logits; exactly zero at masked entries.
    pub probs: [f64; ACTIONS],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorCriticParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub memory_decay: f64,
    pub engine: EngineKind,
    pub seed: u64,
    pub config_hash: u64,
    theta: Vec<f64>,
}

impl ActorCriticParams {
    /// Weight initialization: normal draws scaled by 1/sqrt(fan-in) for
    /// each matrix, biases zero. Fully determined by `seed`.
    pub fn new_random(
        input_dim: usize,
        engine: EngineKind,
        cfg: &TrainerConfig,
        config_hash: u64,
    ) -> Self {
        use rand::Rng;
        let hidden = cfg.hidden;
        let mut p = ActorCriticParams {
            input_dim,
            hidden,
            memory_decay: cfg.memory_decay,
            engine,
            seed: cfg.seed,
            config_hash,
            theta: vec![0.0; n_params(input_dim, hidden)],
        };
        let mut rng = rng_from(child_seed(cfg.seed, "net-init"));
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, theta: &mut [f64]| {
            let scale = 1.0 / (fan_in as f64).sqrt();
            for i in range {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                theta[i] = z * scale;
            }
        };
        let o = Offsets::new(input_dim, hidden);
        fill(o.w1..o.b1, input_dim, &mut p.theta);
        fill(o.wp..o.bp, hidden, &mut p.theta);
        fill(o.wv..o.bv, hidden, &mut p.theta);
        p
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn offsets(&self) -> Offsets {
        Offsets::new(self.input_dim, self.hidden)
    }

    pub fn forward(&self, input: &[f64], mask: &[bool; ACTIONS]) -> ForwardPass {
        assert_eq!(input.len(), self.input_dim, "input width mismatch");
        let o = self.offsets();
        let t = &self.theta;
        let mut hidden_act = vec![0.0; self.hidden];
        for k in 0..self.hidden {
            let mut acc = t[o.b1 + k];
            let row = o.w1 + k * self.input_dim;
            for i in 0..self.input_dim {
                acc += t[row + i] * input[i];
            }
            hidden_act[k] = acc.tanh();
        }
        let mut logits = [0.0; ACTIONS];
        for j in 0..ACTIONS {
            let mut acc = t[o.bp + j];
            let row = o.wp + j * self.hidden;
            for k in 0..self.hidden {
                acc += t[row + k] * hidden_act[k];
            }
            logits[j] = acc;
        }
        let mut value = t[o.bv];
        for k in 0..self.hidden {
            value += t[o.wv + k] * hidden_act[k];
        }
        let probs = masked_softmax(&logits, mask);
        ForwardPass { hidden_act, logits, probs, value }
    }

    /// Batch loss: mean over steps of policy-gradient surrogate plus value
    /// error minus the entropy bonus.
    pub fn loss(&self, batch: &[StepSample], cfg: &TrainerConfig) -> f64 {
        let mask = engine_action_mask(self.engine);
        let mut total = 0.0;
        for s in batch {
            total += self.step_loss(s, &mask, cfg);
        }
        total / batch.len() as f64
    }

    fn step_loss(&self, s: &StepSample, mask: &[bool; ACTIONS], cfg: &TrainerConfig) -> f64 {
        let fwd = self.forward(&s.input, mask);
        let p_a = fwd.probs[s.action];
        let entropy: f64 = fwd
            .probs
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| -p * p.ln())
            .sum();
        let verr = fwd.value - s.ret;
        -s.adv * p_a.ln() + cfg.value_coef * verr * verr - cfg.entropy_coef * entropy
    }

    /// Returns the batch loss together with its gradient in the flat
    /// parameter layout. The gradient is exact for the scalar `loss`
    /// computes, holding `ret` and `adv` fixed.
    pub fn loss_and_grad(&self, batch: &[StepSample], cfg: &TrainerConfig) -> (f64, Vec<f64>) {
        let mask = engine_action_mask(self.engine);
        let o = self.offsets();
        let t = &self.theta;
        let mut grad = vec![0.0; self.theta.len()];
        let mut total = 0.0;
        for s in batch {
            let fwd = self.forward(&s.input, &mask);
            let entropy: f64 = fwd
                .probs
                .iter()
                .filter(|p| **p > 0.0)
                .map(|p| -p * p.ln())
                .sum();
            let verr = fwd.value - s.ret;
            total += -s.adv * fwd.probs[s.action].ln() + cfg.value_coef * verr * verr
                - cfg.entropy_coef * entropy;
            // d(loss)/d(logit_j); masked logits never influence the masked
            // softmax, so their gradient is identically zero.
            let mut g_logits = [0.0; ACTIONS];
            for j in 0..ACTIONS {
                if !mask[j] || fwd.probs[j] <= 0.0 {
                    continue;
                }
                let indicator = if j == s.action { 1.0 } else { 0.0 };
                let policy_term = -s.adv * (indicator - fwd.probs[j]);
                let entropy_term = cfg.entropy_coef * fwd.probs[j] * (fwd.probs[j].ln() + entropy);
                g_logits[j] = policy_term + entropy_term;
            }
            let g_value = 2.0 * cfg.value_coef * (fwd.value - s.ret);

            // Head weights and the backpropagated hidden gradient.
            let mut g_hidden = vec![0.0; self.hidden];
            for j in 0..ACTIONS {
                let row = o.wp + j * self.hidden;
                for k in 0..self.hidden {
                    grad[row + k] += g_logits[j] * fwd.hidden_act[k];
                    g_hidden[k] += g_logits[j] * t[row + k];
                }
                grad[o.bp + j] += g_logits[j];
            }
            for k in 0..self.hidden {
                grad[o.wv + k] += g_value * fwd.hidden_act[k];
                g_hidden[k] += g_value * t[o.wv + k];
            }
            grad[o.bv] += g_value;

            // Through tanh into the first layer.
            for k in 0..self.hidden {
                let g_pre = g_hidden[k] * (1.0 - fwd.hidden_act[k] * fwd.hidden_act[k]);
                let row = o.w1 + k * self.input_dim;
                for i in 0..self.input_dim {
                    grad[row + i] += g_pre * s.input[i];
                }
                grad[o.b1 + k] += g_pre;
            }
        }
        let inv_n = 1.0 / batch.len() as f64;
        for g in &mut grad {
            *g *= inv_n;
        }
        (total * inv_n, grad)
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|w| w.is_finite())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::format("checkpoint: refusing to write non-finite weights"));
        }
        let file = CheckpointFile {
            format_version: CHECKPOINT_VERSION,
            engine: self.engine,
            seed: self.seed,
            config_hash: self.config_hash,
            input_dim: self.input_dim,
            hidden: self.hidden,
            memory_decay: self.memory_decay,
            theta: self.theta.clone(),
        };
        let writer = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(writer, &file)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        let file: CheckpointFile = serde_json::from_reader(reader)?;
        if file.format_version != CHECKPOINT_VERSION {
            return Err(Error::format(format!(
                "checkpoint: unsupported format version {}",
                file.format_version
            )));
        }
        let expected = n_params(file.input_dim, file.hidden);
        if file.theta.len() != expected {
            return Err(Error::format(format!(
                "checkpoint: {} weights, layout needs {expected}",
                file.theta.len()
            )));
        }
        if !file.theta.iter().all(|w| w.is_finite()) {
            return Err(Error::format("checkpoint: non-finite weight"));
        }
        Ok(ActorCriticParams {
            input_dim: file.input_dim,
            hidden: file.hidden,
            memory_decay: file.memory_decay,
            engine: file.engine,
            seed: file.seed,
            config_hash: file.config_hash,
            theta: file.theta,
        })
    }
}

/// Flat layout offsets; `bv` is the final single slot.
#[derive(Clone, Copy)]
struct Offsets {
    w1: usize,
    b1: usize,
    wp: usize,
    bp: usize,
    wv: usize,
    bv: usize,
}

impl Offsets {
    fn new(input_dim: usize, hidden: usize) -> Self {
        let w1 = 0;
        let b1 = w1 + hidden * input_dim;
        let wp = b1 + hidden;
        let bp = wp + ACTIONS * hidden;
        let wv = bp + ACTIONS;
        let bv = wv + hidden;
        Offsets { w1, b1, wp, bp, wv, bv }
    }
}

fn n_params(input_dim: usize, hidden: usize) -> usize {
    Offsets::new(input_dim, hidden).bv + 1
}

/// Softmax restricted to unmasked entries; subtracts the running maximum
/// so any finite logits stay in range.
fn masked_softmax(logits: &[f64; ACTIONS], mask: &[bool; ACTIONS]) -> [f64; ACTIONS] {
    let mut max = f64::NEG_INFINITY;
    for j in 0..ACTIONS {
        if mask[j] && logits[j] > max {
            max = logits[j];
        }
    }
    assert!(max.is_finite(), "no unmasked finite logit");
    let mut probs = [0.0; ACTIONS];
    let mut sum = 0.0;
    for j in 0..ACTIONS {
        if mask[j] {
            probs[j] = (logits[j] - max).exp();
            sum += probs[j];
        }
    }
    for p in &mut probs {
        *p /= sum;
    }
    probs
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    engine: EngineKind,
    seed: u64,
    config_hash: u64,
    input_dim: usize,
    hidden: usize,
    memory_decay: f64,
    theta: Vec<f64>,
}

/// Greedy wrapper over trained parameters for evaluation: argmax action,
/// ties to the lowest index, bundle moving average as recurrent state.
pub struct ActorCriticPolicy {
    params: ActorCriticParams,
    mask: [bool; ACTIONS],
    memory: Vec<f64>,
}

impl ActorCriticPolicy {
    pub fn from_params(params: ActorCriticParams) -> Self {
        let mask = engine_action_mask(params.engine);
        let memory = vec![0.0; params.input_dim / 2];
        ActorCriticPolicy { params, mask, memory }
    }

    pub fn params(&self) -> &ActorCriticParams {
        &self.params
    }
}

impl Policy for ActorCriticPolicy {
    fn reset(&mut self, _episode_seed: u64) {
        self.memory.iter_mut().for_each(|m| *m = 0.0);
    }

    fn act(&mut self, bundle: &FeatureBundle) -> (ActionDistribution, Action) {
        assert_eq!(
            bundle.dim() * 2,
            self.params.input_dim,
            "bundle width does not match the trained network"
        );
        let mut input = Vec::with_capacity(self.params.input_dim);
        input.extend_from_slice(bundle.as_slice());
        input.extend_from_slice(&self.memory);
        let fwd = self.params.forward(&input, &self.mask);
        let alpha = self.params.memory_decay;
        for (m, x) in self.memory.iter_mut().zip(bundle.as_slice()) {
            *m = alpha * *m + (1.0 - alpha) * x;
        }
        let dist = ActionDistribution::new(fwd.probs);
        let action = dist.argmax();
        (dist, action)
    }

    fn engine(&self) -> EngineKind {
        self.params.engine
    }
}
