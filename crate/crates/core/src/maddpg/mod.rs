//! Multi-agent deep deterministic policy gradient with centralized critics
//! and decentralized actors.
//!
//! Each dwelling is one agent. Its actor maps the dwelling's own
//! observation to actions in `[-1, 1]`; its critic scores the joint state
//! and joint action of the whole community. Training alternates environment
//! steps with minibatch updates drawn from one shared replay buffer.

mod agent;
mod checkpoint;
mod replay;
mod train;
mod update;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envsim::EnvError;
use crate::neural::NeuralError;

pub use agent::{init_agents, select_action, Agent, CommunityLayout, Critic, CriticCache, CriticGrads, CriticOptimizer};
pub use checkpoint::{agent_from_files, load_agents, save_agents, AGENT_FILES};
pub use replay::{sample_batch, Batch, Experience, ReplayBuffer};
pub use train::{
    evaluate_deterministic, evaluate_rollout, explore_action, sigma_at, train, train_with_agents, ExplorationSchedule,
    LogRow, TrainOutcome, TrainingLog,
};
pub use update::{actor_update, bellman_targets, critic_update, soft_update_targets, target_next_actions};

#[derive(Debug, Error)]
pub enum MaddpgError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("experience does not match the community layout: {0}")]
    LayoutMismatch(String),
    #[error("replay buffer holds {have} experiences, batch needs {need}")]
    InsufficientExperiences { have: usize, need: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("numeric divergence in agent {agent} after {update_count} updates: {what}")]
    Divergence {
        agent: usize,
        update_count: u64,
        what: String,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparams {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Length of the rule-based exploration phase; two episodes when unset.
    pub warmup_steps: Option<usize>,
    pub noise_sigma_start: f64,
    pub noise_sigma_end: f64,
    /// Steps over which sigma decays after warmup; half of all training
    /// steps when unset.
    pub noise_decay_steps: Option<usize>,
    pub updates_per_step: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_units: Vec<usize>,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub episodes: usize,
    /// Perturb observations instead of actions during exploration.
    pub noise_on_observations: bool,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.01,
            batch_size: 128,
            buffer_capacity: 100_000,
            warmup_steps: None,
            noise_sigma_start: 0.3,
            noise_sigma_end: 0.05,
            noise_decay_steps: None,
            updates_per_step: 1,
            actor_hidden: vec![256, 256],
            critic_units: vec![512, 256],
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            episodes: 15,
            noise_on_observations: false,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), MaddpgError> {
        let bad = |m: &str| Err(MaddpgError::InvalidHyperparams(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must be in (0, 1]");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.buffer_capacity < self.batch_size {
            return bad("buffer_capacity must be >= batch_size");
        }
        if !(self.noise_sigma_end >= 0.0 && self.noise_sigma_end <= self.noise_sigma_start && self.noise_sigma_start.is_finite()) {
            return bad("need 0 <= noise_sigma_end <= noise_sigma_start");
        }
        if self.updates_per_step == 0 {
            return bad("updates_per_step must be >= 1");
        }
        if self.actor_hidden.contains(&0) || self.critic_units.contains(&0) {
            return bad("layer widths must be positive");
        }
        if self.critic_units.is_empty() {
            return bad("critic_units needs at least the state layer width");
        }
        for (name, lr) in [("lr_actor", self.lr_actor), ("lr_critic", self.lr_critic)] {
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(MaddpgError::InvalidHyperparams(format!("{name} must be finite and >= 0")));
            }
        }
        if !((0.0..1.0).contains(&self.adam_beta1) && (0.0..1.0).contains(&self.adam_beta2) && self.adam_eps > 0.0) {
            return bad("adam betas must be in [0, 1) and eps > 0");
        }
        Ok(())
    }

    pub(crate) fn adam(&self, lr: f64) -> crate::neural::AdamConfig {
        crate::neural::AdamConfig {
            lr,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(Hyperparams::default().validate().is_ok());
    }

    #[test]
    fn rejects_out_of_range_values() {
        let cases = [
            Hyperparams { gamma: 1.0, ..Default::default() },
            Hyperparams { tau: 0.0, ..Default::default() },
            Hyperparams { batch_size: 0, ..Default::default() },
            Hyperparams { noise_sigma_end: 0.5, ..Default::default() },
            Hyperparams { critic_units: vec![], ..Default::default() },
            Hyperparams { lr_actor: f64::NAN, ..Default::default() },
        ];
        for hp in cases {
            assert!(hp.validate().is_err(), "{hp:?}");
        }
    }
}
