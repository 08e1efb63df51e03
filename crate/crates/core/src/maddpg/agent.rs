use ndarray::{concatenate, Array2, ArrayView2, Axis};

use super::{Hyperparams, MaddpgError};
use crate::envsim::{obs_dim, Observation};
use crate::neural::{adam_step, init_mlp, Activation, AdamState, ForwardCache, Mlp, MlpGrads, NeuralError};
use crate::scenario::Scenario;

/// Observation and action widths of every agent, with their offsets in the
/// concatenated joint vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityLayout {
    pub obs_dims: Vec<usize>,
    pub action_dims: Vec<usize>,
    pub obs_offsets: Vec<usize>,
    pub action_offsets: Vec<usize>,
}

impl CommunityLayout {
    pub fn new(obs_dims: Vec<usize>, action_dims: Vec<usize>) -> Self {
        assert_eq!(obs_dims.len(), action_dims.len());
        let offsets = |dims: &[usize]| {
            dims.iter()
                .scan(0, |acc, d| {
                    let o = *acc;
                    *acc += d;
                    Some(o)
                })
                .collect()
        };
        Self {
            obs_offsets: offsets(&obs_dims),
            action_offsets: offsets(&action_dims),
            obs_dims,
            action_dims,
        }
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        Self::new(
            (0..s.dwellings.len()).map(|i| obs_dim(s, i)).collect(),
            s.dwellings.iter().map(|d| d.action_dim()).collect(),
        )
    }

    pub fn n_agents(&self) -> usize {
        self.obs_dims.len()
    }

    pub fn state_dim(&self) -> usize {
        self.obs_dims.iter().sum()
    }

    pub fn joint_action_dim(&self) -> usize {
        self.action_dims.iter().sum()
    }
}

/// Centralized critic: the joint state passes through a ReLU state layer,
/// whose output is concatenated with the joint action and fed to the head.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub state_layer: Mlp,
    pub head: Mlp,
}

pub struct CriticCache {
    state: ForwardCache,
    head: ForwardCache,
    state_width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticGrads {
    pub state_layer: MlpGrads,
    pub head: MlpGrads,
}

impl Critic {
    pub fn new(state_dim: usize, action_dim: usize, units: &[usize], seed: u64) -> Self {
        let first = units[0];
        let state_layer = init_mlp(&[state_dim, first], &[Activation::Relu], seed);
        let mut widths = vec![first + action_dim];
        widths.extend_from_slice(&units[1..]);
        widths.push(1);
        let mut acts = vec![Activation::Relu; widths.len() - 2];
        acts.push(Activation::Identity);
        let head = init_mlp(&widths, &acts, seed.wrapping_add(1));
        Self { state_layer, head }
    }

    pub fn state_dim(&self) -> usize {
        self.state_layer.input_width()
    }

    pub fn action_dim(&self) -> usize {
        self.head.input_width() - self.state_layer.output_width()
    }

    /// Total input width `|S| + |A|`.
    pub fn input_width(&self) -> usize {
        self.state_dim() + self.action_dim()
    }

    fn check(&self, s: &ArrayView2<f64>, a: &ArrayView2<f64>) -> Result<(), MaddpgError> {
        if s.ncols() != self.state_dim() || a.ncols() != self.action_dim() || s.nrows() != a.nrows() {
            return Err(MaddpgError::ShapeMismatch(format!(
                "critic expects ({}, {}) columns, got ({}, {}) with {} / {} rows",
                self.state_dim(),
                self.action_dim(),
                s.ncols(),
                a.ncols(),
                s.nrows(),
                a.nrows()
            )));
        }
        Ok(())
    }

    pub fn predict(&self, s: ArrayView2<f64>, a: ArrayView2<f64>) -> Result<Array2<f64>, MaddpgError> {
        self.check(&s, &a)?;
        let h = self.state_layer.predict_batch(s)?;
        let x = concatenate(Axis(1), &[h.view(), a]).expect("rows match");
        Ok(self.head.predict_batch(x.view())?)
    }

    pub fn forward(&self, s: ArrayView2<f64>, a: ArrayView2<f64>) -> Result<(Array2<f64>, CriticCache), MaddpgError> {
        self.check(&s, &a)?;
        let (h, state) = self.state_layer.forward_batch(s)?;
        let x = concatenate(Axis(1), &[h.view(), a]).expect("rows match");
        let (q, head) = self.head.forward_batch(x.view())?;
        Ok((
            q,
            CriticCache {
                state,
                head,
                state_width: h.ncols(),
            },
        ))
    }

    /// Parameter gradients and the gradient with respect to the action input.
    pub fn backward(&self, cache: &CriticCache, dq: ArrayView2<f64>) -> Result<(CriticGrads, Array2<f64>), NeuralError> {
        let (head, dx) = self.head.backward_batch(&cache.head, dq)?;
        let dh = dx.slice(ndarray::s![.., ..cache.state_width]).to_owned();
        let da = dx.slice(ndarray::s![.., cache.state_width..]).to_owned();
        let (state_layer, _) = self.state_layer.backward_batch(&cache.state, dh.view())?;
        Ok((CriticGrads { state_layer, head }, da))
    }

    /// `∂Q/∂A` only, without parameter gradients.
    pub fn action_gradient(&self, cache: &CriticCache, dq: ArrayView2<f64>) -> Result<Array2<f64>, NeuralError> {
        let dx = self.head.input_gradient_batch(&cache.head, dq)?;
        Ok(dx.slice(ndarray::s![.., cache.state_width..]).to_owned())
    }

    pub fn soft_update(&mut self, online: &Critic, tau: f64) -> Result<(), NeuralError> {
        self.state_layer.soft_update(&online.state_layer, tau)?;
        self.head.soft_update(&online.head, tau)
    }

    pub fn max_abs_diff(&self, other: &Critic) -> Result<f64, NeuralError> {
        Ok(self.state_layer.max_abs_diff(&other.state_layer)?.max(self.head.max_abs_diff(&other.head)?))
    }

    pub fn is_finite(&self) -> bool {
        self.state_layer.is_finite() && self.head.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticOptimizer {
    pub state_layer: AdamState,
    pub head: AdamState,
}

impl CriticOptimizer {
    pub fn new(critic: &Critic, config: crate::neural::AdamConfig) -> Self {
        Self {
            state_layer: AdamState::new(&critic.state_layer, config),
            head: AdamState::new(&critic.head, config),
        }
    }

    pub fn step(&mut self, critic: &mut Critic, grads: &CriticGrads) -> Result<(), NeuralError> {
        adam_step(&mut critic.state_layer, &grads.state_layer, &mut self.state_layer)?;
        adam_step(&mut critic.head, &grads.head, &mut self.head)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub index: usize,
    pub actor: Mlp,
    pub critic: Critic,
    pub target_actor: Mlp,
    pub target_critic: Critic,
    pub actor_opt: AdamState,
    pub critic_opt: CriticOptimizer,
}

impl Agent {
    pub fn new(index: usize, layout: &CommunityLayout, hp: &Hyperparams) -> Self {
        let base = hp.seed.wrapping_mul(1_000_003).wrapping_add(index as u64 * 16);
        let mut widths = vec![layout.obs_dims[index]];
        widths.extend_from_slice(&hp.actor_hidden);
        widths.push(layout.action_dims[index]);
        let mut acts = vec![Activation::Relu; widths.len() - 2];
        acts.push(Activation::Tanh);
        let actor = init_mlp(&widths, &acts, base);
        let critic = Critic::new(layout.state_dim(), layout.joint_action_dim(), &hp.critic_units, base + 2);
        Self {
            index,
            actor_opt: AdamState::new(&actor, hp.adam(hp.lr_actor)),
            critic_opt: CriticOptimizer::new(&critic, hp.adam(hp.lr_critic)),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_width()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_width()
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite() && self.critic.is_finite() && self.target_actor.is_finite() && self.target_critic.is_finite()
    }
}

pub fn init_agents(layout: &CommunityLayout, hp: &Hyperparams) -> Vec<Agent> {
    (0..layout.n_agents()).map(|i| Agent::new(i, layout, hp)).collect()
}

/// Deterministic policy output for one agent from its own observation only.
pub fn select_action(agent: &Agent, obs: &Observation) -> Result<Vec<f64>, MaddpgError> {
    if obs.len() != agent.obs_dim() {
        return Err(MaddpgError::ShapeMismatch(format!(
            "agent {} expects {} observations, got {}",
            agent.index,
            agent.obs_dim(),
            obs.len()
        )));
    }
    Ok(agent.actor.predict(obs.as_slice())?)
}
