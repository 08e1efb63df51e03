use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::update::{actor_update, critic_update, soft_update_targets, target_next_actions};
use super::{init_agents, sample_batch, select_action, Agent, Batch, CommunityLayout, Experience, Hyperparams, MaddpgError, ReplayBuffer};
use crate::envsim::{self, empty_trace, observe, record_step, EnvState, JointAction, Observation, Rollout};
use crate::kpi::Trace;
use crate::rbc::{rbc_action, DwellingContext, RbcConfig};
use crate::reward::{RewardModel, RewardWeights};
use crate::scenario::Scenario;

/// Resolved exploration phases: rule-based actions for `warmup_steps`, then
/// Gaussian noise whose sigma decays linearly over `decay_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationSchedule {
    pub warmup_steps: usize,
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub decay_steps: usize,
    pub noise_on_observations: bool,
}

impl ExplorationSchedule {
    pub fn resolve(hp: &Hyperparams, horizon_steps: usize) -> Self {
        let total = hp.episodes * horizon_steps;
        Self {
            warmup_steps: hp.warmup_steps.unwrap_or(2 * horizon_steps),
            sigma_start: hp.noise_sigma_start,
            sigma_end: hp.noise_sigma_end,
            decay_steps: hp.noise_decay_steps.unwrap_or(total / 2),
            noise_on_observations: hp.noise_on_observations,
        }
    }
}

pub fn sigma_at(schedule: &ExplorationSchedule, global_step: usize) -> f64 {
    let ExplorationSchedule {
        warmup_steps,
        sigma_start,
        sigma_end,
        decay_steps,
        ..
    } = *schedule;
    let since = global_step.saturating_sub(warmup_steps);
    if since >= decay_steps {
        return sigma_end;
    }
    sigma_start + (sigma_end - sigma_start) * (since as f64 / decay_steps as f64)
}

/// Exploration policy: the rule-based action during warmup, afterwards the
/// actor output perturbed by Gaussian noise and clipped to `[-1, 1]`.
pub fn explore_action<R: Rng>(
    agent: &Agent,
    obs: &Observation,
    global_step: usize,
    rbc_action: &[f64],
    schedule: &ExplorationSchedule,
    rng: &mut R,
) -> Result<Vec<f64>, MaddpgError> {
    if global_step < schedule.warmup_steps {
        return Ok(rbc_action.to_vec());
    }
    let sigma = sigma_at(schedule, global_step);
    let noise = |rng: &mut R| -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        sigma * z
    };
    let action = if schedule.noise_on_observations {
        let noisy = Observation(obs.as_slice().iter().map(|v| v + noise(rng)).collect());
        select_action(agent, &noisy)?
    } else {
        let mut a = select_action(agent, obs)?;
        a.iter_mut().for_each(|v| *v += noise(rng));
        a
    };
    Ok(action.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub episode: usize,
    pub agent: usize,
    pub mean_reward: f64,
    /// `None` when no update ran during the episode.
    pub mean_td_loss: Option<f64>,
    pub sigma: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

impl TrainingLog {
    pub const HEADER: &'static str = "episode,agent,mean_reward,mean_td_loss,sigma";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let loss = r.mean_td_loss.map(|l| l.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{},{}\n", r.episode, r.agent, r.mean_reward, loss, r.sigma));
        }
        out
    }

    /// Mean over agents of the per-episode mean reward.
    pub fn episode_mean_reward(&self, episode: usize) -> Option<f64> {
        let rows: Vec<f64> = self.rows.iter().filter(|r| r.episode == episode).map(|r| r.mean_reward).collect();
        (!rows.is_empty()).then(|| rows.iter().sum::<f64>() / rows.len() as f64)
    }
}

pub struct TrainOutcome {
    pub agents: Vec<Agent>,
    pub log: TrainingLog,
    /// Updates performed per agent.
    pub updates: u64,
}

fn joint_observation(s: &Scenario, st: &EnvState) -> Result<Vec<Observation>, MaddpgError> {
    (0..s.dwellings.len()).map(|i| observe(s, st, i).map_err(Into::into)).collect()
}

fn concat(obs: &[Observation]) -> Vec<f64> {
    obs.iter().flat_map(|o| o.as_slice().iter().copied()).collect()
}

pub fn train(s: &Scenario, hp: &Hyperparams, weights: &RewardWeights, rbc: &RbcConfig) -> Result<TrainOutcome, MaddpgError> {
    let layout = CommunityLayout::from_scenario(s);
    train_with_agents(s, init_agents(&layout, hp), hp, weights, rbc, &mut |_| {})
}

/// Trains `agents` in place of fresh ones. `on_episode` receives the log rows
/// of each finished episode.
pub fn train_with_agents(
    s: &Scenario,
    mut agents: Vec<Agent>,
    hp: &Hyperparams,
    weights: &RewardWeights,
    rbc: &RbcConfig,
    on_episode: &mut dyn FnMut(&[LogRow]),
) -> Result<TrainOutcome, MaddpgError> {
    hp.validate()?;
    weights.validate().map_err(MaddpgError::InvalidHyperparams)?;
    rbc.validate().map_err(MaddpgError::InvalidHyperparams)?;
    envsim::reset(s)?;
    let layout = CommunityLayout::from_scenario(s);
    if agents.len() != layout.n_agents()
        || agents
            .iter()
            .enumerate()
            .any(|(i, a)| a.obs_dim() != layout.obs_dims[i] || a.action_dim() != layout.action_dims[i])
    {
        return Err(MaddpgError::ShapeMismatch("agents do not match the scenario layout".into()));
    }
    let schedule = ExplorationSchedule::resolve(hp, s.horizon_steps);
    let model = RewardModel::new(s, *weights);
    let mut buffer = ReplayBuffer::new(layout.clone(), hp.buffer_capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed ^ 0x5e_ed0f_7a11);
    let n = layout.n_agents();
    let mut log = TrainingLog::default();
    let mut global_step = 0usize;
    let mut updates = 0u64;

    for episode in 0..hp.episodes {
        let mut state = envsim::reset(s)?;
        let mut obs = joint_observation(s, &state)?;
        let mut prev_net: Option<f64> = None;
        let mut reward_sum = vec![0.0; n];
        let mut loss_sum = vec![0.0; n];
        let mut loss_count = 0usize;
        while state.t < s.horizon_steps {
            let t = state.t;
            let mut actions = Vec::with_capacity(n);
            for (i, agent) in agents.iter().enumerate() {
                let rule = rbc_action(rbc, &DwellingContext::from_state(s, &state, i));
                actions.push(explore_action(agent, &obs[i], global_step, &rule, &schedule, &mut rng)?);
            }
            let joint = JointAction(actions);
            let r = envsim::step(s, &state, &joint)?;
            let rewards = model.agent_rewards(s, t, &r, prev_net.unwrap_or(r.community_net));
            prev_net = Some(r.community_net);
            let done = r.next.t >= s.horizon_steps;
            let next_obs = if done {
                layout.obs_dims.iter().map(|&d| Observation(vec![0.0; d])).collect()
            } else {
                joint_observation(s, &r.next)?
            };
            for (acc, rw) in reward_sum.iter_mut().zip(&rewards) {
                *acc += rw.total;
            }
            buffer.push(Experience {
                state: concat(&obs),
                action: joint.0.iter().flatten().copied().collect(),
                rewards: rewards.iter().map(|r| r.total).collect(),
                next_state: concat(&next_obs),
                done,
            })?;
            state = r.next;
            obs = next_obs;
            global_step += 1;

            if buffer.len() >= hp.batch_size {
                for _ in 0..hp.updates_per_step {
                    let records = sample_batch(&buffer, hp.batch_size, &mut rng)?;
                    let batch = Batch::from_experiences(&records)?;
                    let next_actions = target_next_actions(&agents, &layout, &batch)?;
                    updates += 1;
                    for agent in agents.iter_mut() {
                        let loss = critic_update(agent, &batch, &next_actions, hp)?;
                        let objective = actor_update(agent, &layout, &batch)?;
                        soft_update_targets(agent, hp.tau)?;
                        if !loss.is_finite() || !objective.is_finite() || !agent.is_finite() {
                            return Err(MaddpgError::Divergence {
                                agent: agent.index,
                                update_count: updates,
                                what: format!("td loss {loss}, objective {objective}"),
                            });
                        }
                        loss_sum[agent.index] += loss;
                    }
                    loss_count += 1;
                }
            }
        }
        let sigma = if global_step <= schedule.warmup_steps { 0.0 } else { sigma_at(&schedule, global_step - 1) };
        let rows: Vec<LogRow> = (0..n)
            .map(|i| LogRow {
                episode,
                agent: i,
                mean_reward: reward_sum[i] / s.horizon_steps as f64,
                mean_td_loss: (loss_count > 0).then(|| loss_sum[i] / loss_count as f64),
                sigma,
            })
            .collect();
        info!(
            "episode {episode}: mean reward {:.4}, updates {updates}",
            rows.iter().map(|r| r.mean_reward).sum::<f64>() / n as f64
        );
        debug!("episode {episode} rows {rows:?}");
        on_episode(&rows);
        log.rows.extend(rows);
    }
    Ok(TrainOutcome { agents, log, updates })
}

/// One noise-free episode in which every agent acts on its own observation
/// only.
pub fn evaluate_rollout(s: &Scenario, agents: &[Agent]) -> Result<Rollout, MaddpgError> {
    let mut state = envsim::reset(s)?;
    if agents.len() != s.dwellings.len() {
        return Err(MaddpgError::ShapeMismatch(format!("{} agents for {} dwellings", agents.len(), s.dwellings.len())));
    }
    let mut out = Rollout {
        trace: empty_trace(s),
        departures: Vec::new(),
        charger_energy: Vec::with_capacity(s.horizon_steps),
    };
    while state.t < s.horizon_steps {
        let actions = agents
            .iter()
            .enumerate()
            .map(|(i, agent)| select_action(agent, &observe(s, &state, i)?))
            .collect::<Result<Vec<_>, MaddpgError>>()?;
        let r = envsim::step(s, &state, &JointAction(actions))?;
        record_step(&mut out, s, state.t, &r);
        state = r.next;
    }
    Ok(out)
}

pub fn evaluate_deterministic(s: &Scenario, agents: &[Agent]) -> Result<Trace, MaddpgError> {
    Ok(evaluate_rollout(s, agents)?.trace)
}
