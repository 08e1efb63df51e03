use ndarray::{s, Array1, Array2, Axis};

use super::{Agent, Batch, CommunityLayout, Hyperparams, MaddpgError};
use crate::neural::adam_step;

/// Next joint action `A'` from every agent's target actor applied to its own
/// slice of the next joint state.
pub fn target_next_actions(agents: &[Agent], layout: &CommunityLayout, batch: &Batch) -> Result<Array2<f64>, MaddpgError> {
    if agents.len() != layout.n_agents() || batch.next_state.ncols() != layout.state_dim() {
        return Err(MaddpgError::ShapeMismatch("batch or agents do not match the layout".into()));
    }
    let mut out = Array2::zeros((batch.len(), layout.joint_action_dim()));
    for (j, agent) in agents.iter().enumerate() {
        let (o, w) = (layout.obs_offsets[j], layout.obs_dims[j]);
        let obs = batch.next_state.slice(s![.., o..o + w]);
        let a = agent.target_actor.predict_batch(obs)?;
        let (ao, aw) = (layout.action_offsets[j], layout.action_dims[j]);
        out.slice_mut(s![.., ao..ao + aw]).assign(&a);
    }
    Ok(out)
}

/// `y = R^i + γ (1 - done) Q'_i(S', A')`, with terminal records and `γ = 0`
/// yielding the reward exactly.
pub fn bellman_targets(agent: &Agent, batch: &Batch, next_actions: &Array2<f64>, gamma: f64) -> Result<Array1<f64>, MaddpgError> {
    let r = batch.rewards.column(agent.index);
    if gamma == 0.0 || batch.done.iter().all(|d| *d != 0.0) {
        return Ok(r.to_owned());
    }
    let q_next = agent.target_critic.predict(batch.next_state.view(), next_actions.view())?;
    Ok(Array1::from_iter(
        r.iter()
            .zip(batch.done.iter())
            .zip(q_next.column(0))
            .map(|((&r, &d), &q)| if d != 0.0 { r } else { r + gamma * q }),
    ))
}

/// One Adam step on the critic against the mean squared TD error; returns
/// the loss before the step.
pub fn critic_update(agent: &mut Agent, batch: &Batch, next_actions: &Array2<f64>, hp: &Hyperparams) -> Result<f64, MaddpgError> {
    if batch.is_empty() {
        return Err(MaddpgError::InsufficientExperiences { have: 0, need: 1 });
    }
    let y = bellman_targets(agent, batch, next_actions, hp.gamma)?;
    let (q, cache) = agent.critic.forward(batch.state.view(), batch.action.view())?;
    let n = batch.len() as f64;
    let err = &q.column(0) - &y;
    let loss = err.iter().map(|e| e * e).sum::<f64>() / n;
    let dq = (err * (2.0 / n)).insert_axis(Axis(1));
    let (grads, _) = agent.critic.backward(&cache, dq.view())?;
    agent.critic_opt.step(&mut agent.critic, &grads)?;
    Ok(loss)
}

/// One Adam ascent step on the actor through the critic's action gradient.
/// Other agents' slots keep the stored actions. Returns the objective
/// `J = mean Q_i(S, A)` before the step.
pub fn actor_update(agent: &mut Agent, layout: &CommunityLayout, batch: &Batch) -> Result<f64, MaddpgError> {
    if batch.is_empty() {
        return Err(MaddpgError::InsufficientExperiences { have: 0, need: 1 });
    }
    let i = agent.index;
    let (o, w) = (layout.obs_offsets[i], layout.obs_dims[i]);
    let (ao, aw) = (layout.action_offsets[i], layout.action_dims[i]);
    if batch.state.ncols() != layout.state_dim() || batch.action.ncols() != layout.joint_action_dim() {
        return Err(MaddpgError::ShapeMismatch("batch does not match the layout".into()));
    }
    let (a_i, actor_cache) = agent.actor.forward_batch(batch.state.slice(s![.., o..o + w]))?;
    let mut joint = batch.action.clone();
    joint.slice_mut(s![.., ao..ao + aw]).assign(&a_i);
    let (q, critic_cache) = agent.critic.forward(batch.state.view(), joint.view())?;
    let n = batch.len() as f64;
    let objective = q.sum() / n;
    // Descent on -J.
    let dq = Array2::from_elem((batch.len(), 1), -1.0 / n);
    let da = agent.critic.action_gradient(&critic_cache, dq.view())?;
    let da_i = da.slice(s![.., ao..ao + aw]);
    let (grads, _) = agent.actor.backward_batch(&actor_cache, da_i)?;
    adam_step(&mut agent.actor, &grads, &mut agent.actor_opt)?;
    Ok(objective)
}

pub fn soft_update_targets(agent: &mut Agent, tau: f64) -> Result<(), MaddpgError> {
    agent.target_actor.soft_update(&agent.actor, tau)?;
    agent.target_critic.soft_update(&agent.critic, tau)?;
    Ok(())
}
