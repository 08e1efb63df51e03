//! Per-agent network files. Floats are written in shortest round-trip form,
//! so loading reproduces every parameter bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Agent, CommunityLayout, Critic, CriticOptimizer, MaddpgError};
use crate::neural::{AdamCheckpoint, AdamState, Mlp, MlpCheckpoint};

pub const CRITIC_FORMAT: &str = "energaize-critic/1";
pub const OPTIM_FORMAT: &str = "energaize-optim/1";

/// File suffixes written for each agent, as `agent{i}_{suffix}.json`.
pub const AGENT_FILES: [&str; 5] = ["actor", "critic", "target_actor", "target_critic", "optim"];

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CriticFile {
    format: String,
    state_layer: MlpCheckpoint,
    head: MlpCheckpoint,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimFile {
    format: String,
    actor: AdamCheckpoint,
    critic_state_layer: AdamCheckpoint,
    critic_head: AdamCheckpoint,
}

fn critic_json(c: &Critic) -> String {
    serde_json::to_string(&CriticFile {
        format: CRITIC_FORMAT.into(),
        state_layer: c.state_layer.to_checkpoint(),
        head: c.head.to_checkpoint(),
    })
    .expect("serializes")
}

pub fn critic_from_json(text: &str) -> Result<Critic, MaddpgError> {
    let f: CriticFile = serde_json::from_str(text).map_err(|e| MaddpgError::Checkpoint(e.to_string()))?;
    if f.format != CRITIC_FORMAT {
        return Err(MaddpgError::Checkpoint(format!("unsupported critic format `{}`", f.format)));
    }
    let state_layer = Mlp::from_checkpoint(f.state_layer)?;
    let head = Mlp::from_checkpoint(f.head)?;
    if head.input_width() < state_layer.output_width() {
        return Err(MaddpgError::Checkpoint(format!(
            "critic head takes {} inputs, fewer than the state layer's {} outputs",
            head.input_width(),
            state_layer.output_width()
        )));
    }
    Ok(Critic { state_layer, head })
}

fn path_of(dir: &Path, i: usize, suffix: &str) -> std::path::PathBuf {
    dir.join(format!("agent{i}_{suffix}.json"))
}

pub fn save_agents(dir: &Path, agents: &[Agent]) -> Result<(), MaddpgError> {
    let io = |p: &Path| {
        let path = p.display().to_string();
        move |source| MaddpgError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for a in agents {
        let optim = OptimFile {
            format: OPTIM_FORMAT.into(),
            actor: a.actor_opt.to_checkpoint(),
            critic_state_layer: a.critic_opt.state_layer.to_checkpoint(),
            critic_head: a.critic_opt.head.to_checkpoint(),
        };
        let files = [
            a.actor.to_json(),
            critic_json(&a.critic),
            a.target_actor.to_json(),
            critic_json(&a.target_critic),
            serde_json::to_string(&optim).expect("serializes"),
        ];
        for (suffix, text) in AGENT_FILES.iter().zip(files) {
            let p = path_of(dir, a.index, suffix);
            fs::write(&p, text).map_err(io(&p))?;
        }
    }
    Ok(())
}

pub fn load_agents(dir: &Path, layout: &CommunityLayout) -> Result<Vec<Agent>, MaddpgError> {
    (0..layout.n_agents())
        .map(|i| {
            agent_from_files(i, layout, |suffix| {
                let p = path_of(dir, i, suffix);
                fs::read_to_string(&p).map_err(|source| MaddpgError::Io {
                    path: p.display().to_string(),
                    source,
                })
            })
        })
        .collect()
}

/// Decodes agent `i` from its files, fetched by suffix through `read`, and
/// checks every shape against `layout`.
pub fn agent_from_files<F>(i: usize, layout: &CommunityLayout, mut read: F) -> Result<Agent, MaddpgError>
where
    F: FnMut(&str) -> Result<String, MaddpgError>,
{
    if i >= layout.n_agents() {
        return Err(MaddpgError::LayoutMismatch(format!("no agent {i} in a {}-agent layout", layout.n_agents())));
    }
    let actor = Mlp::from_json(&read("actor")?)?;
    let target_actor = Mlp::from_json(&read("target_actor")?)?;
    let critic = critic_from_json(&read("critic")?)?;
    let target_critic = critic_from_json(&read("target_critic")?)?;
    let optim: OptimFile =
        serde_json::from_str(&read("optim")?).map_err(|e| MaddpgError::Checkpoint(e.to_string()))?;
    if optim.format != OPTIM_FORMAT {
        return Err(MaddpgError::Checkpoint(format!("unsupported optimizer format `{}`", optim.format)));
    }
    let wrong = |what: &str| MaddpgError::Checkpoint(format!("agent {i}: {what} does not match the scenario layout"));
    if actor.input_width() != layout.obs_dims[i] || actor.output_width() != layout.action_dims[i] {
        return Err(wrong("actor"));
    }
    if target_actor.widths() != actor.widths() {
        return Err(wrong("target actor"));
    }
    let critic_ok = |c: &Critic| {
        c.state_dim() == layout.state_dim()
            && c.action_dim() == layout.joint_action_dim()
            && c.head.output_width() == 1
    };
    if !critic_ok(&critic) || target_critic.state_layer.widths() != critic.state_layer.widths() || target_critic.head.widths() != critic.head.widths() {
        return Err(wrong("critic"));
    }
    Ok(Agent {
        index: i,
        actor_opt: AdamState::from_checkpoint(optim.actor, &actor)?,
        critic_opt: CriticOptimizer {
            state_layer: AdamState::from_checkpoint(optim.critic_state_layer, &critic.state_layer)?,
            head: AdamState::from_checkpoint(optim.critic_head, &critic.head)?,
        },
        actor,
        critic,
        target_actor,
        target_critic,
    })
}
