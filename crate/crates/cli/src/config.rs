//! Run configuration: a flat TOML table whose keys cover the training
//! hyperparameters, reward weights, controller hours and run plumbing.
//! Precedence is command-line flag, then file, then built-in default.

use std::path::{Path, PathBuf};

use energaize_core::maddpg::Hyperparams;
use energaize_core::rbc::RbcConfig;
use energaize_core::reward::RewardWeights;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::CliError;

/// Every key accepted in a config file, all optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatConfig {
    pub scenario: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,

    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    pub batch_size: Option<usize>,
    pub buffer_capacity: Option<usize>,
    pub warmup_steps: Option<usize>,
    pub noise_sigma_start: Option<f64>,
    pub noise_sigma_end: Option<f64>,
    pub noise_decay_steps: Option<usize>,
    pub updates_per_step: Option<usize>,
    pub actor_hidden: Option<Vec<usize>>,
    pub critic_units: Option<Vec<usize>>,
    pub lr_actor: Option<f64>,
    pub lr_critic: Option<f64>,
    pub adam_beta1: Option<f64>,
    pub adam_beta2: Option<f64>,
    pub adam_eps: Option<f64>,
    pub episodes: Option<usize>,
    pub noise_on_observations: Option<bool>,

    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub zeta: Option<f64>,
    pub ev_shortfall_scale: Option<f64>,
    pub rec_square_scale: Option<f64>,

    pub cheap_hours: Option<Vec<u32>>,
    pub storage_charge_hours: Option<Vec<u32>>,
    pub storage_discharge_hours: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    pub weights: RewardWeights,
    pub rbc: RbcConfig,
}

/// Values given directly on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub episodes: Option<usize>,
    /// `key=value` pairs; the value uses TOML syntax, bare words are strings.
    pub set: Vec<String>,
}

pub const DEFAULT_OUT: &str = "energaize-out";

fn parse_value(raw: &str) -> Value {
    match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn config_err(source: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{source}: {message}"))
}

/// Reads the config file (if any), applies overrides and resolves defaults.
pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => {
            let source = p.display().to_string();
            let text = std::fs::read_to_string(p).map_err(|e| config_err(&source, e))?;
            parse(&text, &source, p.parent().unwrap_or(Path::new("")), overrides)
        }
        None => parse("", "config", Path::new(""), overrides),
    }
}

/// Parses flat TOML config text. Relative paths in it are taken relative to
/// `base_dir`; `source` names the text in error messages.
pub fn parse(text: &str, source: &str, base_dir: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut table: Table = toml::from_str(text).map_err(|e| config_err(source, e))?;
    for key in ["scenario", "out"] {
        if let Some(Value::String(s)) = table.get(key) {
            let p = Path::new(s);
            if p.is_relative() {
                let joined = base_dir.join(p).display().to_string();
                table.insert(key.into(), Value::String(joined));
            }
        }
    }
    for kv in &overrides.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| config_err("--set", format!("`{kv}` is not key=value")))?;
        table.insert(k.trim().to_string(), parse_value(v.trim()));
    }
    let mut flat: FlatConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| config_err(source, e))?;
    if let Some(s) = &overrides.scenario {
        flat.scenario = Some(s.clone());
    }
    if let Some(o) = &overrides.out {
        flat.out = Some(o.clone());
    }
    if let Some(s) = overrides.seed {
        flat.seed = Some(s);
    }
    if let Some(e) = overrides.episodes {
        flat.episodes = Some(e);
    }
    resolve(flat)
}

pub fn resolve(flat: FlatConfig) -> Result<RunConfig, CliError> {
    let scenario = flat
        .scenario
        .clone()
        .ok_or_else(|| CliError::Config("no scenario given (set `scenario` in the config or pass --scenario)".into()))?;
    let d = Hyperparams::default();
    let seed = flat.seed.unwrap_or(d.seed);
    let hyperparams = Hyperparams {
        gamma: flat.gamma.unwrap_or(d.gamma),
        tau: flat.tau.unwrap_or(d.tau),
        batch_size: flat.batch_size.unwrap_or(d.batch_size),
        buffer_capacity: flat.buffer_capacity.unwrap_or(d.buffer_capacity),
        warmup_steps: flat.warmup_steps.or(d.warmup_steps),
        noise_sigma_start: flat.noise_sigma_start.unwrap_or(d.noise_sigma_start),
        noise_sigma_end: flat.noise_sigma_end.unwrap_or(d.noise_sigma_end),
        noise_decay_steps: flat.noise_decay_steps.or(d.noise_decay_steps),
        updates_per_step: flat.updates_per_step.unwrap_or(d.updates_per_step),
        actor_hidden: flat.actor_hidden.clone().unwrap_or(d.actor_hidden),
        critic_units: flat.critic_units.clone().unwrap_or(d.critic_units),
        lr_actor: flat.lr_actor.unwrap_or(d.lr_actor),
        lr_critic: flat.lr_critic.unwrap_or(d.lr_critic),
        adam_beta1: flat.adam_beta1.unwrap_or(d.adam_beta1),
        adam_beta2: flat.adam_beta2.unwrap_or(d.adam_beta2),
        adam_eps: flat.adam_eps.unwrap_or(d.adam_eps),
        episodes: flat.episodes.unwrap_or(d.episodes),
        noise_on_observations: flat.noise_on_observations.unwrap_or(d.noise_on_observations),
        seed,
    };
    hyperparams.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let w = RewardWeights::default();
    let weights = RewardWeights {
        alpha: flat.alpha.unwrap_or(w.alpha),
        beta: flat.beta.unwrap_or(w.beta),
        zeta: flat.zeta.unwrap_or(w.zeta),
        ev_shortfall_scale: flat.ev_shortfall_scale.unwrap_or(w.ev_shortfall_scale),
        rec_square_scale: flat.rec_square_scale.unwrap_or(w.rec_square_scale),
    };
    weights.validate().map_err(CliError::Config)?;
    let r = RbcConfig::default();
    let rbc = RbcConfig {
        cheap_hours: flat.cheap_hours.unwrap_or(r.cheap_hours),
        storage_charge_hours: flat.storage_charge_hours.unwrap_or(r.storage_charge_hours),
        storage_discharge_hours: flat.storage_discharge_hours.unwrap_or(r.storage_discharge_hours),
    };
    rbc.validate().map_err(CliError::Config)?;
    let scenario = std::path::absolute(&scenario).unwrap_or(scenario);
    Ok(RunConfig {
        scenario,
        out: {
            let out = flat.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            std::path::absolute(&out).unwrap_or(out)
        },
        seed,
        hyperparams,
        weights,
        rbc,
    })
}

impl RunConfig {
    /// Fully resolved flat form; writing it back reproduces this config.
    pub fn to_flat(&self) -> FlatConfig {
        let hp = &self.hyperparams;
        FlatConfig {
            scenario: Some(self.scenario.clone()),
            out: Some(self.out.clone()),
            seed: Some(self.seed),
            gamma: Some(hp.gamma),
            tau: Some(hp.tau),
            batch_size: Some(hp.batch_size),
            buffer_capacity: Some(hp.buffer_capacity),
            warmup_steps: hp.warmup_steps,
            noise_sigma_start: Some(hp.noise_sigma_start),
            noise_sigma_end: Some(hp.noise_sigma_end),
            noise_decay_steps: hp.noise_decay_steps,
            updates_per_step: Some(hp.updates_per_step),
            actor_hidden: Some(hp.actor_hidden.clone()),
            critic_units: Some(hp.critic_units.clone()),
            lr_actor: Some(hp.lr_actor),
            lr_critic: Some(hp.lr_critic),
            adam_beta1: Some(hp.adam_beta1),
            adam_beta2: Some(hp.adam_beta2),
            adam_eps: Some(hp.adam_eps),
            episodes: Some(hp.episodes),
            noise_on_observations: Some(hp.noise_on_observations),
            alpha: Some(self.weights.alpha),
            beta: Some(self.weights.beta),
            zeta: Some(self.weights.zeta),
            ev_shortfall_scale: Some(self.weights.ev_shortfall_scale),
            rec_square_scale: Some(self.weights.rec_square_scale),
            cheap_hours: Some(self.rbc.cheap_hours.clone()),
            storage_charge_hours: Some(self.rbc.storage_charge_hours.clone()),
            storage_discharge_hours: Some(self.rbc.storage_discharge_hours.clone()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_flat()).expect("flat config serializes")
    }

    /// Hash of everything that affects results; the output directory is
    /// excluded so moving a run does not change it.
    pub fn hash(&self) -> String {
        let mut flat = self.to_flat();
        flat.out = None;
        let json = serde_json::to_string(&flat).expect("serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
