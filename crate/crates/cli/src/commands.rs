//! The subcommands. Each writes into its own directory under the run's
//! output root together with a `manifest.json` and the resolved
//! `config.toml`, so any output can be regenerated with
//! `energaize <command> --config <dir>/config.toml`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use energaize_core::envsim::{self, Rollout};
use energaize_core::kpi::{build_report, KpiReport, Trace};
use energaize_core::maddpg::{self, evaluate_rollout, init_agents, load_agents, save_agents, CommunityLayout, Hyperparams};
use energaize_core::rbc::plug_and_charge_joint_action;
use energaize_core::scenario::{generate_synthetic, load_scenario, write_scenario, Scenario};
use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_COPY: &str = "config.toml";
pub const TRACE: &str = "trace.csv";
pub const CHARGERS: &str = "chargers.csv";
pub const DEPARTURES: &str = "departures.csv";
pub const TRAINING_LOG: &str = "training_log.csv";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub reproduce: String,
    pub config_hash: String,
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    /// Inputs this output was derived from, by role, with their SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Files written next to the manifest, with their SHA-256.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(dir: &Path, name: &str, text: &str, files: &mut BTreeMap<String, String>) -> Result<(), CliError> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| CliError::input(&p, e))?;
    files.insert(name.to_string(), sha256_hex(text.as_bytes()));
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::input(dir, e))
}

fn read_text(p: &Path) -> Result<String, CliError> {
    fs::read_to_string(p).map_err(|e| CliError::input(p, e))
}

struct Output<'a> {
    cfg: &'a RunConfig,
    scenario_hash: String,
    command: &'static str,
    dir: PathBuf,
    inputs: BTreeMap<String, String>,
    files: BTreeMap<String, String>,
}

impl<'a> Output<'a> {
    fn new(cfg: &'a RunConfig, scenario: &Scenario, command: &'static str, sub: &str) -> Result<Self, CliError> {
        let dir = cfg.out.join(sub);
        create_dir(&dir)?;
        Ok(Self {
            cfg,
            scenario_hash: scenario.content_hash(),
            command,
            dir,
            inputs: BTreeMap::new(),
            files: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        write_file(&self.dir, name, text, &mut self.files)
    }

    fn finish(mut self) -> Result<PathBuf, CliError> {
        let config = self.cfg.to_toml();
        self.write(CONFIG_COPY, &config)?;
        let manifest = Manifest {
            tool: "energaize".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            reproduce: format!("energaize {} --config {}", self.command, self.dir.join(CONFIG_COPY).display()),
            config_hash: self.cfg.hash(),
            scenario: self.cfg.scenario.display().to_string(),
            scenario_hash: self.scenario_hash.clone(),
            seed: self.cfg.seed,
            hyperparams: self.cfg.hyperparams.clone(),
            inputs: self.inputs,
            files: self.files,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let p = self.dir.join(MANIFEST);
        fs::write(&p, text).map_err(|e| CliError::input(&p, e))?;
        Ok(self.dir)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let p = dir.join(MANIFEST);
    let text = read_text(&p)?;
    serde_json::from_str(&text).map_err(|e| CliError::input(&p, e))
}

pub fn load_validated_scenario(cfg: &RunConfig) -> Result<Scenario, CliError> {
    let s = load_scenario(&cfg.scenario)?;
    envsim::reset(&s)?;
    Ok(s)
}

pub fn chargers_csv(s: &Scenario, r: &Rollout) -> String {
    let mut out = String::from("step,dwelling_id,charger_id,energy_kwh\n");
    for (t, step) in r.charger_energy.iter().enumerate() {
        for (d, energies) in step.iter().enumerate() {
            for (c, e) in energies.iter().enumerate() {
                out.push_str(&format!("{t},{},{},{e}\n", s.dwellings[d].id, s.dwellings[d].chargers[c].id));
            }
        }
    }
    out
}

pub fn departures_csv(s: &Scenario, r: &Rollout) -> String {
    let mut out = String::from("step,dwelling_id,charger_id,achieved_soc,required_soc,shortfall\n");
    for (t, e) in &r.departures {
        out.push_str(&format!(
            "{t},{},{},{},{},{}\n",
            s.dwellings[e.dwelling].id,
            e.charger_id,
            e.achieved_soc,
            e.required_soc,
            e.shortfall()
        ));
    }
    out
}

fn write_rollout(o: &mut Output<'_>, s: &Scenario, r: &Rollout) -> Result<(), CliError> {
    o.write(TRACE, &r.trace.to_csv())?;
    o.write(CHARGERS, &chargers_csv(s, r))?;
    o.write(DEPARTURES, &departures_csv(s, r))
}

/// Simulates the no-control policy and writes `<out>/baseline/`.
pub fn cmd_baseline(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let s = load_validated_scenario(cfg)?;
    let r = envsim::rollout(&s, plug_and_charge_joint_action)?;
    let mut o = Output::new(cfg, &s, "baseline", "baseline")?;
    write_rollout(&mut o, &s, &r)?;
    info!("baseline: {} steps, mean departure shortfall {:.4}", r.trace.len(), r.mean_departure_shortfall());
    o.finish()
}

/// Trains the agents and writes `<out>/checkpoint/` and `<out>/train/`.
pub fn cmd_train(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let s = load_validated_scenario(cfg)?;
    let layout = CommunityLayout::from_scenario(&s);
    let hp = &cfg.hyperparams;
    let mut on_episode = |rows: &[maddpg::LogRow]| {
        let mean = rows.iter().map(|r| r.mean_reward).sum::<f64>() / rows.len().max(1) as f64;
        info!("episode {} done, mean reward {mean:.4}", rows.first().map_or(0, |r| r.episode));
    };
    let out = maddpg::train_with_agents(&s, init_agents(&layout, hp), hp, &cfg.weights, &cfg.rbc, &mut on_episode)?;

    let mut ck = Output::new(cfg, &s, "train", "checkpoint")?;
    save_agents(&ck.dir, &out.agents)?;
    for i in 0..out.agents.len() {
        for suffix in maddpg::AGENT_FILES {
            let name = format!("agent{i}_{suffix}.json");
            let text = read_text(&ck.dir.join(&name))?;
            ck.files.insert(name, sha256_hex(text.as_bytes()));
        }
    }
    let ck_dir = ck.finish()?;

    let mut tr = Output::new(cfg, &s, "train", "train")?;
    tr.write(TRAINING_LOG, &out.log.to_csv())?;
    tr.inputs.insert("checkpoint_manifest".into(), sha256_hex(read_text(&ck_dir.join(MANIFEST))?.as_bytes()));
    tr.finish()?;
    Ok(ck_dir)
}

/// Runs the deterministic evaluation episode and writes `<out>/eval/`.
/// Fails with a mismatch before writing anything when the checkpoint was
/// trained on a different scenario.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<PathBuf, CliError> {
    let s = load_validated_scenario(cfg)?;
    let ck_dir = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| cfg.out.join("checkpoint"));
    let manifest = read_manifest(&ck_dir)?;
    let hash = s.content_hash();
    if manifest.scenario_hash != hash {
        return Err(CliError::Mismatch(format!(
            "checkpoint {} was trained on scenario {} but the config's scenario hashes to {}",
            ck_dir.display(),
            manifest.scenario_hash,
            hash
        )));
    }
    let agents = load_agents(&ck_dir, &CommunityLayout::from_scenario(&s))?;
    let r = evaluate_rollout(&s, &agents)?;
    let mut o = Output::new(cfg, &s, "eval", "eval")?;
    o.inputs.insert("checkpoint_manifest".into(), sha256_hex(read_text(&ck_dir.join(MANIFEST))?.as_bytes()));
    write_rollout(&mut o, &s, &r)?;
    info!("eval: mean departure shortfall {:.4}", r.mean_departure_shortfall());
    o.finish()
}

pub fn read_trace(path: &Path, steps_per_day: usize) -> Result<Trace, CliError> {
    let text = read_text(path)?;
    Trace::from_csv(&text, steps_per_day).map_err(|e| CliError::input(path, e))
}

/// Compares a controlled trace against the baseline and writes
/// `<out>/report/`.
pub fn cmd_report(cfg: &RunConfig, baseline: Option<&Path>, controlled: Option<&Path>) -> Result<(PathBuf, KpiReport), CliError> {
    let s = load_scenario(&cfg.scenario)?;
    let b_path = baseline.map(Path::to_path_buf).unwrap_or_else(|| cfg.out.join("baseline").join(TRACE));
    let c_path = controlled.map(Path::to_path_buf).unwrap_or_else(|| cfg.out.join("eval").join(TRACE));
    let spd = s.steps_per_day();
    let b = read_trace(&b_path, spd)?;
    let c = read_trace(&c_path, spd)?;
    let report = build_report(&c, &b, &s).map_err(|e| CliError::input(&c_path, e))?;
    let mut o = Output::new(cfg, &s, "report", "report")?;
    for (role, p) in [("baseline_trace", &b_path), ("controlled_trace", &c_path)] {
        o.inputs.insert(role.into(), sha256_hex(read_text(p)?.as_bytes()));
    }
    o.write(REPORT_CSV, &report.to_csv())?;
    o.write(REPORT_TXT, &report.to_text())?;
    Ok((o.finish()?, report))
}

/// Baseline, training, evaluation and report in one go.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<KpiReport, CliError> {
    cmd_baseline(cfg)?;
    cmd_train(cfg)?;
    cmd_eval(cfg, None)?;
    Ok(cmd_report(cfg, None, None)?.1)
}

/// Writes a synthetic scenario (descriptor plus CSV series) into `dir`.
pub fn cmd_synth(dir: &Path, seed: u64, dwellings: usize, days: usize) -> Result<PathBuf, CliError> {
    if dwellings == 0 || days == 0 {
        return Err(CliError::Config("--dwellings and --days must be at least 1".into()));
    }
    Ok(write_scenario(&generate_synthetic(seed, dwellings, days), dir)?)
}

/// Trace of the all-zero-action policy, used to check evaluation plumbing.
pub fn idle_trace(s: &Scenario) -> Result<Trace, CliError> {
    Ok(envsim::rollout(s, |s, _| envsim::JointAction::zeros(s))?.trace)
}

pub fn load_training_log(dir: &Path) -> Result<String, CliError> {
    read_text(&dir.join(TRAINING_LOG))
}
