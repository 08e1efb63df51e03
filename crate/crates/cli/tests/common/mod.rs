#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use energaize_cli::config::{self, Overrides, RunConfig};
use energaize_core::scenario::{
    build_calendar, write_scenario, CalendarStart, ChargerSpec, DwellingSpec, EvSession, Objective, Scenario,
};

pub fn charger(id: &str, kw: f64, sessions: Vec<EvSession>) -> ChargerSpec {
    ChargerSpec {
        id: id.into(),
        max_charge_kw: kw,
        max_discharge_kw: kw,
        battery_capacity_kwh: 40.0,
        charge_efficiency: 1.0,
        discharge_efficiency: 1.0,
        sessions,
    }
}

pub fn session(arrival: usize, departure: usize, soc: f64, required: f64) -> EvSession {
    EvSession {
        arrival_step: arrival,
        departure_step: departure,
        arrival_soc: soc,
        required_soc_departure: required,
    }
}

/// Hourly scenario whose load and PV follow simple deterministic shapes.
pub fn scenario(days: usize, chargers: Vec<Vec<ChargerSpec>>) -> Scenario {
    let horizon = 24 * days;
    let start = CalendarStart {
        start_hour: 0,
        start_weekday: 0,
    };
    let dwellings = chargers
        .into_iter()
        .enumerate()
        .map(|(i, chargers)| DwellingSpec {
            id: format!("d{i}"),
            objective: [Objective::Cost, Objective::Carbon, Objective::SelfConsumption][i % 3],
            non_shiftable_load: (0..horizon).map(|t| 0.5 + ((t * 7 + i * 3) % 11) as f64 * 0.1).collect(),
            pv_generation: (0..horizon)
                .map(|t| (((t % 24) as f64 - 12.0).abs() < 4.0).then_some(1.5).unwrap_or(0.0))
                .collect(),
            heating_storage: None,
            chargers,
        })
        .collect();
    Scenario {
        horizon_steps: horizon,
        step_hours: 1.0,
        calendar_start: start,
        calendar: build_calendar(start, horizon, 1.0),
        price: (0..horizon).map(|t| if t % 24 < 7 { 0.1 } else { 0.3 }).collect(),
        carbon_intensity: vec![0.2; horizon],
        dwellings,
    }
}

/// Writes `s` under `root/<name>` and returns the descriptor path.
pub fn write(s: &Scenario, root: &Path, name: &str) -> PathBuf {
    write_scenario(s, &root.join(name)).unwrap()
}

/// Config with small networks for fast tests.
pub fn quick_config(scenario: &Path, out: &Path, episodes: usize, extra: &[&str]) -> RunConfig {
    let mut set: Vec<String> = ["actor_hidden=[8]", "critic_units=[8,8]", "batch_size=8", "warmup_steps=24"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    set.extend(extra.iter().map(|s| s.to_string()));
    config::load(
        None,
        &Overrides {
            scenario: Some(scenario.to_path_buf()),
            out: Some(out.to_path_buf()),
            seed: Some(1),
            episodes: Some(episodes),
            set,
        },
    )
    .unwrap()
}

pub fn energaize(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_energaize"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}
