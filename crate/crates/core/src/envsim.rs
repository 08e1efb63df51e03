//! Community environment: asset dynamics, energy balance, step transitions
//! and per-dwelling observations.
//!
//! Stepping is a pure function of `(scenario, state, actions)`. Connection
//! changes happen at step boundaries after energy exchange, so the last
//! connected step of a session is still controllable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kpi::Trace;
use crate::scenario::{validate_scenario, ChargerSpec, Scenario, StorageSpec, Violation};

/// Cap on the hours-until-departure observation before normalization.
pub const DEPARTURE_HORIZON_CAP: usize = 24;
/// Observation entries that do not depend on assets: hour one-hot (24),
/// weekday one-hot (7), load, pv, price, carbon.
pub const BASE_OBS_DIM: usize = 24 + 7 + 4;
pub const CHARGER_OBS_DIM: usize = 4;
pub const STORAGE_OBS_DIM: usize = 1;
/// Initial storage level as a fraction of capacity.
pub const INITIAL_STORAGE_FRACTION: f64 = 0.5;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid scenario: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidScenario(Vec<Violation>),
    #[error("episode finished")]
    EpisodeFinished,
    #[error("dwelling {dwelling}: expected {expected} actions, got {found}")]
    ActionShapeMismatch {
        dwelling: usize,
        expected: usize,
        found: usize,
    },
    #[error("dwelling {dwelling}: non-finite action")]
    NonFiniteAction { dwelling: usize },
    #[error("dwelling index {index} out of range ({len} dwellings)")]
    IndexOutOfRange { index: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargerState {
    pub connected: bool,
    pub soc: f64,
    /// Index into the charger's sessions; present exactly when connected.
    pub active_session: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub t: usize,
    /// `chargers[dwelling][charger]`.
    pub chargers: Vec<Vec<ChargerState>>,
    /// Stored energy per dwelling, kWh; `None` without storage.
    pub storages: Vec<Option<f64>>,
}

/// Fixed-order observation vector of one dwelling.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-dwelling action vectors: one entry per charger, then one for the
/// storage. Entries are clamped to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAction(pub Vec<Vec<f64>>);

impl JointAction {
    pub fn zeros(s: &Scenario) -> Self {
        JointAction(s.dwellings.iter().map(|d| vec![0.0; d.action_dim()]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepartureEvent {
    pub dwelling: usize,
    pub charger_id: String,
    pub achieved_soc: f64,
    pub required_soc: f64,
}

impl DepartureEvent {
    pub fn shortfall(&self) -> f64 {
        (self.required_soc - self.achieved_soc).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    /// Signed net grid exchange per dwelling, kWh (positive = import).
    pub dwelling_net: Vec<f64>,
    pub community_net: f64,
    /// Load plus any charging energy, before PV offsets.
    pub gross_consumption: Vec<f64>,
    /// Grid-side energy per charger, `[dwelling][charger]`.
    pub charger_energy: Vec<Vec<f64>>,
    pub storage_energy: Vec<f64>,
    pub departures: Vec<DepartureEvent>,
    pub next: EnvState,
}

pub fn obs_dim(s: &Scenario, dwelling: usize) -> usize {
    let d = &s.dwellings[dwelling];
    BASE_OBS_DIM + CHARGER_OBS_DIM * d.chargers.len() + STORAGE_OBS_DIM * usize::from(d.heating_storage.is_some())
}

pub fn reset(s: &Scenario) -> Result<EnvState, EnvError> {
    let violations = validate_scenario(s);
    if !violations.is_empty() {
        return Err(EnvError::InvalidScenario(violations));
    }
    Ok(initial_state(s))
}

pub(crate) fn initial_state(s: &Scenario) -> EnvState {
    let chargers = s
        .dwellings
        .iter()
        .map(|d| {
            d.chargers
                .iter()
                .map(|c| match c.sessions.first() {
                    Some(first) if first.arrival_step == 0 => ChargerState {
                        connected: true,
                        soc: first.arrival_soc,
                        active_session: Some(0),
                    },
                    Some(first) => ChargerState {
                        connected: false,
                        soc: first.arrival_soc,
                        active_session: None,
                    },
                    None => ChargerState {
                        connected: false,
                        soc: 0.0,
                        active_session: None,
                    },
                })
                .collect()
        })
        .collect();
    let storages = s
        .dwellings
        .iter()
        .map(|d| d.heating_storage.map(|st| st.capacity_kwh * INITIAL_STORAGE_FRACTION))
        .collect();
    EnvState { t: 0, chargers, storages }
}

/// Applies one charger action, returning the new state and grid-side energy
/// (kWh, positive = drawn from the grid). Disconnected chargers ignore the
/// action.
pub fn apply_charger_action(cs: &ChargerState, spec: &ChargerSpec, action: f64, dt: f64) -> (ChargerState, f64) {
    if !cs.connected {
        return (cs.clone(), 0.0);
    }
    let a = action.clamp(-1.0, 1.0);
    let cap = spec.battery_capacity_kwh;
    let mut next = cs.clone();
    let grid = if a >= 0.0 {
        let requested = a * spec.max_charge_kw * dt;
        let room = ((1.0 - cs.soc) * cap).max(0.0);
        let gain = (requested * spec.charge_efficiency).min(room);
        next.soc = if gain >= room { 1.0 } else { cs.soc + gain / cap };
        gain / spec.charge_efficiency
    } else {
        let requested = -a * spec.max_discharge_kw * dt;
        let available = (cs.soc * cap).max(0.0);
        let draw = requested.min(available);
        next.soc = if draw >= available { 0.0 } else { cs.soc - draw / cap };
        -(draw * spec.discharge_efficiency)
    };
    next.soc = next.soc.clamp(0.0, 1.0);
    (next, grid)
}

/// Applies one storage action with the round-trip efficiency split evenly
/// between the two directions, then the standing loss.
pub fn apply_storage_action(level_kwh: f64, spec: &StorageSpec, action: f64, dt: f64) -> (f64, f64) {
    let a = action.clamp(-1.0, 1.0);
    let eta = spec.round_trip_efficiency.sqrt();
    let cap = spec.capacity_kwh;
    let (level, grid) = if a >= 0.0 {
        let room = (cap - level_kwh).max(0.0);
        let gain = (a * spec.max_power_kw * dt * eta).min(room);
        (level_kwh + gain, gain / eta)
    } else {
        let draw = (-a * spec.max_power_kw * dt).min(level_kwh.max(0.0));
        (level_kwh - draw, -(draw * eta))
    };
    let level = (level - spec.loss_per_step * level).clamp(0.0, cap);
    (level, grid)
}

pub fn step(s: &Scenario, st: &EnvState, actions: &JointAction) -> Result<StepResult, EnvError> {
    let t = st.t;
    if t >= s.horizon_steps {
        return Err(EnvError::EpisodeFinished);
    }
    if actions.0.len() != s.dwellings.len() {
        return Err(EnvError::ActionShapeMismatch {
            dwelling: actions.0.len().min(s.dwellings.len()),
            expected: s.dwellings.len(),
            found: actions.0.len(),
        });
    }
    for (i, (d, a)) in s.dwellings.iter().zip(&actions.0).enumerate() {
        if a.len() != d.action_dim() {
            return Err(EnvError::ActionShapeMismatch {
                dwelling: i,
                expected: d.action_dim(),
                found: a.len(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(EnvError::NonFiniteAction { dwelling: i });
        }
    }

    let dt = s.step_hours;
    let n = s.dwellings.len();
    let mut next = st.clone();
    next.t = t + 1;
    let mut dwelling_net = Vec::with_capacity(n);
    let mut gross_consumption = Vec::with_capacity(n);
    let mut charger_energy = Vec::with_capacity(n);
    let mut storage_energy = Vec::with_capacity(n);
    let mut departures = Vec::new();

    for (i, d) in s.dwellings.iter().enumerate() {
        let load = d.non_shiftable_load[t];
        let mut net = load - d.pv_generation[t];
        let mut gross = load;
        let mut energies = Vec::with_capacity(d.chargers.len());
        for (c, spec) in d.chargers.iter().enumerate() {
            let (cs, grid) = apply_charger_action(&st.chargers[i][c], spec, actions.0[i][c], dt);
            next.chargers[i][c] = cs;
            net += grid;
            gross += grid.max(0.0);
            energies.push(grid);
        }
        let mut storage_grid = 0.0;
        if let (Some(spec), Some(level)) = (&d.heating_storage, st.storages[i]) {
            let (lvl, grid) = apply_storage_action(level, spec, actions.0[i][d.chargers.len()], dt);
            next.storages[i] = Some(lvl);
            storage_grid = grid;
            net += grid;
            gross += grid.max(0.0);
        }
        dwelling_net.push(net);
        gross_consumption.push(gross);
        charger_energy.push(energies);
        storage_energy.push(storage_grid);

        // Connection transitions at the t -> t+1 boundary.
        for (c, spec) in d.chargers.iter().enumerate() {
            let cs = &mut next.chargers[i][c];
            if let Some(k) = cs.active_session {
                let sess = &spec.sessions[k];
                if sess.departure_step == t + 1 {
                    departures.push(DepartureEvent {
                        dwelling: i,
                        charger_id: spec.id.clone(),
                        achieved_soc: cs.soc,
                        required_soc: sess.required_soc_departure,
                    });
                    cs.connected = false;
                    cs.active_session = None;
                }
            }
            if let Some(k) = spec.session_arriving_at(t + 1) {
                cs.connected = true;
                cs.soc = spec.sessions[k].arrival_soc;
                cs.active_session = Some(k);
            }
        }
    }
    let community_net = dwelling_net.iter().sum();
    Ok(StepResult {
        dwelling_net,
        community_net,
        gross_consumption,
        charger_energy,
        storage_energy,
        departures,
        next,
    })
}

/// Builds dwelling `index`'s local observation at the current step.
pub fn observe(s: &Scenario, st: &EnvState, index: usize) -> Result<Observation, EnvError> {
    let d = s.dwellings.get(index).ok_or(EnvError::IndexOutOfRange {
        index,
        len: s.dwellings.len(),
    })?;
    let t = st.t;
    if t >= s.horizon_steps {
        return Err(EnvError::EpisodeFinished);
    }
    let mut v = vec![0.0; obs_dim(s, index)];
    let cal = s.calendar[t];
    v[cal.hour as usize] = 1.0;
    v[24 + cal.weekday as usize] = 1.0;
    v[31] = d.non_shiftable_load[t];
    v[32] = d.pv_generation[t];
    v[33] = s.price[t];
    v[34] = s.carbon_intensity[t];
    let mut k = BASE_OBS_DIM;
    for (c, spec) in d.chargers.iter().enumerate() {
        let cs = &st.chargers[index][c];
        v[k + 1] = cs.soc;
        if let (true, Some(si)) = (cs.connected, cs.active_session) {
            let sess = &spec.sessions[si];
            v[k] = 1.0;
            let hours = sess.departure_step.saturating_sub(t).min(DEPARTURE_HORIZON_CAP);
            v[k + 2] = hours as f64 / DEPARTURE_HORIZON_CAP as f64;
            v[k + 3] = sess.required_soc_departure;
        }
        k += CHARGER_OBS_DIM;
    }
    if let (Some(spec), Some(level)) = (&d.heating_storage, st.storages[index]) {
        v[k] = level / spec.capacity_kwh;
    }
    Ok(Observation(v))
}

/// Full-episode record of a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub trace: Trace,
    /// `(step, event)` for every departure.
    pub departures: Vec<(usize, DepartureEvent)>,
    /// `charger_energy[t][dwelling][charger]`, grid side, kWh.
    pub charger_energy: Vec<Vec<Vec<f64>>>,
}

impl Rollout {
    pub fn mean_departure_shortfall(&self) -> f64 {
        if self.departures.is_empty() {
            return 0.0;
        }
        self.departures.iter().map(|(_, e)| e.shortfall()).sum::<f64>() / self.departures.len() as f64
    }
}

pub(crate) fn empty_trace(s: &Scenario) -> Trace {
    Trace {
        dwelling_ids: s.dwellings.iter().map(|d| d.id.clone()).collect(),
        net: Vec::with_capacity(s.horizon_steps),
        gross: Vec::with_capacity(s.horizon_steps),
        community: Vec::with_capacity(s.horizon_steps),
        price: Vec::with_capacity(s.horizon_steps),
        carbon: Vec::with_capacity(s.horizon_steps),
        steps_per_day: s.steps_per_day(),
    }
}

/// Records one step's outputs into a rollout under construction.
pub(crate) fn record_step(rollout: &mut Rollout, s: &Scenario, t: usize, r: &StepResult) {
    let tr = &mut rollout.trace;
    tr.net.push(r.dwelling_net.clone());
    tr.gross.push(r.gross_consumption.clone());
    tr.community.push(r.community_net);
    tr.price.push(s.price[t]);
    tr.carbon.push(s.carbon_intensity[t]);
    rollout.departures.extend(r.departures.iter().cloned().map(|e| (t, e)));
    rollout.charger_energy.push(r.charger_energy.clone());
}

/// Runs one full episode under `policy`, which sees the whole environment
/// state. Learned actors go through `maddpg::evaluate_deterministic`
/// instead, which only exposes local observations.
pub fn rollout<P>(s: &Scenario, mut policy: P) -> Result<Rollout, EnvError>
where
    P: FnMut(&Scenario, &EnvState) -> JointAction,
{
    let mut state = reset(s)?;
    let mut out = Rollout {
        trace: empty_trace(s),
        departures: Vec::new(),
        charger_energy: Vec::with_capacity(s.horizon_steps),
    };
    while state.t < s.horizon_steps {
        let actions = policy(s, &state);
        let r = step(s, &state, &actions)?;
        record_step(&mut out, s, state.t, &r);
        state = r.next;
    }
    Ok(out)
}
