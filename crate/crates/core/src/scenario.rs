//! Renewable energy community scenarios: dwellings, assets, EV sessions and
//! the price, carbon and weather-driven time series they share.
//!
//! A scenario on disk is one JSON descriptor plus one CSV file per time
//! series (`step,value` columns). CSV paths inside the descriptor are
//! resolved relative to the descriptor's directory.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const HOURS_PER_DAY: f64 = 24.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("missing file {path}")]
    MissingFile { path: PathBuf },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed descriptor: {0}")]
    Descriptor(String),
    #[error("series `{series}` has {found} rows, expected {expected}")]
    LengthMismatch {
        series: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}{}: {message}", row.map(|r| format!(" (row {r})")).unwrap_or_default())]
    InvariantViolation {
        path: String,
        row: Option<usize>,
        message: String,
    },
}

/// The personal objective a prosumer selects for its dwelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Cost,
    SelfConsumption,
    Carbon,
}

impl Objective {
    /// Short KPI letter used in dwelling-level report headers.
    pub fn kpi_letter(self) -> &'static str {
        match self {
            Objective::Cost => "C",
            Objective::Carbon => "G",
            Objective::SelfConsumption => "Z",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Cost => "cost",
            Objective::SelfConsumption => "self_consumption",
            Objective::Carbon => "carbon",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageSpec {
    pub capacity_kwh: f64,
    pub max_power_kw: f64,
    pub round_trip_efficiency: f64,
    /// Fraction of stored energy lost per step.
    #[serde(default)]
    pub loss_per_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvSession {
    pub arrival_step: usize,
    /// First step at which the EV is gone again.
    pub departure_step: usize,
    pub arrival_soc: f64,
    pub required_soc_departure: f64,
}

impl EvSession {
    pub fn covers(&self, t: usize) -> bool {
        self.arrival_step <= t && t < self.departure_step
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargerSpec {
    pub id: String,
    pub max_charge_kw: f64,
    /// Zero disables vehicle-to-grid discharge.
    #[serde(default)]
    pub max_discharge_kw: f64,
    pub battery_capacity_kwh: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    #[serde(default)]
    pub sessions: Vec<EvSession>,
}

impl ChargerSpec {
    /// Index of the session that starts exactly at step `t`, if any.
    pub fn session_arriving_at(&self, t: usize) -> Option<usize> {
        self.sessions
            .binary_search_by_key(&t, |s| s.arrival_step)
            .ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellingSpec {
    pub id: String,
    pub objective: Objective,
    pub non_shiftable_load: Vec<f64>,
    pub pv_generation: Vec<f64>,
    pub heating_storage: Option<StorageSpec>,
    pub chargers: Vec<ChargerSpec>,
}

impl DwellingSpec {
    /// Number of controllable assets: one action per charger, then one for
    /// the storage if present.
    pub fn action_dim(&self) -> usize {
        self.chargers.len() + usize::from(self.heating_storage.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalendarStart {
    pub start_hour: u32,
    pub start_weekday: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarEntry {
    pub hour: u32,
    pub weekday: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub horizon_steps: usize,
    pub step_hours: f64,
    pub calendar_start: CalendarStart,
    pub calendar: Vec<CalendarEntry>,
    pub price: Vec<f64>,
    pub carbon_intensity: Vec<f64>,
    pub dwellings: Vec<DwellingSpec>,
}

impl Scenario {
    pub fn steps_per_day(&self) -> usize {
        (HOURS_PER_DAY / self.step_hours).round() as usize
    }

    /// SHA-256 over the canonical JSON form; identifies the scenario in
    /// checkpoint manifests.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Builds the per-step calendar from a start hour and weekday.
pub fn build_calendar(start: CalendarStart, horizon: usize, step_hours: f64) -> Vec<CalendarEntry> {
    (0..horizon)
        .map(|t| {
            let elapsed = f64::from(start.start_hour) + t as f64 * step_hours;
            // Small epsilon so 0.1-hour steps do not round down a whole hour.
            let hours = (elapsed + 1e-9).floor() as u64;
            CalendarEntry {
                hour: (hours % 24) as u32,
                weekday: ((u64::from(start.start_weekday) + hours / 24) % 7) as u32,
            }
        })
        .collect()
}

/// One invariant violation, located by a field path such as
/// `dwellings[1](d2).chargers[0](ev).sessions[3]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn check_series(out: &mut Vec<Violation>, path: &str, series: &[f64], horizon: usize) {
    if series.len() != horizon {
        out.push(Violation {
            path: path.to_string(),
            message: format!("length {} != horizon_steps {}", series.len(), horizon),
        });
    }
    if let Some((t, v)) = series
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        out.push(Violation {
            path: format!("{path}[{t}]"),
            message: format!("value {v} must be finite and >= 0"),
        });
    }
}

fn fraction_ok(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn efficiency_ok(x: f64) -> bool {
    x > 0.0 && x <= 1.0
}

/// Returns every invariant violation in `s`; an empty result means valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let horizon = s.horizon_steps;
    let push = |out: &mut Vec<Violation>, path: String, message: String| {
        out.push(Violation { path, message })
    };

    if horizon == 0 {
        push(&mut out, "horizon_steps".into(), "must be positive".into());
    }
    if !(s.step_hours.is_finite() && s.step_hours > 0.0) {
        push(&mut out, "step_hours".into(), format!("{} must be > 0", s.step_hours));
    } else {
        let per_day = HOURS_PER_DAY / s.step_hours;
        if (per_day - per_day.round()).abs() > 1e-9 {
            push(
                &mut out,
                "step_hours".into(),
                format!("{} does not divide a 24 h day", s.step_hours),
            );
        }
    }
    if s.calendar_start.start_hour >= 24 {
        push(&mut out, "calendar.start_hour".into(), "must be in 0..=23".into());
    }
    if s.calendar_start.start_weekday >= 7 {
        push(&mut out, "calendar.start_weekday".into(), "must be in 0..=6".into());
    }
    if s.calendar.len() != horizon {
        push(
            &mut out,
            "calendar".into(),
            format!("length {} != horizon_steps {}", s.calendar.len(), horizon),
        );
    }
    if let Some((t, _)) = s
        .calendar
        .iter()
        .enumerate()
        .find(|(_, c)| c.hour >= 24 || c.weekday >= 7)
    {
        push(&mut out, format!("calendar[{t}]"), "hour or weekday out of range".into());
    }
    check_series(&mut out, "price", &s.price, horizon);
    check_series(&mut out, "carbon_intensity", &s.carbon_intensity, horizon);

    if s.dwellings.is_empty() {
        push(&mut out, "dwellings".into(), "at least one dwelling required".into());
    }
    let mut seen = HashSet::new();
    for (di, d) in s.dwellings.iter().enumerate() {
        let dp = format!("dwellings[{di}]({})", d.id);
        if d.id.is_empty() {
            push(&mut out, dp.clone(), "id must be non-empty".into());
        }
        if !seen.insert(d.id.as_str()) {
            push(&mut out, dp.clone(), format!("duplicate dwelling id `{}`", d.id));
        }
        check_series(&mut out, &format!("{dp}.non_shiftable_load"), &d.non_shiftable_load, horizon);
        check_series(&mut out, &format!("{dp}.pv_generation"), &d.pv_generation, horizon);

        if let Some(st) = &d.heating_storage {
            let sp = format!("{dp}.storage");
            if !(st.capacity_kwh > 0.0 && st.capacity_kwh.is_finite()) {
                push(&mut out, sp.clone(), "capacity_kwh must be > 0".into());
            }
            if !(st.max_power_kw > 0.0 && st.max_power_kw.is_finite()) {
                push(&mut out, sp.clone(), "max_power_kw must be > 0".into());
            }
            if !efficiency_ok(st.round_trip_efficiency) {
                push(&mut out, sp.clone(), "round_trip_efficiency must be in (0,1]".into());
            }
            if !(0.0..1.0).contains(&st.loss_per_step) {
                push(&mut out, sp, "loss_per_step must be in [0,1)".into());
            }
        }

        let mut charger_ids = HashSet::new();
        for (ci, c) in d.chargers.iter().enumerate() {
            let cp = format!("{dp}.chargers[{ci}]({})", c.id);
            if !charger_ids.insert(c.id.as_str()) {
                push(&mut out, cp.clone(), format!("duplicate charger id `{}`", c.id));
            }
            if !(c.max_charge_kw > 0.0 && c.max_charge_kw.is_finite()) {
                push(&mut out, cp.clone(), "max_charge_kw must be > 0".into());
            }
            if !(c.max_discharge_kw >= 0.0 && c.max_discharge_kw.is_finite()) {
                push(&mut out, cp.clone(), "max_discharge_kw must be >= 0".into());
            }
            if !(c.battery_capacity_kwh > 0.0 && c.battery_capacity_kwh.is_finite()) {
                push(&mut out, cp.clone(), "battery_capacity_kwh must be > 0".into());
            }
            if !efficiency_ok(c.charge_efficiency) {
                push(&mut out, cp.clone(), "charge_efficiency must be in (0,1]".into());
            }
            if !efficiency_ok(c.discharge_efficiency) {
                push(&mut out, cp.clone(), "discharge_efficiency must be in (0,1]".into());
            }
            for (si, sess) in c.sessions.iter().enumerate() {
                let ssp = format!("{cp}.sessions[{si}]");
                if sess.arrival_step >= sess.departure_step {
                    push(
                        &mut out,
                        ssp.clone(),
                        format!(
                            "arrival_step < departure_step violated ({} >= {})",
                            sess.arrival_step, sess.departure_step
                        ),
                    );
                }
                if sess.departure_step > horizon {
                    push(
                        &mut out,
                        ssp.clone(),
                        format!("departure_step {} exceeds horizon_steps {}", sess.departure_step, horizon),
                    );
                }
                if !fraction_ok(sess.arrival_soc) {
                    push(&mut out, ssp.clone(), format!("arrival_soc {} not in [0,1]", sess.arrival_soc));
                }
                if !fraction_ok(sess.required_soc_departure) {
                    push(
                        &mut out,
                        ssp.clone(),
                        format!("required_soc_departure {} not in [0,1]", sess.required_soc_departure),
                    );
                }
                if si > 0 {
                    let prev = &c.sessions[si - 1];
                    if sess.arrival_step < prev.departure_step {
                        push(
                            &mut out,
                            format!("{cp}.sessions[{}..={si}]", si - 1),
                            format!(
                                "sessions[{}] (departure {}) overlaps sessions[{si}] (arrival {})",
                                si - 1,
                                prev.departure_step,
                                sess.arrival_step
                            ),
                        );
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Descriptor + CSV format

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDescriptor {
    pub horizon_steps: usize,
    #[serde(default = "default_step_hours")]
    pub step_hours: f64,
    pub price_csv: String,
    pub carbon_csv: String,
    pub calendar: CalendarStart,
    pub dwellings: Vec<DwellingDescriptor>,
}

fn default_step_hours() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwellingDescriptor {
    pub id: String,
    pub objective: Objective,
    pub load_csv: String,
    pub pv_csv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<StorageSpec>,
    #[serde(default)]
    pub chargers: Vec<ChargerSpec>,
}

impl ScenarioDescriptor {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Descriptor(e.to_string()))
    }
}

/// Parses a `step,value` CSV series. `series` names the field in errors.
/// Steps must run 0, 1, 2, ... in order; values must be finite and >= 0.
pub fn parse_series_csv(text: &str, series: &str) -> Result<Vec<f64>, ScenarioError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let bad = |row: Option<usize>, message: String| ScenarioError::InvariantViolation {
        path: series.to_string(),
        row,
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| bad(Some(1), format!("unreadable header: {e}")))?;
    if headers.len() != 2 || &headers[0] != "step" || &headers[1] != "value" {
        return Err(bad(Some(1), "header must be `step,value`".into()));
    }
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Row numbers are 1-based file lines; the header is row 1.
        let row = i + 2;
        let record = record.map_err(|e| bad(Some(row), e.to_string()))?;
        if record.len() != 2 {
            return Err(bad(Some(row), format!("expected 2 columns, found {}", record.len())));
        }
        let step: usize = record[0]
            .parse()
            .map_err(|_| bad(Some(row), format!("step `{}` is not an integer", &record[0])))?;
        if step != i {
            return Err(bad(Some(row), format!("step {step} out of order, expected {i}")));
        }
        let value: f64 = record[1]
            .parse()
            .map_err(|_| bad(Some(row), format!("value `{}` is not a decimal number", &record[1])))?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(bad(Some(row), format!("value {value} must be finite and >= 0")));
        }
        values.push(value);
    }
    Ok(values)
}

pub fn series_to_csv(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 12 + 12);
    out.push_str("step,value\n");
    for (t, v) in values.iter().enumerate() {
        // `Display` for f64 is the shortest representation that round-trips.
        out.push_str(&format!("{t},{v}\n"));
    }
    out
}

/// Builds a scenario from a descriptor, fetching CSV contents through
/// `read_csv(name)`. Used by [`load_scenario`] and by in-memory callers.
pub fn scenario_from_descriptor<F>(desc: &ScenarioDescriptor, mut read_csv: F) -> Result<Scenario, ScenarioError>
where
    F: FnMut(&str) -> Result<String, ScenarioError>,
{
    let horizon = desc.horizon_steps;
    let mut load = |name: &str, field: &str| -> Result<Vec<f64>, ScenarioError> {
        let text = read_csv(name)?;
        let values = parse_series_csv(&text, field)?;
        if values.len() != horizon {
            return Err(ScenarioError::LengthMismatch {
                series: field.to_string(),
                expected: horizon,
                found: values.len(),
            });
        }
        Ok(values)
    };
    let price = load(&desc.price_csv, "price")?;
    let carbon_intensity = load(&desc.carbon_csv, "carbon_intensity")?;
    let mut dwellings = Vec::with_capacity(desc.dwellings.len());
    for (i, d) in desc.dwellings.iter().enumerate() {
        let non_shiftable_load = load(&d.load_csv, &format!("dwellings[{i}]({}).non_shiftable_load", d.id))?;
        let pv_generation = load(&d.pv_csv, &format!("dwellings[{i}]({}).pv_generation", d.id))?;
        dwellings.push(DwellingSpec {
            id: d.id.clone(),
            objective: d.objective,
            non_shiftable_load,
            pv_generation,
            heating_storage: d.storage,
            chargers: d.chargers.clone(),
        });
    }
    let scenario = Scenario {
        horizon_steps: horizon,
        step_hours: desc.step_hours,
        calendar_start: desc.calendar,
        calendar: build_calendar(desc.calendar, horizon, desc.step_hours.max(f64::MIN_POSITIVE)),
        price,
        carbon_intensity,
        dwellings,
    };
    if let Some(v) = validate_scenario(&scenario).into_iter().next() {
        return Err(ScenarioError::InvariantViolation {
            path: v.path,
            row: None,
            message: v.message,
        });
    }
    Ok(scenario)
}

/// Loads a scenario descriptor and its CSV series from disk.
pub fn load_scenario(descriptor_path: &Path) -> Result<Scenario, ScenarioError> {
    let text = read_file(descriptor_path)?;
    let desc = ScenarioDescriptor::from_json(&text)?;
    let base = descriptor_path.parent().unwrap_or_else(|| Path::new("."));
    scenario_from_descriptor(&desc, |name| read_file(&base.join(name)))
}

fn read_file(path: &Path) -> Result<String, ScenarioError> {
    fs::read_to_string(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            ScenarioError::MissingFile { path: path.to_path_buf() }
        } else {
            ScenarioError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

/// Writes `scenario.json` plus one CSV per series into `dir` and returns the
/// descriptor path.
pub fn write_scenario(s: &Scenario, dir: &Path) -> Result<PathBuf, ScenarioError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ScenarioError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: &str, values: &[f64]| -> Result<String, ScenarioError> {
        let path = dir.join(name);
        fs::write(&path, series_to_csv(values)).map_err(io_err(&path))?;
        Ok(name.to_string())
    };
    let price_csv = write("price.csv", &s.price)?;
    let carbon_csv = write("carbon.csv", &s.carbon_intensity)?;
    let mut dwellings = Vec::new();
    for d in &s.dwellings {
        dwellings.push(DwellingDescriptor {
            id: d.id.clone(),
            objective: d.objective,
            load_csv: write(&format!("{}_load.csv", d.id), &d.non_shiftable_load)?,
            pv_csv: write(&format!("{}_pv.csv", d.id), &d.pv_generation)?,
            storage: d.heating_storage,
            chargers: d.chargers.clone(),
        });
    }
    let desc = ScenarioDescriptor {
        horizon_steps: s.horizon_steps,
        step_hours: s.step_hours,
        price_csv,
        carbon_csv,
        calendar: s.calendar_start,
        dwellings,
    };
    let path = dir.join("scenario.json");
    let json = serde_json::to_string_pretty(&desc).expect("descriptor serializes");
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Synthetic scenarios

/// Hours of the day (inclusive start, exclusive end) on the cheap tariff.
pub const SYNTHETIC_CHEAP_HOURS: (u32, u32) = (0, 8);
pub const SYNTHETIC_CHEAP_PRICE: f64 = 0.10;
pub const SYNTHETIC_PEAK_PRICE: f64 = 0.25;
const COMMUTE_LEAVE_HOUR: usize = 8;
const COMMUTE_RETURN_HOUR: usize = 18;

pub fn synthetic_price(hour: u32) -> f64 {
    if (SYNTHETIC_CHEAP_HOURS.0..SYNTHETIC_CHEAP_HOURS.1).contains(&hour) {
        SYNTHETIC_CHEAP_PRICE
    } else {
        SYNTHETIC_PEAK_PRICE
    }
}

/// Generates a residential community: evening-peaked sinusoidal loads with
/// noise, a daytime PV bell, a two-tier tariff and one commuter EV per
/// dwelling that is away from 08:00 to 18:00 every day.
pub fn generate_synthetic(seed: u64, n_dwellings: usize, days: usize) -> Scenario {
    assert!(n_dwellings >= 1 && days >= 1, "need at least one dwelling and one day");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = days * 24;
    let start = CalendarStart {
        start_hour: 0,
        start_weekday: 0,
    };
    let calendar = build_calendar(start, horizon, 1.0);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");

    let price: Vec<f64> = calendar.iter().map(|c| synthetic_price(c.hour)).collect();
    let carbon_intensity: Vec<f64> = calendar
        .iter()
        .map(|c| {
            let h = f64::from(c.hour);
            let midday_dip = (-(h - 13.0).powi(2) / 18.0).exp();
            (0.30 - 0.12 * midday_dip + 0.01 * noise.sample(&mut rng)).max(0.05)
        })
        .collect();

    let objectives = [Objective::Cost, Objective::SelfConsumption, Objective::Carbon];
    let mut dwellings = Vec::with_capacity(n_dwellings);
    for i in 0..n_dwellings {
        let base = rng.random_range(0.4..0.8);
        let amp = rng.random_range(0.8..1.6);
        let pv_peak = rng.random_range(1.5..3.0);
        let non_shiftable_load = calendar
            .iter()
            .map(|c| {
                let h = f64::from(c.hour);
                let evening = 0.5 + 0.5 * (2.0 * std::f64::consts::PI * (h - 19.0) / 24.0).cos();
                (base + amp * evening.powi(2) + 0.08 * noise.sample(&mut rng)).max(0.0)
            })
            .collect();
        let cloud: Vec<f64> = (0..days).map(|_| rng.random_range(0.5..1.0)).collect();
        let pv_generation = (0..horizon)
            .map(|t| {
                let h = f64::from(calendar[t].hour) + 0.5;
                let bell = if (6.0..18.0).contains(&h) {
                    (std::f64::consts::PI * (h - 6.0) / 12.0).sin().powi(2)
                } else {
                    0.0
                };
                (pv_peak * bell * cloud[t / 24]).max(0.0)
            })
            .collect();

        let mut sessions = Vec::with_capacity(days + 1);
        let mut soc = || rng.random_range(0.25..0.5);
        sessions.push(EvSession {
            arrival_step: 0,
            departure_step: COMMUTE_LEAVE_HOUR,
            arrival_soc: soc(),
            required_soc_departure: 0.8,
        });
        for d in 0..days {
            let arrival = d * 24 + COMMUTE_RETURN_HOUR;
            let departure = ((d + 1) * 24 + COMMUTE_LEAVE_HOUR).min(horizon);
            sessions.push(EvSession {
                arrival_step: arrival,
                departure_step: departure,
                arrival_soc: soc(),
                required_soc_departure: 0.8,
            });
        }
        dwellings.push(DwellingSpec {
            id: format!("d{}", i + 1),
            objective: objectives[i % objectives.len()],
            non_shiftable_load,
            pv_generation,
            heating_storage: None,
            chargers: vec![ChargerSpec {
                id: "ev1".into(),
                max_charge_kw: 7.4,
                max_discharge_kw: 7.4,
                battery_capacity_kwh: 40.0,
                charge_efficiency: 0.95,
                discharge_efficiency: 0.95,
                sessions,
            }],
        });
    }

    Scenario {
        horizon_steps: horizon,
        step_hours: 1.0,
        calendar_start: start,
        calendar,
        price,
        carbon_intensity,
        dwellings,
    }
}
