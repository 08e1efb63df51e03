//! Helpers shared by integration tests: random scenario and trace
//! generators, plus brute-force KPI references written from the formulas.
#![allow(dead_code)]

use energaize_core::kpi::Trace;
use energaize_core::scenario::{
    build_calendar, validate_scenario, CalendarStart, ChargerSpec, DwellingSpec, EvSession, Objective, Scenario, StorageSpec,
};
use rand::Rng;

pub mod checks;
pub mod corpus;
pub mod fd;

fn random_sessions<R: Rng>(rng: &mut R, horizon: usize, feasible_for: Option<(f64, f64, f64, f64)>) -> Vec<EvSession> {
    let mut sessions = Vec::new();
    let mut t = if rng.random_bool(0.3) { 0 } else { rng.random_range(0..4) };
    while t < horizon {
        let len = rng.random_range(1..12).min(horizon - t);
        let arrival_soc = rng.random_range(0.0..1.0);
        let required = match feasible_for {
            // (capacity, max_kw, eta, dt): keep the requirement reachable.
            Some((cap, kw, eta, dt)) => {
                let reach = (arrival_soc + eta * kw * dt * len as f64 / cap).min(1.0);
                arrival_soc + rng.random_range(0.0..=1.0) * (reach - arrival_soc)
            }
            None => rng.random_range(0.0..1.0),
        };
        sessions.push(EvSession {
            arrival_step: t,
            departure_step: t + len,
            arrival_soc,
            required_soc_departure: required,
        });
        t += len + rng.random_range(0..6);
    }
    sessions
}

/// A valid scenario with 1..=`max_dwellings` dwellings, random chargers,
/// sessions and optional storage.
pub fn random_scenario<R: Rng>(rng: &mut R, max_dwellings: usize, days: usize, feasible: bool) -> Scenario {
    let step_hours = if rng.random_bool(0.8) { 1.0 } else { 0.5 };
    let horizon = days * (24.0 / step_hours) as usize;
    let start = CalendarStart {
        start_hour: rng.random_range(0..24),
        start_weekday: rng.random_range(0..7),
    };
    let objectives = [Objective::Cost, Objective::SelfConsumption, Objective::Carbon];
    let n = rng.random_range(1..=max_dwellings);
    let dwellings = (0..n)
        .map(|i| {
            let chargers = (0..rng.random_range(0..3))
                .map(|c| {
                    let cap = rng.random_range(20.0..80.0);
                    let kw = rng.random_range(2.0..11.0);
                    let eta = rng.random_range(0.8..1.0);
                    ChargerSpec {
                        id: format!("ev{c}"),
                        max_charge_kw: kw,
                        max_discharge_kw: if rng.random_bool(0.7) { rng.random_range(0.0..11.0) } else { 0.0 },
                        battery_capacity_kwh: cap,
                        charge_efficiency: eta,
                        discharge_efficiency: rng.random_range(0.8..1.0),
                        sessions: random_sessions(rng, horizon, feasible.then_some((cap, kw, eta, step_hours))),
                    }
                })
                .collect();
            DwellingSpec {
                id: format!("h{i}"),
                objective: objectives[rng.random_range(0..3)],
                non_shiftable_load: (0..horizon).map(|_| rng.random_range(0.0..4.0)).collect(),
                pv_generation: (0..horizon).map(|_| if rng.random_bool(0.5) { rng.random_range(0.0..3.0) } else { 0.0 }).collect(),
                heating_storage: rng.random_bool(0.4).then(|| StorageSpec {
                    capacity_kwh: rng.random_range(2.0..20.0),
                    max_power_kw: rng.random_range(0.5..5.0),
                    round_trip_efficiency: rng.random_range(0.7..1.0),
                    loss_per_step: rng.random_range(0.0..0.02),
                }),
                chargers,
            }
        })
        .collect();
    let s = Scenario {
        horizon_steps: horizon,
        step_hours,
        calendar_start: start,
        calendar: build_calendar(start, horizon, step_hours),
        price: (0..horizon).map(|_| rng.random_range(0.0..0.5)).collect(),
        carbon_intensity: (0..horizon).map(|_| rng.random_range(0.0..0.6)).collect(),
        dwellings,
    };
    let v = validate_scenario(&s);
    assert!(v.is_empty(), "generator produced an invalid scenario: {v:?}");
    s
}

/// A conservation-consistent random trace.
pub fn random_trace<R: Rng>(rng: &mut R, n: usize, len: usize, steps_per_day: usize) -> Trace {
    let net: Vec<Vec<f64>> = (0..len).map(|_| (0..n).map(|_| rng.random_range(-5.0..8.0)).collect()).collect();
    let gross = net.iter().map(|r| r.iter().map(|e| e.max(0.0) + rng.random_range(0.0..2.0)).collect()).collect();
    let community = net.iter().map(|r| r.iter().sum()).collect();
    Trace {
        dwelling_ids: (0..n).map(|i| format!("h{i}")).collect(),
        net,
        gross,
        community,
        price: (0..len).map(|_| rng.random_range(0.0..0.5)).collect(),
        carbon: (0..len).map(|_| rng.random_range(0.0..0.6)).collect(),
        steps_per_day,
    }
}

pub mod reference {
    //! Straight-line loops over the definitions.
    use energaize_core::kpi::Trace;

    pub fn series(t: &Trace, dwelling: Option<usize>) -> Vec<f64> {
        match dwelling {
            None => t.community.clone(),
            Some(i) => t.net.iter().map(|r| r[i]).collect(),
        }
    }

    pub fn d(t: &Trace, dwelling: Option<usize>) -> f64 {
        let mut s = 0.0;
        for e in series(t, dwelling) {
            if e > 0.0 {
                s += e;
            }
        }
        s
    }

    pub fn c(t: &Trace, dwelling: Option<usize>) -> f64 {
        let e = series(t, dwelling);
        let mut s = 0.0;
        for k in 0..e.len() {
            s += t.price[k] * if e[k] > 0.0 { e[k] } else { 0.0 };
        }
        s
    }

    pub fn g(t: &Trace, dwelling: Option<usize>) -> f64 {
        let e = series(t, dwelling);
        let mut s = 0.0;
        for k in 0..e.len() {
            s += t.carbon[k] * if e[k] > 0.0 { e[k] } else { 0.0 };
        }
        s
    }

    pub fn z(t: &Trace, dwelling: Option<usize>) -> f64 {
        let mut gross = 0.0;
        for row in &t.gross {
            match dwelling {
                None => {
                    for v in row {
                        gross += v;
                    }
                }
                Some(i) => gross += row[i],
            }
        }
        if gross > 0.0 {
            d(t, dwelling) / gross
        } else {
            1.0
        }
    }

    pub fn p(t: &Trace) -> f64 {
        let days = t.community.len() / t.steps_per_day;
        let mut s = 0.0;
        for day in 0..days {
            let mut m = f64::NEG_INFINITY;
            for k in 0..t.steps_per_day {
                let v = t.community[day * t.steps_per_day + k];
                if v > m {
                    m = v;
                }
            }
            s += m;
        }
        s / days as f64
    }

    pub fn r(t: &Trace) -> f64 {
        let mut s = 0.0;
        for k in 1..t.community.len() {
            s += (t.community[k] - t.community[k - 1]).abs();
        }
        s
    }

    pub fn one_minus_l(t: &Trace) -> f64 {
        let spd = t.steps_per_day;
        let days = t.community.len() / spd;
        let mut s = 0.0;
        let mut counted = 0;
        for day in 0..days {
            let slice = &t.community[day * spd..(day + 1) * spd];
            let mut m = f64::NEG_INFINITY;
            let mut sum = 0.0;
            for &v in slice {
                if v > m {
                    m = v;
                }
                sum += v;
            }
            if m > 0.0 {
                s += 1.0 - (sum / spd as f64) / m;
                counted += 1;
            }
        }
        if counted == 0 {
            0.0
        } else {
            s / counted as f64
        }
    }
}
