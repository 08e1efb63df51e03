//! Mixed per-agent reward: a prosumer-objective term, an EV departure
//! constraint term and a community (REC) term, combined with weights
//! `alpha`, `beta` and `zeta`. Every component is a penalty (never positive).

use serde::{Deserialize, Serialize};

use crate::envsim::{DepartureEvent, StepResult};
use crate::scenario::{Objective, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub zeta: f64,
    /// Penalty per unit of missing state of charge at departure.
    pub ev_shortfall_scale: f64,
    pub rec_square_scale: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            beta: 0.7,
            zeta: 0.1,
            ev_shortfall_scale: 10.0,
            rec_square_scale: 0.1,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.alpha, self.beta, self.zeta];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err("alpha, beta and zeta must be finite and >= 0".into());
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err("at least one of alpha, beta, zeta must be positive".into());
        }
        if !(self.ev_shortfall_scale > 0.0 && self.ev_shortfall_scale.is_finite()) {
            return Err("ev_shortfall_scale must be > 0".into());
        }
        if !(self.rec_square_scale > 0.0 && self.rec_square_scale.is_finite()) {
            return Err("rec_square_scale must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    pub r_prosumer: f64,
    pub r_ev: f64,
    pub r_rec: f64,
    pub total: f64,
}

/// Penalty on grid imports, weighted by what the prosumer cares about.
pub fn r_prosumer(objective: Objective, net_kwh: f64, price: f64, carbon: f64) -> f64 {
    let import = net_kwh.max(0.0);
    match objective {
        Objective::Cost => -(price * import),
        Objective::Carbon => -(carbon * import),
        Objective::SelfConsumption => -import,
    }
}

/// Penalty on state-of-charge shortfall at departure; surplus is free.
pub fn r_ev(departures: &[DepartureEvent], ev_shortfall_scale: f64) -> f64 {
    -departures
        .iter()
        .map(|e| ev_shortfall_scale * e.shortfall())
        .sum::<f64>()
}

/// Community penalty: squared net level flattens the load (exports inside
/// the community offset imports before squaring) plus absolute ramping.
pub fn r_rec(community_net: f64, previous_community_net: f64, rec_square_scale: f64) -> f64 {
    -rec_square_scale * community_net * community_net - (community_net - previous_community_net).abs()
}

pub fn combine(w: &RewardWeights, r_prosumer: f64, r_ev: f64, r_rec: f64) -> RewardBreakdown {
    RewardBreakdown {
        r_prosumer,
        r_ev,
        r_rec,
        total: w.alpha * r_prosumer + w.beta * r_ev + w.zeta * r_rec,
    }
}

/// Reward weights bound to a scenario, with the per-dwelling divisors that
/// put the prosumer term of every dwelling on a comparable scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    pub weights: RewardWeights,
    pub prosumer_divisors: Vec<f64>,
}

impl RewardModel {
    pub fn new(scenario: &Scenario, weights: RewardWeights) -> Self {
        let prosumer_divisors = scenario
            .dwellings
            .iter()
            .map(|d| {
                let max = d.non_shiftable_load.iter().copied().fold(0.0, f64::max);
                if max > 0.0 {
                    max
                } else {
                    1.0
                }
            })
            .collect();
        Self {
            weights,
            prosumer_divisors,
        }
    }

    /// Rewards of every agent for the transition taken at step `t`.
    /// `previous_community_net` is the community net of step `t - 1` (the
    /// current value at `t = 0`, so the first step carries no ramp).
    pub fn agent_rewards(
        &self,
        scenario: &Scenario,
        t: usize,
        result: &StepResult,
        previous_community_net: f64,
    ) -> Vec<RewardBreakdown> {
        let w = &self.weights;
        let rec = r_rec(result.community_net, previous_community_net, w.rec_square_scale);
        scenario
            .dwellings
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let rp = r_prosumer(d.objective, result.dwelling_net[i], scenario.price[t], scenario.carbon_intensity[t])
                    / self.prosumer_divisors[i];
                let events: Vec<DepartureEvent> =
                    result.departures.iter().filter(|e| e.dwelling == i).cloned().collect();
                combine(w, rp, r_ev(&events, w.ev_shortfall_scale), rec)
            })
            .collect()
    }
}
