//! Whole-episode invariant checks on random scenarios.

use energaize_core::envsim::{self, JointAction};
use energaize_core::rbc::{plug_and_charge_joint_action, rbc_joint_action, RbcConfig};
use energaize_core::scenario::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::random_scenario;

pub const TOL: f64 = 1e-9;

pub fn random_action<R: Rng>(rng: &mut R, s: &Scenario) -> JointAction {
    // Occasionally out of range to exercise clamping.
    JointAction(
        s.dwellings
            .iter()
            .map(|d| (0..d.action_dim()).map(|_| rng.random_range(-1.3..1.3)).collect())
            .collect(),
    )
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Runs one random-action episode on a random scenario, checking energy
/// conservation and state bounds at every step. Returns the step count.
pub fn env_case(seed: u64, days: usize) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_scenario(&mut rng, 4, days, false);
    let dt = s.step_hours;
    let n = s.dwellings.len() as f64;
    let mut st = envsim::reset(&s).map_err(|e| e.to_string())?;
    while st.t < s.horizon_steps {
        let a = random_action(&mut rng, &s);
        let r = envsim::step(&s, &st, &a).map_err(|e| e.to_string())?;
        let t = st.t;
        let mut community = 0.0;
        for (i, d) in s.dwellings.iter().enumerate() {
            let chargers: f64 = r.charger_energy[i].iter().sum();
            let expected = d.non_shiftable_load[t] - d.pv_generation[t] + chargers + r.storage_energy[i];
            ensure!((r.dwelling_net[i] - expected).abs() <= TOL, "seed {seed} t {t} dwelling {i}: net not conserved");
            ensure!(r.gross_consumption[i] >= d.non_shiftable_load[t] - TOL, "seed {seed} t {t}: gross below load");
            community += r.dwelling_net[i];

            for (c, spec) in d.chargers.iter().enumerate() {
                let e = r.charger_energy[i][c];
                ensure!(st.chargers[i][c].connected || e == 0.0, "seed {seed} t {t}: masked charger moved {e} kWh");
                ensure!(
                    e <= spec.max_charge_kw * dt + TOL && e >= -spec.max_discharge_kw * dt - TOL,
                    "seed {seed} t {t}: charger energy {e} beyond rating"
                );
                let next = &r.next.chargers[i][c];
                ensure!((0.0..=1.0).contains(&next.soc), "seed {seed} t {t}: soc {}", next.soc);
                ensure!(next.connected == next.active_session.is_some(), "seed {seed} t {t}: session flag mismatch");
            }
            match (&d.heating_storage, r.next.storages[i]) {
                (Some(spec), Some(level)) => {
                    ensure!((0.0..=spec.capacity_kwh).contains(&level), "seed {seed} t {t}: storage level {level}");
                    let limit = spec.max_power_kw * dt / spec.round_trip_efficiency.sqrt() + TOL;
                    ensure!(r.storage_energy[i].abs() <= limit, "seed {seed} t {t}: storage power beyond rating");
                }
                (None, None) => ensure!(r.storage_energy[i] == 0.0, "seed {seed} t {t}: phantom storage"),
                _ => return Err(format!("seed {seed}: storage state does not match spec")),
            }
        }
        ensure!((r.community_net - community).abs() <= TOL * n, "seed {seed} t {t}: community net != dwelling sum");
        st = r.next;
    }
    ensure!(envsim::step(&s, &st, &JointAction::zeros(&s)).is_err(), "seed {seed}: step past the horizon accepted");
    Ok(s.horizon_steps)
}

/// Runs the rule-based controller (and the plug-and-charge baseline) on a
/// random scenario whose requirements are reachable at full power. Returns
/// the number of departures checked.
pub fn rbc_case(seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_scenario(&mut rng, 3, 2, true);
    let cfg = RbcConfig::default();
    let rbc = envsim::rollout(&s, |s, st| rbc_joint_action(&cfg, s, st)).map_err(|e| e.to_string())?;
    let pc = envsim::rollout(&s, plug_and_charge_joint_action).map_err(|e| e.to_string())?;
    for (t, e) in rbc.departures.iter().chain(&pc.departures) {
        ensure!(
            e.achieved_soc >= e.required_soc - TOL,
            "seed {seed}: {} of dwelling {} left at step {t} with soc {} < {}",
            e.charger_id,
            e.dwelling,
            e.achieved_soc,
            e.required_soc
        );
    }
    Ok(rbc.departures.len())
}
