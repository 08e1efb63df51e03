#![no_main]
//! Input: descriptor JSON, a NUL byte, then the CSV served for every series.

use energaize_core::envsim;
use energaize_core::rbc::plug_and_charge_joint_action;
use energaize_core::scenario::{scenario_from_descriptor, validate_scenario, ScenarioDescriptor};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (desc, csv) = text.split_once('\0').unwrap_or((text, ""));
    let Ok(desc) = ScenarioDescriptor::from_json(desc) else { return };
    let Ok(s) = scenario_from_descriptor(&desc, |_| Ok(csv.to_string())) else { return };
    assert!(validate_scenario(&s).is_empty());
    if s.horizon_steps <= 512 && s.dwellings.len() <= 8 {
        let r = envsim::rollout(&s, plug_and_charge_joint_action).expect("a valid scenario simulates");
        r.trace.check_conservation().expect("energy is conserved");
    }
});
