//! Every decoder entry point on its fuzz seeds, intact and mutated. Each
//! body mirrors the matching target under `fuzz/fuzz_targets`.

mod common;

use common::corpus::{edits, mutate, seeds};
use energaize_core::envsim;
use energaize_core::kpi::{KpiId, Scope, Trace};
use energaize_core::maddpg::{agent_from_files, CommunityLayout, MaddpgError, AGENT_FILES};
use energaize_core::neural::Mlp;
use energaize_core::rbc::plug_and_charge_joint_action;
use energaize_core::scenario::{
    parse_series_csv, scenario_from_descriptor, series_to_csv, validate_scenario, ScenarioDescriptor,
};

fn scenario_descriptor(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else { return false };
    let (desc, csv) = text.split_once('\0').unwrap_or((text, ""));
    let Ok(desc) = ScenarioDescriptor::from_json(desc) else { return false };
    let Ok(s) = scenario_from_descriptor(&desc, |_| Ok(csv.to_string())) else { return false };
    assert!(validate_scenario(&s).is_empty());
    if s.horizon_steps <= 512 && s.dwellings.len() <= 8 {
        let r = envsim::rollout(&s, plug_and_charge_joint_action).expect("a valid scenario simulates");
        r.trace.check_conservation().expect("energy is conserved");
    }
    true
}

fn series_csv(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else { return false };
    let Ok(values) = parse_series_csv(text, "fuzz") else { return false };
    let back = parse_series_csv(&series_to_csv(&values), "fuzz").expect("written series parses");
    assert_eq!(back, values);
    true
}

fn trace_csv(data: &[u8]) -> bool {
    let Some((&spd, rest)) = data.split_first() else { return false };
    let Ok(text) = std::str::from_utf8(rest) else { return false };
    let Ok(t) = Trace::from_csv(text, usize::from(spd)) else { return false };
    let back = Trace::from_csv(&t.to_csv(), t.steps_per_day).expect("written trace parses");
    assert_eq!(back, t);
    for k in KpiId::REC {
        let _ = k.compute(&t, Scope::Community);
    }
    true
}

fn mlp_checkpoint(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else { return false };
    let Ok(net) = Mlp::from_json(text) else { return false };
    assert_eq!(Mlp::from_json(&net.to_json()).expect("written checkpoint loads"), net);
    if net.param_count() <= 1 << 16 {
        let y = net.predict(&vec![0.5; net.input_width()]).expect("input width matches");
        assert_eq!(y.len(), net.output_width());
    }
    true
}

fn agent_checkpoint(data: &[u8]) -> bool {
    let [obs, act, rest @ ..] = data else { return false };
    let Ok(text) = std::str::from_utf8(rest) else { return false };
    let parts: Vec<&str> = text.split('\0').collect();
    let layout = CommunityLayout::new(vec![usize::from(*obs)], vec![usize::from(*act)]);
    let read = |suffix: &str| {
        let k = AGENT_FILES.iter().position(|s| *s == suffix).expect("known suffix");
        parts.get(k).map(|p| p.to_string()).ok_or(MaddpgError::Checkpoint(format!("no {suffix}")))
    };
    let Ok(agent) = agent_from_files(0, &layout, read) else { return false };
    assert_eq!(agent.obs_dim(), usize::from(*obs));
    assert_eq!(agent.action_dim(), usize::from(*act));
    true
}

type Body = fn(&[u8]) -> bool;

#[test]
fn intact_seeds_decode() {
    let targets: [(&str, Body); 5] = [
        ("scenario_descriptor", scenario_descriptor),
        ("series_csv", series_csv),
        ("trace_csv", trace_csv),
        ("mlp_checkpoint", mlp_checkpoint),
        ("agent_checkpoint", agent_checkpoint),
    ];
    for (target, body) in targets {
        for (name, bytes) in seeds(target) {
            assert!(body(&bytes), "{target}/{name} was rejected");
        }
    }
}

macro_rules! mutated {
    ($($name:ident),+) => {
        proptest! {
            #![proptest_config(ProptestConfig::with_cases(300))]
            $(
                #[test]
                fn $name(pick in any::<prop::sample::Index>(), e in edits()) {
                    let all = seeds(stringify!($name));
                    let (_, seed) = &all[pick.index(all.len())];
                    super::$name(&mutate(seed, &e));
                }
            )+
        }
    };
}

mod mutated {
    use super::{edits, mutate, seeds};
    use proptest::prelude::*;
    mutated!(scenario_descriptor, series_csv, trace_csv, mlp_checkpoint, agent_checkpoint);
}
