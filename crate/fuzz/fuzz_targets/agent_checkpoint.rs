#![no_main]
//! Input: observation width byte, action width byte, then the five agent
//! files in `AGENT_FILES` order separated by NUL bytes.

use energaize_core::maddpg::{agent_from_files, CommunityLayout, MaddpgError, AGENT_FILES};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let [obs, act, rest @ ..] = data else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let parts: Vec<&str> = text.split('\0').collect();
    let layout = CommunityLayout::new(vec![usize::from(*obs)], vec![usize::from(*act)]);
    let read = |suffix: &str| {
        let k = AGENT_FILES.iter().position(|s| *s == suffix).expect("known suffix");
        parts.get(k).map(|p| p.to_string()).ok_or(MaddpgError::Checkpoint(format!("no {suffix}")))
    };
    if let Ok(agent) = agent_from_files(0, &layout, read) {
        assert_eq!(agent.obs_dim(), usize::from(*obs));
        assert_eq!(agent.action_dim(), usize::from(*act));
    }
});
