#![no_main]
//! Input: one byte of steps per day, then trace CSV.

use energaize_core::kpi::{KpiId, Scope, Trace};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&spd, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let Ok(t) = Trace::from_csv(text, usize::from(spd)) else { return };
    let back = Trace::from_csv(&t.to_csv(), t.steps_per_day).expect("written trace parses");
    assert_eq!(back, t);
    for k in KpiId::REC {
        let _ = k.compute(&t, Scope::Community);
    }
});
