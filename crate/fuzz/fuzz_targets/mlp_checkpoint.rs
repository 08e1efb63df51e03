#![no_main]

use energaize_core::neural::Mlp;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(net) = Mlp::from_json(text) else { return };
    assert_eq!(Mlp::from_json(&net.to_json()).expect("written checkpoint loads"), net);
    if net.param_count() <= 1 << 16 {
        let y = net.predict(&vec![0.5; net.input_width()]).expect("input width matches");
        assert_eq!(y.len(), net.output_width());
    }
});
