#![no_main]

use std::path::Path;

use energaize_cli::config::{parse, Overrides};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Stands in for `--scenario`, so seeds without one still resolve.
    let o = Overrides { scenario: Some("/base/scenario.json".into()), ..Overrides::default() };
    let Ok(cfg) = parse(text, "fuzz", Path::new("/base"), &o) else { return };
    let back = parse(&cfg.to_toml(), "fuzz", Path::new("/base"), &o).expect("written config parses");
    assert_eq!(back, cfg);
});
