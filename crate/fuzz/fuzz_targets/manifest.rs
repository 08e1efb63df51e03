#![no_main]

use energaize_cli::commands::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = serde_json::from_slice::<Manifest>(data) {
        let text = serde_json::to_string(&m).expect("manifest serializes");
        assert_eq!(serde_json::from_str::<Manifest>(&text).expect("written manifest parses"), m);
    }
});
