#![no_main]

use energaize_core::scenario::{parse_series_csv, series_to_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(values) = parse_series_csv(text, "fuzz") {
        let back = parse_series_csv(&series_to_csv(&values), "fuzz").expect("written series parses");
        assert_eq!(back, values);
    }
});
