#![no_main]

use foamfit::dataproc::csv::{parse_curve_csv, write_curve_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    // anything accepted must survive a write/read cycle unchanged
    if let Ok(c) = parse_curve_csv(text) {
        assert_eq!(parse_curve_csv(&write_curve_csv(&c)).unwrap(), c);
    }
});
