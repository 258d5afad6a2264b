#![no_main]

use foamfit::discovery::{parse_report_csv, report_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(rows) = parse_report_csv(text) {
        assert_eq!(parse_report_csv(&report_csv(&rows)).unwrap(), rows);
    }
});
