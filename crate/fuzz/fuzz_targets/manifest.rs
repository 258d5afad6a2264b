#![no_main]

use foamfit::dataproc::csv::{parse_geometry, parse_manifest};
use foamfit::LoadingMode;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = parse_manifest(text);
    for mode in LoadingMode::ALL {
        let _ = parse_geometry(text, mode);
    }
});
