#![no_main]

use foamfit::dataproc::csv::parse_recording;
use foamfit::dataproc::{reduce, Geometry};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let g = Geometry::Shear {
        radius: 12.5,
        height: 10.0,
    };
    if let Ok(rec) = parse_recording(text, g) {
        if let Ok(trace) = reduce(&rec) {
            let _ = trace.segments();
        }
    }
});
