#![no_main]

use foamfit::discovery::{export_model, parse_model};
use foamfit::stress::uniaxial_stress;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let Ok(model) = parse_model(text) else { return };
    let again = parse_model(&export_model(&model).to_json()).unwrap();
    assert_eq!(again.terms, model.terms);
    let _ = uniaxial_stress(&model, 1.1);
});
