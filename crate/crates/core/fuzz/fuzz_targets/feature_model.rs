#![no_main]
use libfuzzer_sys::fuzz_target;

use vplat_core::parse::{parse_feature_model, serialize_feature_model};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(fm) = parse_feature_model(text) {
        let canonical = serialize_feature_model(&fm);
        let again = parse_feature_model(&canonical).expect("canonical text must parse");
        assert_eq!(again.shape(), fm.shape());
        assert_eq!(serialize_feature_model(&again), canonical);
    }
});
