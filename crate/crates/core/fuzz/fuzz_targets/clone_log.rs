#![no_main]
use libfuzzer_sys::fuzz_target;

use vplat_core::replay::parse_clone_log;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(entries) = parse_clone_log(text) {
        for e in &entries {
            assert!(!e.feature.is_empty() && !e.target_ref.is_empty());
        }
    }
});
