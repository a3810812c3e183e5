#![no_main]
use libfuzzer_sys::fuzz_target;

use vplat_core::replay::parse_history;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(steps) = parse_history(text) {
        assert!(steps.windows(2).all(|w| w[0].index < w[1].index));
    }
});
