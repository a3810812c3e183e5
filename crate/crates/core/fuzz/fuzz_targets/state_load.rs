#![no_main]
//! Input: the state files' contents in their fixed order, separated by NUL.
use std::collections::BTreeMap;

use libfuzzer_sys::fuzz_target;

use vplat_core::sync::{parse_state, render_state, STATE_FILES};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let texts: BTreeMap<&str, String> =
        STATE_FILES.iter().copied().zip(text.split('\0').map(str::to_string)).collect();
    if let Ok(ws) = parse_state(&texts) {
        let rendered = render_state(&ws);
        let again = parse_state(&rendered).expect("rendered state must load");
        assert_eq!(again, ws);
    }
});
