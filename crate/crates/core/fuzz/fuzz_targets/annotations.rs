#![no_main]
use libfuzzer_sys::fuzz_target;

use vplat_core::parse::{build_file_structure, parse_annotations};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spans) = parse_annotations(text) {
        let lines = text.lines().count();
        for s in &spans {
            assert!(1 <= s.start && s.start <= s.end && s.end <= lines);
        }
        build_file_structure("f.js", text).expect("annotations parsed, structure must build");
    }
});
