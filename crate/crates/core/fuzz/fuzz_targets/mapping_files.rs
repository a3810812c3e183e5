#![no_main]
use libfuzzer_sys::fuzz_target;

use vplat_core::parse::{parse_files_mapping, serialize_files_mapping};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_files_mapping(text) {
        assert_eq!(parse_files_mapping(&serialize_files_mapping(&rows)).unwrap(), rows);
    }
});
