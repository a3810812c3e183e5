#![no_main]
use libfuzzer_sys::fuzz_target;

use vplat_core::parse::{parse_folder_mapping, serialize_folder_mapping};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(features) = parse_folder_mapping(text) {
        assert_eq!(parse_folder_mapping(&serialize_folder_mapping(&features)).unwrap(), features);
    }
});
