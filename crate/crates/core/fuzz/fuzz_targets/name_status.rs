#![no_main]
use libfuzzer_sys::fuzz_target;

use vplat_core::ChangeSet;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cs) = ChangeSet::parse_name_status(text) {
        assert_eq!(ChangeSet::parse_name_status(&cs.to_name_status()).unwrap(), cs);
    }
});
