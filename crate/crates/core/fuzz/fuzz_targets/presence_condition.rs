#![no_main]
use libfuzzer_sys::fuzz_target;

use vplat_core::Pc;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pc) = text.parse::<Pc>() {
        let again: Pc = pc.to_string().parse().expect("printed condition must parse");
        assert_eq!(again, pc);
    }
});
