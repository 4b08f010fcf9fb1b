#![no_main]

use libfuzzer_sys::fuzz_target;
use qrobust::qubo::Bitstring;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(b) = text.parse::<Bitstring>() {
            assert_eq!(b.to_string(), text);
        }
    }
});
