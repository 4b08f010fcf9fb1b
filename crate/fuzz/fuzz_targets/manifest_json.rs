#![no_main]

use libfuzzer_sys::fuzz_target;
use qrobust::cli::Manifest;

fuzz_target!(|data: &[u8]| {
    let _ = Manifest::from_json_slice(data);
});
