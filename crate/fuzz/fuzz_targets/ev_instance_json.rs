#![no_main]

use libfuzzer_sys::fuzz_target;
use qrobust::ev::{encode_ev, EvInstance};

fuzz_target!(|data: &[u8]| {
    if let Ok(inst) = EvInstance::from_json_slice(data) {
        let w = inst.default_total_weight(None);
        if inst.bits.iter().map(|&b| b as usize).sum::<usize>() <= 64 {
            let _ = encode_ev(&inst, None, w);
        }
    }
});
