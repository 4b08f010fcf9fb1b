#![no_main]

use libfuzzer_sys::fuzz_target;
use qrobust::ucp::{UcpEncoding, UcpInstance, UcpWeights};

fuzz_target!(|data: &[u8]| {
    if let Ok(inst) = UcpInstance::from_json_slice(data) {
        // The layout allocates per step; a bare huge num_steps is not interesting.
        if inst.num_steps.saturating_mul(inst.num_units().max(1)) > 1 << 16 {
            return;
        }
        let enc = UcpEncoding::new(&inst, UcpWeights::default_for(&inst));
        let _ = enc.num_vars();
    }
});
