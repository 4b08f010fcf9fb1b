#![no_main]

use libfuzzer_sys::fuzz_target;
use qrobust::scenario::ScenarioSet;

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = ScenarioSet::from_json_slice(data) {
        let _ = set.expected_scenario();
        if set.dim() == 2 {
            let _ = set.histogram_3d(3);
        }
    }
});
