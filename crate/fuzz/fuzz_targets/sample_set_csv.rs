#![no_main]

use libfuzzer_sys::fuzz_target;
use qrobust::qubo::SampleSet;

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = SampleSet::read_csv(data) {
        let mut out = Vec::new();
        set.write_csv(&mut out).expect("writes");
        assert_eq!(SampleSet::read_csv(out.as_slice()).expect("reparses").len(), set.len());
    }
});
