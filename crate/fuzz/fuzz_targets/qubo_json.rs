#![no_main]

use libfuzzer_sys::fuzz_target;
use qrobust::qubo::QuboProblem;

fuzz_target!(|data: &[u8]| {
    if let Ok(q) = QuboProblem::from_json_slice(data) {
        // Whatever parses must serialize and parse back to the same problem.
        let text = q.to_json().expect("serializes");
        let back = QuboProblem::from_json(&text).expect("reparses");
        assert_eq!(back.num_vars(), q.num_vars());
        if q.num_vars() <= 16 {
            let _ = q.evaluate_index(0);
        }
    }
});
