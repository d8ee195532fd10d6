#![no_main]

use fme_core::hilbert::TruncatedState;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(state) = TruncatedState::from_json(text) {
        let again = TruncatedState::from_json(&state.to_json()).expect("re-parse of serialized state");
        assert_eq!(again.cutoff(), state.cutoff());
        assert_eq!(again.amplitudes().len(), state.amplitudes().len());
    }
});
