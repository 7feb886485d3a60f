#![no_main]

use libfuzzer_sys::fuzz_target;

// The binary snapshot decoder must reject malformed input without panicking
// and round-trip anything it accepts.
fuzz_target!(|data: &[u8]| {
    if let Ok((grid, state)) = kksolve::io::decode_snapshot(data) {
        let encoded = kksolve::io::encode_snapshot(&state, &grid);
        let (g2, s2) = kksolve::io::decode_snapshot(&encoded).expect("re-decode");
        assert_eq!(g2, grid);
        assert_eq!(s2, state);
    }
});
