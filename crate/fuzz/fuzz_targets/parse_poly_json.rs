//! Polynomial JSON either fails to parse or survives a round trip.
#![no_main]

use fermisum::qseries::LaurentPolyQ;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = LaurentPolyQ::from_json_str(text) {
        let again = LaurentPolyQ::from_json(&p.to_json()).expect("serialized polynomial parses");
        assert_eq!(p, again);
    }
});
