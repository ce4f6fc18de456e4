//! Algebra ids either fail to parse or survive a display round trip.
#![no_main]

use fermisum::root_data::AlgebraId;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(id) = text.parse::<AlgebraId>() {
        let again: AlgebraId = id.to_string().parse().expect("display output parses");
        assert_eq!(id, again);
    }
});
