//! Crystal shorthand either fails to parse or re-parses from its display
//! form to the same ordered factors.
#![no_main]

use fermisum::crystals::parse_crystal_shorthand;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if text.len() > 4096 {
        return;
    }
    if let Ok(factors) = parse_crystal_shorthand(text) {
        let shown: Vec<String> = factors.iter().map(|f| f.to_string()).collect();
        let again = parse_crystal_shorthand(&shown.join(" ")).expect("display output parses");
        assert_eq!(factors, again);
    }
});
