//! Tensor specs either fail to parse or survive a JSON round trip.
#![no_main]

use fermisum::fermionic::TensorSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = TensorSpec::from_json_str(text) {
        let again = TensorSpec::from_json_str(&spec.to_json().to_string()).expect("serialized spec parses");
        assert_eq!(spec, again);
    }
});
