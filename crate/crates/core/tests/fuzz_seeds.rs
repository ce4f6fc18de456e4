//! Replays the checked-in fuzz corpus through the same round-trip
//! properties the fuzz targets assert, so regressions show up without a
//! fuzzing toolchain.

use std::fs;
use std::path::PathBuf;

use fermisum::crystals::parse_crystal_shorthand;
use fermisum::fermionic::TensorSpec;
use fermisum::qseries::LaurentPolyQ;
use fermisum::root_data::AlgebraId;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("corpus {}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let bytes = fs::read(&path).unwrap();
            (path.file_name().unwrap().to_string_lossy().into_owned(), String::from_utf8_lossy(&bytes).into_owned())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn algebra_id_seeds_round_trip() {
    let mut parsed = 0;
    for (name, text) in seeds("parse_algebra_id") {
        if let Ok(id) = text.parse::<AlgebraId>() {
            parsed += 1;
            assert_eq!(id.to_string().parse::<AlgebraId>().unwrap(), id, "seed {name}");
        }
    }
    assert!(parsed >= 4);
}

#[test]
fn tensor_spec_seeds_round_trip() {
    let mut parsed = 0;
    for (name, text) in seeds("parse_tensor_spec_json") {
        if let Ok(spec) = TensorSpec::from_json_str(&text) {
            parsed += 1;
            let again = TensorSpec::from_json_str(&spec.to_json().to_string()).unwrap();
            assert_eq!(spec, again, "seed {name}");
        }
    }
    assert!(parsed >= 2);
}

#[test]
fn crystal_shorthand_seeds_round_trip() {
    let mut parsed = 0;
    for (name, text) in seeds("parse_crystal_shorthand") {
        if let Ok(factors) = parse_crystal_shorthand(&text) {
            parsed += 1;
            let shown: Vec<String> = factors.iter().map(|f| f.to_string()).collect();
            assert_eq!(parse_crystal_shorthand(&shown.join(" ")).unwrap(), factors, "seed {name}");
        }
    }
    assert!(parsed >= 3);
}

#[test]
fn poly_json_seeds_round_trip() {
    let mut parsed = 0;
    for (name, text) in seeds("parse_poly_json") {
        if let Ok(p) = LaurentPolyQ::from_json_str(&text) {
            parsed += 1;
            assert_eq!(LaurentPolyQ::from_json(&p.to_json()).unwrap(), p, "seed {name}");
        }
    }
    assert!(parsed >= 3);
}
