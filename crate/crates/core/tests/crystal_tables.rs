//! Cell-by-cell comparison of computed R-matrices and energies with the
//! worked-example C_2 tables.

use fermisum::crystals::{CrystalId, RMatrix};
use serde_json::Value;

fn fixture() -> Value {
    serde_json::from_str(include_str!("fixtures/worked_example_tables.json")).unwrap()
}

fn check(label: &str) -> usize {
    let fx = fixture();
    let t = &fx[label];
    let left: CrystalId = t["left"].as_str().unwrap().parse().unwrap();
    let right: CrystalId = t["right"].as_str().unwrap().parse().unwrap();
    let r = RMatrix::get(left, right).unwrap();
    let computed = r.table();
    let rows = t["rows"].as_array().unwrap();
    assert_eq!(rows.len(), computed.len(), "{label}: table size");
    let mut mismatches = 0;
    for row in rows {
        let b1 = row["b1"].as_str().unwrap();
        let b2 = row["b2"].as_str().unwrap();
        let c = computed.iter().find(|c| c.0 == b1 && c.1 == b2).unwrap_or_else(|| panic!("{label}: no cell {b1} ⊗ {b2}"));
        let want_img = match row["image"].as_str() {
            Some(s) => s.to_string(),
            // Tables without an image column are on B ⊗ B, where R is the identity.
            None => format!("{b1} ⊗ {b2}"),
        };
        if c.2 != want_img || c.3 != row["minus_h"].as_i64().unwrap() {
            eprintln!("{label}: {b1} ⊗ {b2}: got ({}, {}) want ({want_img}, {})", c.2, c.3, row["minus_h"]);
            mismatches += 1;
        }
    }
    mismatches
}

#[test]
fn table_b11_b11() {
    assert_eq!(check("r_b11_b11"), 0);
}

#[test]
fn table_b21_b21() {
    assert_eq!(check("r_b21_b21"), 0);
}

#[test]
fn table_b12_b12() {
    assert_eq!(check("r_b12_b12"), 0);
}

#[test]
fn table_b21_b11() {
    assert_eq!(check("r_b21_b11"), 0);
}

#[test]
fn table_b12_b11() {
    assert_eq!(check("r_b12_b11"), 0);
}

#[test]
fn table_b12_b21() {
    assert_eq!(check("r_b12_b21"), 0);
}
