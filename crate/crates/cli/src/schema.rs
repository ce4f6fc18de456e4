//! Validation of JSON inputs against the schemas shipped in `schemas/`.

use jsonschema::JSONSchema;
use serde_json::Value;

use crate::UsageError;

/// Schema for tensor-product specifications.
pub const TENSOR_SPEC: &str = include_str!("../schemas/tensor_spec.schema.json");
/// Schema for polynomial payloads; outputs embed it under `terms`.
#[cfg(test)]
pub const POLYNOMIAL: &str = include_str!("../schemas/polynomial.schema.json");
/// Schema for `verify` reports.
pub const CHECK_REPORT: &str = include_str!("../schemas/check_report.schema.json");

/// Parses `text` and validates it against `schema`, collecting every
/// violation into one diagnostic.
pub fn validate(schema: &str, what: &str, text: &str) -> Result<Value, UsageError> {
    let instance: Value =
        serde_json::from_str(text).map_err(|e| UsageError(format!("{what}: not valid JSON: {e}")))?;
    let schema: Value = serde_json::from_str(schema).expect("bundled schema is valid JSON");
    let compiled = JSONSchema::compile(&schema).expect("bundled schema compiles");
    if let Err(errors) = compiled.validate(&instance) {
        let lines: Vec<String> = errors
            .map(|e| {
                let at = e.instance_path.to_string();
                format!("  at '{}': {e}", if at.is_empty() { "/" } else { &at })
            })
            .collect();
        return Err(UsageError(format!("{what} failed schema validation:\n{}", lines.join("\n"))));
    }
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_worked_example_spec() {
        let text = r#"{"algebra":"C2","factors":[{"a":1,"s":2},{"a":2,"s":1,"count":3},{"a":1,"s":1,"count":2}]}"#;
        assert!(validate(TENSOR_SPEC, "spec", text).is_ok());
    }

    #[test]
    fn rejects_missing_and_extra_fields() {
        let err = validate(TENSOR_SPEC, "spec", r#"{"algebra":"C2","factors":[{"a":1}],"x":1}"#).unwrap_err();
        assert!(err.0.contains("schema validation"), "{}", err.0);
        assert!(validate(TENSOR_SPEC, "spec", r#"{"algebra":"Q2","factors":[]}"#).is_err());
        assert!(validate(TENSOR_SPEC, "spec", "not json").is_err());
    }

    #[test]
    fn polynomial_schema_matches_core_serialization() {
        let p = fermisum::qseries::LaurentPolyQ::from_terms([(-3, 2), (0, 1)]);
        assert!(validate(POLYNOMIAL, "poly", &p.to_json().to_string()).is_ok());
        assert!(validate(POLYNOMIAL, "poly", r#"{"x":"1"}"#).is_err());
    }
}
