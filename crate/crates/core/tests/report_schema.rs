use momentcert::catalog;
use momentcert::diagnosis::{diagnose, sweep, DiagnosisOptions};
use momentcert::io::{emit_report_json, PopInstance, ReportDocument, REPORT_SCHEMA};
use serde_json::Value;

fn validator() -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).expect("schema is JSON");
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(v: &jsonschema::Validator, doc: &Value, what: &str) {
    let errors: Vec<String> = v
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{what}: {errors:#?}");
}

fn report(p: &PopInstance, orders: (u32, u32)) -> String {
    let opts = DiagnosisOptions {
        orders: Some(orders),
        ..Default::default()
    };
    emit_report_json(&ReportDocument::new(p, &opts, diagnose(p, &opts)))
}

#[test]
fn reports_match_schema_and_are_reproducible() {
    let v = validator();
    for (p, orders) in [
        (catalog::degenerate_point(), (1, 2)),
        (catalog::lemniscate(), (2, 3)),
        (catalog::simplex_cubic(), (2, 3)),
        (catalog::motzkin_ball(), (2, 3)),
        (catalog::motzkin_plus_quadratic(), (3, 3)),
    ] {
        let text = report(&p, orders);
        assert!(text.ends_with('\n'));
        let doc: Value = serde_json::from_str(&text).unwrap();
        assert_valid(&v, &doc, p.name());
        assert_eq!(text, report(&p, orders), "{} is not reproducible", p.name());
    }
}

#[test]
fn sweep_rows_match_row_schema() {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let mut row_schema = schema.clone();
    row_schema["$ref"] = Value::String("#/$defs/row".into());
    for key in ["type", "required", "properties", "additionalProperties"] {
        row_schema.as_object_mut().unwrap().remove(key);
    }
    let v = jsonschema::validator_for(&row_schema).unwrap();
    let p = catalog::lemniscate();
    for row in sweep(&p, (2, 3), &DiagnosisOptions::default()) {
        let doc = serde_json::to_value(&row).unwrap();
        assert_valid(&v, &doc, "row");
    }
}

#[test]
fn schema_rejects_unknown_fields() {
    let v = validator();
    let p = catalog::degenerate_point();
    let mut doc: Value = serde_json::from_str(&report(&p, (1, 1))).unwrap();
    assert!(v.is_valid(&doc));
    doc["diagnosis"]["extra"] = Value::Bool(true);
    assert!(!v.is_valid(&doc));
}
