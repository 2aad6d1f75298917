use serde::Serialize;

pub const REPORT_SCHEMA_ID: &str = "momentcert-report/1";

/// JSON Schema of the report document.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

/// Serialize with object keys sorted, two-space indentation and a trailing newline.
pub fn emit_report_json<T: Serialize>(doc: &T) -> String {
    let value = serde_json::to_value(doc).expect("report types serialize infallibly");
    let mut out = serde_json::to_string_pretty(&value).expect("values serialize infallibly");
    out.push('\n');
    out
}
