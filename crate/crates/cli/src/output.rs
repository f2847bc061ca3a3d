use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NONCONVERGENCE: i32 = 4;
/// Failures outside the scripting contract (I/O on the output path, thread pool).
pub const EXIT_INTERNAL: i32 = 1;

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:?}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Text(String),
    Csv(String),
    Json(Value),
}

impl Payload {
    /// The bytes the checksum covers. JSON is hashed in compact form.
    pub fn canonical(&self) -> String {
        match self {
            Payload::Text(s) | Payload::Csv(s) => s.clone(),
            Payload::Json(v) => serde_json::to_string(v).expect("json values serialize"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub version: String,
    /// Hex SHA-256 of the canonical payload.
    pub checksum: String,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        params: Value,
        seed: Option<u64>,
        payload: &Payload,
        duration_secs: f64,
    ) -> Self {
        RunManifest {
            command: command.to_owned(),
            params,
            seed,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            checksum: checksum(&payload.canonical()),
            duration_secs,
        }
    }
}

pub fn checksum(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// A finished command: what to emit, its manifest, and the exit code.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub payload: Payload,
    pub manifest: RunManifest,
    pub exit_code: i32,
    /// Human-readable notes for standard error.
    pub diagnostics: Vec<String>,
}

impl Rendered {
    /// Final output text. JSON payloads embed the manifest next to the result.
    pub fn body(&self) -> String {
        match &self.payload {
            Payload::Text(s) | Payload::Csv(s) => s.clone(),
            Payload::Json(v) => {
                let doc = serde_json::json!({ "result": v, "manifest": self.manifest });
                let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
                s.push('\n');
                s
            }
        }
    }

    /// Sidecar manifest for outputs that cannot embed one.
    pub fn sidecar(&self) -> Option<String> {
        match self.payload {
            Payload::Json(_) => None,
            _ => {
                let mut s =
                    serde_json::to_string_pretty(&self.manifest).expect("json values serialize");
                s.push('\n');
                Some(s)
            }
        }
    }
}

/// Renders a header and rows as LF-terminated CSV.
pub(crate) fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 fields")
}
