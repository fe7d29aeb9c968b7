use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

/// Identifies how an output was produced.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(seed: Option<u64>) -> Self {
        let command = std::env::args().collect::<Vec<_>>().join(" ");
        Self { command, seed }
    }

    pub fn comment_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("asis {}", env!("CARGO_PKG_VERSION")),
            format!("command: {}", self.command),
        ];
        if let Some(seed) = self.seed {
            lines.push(format!("seed: {seed}"));
        }
        lines
    }

    pub fn csv_header(&self) -> String {
        self.comment_lines().iter().map(|l| format!("# {l}\n")).collect()
    }

    pub fn json(&self) -> Value {
        json!({
            "command": self.command,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }
}

pub fn write_text(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

/// Pretty JSON with a `provenance` member prepended to the object.
pub fn json_text(prov: &Provenance, body: Value) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert("provenance".into(), prov.json());
    match body {
        Value::Object(map) => obj.extend(map),
        other => {
            obj.insert("result".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("serialisable");
    text.push('\n');
    text
}
