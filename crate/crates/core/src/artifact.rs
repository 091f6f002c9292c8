//! Provenance headers stamped onto every emitted artifact.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = concat!("loadfeat ", env!("CARGO_PKG_VERSION"));

/// Run identity written at the top of each output file: tool version,
/// config hash, seed, and every threshold that shaped the result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub config_hash: String,
    pub seed: u64,
    pub params: Vec<(String, String)>,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance {
            tool: TOOL_VERSION.to_string(),
            config_hash: "none".to_string(),
            seed: 0,
            params: Vec::new(),
        }
    }
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Provenance {
            config_hash: config_hash.into(),
            seed,
            ..Default::default()
        }
    }

    /// Sets `key`, replacing an earlier value in place.
    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        let value = value.to_string();
        match self.params.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.params.push((key.to_string(), value)),
        }
        self
    }

    fn summary(&self) -> String {
        let mut s = format!(
            "{} config={} seed={}",
            self.tool, self.config_hash, self.seed
        );
        for (k, v) in &self.params {
            s.push_str(&format!(" {k}={v}"));
        }
        s
    }

    /// `# ...` line for CSV outputs; readers skip it via the comment character.
    pub fn csv_comment(&self) -> String {
        format!("# {}\n", self.summary())
    }

    pub fn xml_comment(&self) -> String {
        format!("<!-- {} -->\n", self.summary().replace("--", "- -"))
    }

    pub fn json(&self) -> serde_json::Value {
        let mut params = serde_json::Map::new();
        for (k, v) in &self.params {
            params.insert(k.clone(), serde_json::Value::String(v.clone()));
        }
        serde_json::json!({
            "tool": self.tool,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "params": params,
        })
    }
}

/// Builds CSV text in memory with the provenance comment on the first line.
pub fn csv_string<F>(prov: &Provenance, write_rows: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        write_rows(&mut w)?;
        w.flush().map_err(|e| Error::io("<csv buffer>", e))?;
    }
    let body = String::from_utf8(buf).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(prov.csv_comment() + &body)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json(path: &Path, prov: &Provenance, body: serde_json::Value) -> Result<()> {
    let mut obj = serde_json::Map::new();
    obj.insert("_provenance".to_string(), prov.json());
    match body {
        serde_json::Value::Object(map) => obj.extend(map),
        other => {
            obj.insert("data".to_string(), other);
        }
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(obj))? + "\n";
    write_text(path, &text)
}

/// Formats a float so that parsing it back yields the identical bits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x}")
    }
}
