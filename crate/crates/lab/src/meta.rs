//! Provenance sidecars: `<stem>.meta.json` next to a data file, carrying a
//! hash of the configuration that produced it and the tool version.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn config_hash(config: &Value) -> String {
    // serde_json maps are ordered by key, so this text is canonical
    let text = serde_json::to_string(config).expect("json values serialize");
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn meta_path(data: &Path) -> PathBuf {
    data.with_extension("meta.json")
}

pub fn meta_document(command: &str, config: &Value) -> Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_hash": config_hash(config),
        "config": config,
    })
}

pub fn write_meta(data: &Path, command: &str, config: &Value) -> std::io::Result<PathBuf> {
    let path = meta_path(data);
    let mut text = serde_json::to_string_pretty(&meta_document(command, config))
        .expect("json values serialize");
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}
