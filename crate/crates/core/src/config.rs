//! Flat `key = value` configuration text with `#` comments.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse_key_values(text: &str, path: &Path) -> Result<Vec<Entry>> {
    let mut entries: Vec<Entry> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(Error::Parse { path: path.to_path_buf(), line: n + 1, msg: "empty key".into() });
        }
        if let Some(prev) = entries.iter().find(|e| e.key == key) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                msg: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
        }
        entries.push(Entry { key, value: value.trim().to_string(), line: n + 1 });
    }
    Ok(entries)
}
