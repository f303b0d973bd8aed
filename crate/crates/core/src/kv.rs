//! Flat `key = value` text files. `#` starts a comment.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: format!("expected key = value, got {line:?}"),
        })?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "empty key".into(),
            });
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("{key} already set on line {}", prev.line),
            });
        }
        out.push(Entry {
            line: idx + 1,
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn parse_map(text: &str) -> Result<BTreeMap<String, String>> {
    Ok(parse(text)?.into_iter().map(|e| (e.key, e.value)).collect())
}

/// Typed lookup of a required key.
pub fn get<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let v = map
        .get(key)
        .ok_or_else(|| Error::InvalidParameter(format!("missing key {key}")))?;
    v.parse()
        .map_err(|_| Error::InvalidParameter(format!("bad value for {key}: {v:?}")))
}

/// Comma-separated list.
pub fn get_list<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Vec<T>> {
    let v = map
        .get(key)
        .ok_or_else(|| Error::InvalidParameter(format!("missing key {key}")))?;
    v.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad entry in {key}: {t:?}")))
        })
        .collect()
}
