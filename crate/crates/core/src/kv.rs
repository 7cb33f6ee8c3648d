//! Flat `key=value` text files, one entry per line, `#` comments.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Parsed entries with the line each came from, so later validation errors
/// can point at the offending line.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("expected key=value, got `{line}`")))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::parse(line_no, "empty key"));
            }
            if entries
                .insert(key.to_string(), (line_no, v.trim().to_string()))
                .is_some()
            {
                return Err(Error::parse(line_no, format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    /// Fails on the first key not in `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        for (k, (line, _)) in &self.entries {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::parse(*line, format!("unknown key `{k}`")));
            }
        }
        Ok(())
    }

    pub fn require_all(&self, keys: &[&str]) -> Result<()> {
        for k in keys {
            if !self.entries.contains_key(*k) {
                return Err(Error::parse(0, format!("missing key `{k}`")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Parses the value of `key` if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::parse(*line, format!("invalid value `{v}` for `{key}`"))),
        }
    }

    /// Overwrites `slot` when `key` is present.
    pub fn set<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(l, _)| *l)
    }
}

/// Formats `value` so that it parses back to the same `f64`.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let kv = KeyValues::parse("# header\n\na = 1.5 # trailing\nb=x\n").unwrap();
        assert_eq!(kv.get::<f64>("a").unwrap(), Some(1.5));
        assert_eq!(kv.get::<String>("b").unwrap().as_deref(), Some("x"));
        assert_eq!(kv.line_of("b"), 4);
    }

    #[test]
    fn rejects_malformed_and_duplicate() {
        let err = KeyValues::parse("a=1\nnonsense\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(KeyValues::parse("a=1\na=2").is_err());
    }

    #[test]
    fn unknown_and_missing_keys() {
        let kv = KeyValues::parse("a=1\nzzz=2").unwrap();
        assert!(matches!(
            kv.reject_unknown(&["a"]),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(kv.require_all(&["a", "b"]).is_err());
        assert!(kv.get::<f64>("zzz").is_ok());
        assert!(KeyValues::parse("a=abc").unwrap().get::<f64>("a").is_err());
    }
}
