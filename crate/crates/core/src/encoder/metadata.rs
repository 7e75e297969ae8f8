use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

pub const METADATA_FILE: &str = "metadata.txt";

/// Plain-text `key=value` file stored next to encoder weights.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata(BTreeMap<String, String>);

impl Metadata {
    pub fn new(kind: &str) -> Self {
        let mut m = Metadata::default();
        m.set("kind", kind);
        m
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Encoder(format!("metadata is missing `{key}`")))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::Encoder(format!("metadata `{key}` has invalid value `{raw}`")))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let body: String = self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        let path = dir.join(METADATA_FILE);
        fs::write(&path, body).map_err(|e| Error::io(path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(METADATA_FILE);
        let body = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut m = Metadata::default();
        for line in body.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Encoder(format!("{}: malformed line `{line}`", path.display())))?;
            m.set(k.trim(), v.trim());
        }
        Ok(m)
    }
}
