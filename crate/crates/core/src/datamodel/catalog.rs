use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::egsf::sha256_hex;
use super::types::ANP_DIM;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnpEntry {
    pub name: String,
    pub sentiment_value: f64,
}

/// The ordered adjective-noun pair bank with signed sentiment values.
#[derive(Debug, Clone, PartialEq)]
pub struct AnpCatalog {
    entries: Vec<AnpEntry>,
    sha256: String,
}

impl AnpCatalog {
    /// Validate entries; the hash is taken over the canonical CSV encoding.
    pub fn new(entries: Vec<AnpEntry>, expected_len: usize) -> Result<Self> {
        validate_entries(&entries, expected_len)?;
        let sha256 = sha256_hex(encode_csv(&entries).as_bytes());
        Ok(AnpCatalog { entries, sha256 })
    }

    pub fn entries(&self) -> &[AnpEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sentiment_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.sentiment_value)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    /// Hex sha256 of the file the catalog was read from (or of its
    /// canonical CSV encoding when built in memory).
    pub fn sha256(&self) -> &str {
        &self.sha256
    }

    pub fn to_csv_string(&self) -> String {
        encode_csv(&self.entries)
    }
}

fn validate_entries(entries: &[AnpEntry], expected_len: usize) -> Result<()> {
    if entries.len() != expected_len {
        return Err(Error::BadCatalogSize {
            expected: expected_len,
            found: entries.len(),
        });
    }
    let mut names = HashSet::new();
    for e in entries {
        if !names.insert(e.name.as_str()) {
            return Err(Error::DuplicateAnp(e.name.clone()));
        }
        if !e.sentiment_value.is_finite() || !(-2.0..=2.0).contains(&e.sentiment_value) {
            return Err(Error::SentimentOutOfRange {
                name: e.name.clone(),
                value: e.sentiment_value,
            });
        }
        if e.sentiment_value == 0.0 {
            return Err(Error::ZeroSentiment(e.name.clone()));
        }
    }
    Ok(())
}

fn encode_csv(entries: &[AnpEntry]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in entries {
        w.serialize(e).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
}

/// Parse CSV text with header `name,sentiment_value`.
pub fn parse_anp_catalog(text: &str, expected_len: usize) -> Result<AnpCatalog> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse("ANP catalog", e))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["name", "sentiment_value"] {
        return Err(Error::parse(
            "ANP catalog",
            format!(
                "expected header `name,sentiment_value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let entries = reader
        .deserialize()
        .collect::<std::result::Result<Vec<AnpEntry>, _>>()
        .map_err(|e| Error::parse("ANP catalog", e))?;
    validate_entries(&entries, expected_len)?;
    Ok(AnpCatalog {
        entries,
        sha256: sha256_hex(text.as_bytes()),
    })
}

/// Load the standard 2089-entry catalog.
pub fn load_anp_catalog(path: impl AsRef<Path>) -> Result<AnpCatalog> {
    load_anp_catalog_sized(path, ANP_DIM)
}

pub fn load_anp_catalog_sized(path: impl AsRef<Path>, expected_len: usize) -> Result<AnpCatalog> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_anp_catalog(&text, expected_len)
}

pub fn write_anp_catalog(path: impl AsRef<Path>, catalog: &AnpCatalog) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, catalog.to_csv_string()).map_err(|e| Error::io(path, e))
}
