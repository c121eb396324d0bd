//! JSONL dataset manifest.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::patchqc::QCReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleClass {
    LowTort,
    HighTort,
    Skull,
    Background,
}

impl SampleClass {
    pub const ALL: [SampleClass; 4] = [Self::LowTort, Self::HighTort, Self::Skull, Self::Background];

    pub fn name(self) -> &'static str {
        match self {
            Self::LowTort => "low_tort",
            Self::HighTort => "high_tort",
            Self::Skull => "skull",
            Self::Background => "background",
        }
    }

    /// Stable small integer used in seed derivation.
    pub fn code(self) -> u64 {
        match self {
            Self::LowTort => 0,
            Self::HighTort => 1,
            Self::Skull => 2,
            Self::Background => 3,
        }
    }

    pub fn has_vessels(self) -> bool {
        self != Self::Background
    }
}

impl fmt::Display for SampleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SampleClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::param("class", format!("unknown class `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleManifestEntry {
    pub sample_id: String,
    pub class: SampleClass,
    pub seed: u64,
    pub image_path: String,
    pub label_path: String,
    pub qc: QCReport,
    pub params_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutout_image_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutout_mask_path: Option<String>,
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn check_unique(entries: &[SampleManifestEntry]) -> Result<()> {
    let mut seen = HashSet::new();
    for e in entries {
        if !seen.insert(e.sample_id.as_str()) {
            return Err(Error::Manifest(format!("duplicate sample_id `{}`", e.sample_id)));
        }
    }
    Ok(())
}

/// Serializes entries sorted by `sample_id`, one JSON object per line.
pub fn manifest_to_string(entries: &[SampleManifestEntry]) -> Result<String> {
    check_unique(entries)?;
    let mut sorted: Vec<&SampleManifestEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let mut out = String::new();
    for e in sorted {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_manifest(entries: &[SampleManifestEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = manifest_to_string(entries)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn parse_manifest(text: &str) -> Result<Vec<SampleManifestEntry>> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let e: SampleManifestEntry = serde_json::from_str(line)
            .map_err(|err| Error::Manifest(format!("line {}: {err}", n + 1)))?;
        entries.push(e);
    }
    check_unique(&entries)?;
    Ok(entries)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<SampleManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}
