//! On-disk pair datasets.
//!
//! ```text
//! <root>/manifest.toml
//! <root>/pairs/<id>/source.png
//! <root>/pairs/<id>/truth.png
//! <root>/pairs/<id>/corrections.png   (optional)
//! ```
//!
//! `truth.png` holds the automatic (or generator) truth. A correction layer,
//! when present, is applied on load and the pair is marked corrected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_binary_map, read_correction_layer, read_source, write_binary_map, write_gray, write_source};
use crate::labeling::{CorrectionLayer, HdadPair, Provenance};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const PAIRS_DIR: &str = "pairs";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidParams(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoredProvenance {
    Rough,
    Refined,
    Corrected,
}

impl From<Provenance> for StoredProvenance {
    fn from(p: Provenance) -> Self {
        match p {
            Provenance::Rough => StoredProvenance::Rough,
            Provenance::Refined => StoredProvenance::Refined,
            Provenance::Corrected => StoredProvenance::Corrected,
        }
    }
}

impl From<StoredProvenance> for Provenance {
    fn from(p: StoredProvenance) -> Self {
        match p {
            StoredProvenance::Rough => Provenance::Rough,
            StoredProvenance::Refined => Provenance::Refined,
            StoredProvenance::Corrected => Provenance::Corrected,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub split: Split,
    pub provenance: StoredProvenance,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default, rename = "pair")]
    pub pairs: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| Error::Format {
            path,
            message: e.to_string(),
        })
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        std::fs::create_dir_all(root).map_err(|source| Error::Io {
            path: root.to_path_buf(),
            source,
        })?;
        let path = root.join(MANIFEST_FILE);
        let text = toml::to_string(self).map_err(|e| Error::Format {
            path: path.clone(),
            message: e.to_string(),
        })?;
        std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
    }

    pub fn ids(&self, split: Option<Split>) -> Vec<&str> {
        self.pairs
            .iter()
            .filter(|e| split.is_none_or(|s| e.split == s))
            .map(|e| e.id.as_str())
            .collect()
    }
}

pub fn pair_dir(root: &Path, id: &str) -> PathBuf {
    root.join(PAIRS_DIR).join(id)
}

fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("invalid pair id `{id}`")))
    }
}

/// Writes the pair's files. The manifest is not touched.
pub fn write_pair(root: &Path, pair: &HdadPair, corrections: Option<&CorrectionLayer>) -> Result<()> {
    check_id(&pair.id)?;
    let dir = pair_dir(root, &pair.id);
    write_source(pair.source(), dir.join("source.png"))?;
    write_binary_map(pair.truth(), dir.join("truth.png"))?;
    if let Some(layer) = corrections {
        write_gray(&layer.to_gray(), dir.join("corrections.png"))?;
    }
    Ok(())
}

pub fn read_pair(root: &Path, entry: &ManifestEntry) -> Result<HdadPair> {
    check_id(&entry.id)?;
    let dir = pair_dir(root, &entry.id);
    let source = read_source(dir.join("source.png"))?;
    let truth = read_binary_map(dir.join("truth.png"))?;
    let pair = HdadPair::new(entry.id.clone(), source, truth, entry.provenance.into())?;
    let corrections = dir.join("corrections.png");
    if corrections.exists() && pair.provenance() != Provenance::Corrected {
        let layer = read_correction_layer(&corrections)?;
        return pair.corrected(&layer);
    }
    Ok(pair)
}

/// Loads every pair of the split (or all), in manifest order.
pub fn load_pairs(root: &Path, split: Option<Split>) -> Result<Vec<HdadPair>> {
    let manifest = Manifest::load(root)?;
    manifest
        .pairs
        .iter()
        .filter(|e| split.is_none_or(|s| e.split == s))
        .map(|e| read_pair(root, e))
        .collect()
}
