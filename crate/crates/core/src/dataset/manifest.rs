use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{decode_image, format_for, list_images, Label};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: String,
    pub label: Label,
    pub w: usize,
    pub h: usize,
    pub sha256: String,
}

/// Images under a root directory, each decoded and hashed once at build time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub root: String,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    /// Scans the supported images directly inside `root`, all with `label`.
    pub fn scan(root: impl AsRef<Path>, label: Label) -> Result<Self> {
        let root = root.as_ref();
        let mut manifest = Self {
            root: root.to_string_lossy().into_owned(),
            entries: Vec::new(),
        };
        for path in list_images(root)? {
            let rel = path
                .strip_prefix(root)
                .unwrap_or(&path)
                .to_string_lossy()
                .into_owned();
            manifest.push(&rel, label)?;
        }
        Ok(manifest)
    }

    /// Adds `rel` (relative to the root); its file name becomes the id.
    pub fn push(&mut self, rel: &str, label: Label) -> Result<&ManifestEntry> {
        let full = self.resolve(rel);
        let format = format_for(&full).ok_or_else(|| Error::UnsupportedFormat(full.clone()))?;
        let bytes = fs::read(&full).map_err(|e| Error::io(&full, e))?;
        let img = decode_image(&bytes, format, &full)?;
        let id = Path::new(rel)
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| rel.to_string());
        if self.entries.iter().any(|e| e.id == id) {
            return Err(Error::Validation(format!("duplicate manifest id {id:?}")));
        }
        self.entries.push(ManifestEntry {
            id,
            path: rel.to_string(),
            label,
            w: img.width(),
            h: img.height(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        Path::new(&self.root).join(rel)
    }

    /// Checks id uniqueness, file presence and content hashes.
    pub fn verify(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate manifest id {:?}",
                    e.id
                )));
            }
            let full = self.resolve(&e.path);
            let bytes = fs::read(&full).map_err(|err| Error::io(&full, err))?;
            if hex::encode(Sha256::digest(&bytes)) != e.sha256 {
                return Err(Error::Validation(format!(
                    "content hash changed for {}",
                    e.path
                )));
            }
        }
        Ok(())
    }

    pub fn ids_with(&self, label: Label) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(move |e| e.label == label)
            .map(|e| e.id.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::save_png16;
    use crate::GrayImage;

    #[test]
    fn scan_hash_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        for (i, name) in ["b.png", "a.png"].iter().enumerate() {
            let img = GrayImage::constant(4, 2, i as f64 / 2.0).unwrap();
            save_png16(&img, dir.path().join(name)).unwrap();
        }
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();

        let m = CorpusManifest::scan(dir.path(), Label::Real).unwrap();
        let ids: Vec<_> = m.entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["a.png", "b.png"]);
        assert_eq!((m.entries[0].w, m.entries[0].h), (4, 2));
        assert_eq!(m.entries[0].sha256.len(), 64);
        m.verify().unwrap();

        let again = CorpusManifest::scan(dir.path(), Label::Real).unwrap();
        assert_eq!(again, m);

        let mut dup = m.clone();
        assert!(dup.push("a.png", Label::Fake).is_err());

        save_png16(
            &GrayImage::constant(4, 2, 1.0).unwrap(),
            dir.path().join("a.png"),
        )
        .unwrap();
        assert!(m.verify().is_err());
    }

    #[test]
    fn missing_root_is_not_found() {
        let dir = tempfile::tempdir().unwrap();
        let err = CorpusManifest::scan(dir.path().join("nope"), Label::Real).unwrap_err();
        assert!(matches!(err, Error::NotFound(_)));
    }
}
