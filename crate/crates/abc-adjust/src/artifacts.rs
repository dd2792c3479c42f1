//! Output directories written all-or-nothing.
//!
//! Files are staged in memory, written into a sibling temporary directory
//! and only then moved into place. A fresh output directory is created by a
//! single rename; into an existing directory each file is renamed over its
//! old version, so a reader never sees a half-written file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::{Error, Result};

#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        let name = name.into();
        debug_assert!(!name.contains(['/', '\\']), "artifact names are flat");
        self.files.retain(|(n, _)| *n != name);
        self.files.push((name, contents.into()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    /// Writes every file into `dir`, returning the final paths.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let parent = match dir.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
        let stem = dir.file_name().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
        let staging = parent.join(format!(".{stem}.tmp-{}-{}", std::process::id(), nanos()));
        let result = self.stage_and_move(&staging, dir);
        if staging.exists() {
            let _ = fs::remove_dir_all(&staging);
        }
        result
    }

    fn stage_and_move(&self, staging: &Path, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir(staging).map_err(|e| Error::io(staging, e))?;
        for (name, contents) in &self.files {
            let path = staging.join(name);
            fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        }
        if !dir.exists() && fs::rename(staging, dir).is_ok() {
            return Ok(self.files.iter().map(|(n, _)| dir.join(n)).collect());
        }
        if !dir.is_dir() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::AlreadyExists, "output path is not a directory"),
            ));
        }
        self.files
            .iter()
            .map(|(name, _)| {
                let target = dir.join(name);
                fs::rename(staging.join(name), &target).map_err(|e| Error::io(&target, e))?;
                Ok(target)
            })
            .collect()
    }
}

fn nanos() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos())
}

/// Seconds since the Unix epoch.
pub fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}
