//! Run manifests: resolved settings plus digests of inputs and outputs.
//!
//! Paths never appear, only roles and file names, so the same run in two
//! directories yields the same manifest.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rugguard_core::util::{sha256_hex, write_atomic};

pub const RUN_MANIFEST: &str = "run_manifest.txt";

/// Where the run manifest for an output lives: inside a directory output,
/// or next to a file output as `<file>.manifest`.
pub fn manifest_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join(RUN_MANIFEST)
    } else {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest");
        out.with_file_name(name)
    }
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// Digest over `name sha256` lines of the visible files in `dir`, sorted by
/// name, skipping run manifests.
pub fn dir_digest(dir: &Path) -> Result<String> {
    let mut listing = String::new();
    for name in list_files(dir)? {
        if name == RUN_MANIFEST {
            continue;
        }
        listing.push_str(&format!("{name} {}\n", file_digest(&dir.join(&name))?));
    }
    Ok(sha256_hex(listing.as_bytes()))
}

/// Sorted names of the regular, non-hidden files in `dir`.
pub fn list_files(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))? {
        let entry = entry.with_context(|| format!("reading directory {}", dir.display()))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.file_type()?.is_file() && !name.starts_with('.') {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    entries: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut m = RunManifest::default();
        m.set("command", command);
        m.set("tool_version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn input_file(&mut self, role: &str, path: &Path) -> Result<()> {
        let d = file_digest(path)?;
        self.set(&format!("input.{role}.sha256"), d);
        Ok(())
    }

    pub fn input_dir(&mut self, role: &str, path: &Path) -> Result<()> {
        let d = dir_digest(path)?;
        self.set(&format!("input.{role}.sha256"), d);
        Ok(())
    }

    pub fn output(&mut self, name: &str, bytes: &[u8]) {
        self.set(&format!("output.{name}.sha256"), sha256_hex(bytes));
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes()).with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lives_next_to_files_and_inside_dirs() {
        assert_eq!(manifest_path(Path::new("out/labels.csv"), false), Path::new("out/labels.csv.manifest"));
        assert_eq!(manifest_path(Path::new("out/ds"), true), Path::new("out/ds/run_manifest.txt"));
    }

    #[test]
    fn dir_digest_ignores_hidden_files_and_manifests() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.trace"), "x").unwrap();
        let d = dir_digest(dir.path()).unwrap();
        fs::write(dir.path().join(".tmp"), "y").unwrap();
        fs::write(dir.path().join(RUN_MANIFEST), "z").unwrap();
        assert_eq!(dir_digest(dir.path()).unwrap(), d);
        fs::write(dir.path().join("a.trace"), "x2").unwrap();
        assert_ne!(dir_digest(dir.path()).unwrap(), d);
    }

    #[test]
    fn render_is_sorted() {
        let mut m = RunManifest::new("label");
        m.set("zeta", 1);
        m.set("alpha", 2);
        let text = m.render();
        assert!(text.starts_with("alpha=2\ncommand=label\n"));
    }
}
