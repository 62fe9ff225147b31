//! Artifact tree: atomic writes plus a sha256 manifest.

use std::fs;
use std::path::{Path, PathBuf};

use imbench_util::fsx::write_atomic;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.txt";
const MANIFEST_HEADER: &str = "# imbench-manifest v1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects written files; `finish` writes the manifest.
pub struct ArtifactWriter {
    root: PathBuf,
    entries: Vec<(String, String)>,
}

impl ArtifactWriter {
    pub fn new(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(ArtifactWriter { root: root.to_path_buf(), entries: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Write `bytes` at `rel` (forward-slash relative path).
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        write_atomic(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.entries.retain(|(p, _)| p != rel);
        self.entries.push((rel.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn finish(mut self) -> Result<Manifest, CliError> {
        self.entries.sort();
        let m = Manifest { entries: self.entries };
        let path = self.root.join(MANIFEST);
        write_atomic(&path, m.to_text().as_bytes()).map_err(|e| CliError::io(&path, e))?;
        Ok(m)
    }
}

/// `(relative path, sha256)` pairs, sorted by path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = format!("{MANIFEST_HEADER}\n");
        for (p, h) in &self.entries {
            s.push_str(&format!("{h}  {p}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines();
        if lines.next() != Some(MANIFEST_HEADER) {
            return Err(CliError::Config("not an imbench manifest".into()));
        }
        let entries = lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split_once("  ")
                    .map(|(h, p)| (p.to_string(), h.to_string()))
                    .ok_or_else(|| CliError::Config(format!("bad manifest line `{l}`")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Manifest { entries })
    }

    pub fn load(root: &Path) -> Result<Self, CliError> {
        let path = root.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|_| CliError::MissingArtifact(path))?;
        Self::parse(&text)
    }

    /// Paths whose on-disk content no longer matches the recorded hash.
    pub fn verify(&self, root: &Path) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(p, h)| fs::read(root.join(p)).map(|b| sha256_hex(&b) != *h).unwrap_or(true))
            .map(|(p, _)| p.clone())
            .collect()
    }
}

pub fn read_artifact(root: &Path, rel: &str) -> Result<String, CliError> {
    let path = root.join(rel);
    fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingArtifact(path),
        _ => CliError::io(&path, e),
    })
}
