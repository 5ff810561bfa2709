use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const TOOL_NAME: &str = "cdf2pdf";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn manifest_name(command: &str) -> String {
    format!("{command}.manifest.json")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Effective configuration, as INI text.
    pub config: String,
    pub artifacts: Vec<ArtifactEntry>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }

    /// Re-hash every artifact under `root`.
    pub fn verify(&self, root: &Path) -> Result<()> {
        for a in &self.artifacts {
            let p = root.join(&a.path);
            if !p.exists() {
                return Err(Error::Dependency(p));
            }
            let actual = sha256_file(&p)?;
            if actual != a.sha256 {
                return Err(Error::Schema(format!(
                    "artifact {} changed: recorded {}, found {actual}",
                    a.path, a.sha256
                )));
            }
        }
        Ok(())
    }

    /// Write to `path` only if nothing is there yet. The document is staged
    /// in a sibling file and linked into place, so a reader sees either no
    /// manifest or a complete one.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.partial");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(serde_json::to_string_pretty(self)?.as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        let linked = fs::hard_link(&tmp, path);
        fs::remove_file(&tmp)?;
        match linked {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::config(format!("{} already exists", path.display())))
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// Write-once registry of the files a command produces.
#[derive(Debug)]
pub struct Artifacts {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Reserve `rel` for writing. Fails if a file is already there, so no
    /// command overwrites an earlier output.
    pub fn claim(&mut self, rel: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if path.exists() || self.files.contains(&path) {
            return Err(Error::config(format!(
                "artifact {} already exists; outputs are write-once, choose a fresh --out",
                path.display()
            )));
        }
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(path.clone());
        Ok(path)
    }

    /// Claim `rel` and write `bytes` to it.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.claim(rel)?;
        let mut f = fs::OpenOptions::new().write(true).create_new(true).open(&path)?;
        f.write_all(bytes)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.files
    }

    /// Hash every claimed file; missing ones are an internal error.
    pub fn entries(&self) -> Result<Vec<ArtifactEntry>> {
        let mut out = Vec::with_capacity(self.files.len());
        for p in &self.files {
            let bytes = fs::read(p)?;
            let rel = p.strip_prefix(&self.root).unwrap_or(p);
            out.push(ArtifactEntry {
                path: rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/"),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
        out.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn claims_are_write_once() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(dir.path()).unwrap();
        a.write("x/one.txt", b"1").unwrap();
        assert!(a.claim("x/one.txt").is_err());
        let mut b = Artifacts::new(dir.path()).unwrap();
        assert!(b.write("x/one.txt", b"2").is_err());
        assert_eq!(fs::read(dir.path().join("x/one.txt")).unwrap(), b"1");
    }

    #[test]
    fn manifest_round_trip_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(dir.path()).unwrap();
        a.write("d/f.csv", b"a,b\n1,2\n").unwrap();
        let m = RunManifest {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            command: "gen".into(),
            seed: 3,
            config: "[run]\nseed = 3\n".into(),
            artifacts: a.entries().unwrap(),
            timings: BTreeMap::from([("total".to_string(), 0.5)]),
        };
        assert_eq!(m.artifacts[0].path, "d/f.csv");
        let path = dir.path().join(manifest_name("gen"));
        m.write_atomic(&path).unwrap();
        assert!(m.write_atomic(&path).is_err());
        let back = RunManifest::load(&path).unwrap();
        assert_eq!(back, m);
        back.verify(dir.path()).unwrap();
        fs::write(dir.path().join("d/f.csv"), b"tampered").unwrap();
        assert!(matches!(back.verify(dir.path()), Err(Error::Schema(_))));
        assert!(!dir.path().join("gen.manifest.json.partial").exists());
    }
}
