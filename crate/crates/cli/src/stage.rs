//! Staged output directories and the run manifest.
//!
//! A stage writes into a hidden sibling directory and is renamed into place
//! only after every file succeeded, so readers never see half a stage.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_at, CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";
const STAGING_PREFIX: &str = ".staging-";

pub struct Stage {
    name: String,
    dest: PathBuf,
    tmp: PathBuf,
    files: Vec<String>,
    committed: bool,
}

impl Stage {
    pub fn begin(out: &Path, name: &str) -> CliResult<Self> {
        fs::create_dir_all(out).map_err(io_at(out))?;
        let tmp = out.join(format!("{STAGING_PREFIX}{name}-{}", std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(io_at(&tmp))?;
        }
        fs::create_dir_all(&tmp).map_err(io_at(&tmp))?;
        Ok(Self { name: name.to_string(), dest: out.join(name), tmp, files: Vec::new(), committed: false })
    }

    /// Writes `bytes` to `rel` inside the stage.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let p = self.tmp.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(io_at(parent))?;
        }
        fs::write(&p, bytes).map_err(io_at(&p))?;
        self.files.push(format!("{}/{rel}", self.name));
        Ok(())
    }

    /// Replaces any previous output of this stage and returns the final
    /// artifact paths relative to the output directory.
    pub fn commit(mut self) -> CliResult<Vec<String>> {
        let old = self.tmp.with_file_name(format!("{STAGING_PREFIX}{}-old-{}", self.name, std::process::id()));
        if self.dest.exists() {
            fs::rename(&self.dest, &old).map_err(io_at(&self.dest))?;
        }
        fs::rename(&self.tmp, &self.dest).map_err(io_at(&self.dest))?;
        if old.exists() {
            fs::remove_dir_all(&old).map_err(io_at(&old))?;
        }
        self.committed = true;
        let mut files = std::mem::take(&mut self.files);
        files.sort();
        Ok(files)
    }
}

impl Drop for Stage {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub kind: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_file(path: &Path) -> CliResult<(u64, String)> {
    let mut f = fs::File::open(path).map_err(io_at(path))?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = f.read(&mut buf).map_err(io_at(path))?;
        if n == 0 {
            break;
        }
        total += n as u64;
        h.update(&buf[..n]);
    }
    Ok((total, hex::encode(h.finalize())))
}

fn kind_of(path: &str) -> String {
    Path::new(path).extension().and_then(|e| e.to_str()).unwrap_or("").to_string()
}

fn collect(dir: &Path, root: &Path, out: &mut Vec<String>) -> CliResult<()> {
    for entry in fs::read_dir(dir).map_err(io_at(dir))? {
        let entry = entry.map_err(io_at(dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') {
            continue;
        }
        let p = entry.path();
        if p.is_dir() {
            collect(&p, root, out)?;
        } else {
            let rel = p.strip_prefix(root).expect("walk stays under root");
            let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
            let rel = rel.join("/");
            if rel != MANIFEST {
                out.push(rel);
            }
        }
    }
    Ok(())
}

/// Hashes every artifact under `out`, skipping hidden entries and the
/// manifest itself. Paths use `/` and are sorted.
pub fn build_manifest(out: &Path) -> CliResult<Manifest> {
    if !out.is_dir() {
        return Err(CliError::MissingInput { path: out.to_path_buf() });
    }
    let mut files = Vec::new();
    collect(out, out, &mut files)?;
    files.sort();
    let artifacts = files
        .into_iter()
        .map(|rel| {
            let (bytes, sha256) = sha256_file(&out.join(&rel))?;
            Ok(Artifact { kind: kind_of(&rel), path: rel, bytes, sha256 })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Manifest { tool: "geoprobe".into(), version: env!("CARGO_PKG_VERSION").into(), artifacts })
}

/// Writes the manifest through a temp file and rename.
pub fn write_manifest(out: &Path, manifest: &Manifest) -> CliResult<PathBuf> {
    let dest = out.join(MANIFEST);
    let tmp = out.join(format!(".{MANIFEST}.tmp"));
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&tmp, text).map_err(io_at(&tmp))?;
    fs::rename(&tmp, &dest).map_err(io_at(&dest))?;
    Ok(dest)
}

/// Re-hashes every listed artifact; returns the paths that differ or vanished.
pub fn verify_manifest(out: &Path, manifest: &Manifest) -> CliResult<Vec<String>> {
    let mut bad = Vec::new();
    for a in &manifest.artifacts {
        let p = out.join(&a.path);
        if !p.is_file() {
            bad.push(a.path.clone());
            continue;
        }
        let (bytes, sha) = sha256_file(&p)?;
        if bytes != a.bytes || sha != a.sha256 {
            bad.push(a.path.clone());
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_replaces_previous_stage() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Stage::begin(dir.path(), "net").unwrap();
        s.write("a.txt", b"one").unwrap();
        s.write("sub/b.txt", b"two").unwrap();
        assert_eq!(s.commit().unwrap(), vec!["net/a.txt", "net/sub/b.txt"]);
        let mut s = Stage::begin(dir.path(), "net").unwrap();
        s.write("c.txt", b"three").unwrap();
        s.commit().unwrap();
        assert!(!dir.path().join("net/a.txt").exists());
        assert_eq!(fs::read(dir.path().join("net/c.txt")).unwrap(), b"three");
        let left: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(left, vec![std::ffi::OsString::from("net")]);
    }

    #[test]
    fn dropped_stage_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut s = Stage::begin(dir.path(), "net").unwrap();
            s.write("a.txt", b"x").unwrap();
        }
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn manifest_hashes_and_verifies() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Stage::begin(dir.path(), "m").unwrap();
        s.write("x.csv", b"abc").unwrap();
        s.commit().unwrap();
        let m = build_manifest(dir.path()).unwrap();
        assert_eq!(m.artifacts.len(), 1);
        assert_eq!(m.artifacts[0].path, "m/x.csv");
        assert_eq!(m.artifacts[0].kind, "csv");
        // sha256("abc")
        assert_eq!(m.artifacts[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        write_manifest(dir.path(), &m).unwrap();
        assert_eq!(build_manifest(dir.path()).unwrap(), m);
        assert!(verify_manifest(dir.path(), &m).unwrap().is_empty());
        fs::write(dir.path().join("m/x.csv"), b"abd").unwrap();
        assert_eq!(verify_manifest(dir.path(), &m).unwrap(), vec!["m/x.csv"]);
    }
}
