//! Dataset manifests: JSON descriptions of embedding files with checksums.
//!
//! ```json
//! {"version":1,"entries":[{"embedding_file":"ref.npy","count":30000,"dim":768,
//!   "model_tag":"clip-vitl14-336","checksum":"9a3f0c2e51d7b864"}]}
//! ```
//!
//! Keys are emitted in the order above. `embedding_file` is resolved relative
//! to the manifest's directory. `checksum` is the FNV-1a 64-bit hash of the
//! whole file, as 16 lowercase hex digits. An optional `skipped` list names
//! inputs the producer could not embed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{MetricsError, Result};
use crate::npy;

pub const MANIFEST_VERSION: u32 = 1;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Streaming FNV-1a (64-bit).
///
/// Every step `h -> (h ^ byte) * prime` is a bijection of the state for a
/// fixed byte, so changing any single byte always changes the final hash.
#[derive(Debug, Clone, Copy)]
pub struct Fnv1a64(u64);

impl Default for Fnv1a64 {
    fn default() -> Self {
        Self(FNV_OFFSET)
    }
}

impl Fnv1a64 {
    pub fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}

pub fn checksum_bytes(bytes: &[u8]) -> String {
    let mut h = Fnv1a64::default();
    h.update(bytes);
    format!("{:016x}", h.finish())
}

pub fn checksum_file(path: impl AsRef<Path>) -> Result<String> {
    Ok(checksum_bytes(&fs::read(path)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub embedding_file: PathBuf,
    pub count: usize,
    pub dim: usize,
    pub model_tag: String,
    pub checksum: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

impl ManifestEntry {
    /// Describes an existing NPY file; `file` is recorded as given.
    pub fn describe(file: impl Into<PathBuf>, base: &Path, model_tag: impl Into<String>) -> Result<Self> {
        let file = file.into();
        let bytes = fs::read(base.join(&file))?;
        let set = npy::read_array_bytes(&bytes)?;
        Ok(Self {
            embedding_file: file,
            count: set.n(),
            dim: set.d(),
            model_tag: model_tag.into(),
            checksum: checksum_bytes(&bytes),
            skipped: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub entries: Vec<ManifestEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            version: MANIFEST_VERSION,
            entries: Vec::new(),
        }
    }
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let manifest: Manifest = serde_json::from_slice(&fs::read(path)?)?;
        if manifest.version != MANIFEST_VERSION {
            return Err(MetricsError::Manifest(format!(
                "unsupported manifest version {}",
                manifest.version
            )));
        }
        Ok(manifest)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    /// Checks every entry against its file; returns one message per problem.
    pub fn verify(&self, base: &Path) -> Vec<String> {
        let mut issues = Vec::new();
        for entry in &self.entries {
            let path = base.join(&entry.embedding_file);
            let label = entry.embedding_file.display();
            let bytes = match fs::read(&path) {
                Ok(b) => b,
                Err(e) => {
                    issues.push(format!("{label}: cannot read: {e}"));
                    continue;
                }
            };
            let sum = checksum_bytes(&bytes);
            if sum != entry.checksum {
                issues.push(format!("{label}: checksum {sum} does not match manifest {}", entry.checksum));
            }
            match npy::read_array_bytes(&bytes) {
                Ok(set) => {
                    if set.n() != entry.count {
                        issues.push(format!("{label}: file has {} rows, manifest says {}", set.n(), entry.count));
                    }
                    if set.d() != entry.dim {
                        issues.push(format!("{label}: file has dim {}, manifest says {}", set.d(), entry.dim));
                    }
                }
                Err(e) => issues.push(format!("{label}: {e}")),
            }
        }
        issues
    }

    pub fn verify_strict(&self, base: &Path) -> Result<()> {
        let issues = self.verify(base);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(MetricsError::Manifest(issues.join("; ")))
        }
    }
}
