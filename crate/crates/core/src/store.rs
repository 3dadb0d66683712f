//! Content-addressed blob store for prescriptions and bills.
//!
//! Layout: `<root>/<hh>/<digest>` where `<digest>` is the 64-hex SHA-256 of
//! the blob and `<hh>` its first two characters. Writes go to a temporary
//! file in `<root>/tmp` and are renamed into place, so concurrent puts of
//! the same blob converge on one stored copy.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::hash::ContentHash;

pub const DEFAULT_BLOB_LIMIT: usize = 16 * 1024 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("blob of {size} bytes exceeds the {limit}-byte limit")]
    BlobTooLarge { size: usize, limit: usize },
    #[error("blob {0} not found")]
    NotFound(ContentHash),
    #[error("stored blob {expected} is corrupt (contents hash to {actual})")]
    Integrity {
        expected: ContentHash,
        actual: ContentHash,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug)]
pub struct BlobStore {
    root: PathBuf,
    limit: usize,
    tmp_seq: AtomicU64,
}

/// Count and total size of stored blobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StoreStats {
    pub blobs: u64,
    pub bytes: u64,
}

impl BlobStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        Self::open_with_limit(root, DEFAULT_BLOB_LIMIT)
    }

    pub fn open_with_limit(root: impl Into<PathBuf>, limit: usize) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("tmp"))?;
        Ok(BlobStore {
            root,
            limit,
            tmp_seq: AtomicU64::new(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn path_of(&self, hash: &ContentHash) -> PathBuf {
        let hex = hash.hex();
        self.root.join(&hex[..2]).join(hex)
    }

    pub fn put(&self, bytes: &[u8]) -> Result<ContentHash, StoreError> {
        if bytes.len() > self.limit {
            return Err(StoreError::BlobTooLarge {
                size: bytes.len(),
                limit: self.limit,
            });
        }
        let hash = ContentHash::of(bytes);
        let path = self.path_of(&hash);
        if path.exists() {
            return Ok(hash);
        }
        fs::create_dir_all(path.parent().expect("blob path has a fanout directory"))?;
        let tmp = self.root.join("tmp").join(format!(
            "{}-{}-{}",
            hash.hex(),
            std::process::id(),
            self.tmp_seq.fetch_add(1, Ordering::Relaxed)
        ));
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(bytes)?;
            file.sync_all()?;
        }
        // rename over an identical copy from a racing writer is harmless
        fs::rename(&tmp, &path)?;
        Ok(hash)
    }

    /// Returns the stored bytes after checking they still hash to `hash`.
    pub fn get(&self, hash: &ContentHash) -> Result<Vec<u8>, StoreError> {
        let bytes = match fs::read(self.path_of(hash)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound(*hash))
            }
            Err(e) => return Err(e.into()),
        };
        let actual = ContentHash::of(&bytes);
        if actual != *hash {
            return Err(StoreError::Integrity {
                expected: *hash,
                actual,
            });
        }
        Ok(bytes)
    }

    pub fn contains(&self, hash: &ContentHash) -> bool {
        self.path_of(hash).is_file()
    }

    pub fn stats(&self) -> Result<StoreStats, StoreError> {
        let mut stats = StoreStats::default();
        for fanout in fs::read_dir(&self.root)? {
            let fanout = fanout?;
            let name = fanout.file_name();
            if name == "tmp" || !fanout.file_type()?.is_dir() {
                continue;
            }
            for blob in fs::read_dir(fanout.path())? {
                let meta = blob?.metadata()?;
                if meta.is_file() {
                    stats.blobs += 1;
                    stats.bytes += meta.len();
                }
            }
        }
        Ok(stats)
    }
}
