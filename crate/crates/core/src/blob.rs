//! Content-addressed blob storage.
//!
//! Blobs live at `<root>/blobs/<hh>/<hh>/<sha256>`. Ingest streams into a
//! temporary file under `<root>/tmp`, fsyncs it and renames it into place,
//! so a blob is either fully present or absent after a crash. Identical
//! content always lands on the same path, which is the whole dedup story.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use parking_lot::{RwLock, RwLockReadGuard};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::archive::{self, ArchiveError};
use crate::domain::{AssetId, FragmentSelector};

pub const DEFAULT_MAX_BLOB_BYTES: u64 = 512 * 1024 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum BlobError {
    #[error("blob exceeds the {limit}-byte limit")]
    TooLarge { limit: u64 },
    #[error("blob {0} not found")]
    NotFound(AssetId),
    #[error("stored bytes of blob {0} no longer match its id")]
    CorruptBlob(AssetId),
    #[error("byte range {offset}+{len} is outside a {size}-byte blob")]
    SelectorOutOfBounds { offset: u64, len: u64, size: u64 },
    #[error("blob is not a zip archive")]
    NotAnArchive,
    #[error("archive member {0:?} not found")]
    MemberMissing(String),
    #[error("storage failure: {0}")]
    Io(#[from] io::Error),
}

impl BlobError {
    pub fn code(&self) -> &'static str {
        match self {
            BlobError::TooLarge { .. } => "TooLarge",
            BlobError::NotFound(_) => "NotFound",
            BlobError::CorruptBlob(_) => "CorruptBlob",
            BlobError::SelectorOutOfBounds { .. } => "SelectorOutOfBounds",
            BlobError::NotAnArchive => "NotAnArchive",
            BlobError::MemberMissing(_) => "MemberMissing",
            BlobError::Io(_) => "StorageFailure",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlobStat {
    pub id: AssetId,
    pub size_bytes: u64,
}

/// Result of an ingest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stored {
    pub id: AssetId,
    pub size_bytes: u64,
    /// The blob was already present before this call.
    pub existing: bool,
}

/// Held by writers between storing a blob and recording a reference to it,
/// so a concurrent [`BlobStore::gc_with`] cannot sweep the blob in between.
pub struct IngestGuard<'a>(#[allow(dead_code)] RwLockReadGuard<'a, ()>);

pub struct BlobStore {
    root: PathBuf,
    max_bytes: u64,
    ingest: RwLock<()>,
}

impl BlobStore {
    pub fn open(root: impl Into<PathBuf>, max_bytes: u64) -> Result<Self, BlobError> {
        let root = root.into();
        fs::create_dir_all(root.join("blobs"))?;
        fs::create_dir_all(root.join("tmp"))?;
        Ok(Self {
            root,
            max_bytes,
            ingest: RwLock::new(()),
        })
    }

    pub fn max_bytes(&self) -> u64 {
        self.max_bytes
    }

    pub fn ingest_guard(&self) -> IngestGuard<'_> {
        IngestGuard(self.ingest.read_recursive())
    }

    fn path_of(&self, id: &AssetId) -> PathBuf {
        let hex = id.as_str();
        self.root
            .join("blobs")
            .join(&hex[0..2])
            .join(&hex[2..4])
            .join(hex)
    }

    pub fn put(&self, reader: impl Read) -> Result<AssetId, BlobError> {
        self.put_stream(reader).map(|s| s.id)
    }

    pub fn put_bytes(&self, bytes: &[u8]) -> Result<Stored, BlobError> {
        self.put_stream(bytes)
    }

    /// Streams `reader` into the store. Durable before returning.
    pub fn put_stream(&self, reader: impl Read) -> Result<Stored, BlobError> {
        let _guard = self.ingest.read_recursive();
        let tmp = self
            .root
            .join("tmp")
            .join(format!("{:032x}.part", rand::thread_rng().gen::<u128>()));
        let result = self.ingest_into(reader, &tmp);
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result
    }

    fn ingest_into(&self, reader: impl Read, tmp: &Path) -> Result<Stored, BlobError> {
        let mut file = File::create(tmp)?;
        let mut hasher = Sha256::new();
        let mut limited = reader.take(self.max_bytes.saturating_add(1));
        let mut buf = vec![0u8; 64 * 1024];
        let mut size = 0u64;
        loop {
            let n = match limited.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            };
            size += n as u64;
            if size > self.max_bytes {
                return Err(BlobError::TooLarge {
                    limit: self.max_bytes,
                });
            }
            hasher.update(&buf[..n]);
            file.write_all(&buf[..n])?;
        }
        file.sync_all()?;
        drop(file);

        let id = AssetId::from_digest(hasher.finalize().as_slice());
        let dest = self.path_of(&id);
        if dest.exists() {
            fs::remove_file(tmp)?;
            return Ok(Stored {
                id,
                size_bytes: size,
                existing: true,
            });
        }
        let dir = dest.parent().expect("blob path has a parent");
        fs::create_dir_all(dir)?;
        // A racing identical put may rename first; replacing identical bytes is harmless.
        fs::rename(tmp, &dest)?;
        sync_dir(dir)?;
        Ok(Stored {
            id,
            size_bytes: size,
            existing: false,
        })
    }

    pub fn contains(&self, id: &AssetId) -> bool {
        self.path_of(id).is_file()
    }

    /// Reads a blob and verifies it still hashes to `id`.
    pub fn get(&self, id: &AssetId) -> Result<Vec<u8>, BlobError> {
        let bytes = match fs::read(self.path_of(id)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(BlobError::NotFound(id.clone()))
            }
            Err(e) => return Err(e.into()),
        };
        if AssetId::of(&bytes) != *id {
            return Err(BlobError::CorruptBlob(id.clone()));
        }
        Ok(bytes)
    }

    pub fn stat(&self, id: &AssetId) -> Result<BlobStat, BlobError> {
        match fs::metadata(self.path_of(id)) {
            Ok(m) => Ok(BlobStat {
                id: id.clone(),
                size_bytes: m.len(),
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(BlobError::NotFound(id.clone())),
            Err(e) => Err(e.into()),
        }
    }

    /// Returns the part of a blob named by `sel`.
    pub fn extract(&self, id: &AssetId, sel: &FragmentSelector) -> Result<Vec<u8>, BlobError> {
        let bytes = self.get(id)?;
        match sel {
            FragmentSelector::Whole => Ok(bytes),
            FragmentSelector::ByteRange { offset, len } => {
                let size = bytes.len() as u64;
                let end = offset.checked_add(*len);
                match end {
                    Some(end) if *len >= 1 && end <= size => {
                        Ok(bytes[*offset as usize..end as usize].to_vec())
                    }
                    _ => Err(BlobError::SelectorOutOfBounds {
                        offset: *offset,
                        len: *len,
                        size,
                    }),
                }
            }
            FragmentSelector::Members { paths } => {
                archive::extract_members(&bytes, paths).map_err(|e| match e {
                    ArchiveError::MemberMissing(p) => BlobError::MemberMissing(p),
                    ArchiveError::Io(io) => BlobError::Io(io),
                    _ => BlobError::NotAnArchive,
                })
            }
        }
    }

    /// Every id currently on disk, sorted.
    pub fn list(&self) -> Result<Vec<AssetId>, BlobError> {
        let mut ids = Vec::new();
        for l1 in read_dir_sorted(&self.root.join("blobs"))? {
            for l2 in read_dir_sorted(&l1)? {
                for blob in read_dir_sorted(&l2)? {
                    if let Some(id) = blob
                        .file_name()
                        .and_then(|n| n.to_str())
                        .and_then(|n| n.parse::<AssetId>().ok())
                    {
                        ids.push(id);
                    }
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Removes every blob not in `live`.
    pub fn gc(&self, live: &HashSet<AssetId>) -> Result<usize, BlobError> {
        self.gc_with(|| Ok::<_, BlobError>(live.clone()))
    }

    /// Computes the live set with ingest excluded, then sweeps. Any writer
    /// holding an [`IngestGuard`] finishes before `live_set` runs.
    pub fn gc_with<E>(
        &self,
        live_set: impl FnOnce() -> Result<HashSet<AssetId>, E>,
    ) -> Result<usize, E>
    where
        E: From<BlobError>,
    {
        let _exclusive = self.ingest.write();
        let live = live_set()?;
        let mut removed = 0;
        for id in self.list()? {
            if !live.contains(&id) {
                fs::remove_file(self.path_of(&id)).map_err(BlobError::from)?;
                removed += 1;
            }
        }
        // leftovers from interrupted ingests
        for tmp in read_dir_sorted(&self.root.join("tmp")).map_err(BlobError::from)? {
            let _ = fs::remove_file(tmp);
        }
        Ok(removed)
    }
}

fn read_dir_sorted(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out = match fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.map(|e| e.path())).collect::<io::Result<Vec<_>>>()?,
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e),
    };
    out.sort();
    Ok(out)
}

#[cfg(unix)]
fn sync_dir(dir: &Path) -> io::Result<()> {
    File::open(dir)?.sync_all()
}

#[cfg(not(unix))]
fn sync_dir(_dir: &Path) -> io::Result<()> {
    Ok(())
}
