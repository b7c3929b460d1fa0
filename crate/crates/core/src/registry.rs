//! The catalog, blob store and account service wired together over one data
//! directory. Operations that touch more than one of them live here.

use std::collections::HashSet;
use std::io::Read;
use std::ops::Deref;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::archive;
use crate::auth::{Auth, PasswordCost, Session, DEFAULT_TOKEN_TTL_MILLIS};
use crate::blob::{BlobStore, DEFAULT_MAX_BLOB_BYTES};
use crate::catalog::{Catalog, CatalogOptions, Selection};
use crate::domain::{
    clean_display_name, normalize_tags, AssetId, AssetMeta, Clock, ProjectId, SystemClock,
    Timestamp, User, UserId,
};
use crate::error::{Error, Result};
use crate::packaging::{build_package, PackageManifest};

pub const JOURNAL_FILE: &str = "catalog.journal";
const ZIP_MAGIC: &[u8] = b"PK\x03\x04";

#[derive(Clone)]
pub struct Config {
    pub data_dir: PathBuf,
    pub max_blob_bytes: u64,
    pub token_ttl_millis: i64,
    pub password_cost: PasswordCost,
    /// Fixed seed for identifier generation; `None` in production.
    pub id_seed: Option<u64>,
    pub fsync: bool,
    pub clock: Arc<dyn Clock>,
}

impl Config {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            max_blob_bytes: DEFAULT_MAX_BLOB_BYTES,
            token_ttl_millis: DEFAULT_TOKEN_TTL_MILLIS,
            password_cost: PasswordCost::default(),
            id_seed: None,
            fsync: true,
            clock: Arc::new(SystemClock),
        }
    }

    /// Cheap hashing, no fsync, seeded ids. For tests and benches.
    pub fn for_tests(data_dir: impl Into<PathBuf>, seed: u64) -> Self {
        Self {
            password_cost: PasswordCost::insecure_fast(),
            id_seed: Some(seed),
            fsync: false,
            ..Self::new(data_dir)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadOutcome {
    pub asset: AssetMeta,
    /// The bytes were already stored; nothing new was written.
    pub existing: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcReport {
    pub blobs_removed: usize,
    pub assets_retained: usize,
}

pub struct Registry {
    catalog: Catalog,
    blobs: BlobStore,
    auth: Auth,
}

impl Deref for Registry {
    type Target = Catalog;

    fn deref(&self) -> &Catalog {
        &self.catalog
    }
}

fn media_type_of(filename: &str, bytes_are_zip: bool) -> String {
    if bytes_are_zip {
        return "application/zip".to_owned();
    }
    mime_guess::from_path(filename)
        .first_raw()
        .unwrap_or("application/octet-stream")
        .to_owned()
}

impl Registry {
    pub fn open(config: Config) -> Result<Self> {
        std::fs::create_dir_all(&config.data_dir)?;
        let catalog = Catalog::open(
            &config.data_dir.join(JOURNAL_FILE),
            CatalogOptions {
                clock: config.clock.clone(),
                id_seed: config.id_seed,
                fsync: config.fsync,
            },
        )?;
        let blobs = BlobStore::open(&config.data_dir, config.max_blob_bytes)?;
        let auth = Auth::new(config.password_cost, config.token_ttl_millis)?;
        Ok(Self {
            catalog,
            blobs,
            auth,
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn blobs(&self) -> &BlobStore {
        &self.blobs
    }

    pub fn register(&self, email: &str, display_name: &str, password: &str) -> Result<User> {
        self.auth.register(&self.catalog, email, display_name, password)
    }

    pub fn login(&self, email: &str, password: &str) -> Result<Session> {
        self.auth.login(&self.catalog, email, password)
    }

    pub fn authenticate(&self, token: &str) -> Result<UserId> {
        self.auth.authenticate(&self.catalog, token)
    }

    pub fn logout(&self, token: &str) -> Result<()> {
        self.auth.logout(&self.catalog, token)
    }

    pub fn user(&self, id: UserId) -> Result<User> {
        self.auth.user(&self.catalog, id)
    }

    /// Stores the bytes and records their metadata. Uploading known content
    /// merges the new tags into the existing asset.
    pub fn upload_asset(
        &self,
        uploader: UserId,
        filename: &str,
        content: impl Read,
        tags: &[String],
    ) -> Result<UploadOutcome> {
        let filename = clean_display_name(filename)?;
        let tags = normalize_tags(tags)?;
        if !self.catalog.read(|s| s.users.contains_key(&uploader)) {
            return Err(Error::not_found(format_args!("user {uploader}")));
        }
        // held until the metadata is committed so gc cannot sweep the blob
        let _guard = self.blobs.ingest_guard();
        let stored = self.blobs.put_stream(content)?;

        let mut members = None;
        let mut head = [0u8; 4];
        if stored.size_bytes >= 4 {
            let bytes = self.blobs.get(&stored.id)?;
            head.copy_from_slice(&bytes[..4]);
            if head == ZIP_MAGIC {
                members = archive::list_members(&bytes).ok();
            }
        }
        let meta = AssetMeta {
            id: stored.id.clone(),
            size_bytes: stored.size_bytes,
            media_type: media_type_of(&filename, members.is_some()),
            original_filename: filename,
            uploader,
            tags,
            created_at: Timestamp::from_millis(0),
            refcount: 0,
            archive_members: members,
        };
        let (asset, known) = self.catalog.register_asset(meta)?;
        Ok(UploadOutcome {
            asset,
            existing: stored.existing || known,
        })
    }

    /// Blob bytes for an asset the requester may see.
    pub fn download_asset(&self, requester: UserId, id: &AssetId) -> Result<Vec<u8>> {
        self.catalog.asset_meta(requester, id)?;
        self.blobs.get(id).map_err(|e| match e {
            crate::blob::BlobError::NotFound(id) => Error::BlobMissing(id),
            other => other.into(),
        })
    }

    pub fn build_package(
        &self,
        requester: UserId,
        project: ProjectId,
        selection: &Selection,
    ) -> Result<(Vec<u8>, PackageManifest)> {
        let _guard = self.blobs.ingest_guard();
        let resolved = self.catalog.resolve_selection(requester, project, selection)?;
        build_package(&self.blobs, &resolved)
    }

    /// Drops unreferenced assets older than `grace_millis` and their blobs.
    pub fn gc(&self, grace_millis: i64) -> Result<GcReport> {
        let cutoff = self.catalog.clock().now().plus_millis(-grace_millis);
        let mut retained = 0;
        let removed = self.blobs.gc_with(|| {
            let live: HashSet<AssetId> = self.catalog.purge_unreferenced_assets(cutoff)?;
            retained = live.len();
            Ok::<_, Error>(live)
        })?;
        Ok(GcReport {
            blobs_removed: removed,
            assets_retained: retained,
        })
    }

    /// Number of distinct blobs physically stored.
    pub fn blob_count(&self) -> Result<usize> {
        Ok(self.blobs.list()?.len())
    }
}
