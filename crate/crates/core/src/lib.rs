//! Core of the artifact registry: domain types, the content-addressed blob
//! store, the transactional catalog, search, ratings, packaging and
//! accounts. The HTTP service and the CLI are thin layers over [`Registry`].

pub mod archive;
pub mod auth;
pub mod blob;
pub mod catalog;
pub mod domain;
pub mod error;
pub mod packaging;
pub mod ratings;
pub mod registry;
pub mod search;

pub use auth::{PasswordCost, Session};
pub use blob::{BlobError, BlobStore};
pub use catalog::{
    AuditReport, Catalog, CatalogOptions, FolderListing, ImportSummary, NewArtifact, NewProject,
    Page, PageRequest, ProjectDetail, ProjectPatch, ProjectSummary, Provenance, Selection,
    TreeArtifact, TreeNode,
};
pub use domain::*;
pub use error::{Error, Result};
pub use packaging::{PackageManifest, ResolvedSelection};
pub use ratings::RatingStatus;
pub use registry::{Config, GcReport, Registry, UploadOutcome};
pub use search::{QueryResult, ResultKind};
