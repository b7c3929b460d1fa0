use serde::{Deserialize, Serialize};

use super::{
    ArtifactId, AssetId, EventSeq, FolderId, ProjectId, ReuseId, Tag, Timestamp, UserId,
};

/// A registered account as exposed to clients. The password digest lives
/// only in the catalog's internal user row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub id: UserId,
    pub email: String,
    pub display_name: String,
    pub created_at: Timestamp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FolderKind {
    TrainData,
    TestData,
    Model,
    Code,
    Sub,
}

impl FolderKind {
    pub fn is_root(self) -> bool {
        self != FolderKind::Sub
    }
}

const ROOTS: [(FolderKind, &str); 4] = [
    (FolderKind::TrainData, "TrainData"),
    (FolderKind::TestData, "TestData"),
    (FolderKind::Model, "Model"),
    (FolderKind::Code, "Code"),
];

/// The four folders every project is created with, in display order.
pub fn canonical_roots() -> [(FolderKind, &'static str); 4] {
    ROOTS
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    #[default]
    Public,
    Private,
}

/// Snapshot of the project a copy was made from. Never updated after the copy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopiedFrom {
    pub project: ProjectId,
    pub version: u64,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub id: ProjectId,
    pub owner: UserId,
    pub name: String,
    pub description: String,
    pub tags: Vec<Tag>,
    pub visibility: Visibility,
    /// Equals the sequence number of the newest tracking event.
    pub version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copied_from: Option<CopiedFrom>,
    pub created_at: Timestamp,
    pub updated_at: Timestamp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Folder {
    pub id: FolderId,
    pub project: ProjectId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<FolderId>,
    pub kind: FolderKind,
    pub name: String,
}

/// Which part of an asset an artifact refers to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FragmentSelector {
    Whole,
    ByteRange { offset: u64, len: u64 },
    /// Archive member paths, sorted and unique.
    Members { paths: Vec<String> },
}

impl Default for FragmentSelector {
    fn default() -> Self {
        Self::Whole
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub id: ArtifactId,
    pub folder: FolderId,
    pub project: ProjectId,
    pub asset: AssetId,
    pub selector: FragmentSelector,
    pub display_name: String,
    pub added_by: UserId,
    pub added_at: Timestamp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetMeta {
    pub id: AssetId,
    pub size_bytes: u64,
    pub media_type: String,
    pub original_filename: String,
    pub uploader: UserId,
    pub tags: Vec<Tag>,
    pub created_at: Timestamp,
    /// Number of artifacts referencing this asset.
    pub refcount: u64,
    /// File members of a zip asset, sorted. `None` for anything that is not a
    /// readable zip archive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archive_members: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReuseScope {
    Full,
    Partial { folders: u64, artifacts: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReuseRecord {
    pub id: ReuseId,
    pub user: UserId,
    pub source_project: ProjectId,
    pub target_project: ProjectId,
    pub scope: ReuseScope,
    pub at: Timestamp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatingValue {
    Up,
    Down,
}

impl RatingValue {
    pub fn as_i8(self) -> i8 {
        match self {
            RatingValue::Up => 1,
            RatingValue::Down => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub user: UserId,
    pub project: ProjectId,
    pub value: RatingValue,
    pub updated_at: Timestamp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventAction {
    #[serde(rename = "project.created")]
    ProjectCreated,
    #[serde(rename = "project.updated")]
    ProjectUpdated,
    #[serde(rename = "folder.created")]
    FolderCreated,
    #[serde(rename = "folder.renamed")]
    FolderRenamed,
    #[serde(rename = "folder.deleted")]
    FolderDeleted,
    #[serde(rename = "artifact.added")]
    ArtifactAdded,
    #[serde(rename = "artifact.removed")]
    ArtifactRemoved,
    #[serde(rename = "project.copied-by")]
    ProjectCopiedBy,
    #[serde(rename = "rating.set")]
    RatingSet,
    #[serde(rename = "rating.cleared")]
    RatingCleared,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackingEvent {
    pub seq: EventSeq,
    pub project: ProjectId,
    pub actor: UserId,
    pub action: EventAction,
    pub target: String,
    pub at: Timestamp,
}

/// Rating aggregate shown beside a project.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub ups: u64,
    pub downs: u64,
    pub net: i64,
}

pub fn score(ups: u64, downs: u64) -> Score {
    let net = (i128::from(ups) - i128::from(downs)).clamp(i64::MIN.into(), i64::MAX.into()) as i64;
    Score { ups, downs, net }
}
