//! System of record for users, projects, folders, artifacts, provenance and
//! the per-project tracking log.
//!
//! Every public operation is a single transaction: it either commits all of
//! its row changes (and their journal line) or none of them. Readers share a
//! lock; writers are serialized.

mod audit;
mod ops;
pub(crate) mod reuse;
pub(crate) mod store;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::domain::{
    canonical_roots, score, Artifact, ArtifactId, AssetId, EventAction, Folder, FolderId,
    FolderKind, FragmentSelector, Project, ProjectId, Score, SystemClock, Tag, TrackingEvent,
    UserId, Visibility,
};
use crate::error::{Error, Result};

pub use audit::AuditReport;
pub(crate) use store::State;
use store::{IdGen, Journal, Key, Row, Tx};

pub struct CatalogOptions {
    pub clock: Arc<dyn crate::domain::Clock>,
    /// Seed for identifier generation. `None` draws from the OS.
    pub id_seed: Option<u64>,
    /// fsync the journal after every commit.
    pub fsync: bool,
}

impl Default for CatalogOptions {
    fn default() -> Self {
        Self {
            clock: Arc::new(SystemClock),
            id_seed: None,
            fsync: true,
        }
    }
}

struct Inner {
    state: State,
    ids: IdGen,
    journal: Option<Journal>,
}

pub struct Catalog {
    inner: RwLock<Inner>,
    clock: Arc<dyn crate::domain::Clock>,
}

impl Catalog {
    /// Catalog with no journal; everything is lost on drop.
    pub fn in_memory(options: CatalogOptions) -> Self {
        Self {
            inner: RwLock::new(Inner {
                state: State::default(),
                ids: IdGen::new(options.id_seed),
                journal: None,
            }),
            clock: options.clock,
        }
    }

    /// Opens a journaled catalog, replaying any existing log at `path`.
    pub fn open(path: &Path, options: CatalogOptions) -> Result<Self> {
        let mut state = State::default();
        let journal = Journal::open(path, options.fsync, &mut state)?;
        Ok(Self {
            inner: RwLock::new(Inner {
                state,
                ids: IdGen::new(options.id_seed),
                journal: Some(journal),
            }),
            clock: options.clock,
        })
    }

    pub fn clock(&self) -> &dyn crate::domain::Clock {
        self.clock.as_ref()
    }

    pub(crate) fn read<T>(&self, f: impl FnOnce(&State) -> T) -> T {
        f(&self.inner.read().state)
    }

    pub(crate) fn write<T>(&self, f: impl FnOnce(&mut Tx<'_>) -> Result<T>) -> Result<T> {
        let now = self.clock.now();
        let mut guard = self.inner.write();
        let Inner {
            state,
            ids,
            journal,
        } = &mut *guard;
        let mut tx = Tx::new(state, ids, now);
        match f(&mut tx) {
            Ok(value) => {
                let (changes, undo) = tx.into_changes();
                if let Some(journal) = journal.as_mut().filter(|_| !changes.is_empty()) {
                    if let Err(e) = journal.append(&changes) {
                        undo.rollback(state);
                        return Err(e);
                    }
                }
                Ok(value)
            }
            Err(e) => {
                tx.rollback();
                Err(e)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageRequest {
    /// 1-based.
    pub page: u32,
    pub per_page: u32,
}

impl Default for PageRequest {
    fn default() -> Self {
        Self {
            page: 1,
            per_page: 20,
        }
    }
}

impl PageRequest {
    pub const MAX_PER_PAGE: u32 = 100;

    pub fn new(page: u32, per_page: u32) -> Self {
        Self { page, per_page }
    }

    pub fn validate(&self) -> Result<()> {
        if self.page == 0 {
            return Err(Error::Validation("page starts at 1".into()));
        }
        if !(1..=Self::MAX_PER_PAGE).contains(&self.per_page) {
            return Err(Error::Validation(format!(
                "per_page must be between 1 and {}",
                Self::MAX_PER_PAGE
            )));
        }
        Ok(())
    }

    pub(crate) fn slice<T>(&self, all: Vec<T>) -> Page<T> {
        let total = all.len() as u64;
        let start = (self.page as usize - 1).saturating_mul(self.per_page as usize);
        let items = all
            .into_iter()
            .skip(start)
            .take(self.per_page as usize)
            .collect();
        Page {
            items,
            total,
            page: self.page,
            per_page: self.per_page,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page<T> {
    pub items: Vec<T>,
    pub total: u64,
    pub page: u32,
    pub per_page: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewProject {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub visibility: Visibility,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility: Option<Visibility>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewArtifact {
    pub asset: AssetId,
    #[serde(default)]
    pub selector: FragmentSelector,
    pub display_name: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

/// Checkbox selection within one project. Folders include their subtrees.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    #[serde(default)]
    pub folders: BTreeSet<FolderId>,
    #[serde(default)]
    pub artifacts: BTreeSet<ArtifactId>,
}

impl Selection {
    pub fn is_empty(&self) -> bool {
        self.folders.is_empty() && self.artifacts.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectSummary {
    #[serde(flatten)]
    pub project: Project,
    pub score: Score,
}

/// Where a copied project came from, as recorded at copy time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub project: ProjectId,
    pub version: u64,
    pub name: String,
    /// False once the origin has been deleted or made private to the viewer.
    pub origin_available: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectDetail {
    pub project: Project,
    pub roots: Vec<Folder>,
    pub score: Score,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FolderListing {
    pub folder: Folder,
    pub path: String,
    pub artifacts: Vec<Artifact>,
    pub subfolders: Vec<Folder>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportSummary {
    pub folders: u64,
    pub artifacts: u64,
}

/// Shape of a project's folder tree, ids stripped, used to compare copies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub name: String,
    pub kind: FolderKind,
    pub artifacts: Vec<TreeArtifact>,
    pub children: Vec<TreeNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeArtifact {
    pub display_name: String,
    pub asset: AssetId,
    pub selector: FragmentSelector,
}

pub(crate) fn can_view(project: &Project, user: UserId) -> bool {
    project.owner == user || project.visibility == Visibility::Public
}

pub(crate) fn project_ref(state: &State, id: ProjectId) -> Result<&Project> {
    state
        .projects
        .get(&id)
        .ok_or_else(|| Error::not_found(format_args!("project {id}")))
}

pub(crate) fn viewable(state: &State, user: UserId, id: ProjectId) -> Result<&Project> {
    let p = project_ref(state, id)?;
    if can_view(p, user) {
        Ok(p)
    } else {
        Err(Error::Forbidden(format!("project {id} is private")))
    }
}

pub(crate) fn owned(state: &State, user: UserId, id: ProjectId) -> Result<&Project> {
    let p = project_ref(state, id)?;
    if p.owner == user {
        Ok(p)
    } else {
        Err(Error::Forbidden(format!("project {id} belongs to another user")))
    }
}

pub(crate) fn folder_ref(state: &State, id: FolderId) -> Result<&Folder> {
    state
        .folders
        .get(&id)
        .ok_or_else(|| Error::not_found(format_args!("folder {id}")))
}

/// `Root/sub/...` path of a folder.
pub(crate) fn folder_path(state: &State, id: FolderId) -> String {
    let mut parts = Vec::new();
    let mut cursor = state.folders.get(&id);
    while let Some(f) = cursor {
        parts.push(f.name.as_str());
        cursor = f.parent.and_then(|p| state.folders.get(&p));
    }
    parts.reverse();
    parts.join("/")
}

/// The folder and all of its descendants, parents before children.
pub(crate) fn subtree(state: &State, root: FolderId) -> Vec<FolderId> {
    let mut out = vec![root];
    let mut i = 0;
    while i < out.len() {
        if let Some(children) = state.children.get(&out[i]) {
            out.extend(children.iter().copied());
        }
        i += 1;
    }
    out
}

pub(crate) fn sorted_children(state: &State, folder: FolderId) -> Vec<&Folder> {
    let mut out: Vec<&Folder> = state
        .children
        .get(&folder)
        .into_iter()
        .flatten()
        .filter_map(|id| state.folders.get(id))
        .collect();
    out.sort_by(|a, b| {
        a.name
            .to_lowercase()
            .cmp(&b.name.to_lowercase())
            .then(a.id.cmp(&b.id))
    });
    out
}

pub(crate) fn sorted_artifacts(state: &State, folder: FolderId) -> Vec<&Artifact> {
    let mut out: Vec<&Artifact> = state
        .folder_artifacts
        .get(&folder)
        .into_iter()
        .flatten()
        .filter_map(|id| state.artifacts.get(id))
        .collect();
    out.sort_by(|a, b| {
        a.display_name
            .to_lowercase()
            .cmp(&b.display_name.to_lowercase())
            .then(a.id.cmp(&b.id))
    });
    out
}

/// Root folders of a project in canonical order.
pub(crate) fn roots_of(state: &State, project: ProjectId) -> Vec<&Folder> {
    let mut roots: Vec<&Folder> = state
        .project_folders
        .get(&project)
        .into_iter()
        .flatten()
        .filter_map(|id| state.folders.get(id))
        .filter(|f| f.parent.is_none())
        .collect();
    let order = |k: FolderKind| canonical_roots().iter().position(|(rk, _)| *rk == k);
    roots.sort_by_key(|f| (order(f.kind), f.id));
    roots
}

pub(crate) fn aggregate_of(state: &State, project: ProjectId) -> Score {
    let (mut ups, mut downs) = (0, 0);
    for r in state
        .ratings
        .range((project, UserId::from_u128(0))..=(project, UserId::from_u128(u128::MAX)))
        .map(|(_, r)| r)
    {
        match r.value {
            crate::domain::RatingValue::Up => ups += 1,
            crate::domain::RatingValue::Down => downs += 1,
        }
    }
    score(ups, downs)
}

pub(crate) fn name_taken<'a>(
    mut names: impl Iterator<Item = &'a str>,
    candidate: &str,
) -> bool {
    let lower = candidate.to_lowercase();
    names.any(|n| n.to_lowercase() == lower)
}

/// `name` if free, otherwise `name-imported-<n>` with the smallest free n >= 2.
pub(crate) fn free_name(taken: &[String], name: &str) -> String {
    let is_taken = |c: &str| name_taken(taken.iter().map(String::as_str), c);
    if !is_taken(name) {
        return name.to_owned();
    }
    (2u64..)
        .map(|n| format!("{name}-imported-{n}"))
        .find(|c| !is_taken(c))
        .expect("unbounded search terminates")
}

impl Tx<'_> {
    /// Appends a tracking event and bumps the project's version to its seq.
    pub(crate) fn record(
        &mut self,
        project: ProjectId,
        actor: UserId,
        action: EventAction,
        target: impl Into<String>,
    ) -> Result<u64> {
        let mut p = project_ref(self.state(), project)?.clone();
        p.version += 1;
        p.updated_at = self.now;
        let seq = p.version;
        self.put(Row::Project(p));
        self.put(Row::Event(TrackingEvent {
            seq,
            project,
            actor,
            action,
            target: target.into(),
            at: self.now,
        }));
        Ok(seq)
    }

    pub(crate) fn adjust_refcount(&mut self, asset: &AssetId, delta: i64) -> Result<()> {
        let mut meta = self
            .state()
            .assets
            .get(asset)
            .cloned()
            .ok_or_else(|| Error::AssetNotFound(asset.clone()))?;
        meta.refcount = meta
            .refcount
            .checked_add_signed(delta)
            .ok_or_else(|| Error::Storage(format!("refcount underflow for asset {asset}")))?;
        self.put(Row::Asset(meta));
        Ok(())
    }

    /// Deletes an artifact row and releases its asset reference.
    pub(crate) fn drop_artifact(&mut self, id: ArtifactId) -> Result<Artifact> {
        match self.delete(Key::Artifact(id)) {
            Some(Row::Artifact(a)) => {
                self.adjust_refcount(&a.asset, -1)?;
                Ok(a)
            }
            _ => Err(Error::not_found(format_args!("artifact {id}"))),
        }
    }

    /// Deletes a folder subtree with its artifacts. Returns the artifact count.
    pub(crate) fn drop_subtree(&mut self, root: FolderId) -> Result<u64> {
        let folders = subtree(self.state(), root);
        let mut removed = 0;
        for folder in folders.iter().rev() {
            let artifacts: Vec<ArtifactId> = self
                .state()
                .folder_artifacts
                .get(folder)
                .map(|s| s.iter().copied().collect())
                .unwrap_or_default();
            for a in artifacts {
                self.drop_artifact(a)?;
                removed += 1;
            }
            self.delete(Key::Folder(*folder));
        }
        Ok(removed)
    }

    pub(crate) fn merge_asset_tags(&mut self, asset: &AssetId, tags: &[Tag]) -> Result<()> {
        if tags.is_empty() {
            return Ok(());
        }
        let mut meta = self
            .state()
            .assets
            .get(asset)
            .cloned()
            .ok_or_else(|| Error::AssetNotFound(asset.clone()))?;
        let mut merged: BTreeSet<Tag> = meta.tags.iter().cloned().collect();
        merged.extend(tags.iter().cloned());
        if merged.len() > crate::domain::MAX_TAGS {
            return Err(Error::Validation(format!(
                "an asset carries at most {} tags",
                crate::domain::MAX_TAGS
            )));
        }
        meta.tags = merged.into_iter().collect();
        self.put(Row::Asset(meta));
        Ok(())
    }
}
