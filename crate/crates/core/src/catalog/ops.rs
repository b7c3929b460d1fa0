use std::collections::HashSet;

use super::store::{Key, Row};
use super::{
    aggregate_of, can_view, folder_path, folder_ref, name_taken, owned, project_ref, roots_of,
    sorted_artifacts, sorted_children, viewable, Catalog, FolderListing, NewArtifact,
    NewProject, Page, PageRequest, ProjectDetail, ProjectPatch, ProjectSummary, Provenance,
    State, TreeArtifact, TreeNode,
};
use crate::domain::{
    canonical_roots, clean_description, clean_display_name, clean_folder_name,
    clean_project_name, normalize_tags, Artifact, ArtifactId, AssetId, AssetMeta, EventAction,
    EventSeq, Folder, FolderId, FolderKind, FragmentSelector, Project, ProjectId, Timestamp,
    TrackingEvent, UserId, MAX_TAGS,
};
use crate::error::{Error, Result};

pub(crate) const MAX_FEED_LIMIT: usize = 200;

fn check_tag_count(n: usize) -> Result<()> {
    if n > MAX_TAGS {
        return Err(Error::Validation(format!(
            "at most {MAX_TAGS} tags are allowed"
        )));
    }
    Ok(())
}

fn project_name_free(state: &State, owner: UserId, name: &str, except: Option<ProjectId>) -> bool {
    match state.project_names.get(&(owner, name.to_lowercase())) {
        Some(existing) => Some(*existing) == except,
        None => true,
    }
}

/// Sub-folders and artifacts of one folder share a namespace, so every
/// package path is unique.
pub(crate) fn entry_names(state: &State, folder: FolderId, except: Option<FolderId>) -> Vec<String> {
    sorted_children(state, folder)
        .iter()
        .filter(|f| Some(f.id) != except)
        .map(|f| f.name.clone())
        .chain(
            sorted_artifacts(state, folder)
                .iter()
                .map(|a| a.display_name.clone()),
        )
        .collect()
}

fn entry_name_taken(state: &State, folder: FolderId, name: &str, except: Option<FolderId>) -> bool {
    name_taken(
        entry_names(state, folder, except).iter().map(String::as_str),
        name,
    )
}

pub(crate) fn validate_selector(meta: &AssetMeta, selector: &FragmentSelector) -> Result<()> {
    match selector {
        FragmentSelector::Whole => Ok(()),
        FragmentSelector::ByteRange { offset, len } => {
            if *len == 0 {
                return Err(Error::SelectorInvalid("byte range length must be >= 1".into()));
            }
            match offset.checked_add(*len) {
                Some(end) if end <= meta.size_bytes => Ok(()),
                _ => Err(Error::SelectorInvalid(format!(
                    "byte range {offset}+{len} exceeds asset size {}",
                    meta.size_bytes
                ))),
            }
        }
        FragmentSelector::Members { paths } => {
            if paths.is_empty() {
                return Err(Error::SelectorInvalid("member list is empty".into()));
            }
            if !paths.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::SelectorInvalid(
                    "member paths must be sorted and unique".into(),
                ));
            }
            let Some(members) = meta
                .archive_members
                .as_ref()
                .filter(|_| meta.media_type == "application/zip")
            else {
                return Err(Error::SelectorInvalid(format!(
                    "asset {} is not a zip archive",
                    meta.id
                )));
            };
            match paths.iter().find(|p| members.binary_search(p).is_err()) {
                Some(missing) => Err(Error::SelectorInvalid(format!(
                    "archive has no member {missing:?}"
                ))),
                None => Ok(()),
            }
        }
    }
}

fn tree_of(state: &State, folder: &Folder) -> TreeNode {
    TreeNode {
        name: folder.name.clone(),
        kind: folder.kind,
        artifacts: sorted_artifacts(state, folder.id)
            .into_iter()
            .map(|a| TreeArtifact {
                display_name: a.display_name.clone(),
                asset: a.asset.clone(),
                selector: a.selector.clone(),
            })
            .collect(),
        children: sorted_children(state, folder.id)
            .into_iter()
            .map(|c| tree_of(state, c))
            .collect(),
    }
}

fn summary(state: &State, p: &Project) -> ProjectSummary {
    ProjectSummary {
        project: p.clone(),
        score: aggregate_of(state, p.id),
    }
}

fn by_recency(a: &ProjectSummary, b: &ProjectSummary) -> std::cmp::Ordering {
    b.project
        .updated_at
        .cmp(&a.project.updated_at)
        .then(a.project.id.cmp(&b.project.id))
}

impl Catalog {
    /// Creates a project with the four canonical root folders.
    pub fn create_project(&self, owner: UserId, new: NewProject) -> Result<Project> {
        let name = clean_project_name(&new.name)?;
        let description = clean_description(&new.description)?;
        let tags = normalize_tags(&new.tags)?;
        check_tag_count(tags.len())?;
        self.write(|tx| {
            if !tx.state().users.contains_key(&owner) {
                return Err(Error::not_found(format_args!("user {owner}")));
            }
            if !project_name_free(tx.state(), owner, &name, None) {
                return Err(Error::NameConflict(name));
            }
            let id = ProjectId::from_uuid(tx.new_uuid());
            tx.put(Row::Project(Project {
                id,
                owner,
                name: name.clone(),
                description,
                tags,
                visibility: new.visibility,
                version: 0,
                copied_from: None,
                created_at: tx.now,
                updated_at: tx.now,
            }));
            for (kind, root_name) in canonical_roots() {
                let folder = FolderId::from_uuid(tx.new_uuid());
                tx.put(Row::Folder(Folder {
                    id: folder,
                    project: id,
                    parent: None,
                    kind,
                    name: root_name.to_owned(),
                }));
            }
            tx.record(id, owner, EventAction::ProjectCreated, name)?;
            Ok(project_ref(tx.state(), id)?.clone())
        })
    }

    pub fn get_project(&self, requester: UserId, id: ProjectId) -> Result<ProjectDetail> {
        self.read(|state| {
            let p = viewable(state, requester, id)?;
            let provenance = p.copied_from.as_ref().map(|src| Provenance {
                project: src.project,
                version: src.version,
                name: src.name.clone(),
                origin_available: state
                    .projects
                    .get(&src.project)
                    .is_some_and(|o| can_view(o, requester)),
            });
            Ok(ProjectDetail {
                project: p.clone(),
                roots: roots_of(state, id).into_iter().cloned().collect(),
                score: aggregate_of(state, id),
                provenance,
            })
        })
    }

    pub fn update_project_meta(
        &self,
        actor: UserId,
        id: ProjectId,
        expected_version: u64,
        patch: ProjectPatch,
    ) -> Result<Project> {
        let name = patch.name.as_deref().map(clean_project_name).transpose()?;
        let description = patch
            .description
            .as_deref()
            .map(clean_description)
            .transpose()?;
        let tags = patch.tags.as_deref().map(normalize_tags).transpose()?;
        if let Some(tags) = &tags {
            check_tag_count(tags.len())?;
        }
        self.write(|tx| {
            let mut p = owned(tx.state(), actor, id)?.clone();
            if p.version != expected_version {
                return Err(Error::VersionConflict {
                    expected: expected_version,
                    current: p.version,
                });
            }
            let mut changed = Vec::new();
            if let Some(name) = name {
                if !project_name_free(tx.state(), actor, &name, Some(id)) {
                    return Err(Error::NameConflict(name));
                }
                p.name = name;
                changed.push("name");
            }
            if let Some(description) = description {
                p.description = description;
                changed.push("description");
            }
            if let Some(tags) = tags {
                p.tags = tags;
                changed.push("tags");
            }
            if let Some(visibility) = patch.visibility {
                p.visibility = visibility;
                changed.push("visibility");
            }
            tx.put(Row::Project(p));
            tx.record(id, actor, EventAction::ProjectUpdated, changed.join(","))?;
            Ok(project_ref(tx.state(), id)?.clone())
        })
    }

    /// Removes a project with its folders, artifacts, ratings and events.
    /// Reuse records survive, and copies keep their provenance snapshot.
    pub fn delete_project(&self, actor: UserId, id: ProjectId) -> Result<()> {
        self.write(|tx| {
            owned(tx.state(), actor, id)?;
            let roots: Vec<FolderId> = roots_of(tx.state(), id).iter().map(|f| f.id).collect();
            for root in roots {
                tx.drop_subtree(root)?;
            }
            let ratings: Vec<UserId> = tx
                .state()
                .ratings
                .keys()
                .filter(|(p, _)| *p == id)
                .map(|(_, u)| *u)
                .collect();
            for user in ratings {
                tx.delete(Key::Rating(id, user));
            }
            let seqs: Vec<EventSeq> = tx
                .state()
                .events
                .range((id, 0)..=(id, EventSeq::MAX))
                .map(|((_, s), _)| *s)
                .collect();
            for seq in seqs {
                tx.delete(Key::Event(id, seq));
            }
            tx.delete(Key::Project(id));
            Ok(())
        })
    }

    /// Owner's dashboard, most recently updated first.
    pub fn list_projects(&self, owner: UserId) -> Vec<ProjectSummary> {
        self.read(|state| {
            let mut out: Vec<ProjectSummary> = state
                .projects
                .values()
                .filter(|p| p.owner == owner)
                .map(|p| summary(state, p))
                .collect();
            out.sort_by(by_recency);
            out
        })
    }

    /// Every project visible to `requester`, with its rating aggregate.
    pub fn browse(&self, requester: UserId, page: PageRequest) -> Result<Page<ProjectSummary>> {
        page.validate()?;
        Ok(self.read(|state| {
            let mut out: Vec<ProjectSummary> = state
                .projects
                .values()
                .filter(|p| can_view(p, requester))
                .map(|p| summary(state, p))
                .collect();
            out.sort_by(by_recency);
            page.slice(out)
        }))
    }

    pub fn folder_create(
        &self,
        actor: UserId,
        project: ProjectId,
        parent: FolderId,
        name: &str,
    ) -> Result<Folder> {
        let name = clean_folder_name(name)?;
        self.write(|tx| {
            owned(tx.state(), actor, project)?;
            let parent_folder = folder_ref(tx.state(), parent)?;
            if parent_folder.project != project {
                return Err(Error::not_found(format_args!(
                    "folder {parent} in project {project}"
                )));
            }
            if entry_name_taken(tx.state(), parent, &name, None) {
                return Err(Error::NameConflict(name));
            }
            let folder = Folder {
                id: FolderId::from_uuid(tx.new_uuid()),
                project,
                parent: Some(parent),
                kind: FolderKind::Sub,
                name,
            };
            tx.put(Row::Folder(folder.clone()));
            let path = folder_path(tx.state(), folder.id);
            tx.record(project, actor, EventAction::FolderCreated, path)?;
            Ok(folder)
        })
    }

    pub fn folder_rename(&self, actor: UserId, folder: FolderId, new_name: &str) -> Result<Folder> {
        let new_name = clean_folder_name(new_name)?;
        self.write(|tx| {
            let mut f = folder_ref(tx.state(), folder)?.clone();
            owned(tx.state(), actor, f.project)?;
            let Some(parent) = f.parent.filter(|_| !f.kind.is_root()) else {
                return Err(Error::RootImmutable);
            };
            if entry_name_taken(tx.state(), parent, &new_name, Some(folder)) {
                return Err(Error::NameConflict(new_name));
            }
            let old_path = folder_path(tx.state(), folder);
            f.name = new_name;
            tx.put(Row::Folder(f.clone()));
            let new_path = folder_path(tx.state(), folder);
            tx.record(
                f.project,
                actor,
                EventAction::FolderRenamed,
                format!("{old_path} -> {new_path}"),
            )?;
            Ok(f)
        })
    }

    /// Deletes a sub-folder, its descendants and their artifacts. Returns the
    /// number of artifacts removed.
    pub fn folder_delete(&self, actor: UserId, folder: FolderId) -> Result<u64> {
        self.write(|tx| {
            let f = folder_ref(tx.state(), folder)?.clone();
            owned(tx.state(), actor, f.project)?;
            if f.kind.is_root() || f.parent.is_none() {
                return Err(Error::RootImmutable);
            }
            let path = folder_path(tx.state(), folder);
            let removed = tx.drop_subtree(folder)?;
            tx.record(f.project, actor, EventAction::FolderDeleted, path)?;
            Ok(removed)
        })
    }

    /// Artifacts then sub-folders, each sorted case-insensitively by name.
    pub fn folder_list(&self, requester: UserId, folder: FolderId) -> Result<FolderListing> {
        self.read(|state| {
            let f = folder_ref(state, folder)?;
            viewable(state, requester, f.project)?;
            Ok(FolderListing {
                folder: f.clone(),
                path: folder_path(state, folder),
                artifacts: sorted_artifacts(state, folder).into_iter().cloned().collect(),
                subfolders: sorted_children(state, folder).into_iter().cloned().collect(),
            })
        })
    }

    /// Binds an existing asset (whole or a fragment of it) into a folder.
    pub fn artifact_add(
        &self,
        actor: UserId,
        folder: FolderId,
        new: NewArtifact,
    ) -> Result<Artifact> {
        let display_name = clean_display_name(&new.display_name)?;
        let tags = normalize_tags(&new.tags)?;
        self.write(|tx| {
            let f = folder_ref(tx.state(), folder)?.clone();
            owned(tx.state(), actor, f.project)?;
            let meta = tx
                .state()
                .assets
                .get(&new.asset)
                .ok_or_else(|| Error::AssetNotFound(new.asset.clone()))?;
            validate_selector(meta, &new.selector)?;
            if entry_name_taken(tx.state(), folder, &display_name, None) {
                return Err(Error::NameConflict(display_name));
            }
            let artifact = Artifact {
                id: ArtifactId::from_uuid(tx.new_uuid()),
                folder,
                project: f.project,
                asset: new.asset.clone(),
                selector: new.selector,
                display_name,
                added_by: actor,
                added_at: tx.now,
            };
            tx.put(Row::Artifact(artifact.clone()));
            tx.adjust_refcount(&new.asset, 1)?;
            tx.merge_asset_tags(&new.asset, &tags)?;
            let path = format!(
                "{}/{}",
                folder_path(tx.state(), folder),
                artifact.display_name
            );
            tx.record(f.project, actor, EventAction::ArtifactAdded, path)?;
            Ok(artifact)
        })
    }

    pub fn artifact_remove(&self, actor: UserId, artifact: ArtifactId) -> Result<()> {
        self.write(|tx| {
            let a = tx
                .state()
                .artifacts
                .get(&artifact)
                .cloned()
                .ok_or_else(|| Error::not_found(format_args!("artifact {artifact}")))?;
            owned(tx.state(), actor, a.project)?;
            let path = format!("{}/{}", folder_path(tx.state(), a.folder), a.display_name);
            tx.drop_artifact(artifact)?;
            tx.record(a.project, actor, EventAction::ArtifactRemoved, path)?;
            Ok(())
        })
    }

    pub fn get_artifact(&self, requester: UserId, artifact: ArtifactId) -> Result<Artifact> {
        self.read(|state| {
            let a = state
                .artifacts
                .get(&artifact)
                .ok_or_else(|| Error::not_found(format_args!("artifact {artifact}")))?;
            viewable(state, requester, a.project)?;
            Ok(a.clone())
        })
    }

    /// Newest-first page of a project's tracking events, optionally starting
    /// below `before`.
    pub fn tracking_feed(
        &self,
        requester: UserId,
        project: ProjectId,
        limit: usize,
        before: Option<EventSeq>,
    ) -> Result<Vec<TrackingEvent>> {
        if !(1..=MAX_FEED_LIMIT).contains(&limit) {
            return Err(Error::Validation(format!(
                "limit must be between 1 and {MAX_FEED_LIMIT}"
            )));
        }
        self.read(|state| {
            viewable(state, requester, project)?;
            let upper = before.unwrap_or(EventSeq::MAX);
            Ok(state
                .events
                .range((project, 0)..(project, upper))
                .rev()
                .take(limit)
                .map(|(_, e)| e.clone())
                .collect())
        })
    }

    /// Ids-free view of a project's folder tree, roots in canonical order.
    pub fn project_tree(&self, requester: UserId, project: ProjectId) -> Result<Vec<TreeNode>> {
        self.read(|state| {
            viewable(state, requester, project)?;
            Ok(roots_of(state, project)
                .into_iter()
                .map(|r| tree_of(state, r))
                .collect())
        })
    }

    /// Registers uploaded blob metadata. If the asset is already known its
    /// tags are merged and `existing` is true.
    pub fn register_asset(&self, meta: AssetMeta) -> Result<(AssetMeta, bool)> {
        check_tag_count(meta.tags.len())?;
        self.write(|tx| {
            if tx.state().assets.contains_key(&meta.id) {
                tx.merge_asset_tags(&meta.id, &meta.tags)?;
                return Ok((tx.state().assets[&meta.id].clone(), true));
            }
            let mut meta = meta;
            meta.refcount = 0;
            meta.created_at = tx.now;
            tx.put(Row::Asset(meta.clone()));
            Ok((meta, false))
        })
    }

    /// Metadata of an asset the requester uploaded or can reach through a
    /// visible project.
    pub fn asset_meta(&self, requester: UserId, id: &AssetId) -> Result<AssetMeta> {
        self.read(|state| {
            let meta = state
                .assets
                .get(id)
                .ok_or_else(|| Error::AssetNotFound(id.clone()))?;
            if crate::search::asset_visible(state, requester, meta) {
                Ok(meta.clone())
            } else {
                Err(Error::Forbidden(format!("asset {id} is not visible")))
            }
        })
    }

    /// Assets referenced by at least one artifact.
    pub fn live_assets(&self) -> HashSet<AssetId> {
        self.read(|state| {
            state
                .assets
                .values()
                .filter(|m| m.refcount > 0)
                .map(|m| m.id.clone())
                .collect()
        })
    }

    /// Drops metadata of unreferenced assets created at or before `cutoff` and
    /// returns the ids that remain.
    pub fn purge_unreferenced_assets(&self, cutoff: Timestamp) -> Result<HashSet<AssetId>> {
        self.write(|tx| {
            let dead: Vec<AssetId> = tx
                .state()
                .assets
                .values()
                .filter(|m| m.refcount == 0 && m.created_at <= cutoff)
                .map(|m| m.id.clone())
                .collect();
            for id in dead {
                tx.delete(Key::Asset(id));
            }
            Ok(tx.state().assets.keys().cloned().collect())
        })
    }
}
