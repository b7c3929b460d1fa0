//! Full project copies and partial selection imports.

use std::collections::{BTreeMap, HashSet};

use super::store::{Row, State, Tx};
use super::ops::entry_names;
use super::{
    folder_path, folder_ref, free_name, owned, project_ref, roots_of, sorted_artifacts,
    sorted_children, subtree, viewable, Catalog, ImportSummary, Selection,
};
use crate::domain::{
    clean_project_name, Artifact, ArtifactId, CopiedFrom, EventAction, Folder, FolderId,
    FolderKind, Project, ProjectId, ReuseId, ReuseRecord, ReuseScope, UserId,
};
use crate::error::{Error, Result};

impl Tx<'_> {
    /// Copies `source` (an artifact of another folder) into `folder`.
    fn clone_artifact(
        &mut self,
        source: &Artifact,
        folder: FolderId,
        project: ProjectId,
        actor: UserId,
        display_name: String,
    ) -> Result<Artifact> {
        let artifact = Artifact {
            id: ArtifactId::from_uuid(self.new_uuid()),
            folder,
            project,
            asset: source.asset.clone(),
            selector: source.selector.clone(),
            display_name,
            added_by: actor,
            added_at: self.now,
        };
        self.put(Row::Artifact(artifact.clone()));
        self.adjust_refcount(&artifact.asset, 1)?;
        Ok(artifact)
    }

    /// Recreates the contents of `source` (children and artifacts, not the
    /// folder itself) below `dest`.
    fn clone_contents(
        &mut self,
        source: FolderId,
        dest: FolderId,
        project: ProjectId,
        actor: UserId,
    ) -> Result<()> {
        let artifacts: Vec<Artifact> = sorted_artifacts(self.state(), source)
            .into_iter()
            .cloned()
            .collect();
        for a in &artifacts {
            self.clone_artifact(a, dest, project, actor, a.display_name.clone())?;
        }

        let children: Vec<Folder> = sorted_children(self.state(), source)
            .into_iter()
            .cloned()
            .collect();
        for child in children {
            let copy = Folder {
                id: FolderId::from_uuid(self.new_uuid()),
                project,
                parent: Some(dest),
                kind: FolderKind::Sub,
                name: child.name.clone(),
            };
            self.put(Row::Folder(copy.clone()));
            self.clone_contents(child.id, copy.id, project, actor)?;
        }
        Ok(())
    }
}

/// Drops folders nested inside other selected folders and artifacts already
/// covered by a selected folder.
fn minimal_selection(state: &State, selection: &Selection) -> (Vec<FolderId>, Vec<ArtifactId>) {
    let selected: HashSet<FolderId> = selection.folders.iter().copied().collect();
    let has_selected_ancestor = |id: FolderId| {
        let mut cursor = state.folders.get(&id).and_then(|f| f.parent);
        while let Some(p) = cursor {
            if selected.contains(&p) {
                return true;
            }
            cursor = state.folders.get(&p).and_then(|f| f.parent);
        }
        false
    };
    let folders: Vec<FolderId> = selection
        .folders
        .iter()
        .copied()
        .filter(|f| !has_selected_ancestor(*f))
        .collect();
    let covered: HashSet<FolderId> = folders
        .iter()
        .flat_map(|f| subtree(state, *f))
        .collect();
    let artifacts = selection
        .artifacts
        .iter()
        .copied()
        .filter(|a| {
            state
                .artifacts
                .get(a)
                .is_some_and(|a| !covered.contains(&a.folder))
        })
        .collect();
    (folders, artifacts)
}

/// Checks every selected id exists and belongs to `project`.
pub(crate) fn check_selection(state: &State, project: ProjectId, selection: &Selection) -> Result<()> {
    if selection.is_empty() {
        return Err(Error::EmptySelection);
    }
    for id in &selection.folders {
        let f = folder_ref(state, *id)?;
        if f.project != project {
            return Err(Error::not_found(format_args!(
                "folder {id} in project {project}"
            )));
        }
    }
    for id in &selection.artifacts {
        match state.artifacts.get(id) {
            Some(a) if a.project == project => {}
            _ => {
                return Err(Error::not_found(format_args!(
                    "artifact {id} in project {project}"
                )))
            }
        }
    }
    Ok(())
}

impl Catalog {
    /// Deep-copies another user's visible project into the actor's
    /// workspace. Blobs are shared, provenance is snapshotted, and the actor
    /// becomes eligible to rate the source.
    pub fn project_copy(&self, actor: UserId, source: ProjectId, new_name: &str) -> Result<Project> {
        let name = clean_project_name(new_name)?;
        self.write(|tx| {
            let src = project_ref(tx.state(), source)?.clone();
            if src.owner == actor {
                return Err(Error::CopyOwnProject);
            }
            viewable(tx.state(), actor, source)?;
            if tx
                .state()
                .project_names
                .contains_key(&(actor, name.to_lowercase()))
            {
                return Err(Error::NameConflict(name));
            }

            let id = ProjectId::from_uuid(tx.new_uuid());
            tx.put(Row::Project(Project {
                id,
                owner: actor,
                name: name.clone(),
                description: src.description.clone(),
                tags: src.tags.clone(),
                visibility: src.visibility,
                version: 0,
                copied_from: Some(CopiedFrom {
                    project: src.id,
                    version: src.version,
                    name: src.name.clone(),
                }),
                created_at: tx.now,
                updated_at: tx.now,
            }));
            let roots: Vec<Folder> = roots_of(tx.state(), source).into_iter().cloned().collect();
            for root in roots {
                let copy = Folder {
                    id: FolderId::from_uuid(tx.new_uuid()),
                    project: id,
                    parent: None,
                    kind: root.kind,
                    name: root.name.clone(),
                };
                tx.put(Row::Folder(copy.clone()));
                tx.clone_contents(root.id, copy.id, id, actor)?;
            }

            let reuse = ReuseRecord {
                id: ReuseId::from_uuid(tx.new_uuid()),
                user: actor,
                source_project: source,
                target_project: id,
                scope: ReuseScope::Full,
                at: tx.now,
            };
            tx.put(Row::Reuse(reuse));
            tx.record(id, actor, EventAction::ProjectCreated, name)?;
            tx.record(source, actor, EventAction::ProjectCopiedBy, id.to_string())?;
            Ok(project_ref(tx.state(), id)?.clone())
        })
    }

    /// Copies selected folders (recursively) and artifacts of `source` into
    /// `target_folder` of a project the actor owns. Names that collide in the
    /// destination get a `-imported-<n>` suffix.
    pub fn selection_import(
        &self,
        actor: UserId,
        source: ProjectId,
        selection: &Selection,
        target: ProjectId,
        target_folder: FolderId,
    ) -> Result<ImportSummary> {
        self.write(|tx| {
            let src_owner = viewable(tx.state(), actor, source)?.owner;
            owned(tx.state(), actor, target)?;
            check_selection(tx.state(), source, selection)?;
            let dest = folder_ref(tx.state(), target_folder)?;
            if dest.project != target {
                return Err(Error::not_found(format_args!(
                    "folder {target_folder} in project {target}"
                )));
            }
            let (folders, artifacts) = minimal_selection(tx.state(), selection);

            // snapshot the source before writing so importing into a
            // selected subtree cannot feed on itself
            let mut folder_plan: Vec<Folder> = folders
                .iter()
                .map(|id| tx.state().folders[id].clone())
                .collect();
            folder_plan.sort_by(|a, b| {
                a.name
                    .to_lowercase()
                    .cmp(&b.name.to_lowercase())
                    .then(a.id.cmp(&b.id))
            });
            let mut artifact_plan: Vec<Artifact> = artifacts
                .iter()
                .map(|id| tx.state().artifacts[id].clone())
                .collect();
            artifact_plan.sort_by(|a, b| {
                a.display_name
                    .to_lowercase()
                    .cmp(&b.display_name.to_lowercase())
                    .then(a.id.cmp(&b.id))
            });
            let snapshot = SourceSnapshot::capture(tx.state(), &folder_plan);

            let mut summary = ImportSummary::default();
            let mut taken = entry_names(tx.state(), target_folder, None);
            for folder in &folder_plan {
                let name = free_name(&taken, &folder.name);
                taken.push(name.clone());
                let copy = Folder {
                    id: FolderId::from_uuid(tx.new_uuid()),
                    project: target,
                    parent: Some(target_folder),
                    kind: FolderKind::Sub,
                    name,
                };
                tx.put(Row::Folder(copy.clone()));
                let path = folder_path(tx.state(), copy.id);
                tx.record(target, actor, EventAction::FolderCreated, path)?;
                summary.folders += 1;
                summary.artifacts += snapshot.replay(tx, folder.id, copy.id, target, actor, &mut summary.folders)?;
            }

            for artifact in &artifact_plan {
                let name = free_name(&taken, &artifact.display_name);
                taken.push(name.clone());
                tx.clone_artifact(artifact, target_folder, target, actor, name.clone())?;
                let path = format!("{}/{}", folder_path(tx.state(), target_folder), name);
                tx.record(target, actor, EventAction::ArtifactAdded, path)?;
                summary.artifacts += 1;
            }

            if src_owner != actor {
                let reuse = ReuseRecord {
                    id: ReuseId::from_uuid(tx.new_uuid()),
                    user: actor,
                    source_project: source,
                    target_project: target,
                    scope: ReuseScope::Partial {
                        folders: summary.folders,
                        artifacts: summary.artifacts,
                    },
                    at: tx.now,
                };
                tx.put(Row::Reuse(reuse));
            }
            Ok(summary)
        })
    }
}

/// Source folder contents captured before an import starts writing.
struct SourceSnapshot {
    children: BTreeMap<FolderId, Vec<Folder>>,
    artifacts: BTreeMap<FolderId, Vec<Artifact>>,
}

impl SourceSnapshot {
    fn capture(state: &State, roots: &[Folder]) -> Self {
        let mut children = BTreeMap::new();
        let mut artifacts = BTreeMap::new();
        for root in roots {
            for id in subtree(state, root.id) {
                children.insert(
                    id,
                    sorted_children(state, id).into_iter().cloned().collect(),
                );
                artifacts.insert(
                    id,
                    sorted_artifacts(state, id).into_iter().cloned().collect(),
                );
            }
        }
        Self {
            children,
            artifacts,
        }
    }

    /// Writes the snapshot of `source` below `dest`, logging one event per
    /// created folder and artifact. Returns the artifact count.
    fn replay(
        &self,
        tx: &mut Tx<'_>,
        source: FolderId,
        dest: FolderId,
        project: ProjectId,
        actor: UserId,
        folders: &mut u64,
    ) -> Result<u64> {
        let mut count = 0;
        for a in self.artifacts.get(&source).into_iter().flatten() {
            tx.clone_artifact(a, dest, project, actor, a.display_name.clone())?;
            let path = format!("{}/{}", folder_path(tx.state(), dest), a.display_name);
            tx.record(project, actor, EventAction::ArtifactAdded, path)?;
            count += 1;
        }
        for child in self.children.get(&source).into_iter().flatten() {
            let copy = Folder {
                id: FolderId::from_uuid(tx.new_uuid()),
                project,
                parent: Some(dest),
                kind: FolderKind::Sub,
                name: child.name.clone(),
            };
            tx.put(Row::Folder(copy.clone()));
            let path = folder_path(tx.state(), copy.id);
            tx.record(project, actor, EventAction::FolderCreated, path)?;
            *folders += 1;
            count += self.replay(tx, child.id, copy.id, project, actor, folders)?;
        }
        Ok(count)
    }
}
