//! Selection resolution and deterministic zip export.
//!
//! A package is `manifest.json` followed by every directory and file entry
//! in byte-wise path order, all STORED with the DOS epoch as timestamp. The
//! manifest is canonical JSON (sorted keys, compact, trailing LF), so equal
//! catalog content and selection always give equal bytes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::archive::StoredZipWriter;
use crate::blob::{BlobError, BlobStore};
use crate::catalog::reuse::check_selection;
use crate::catalog::{folder_path, subtree, viewable, Catalog, Selection, State};
use crate::domain::{AssetId, FragmentSelector, ProjectId, UserId};
use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const PACKAGE_FORMAT: &str = "ran-package/1";

/// One file of a resolved selection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedEntry {
    pub path: String,
    pub asset: AssetId,
    pub selector: FragmentSelector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedSelection {
    pub project: ManifestProject,
    /// Folder paths with a trailing `/`, sorted.
    pub directories: Vec<String>,
    /// Sorted by path, no duplicates.
    pub entries: Vec<ResolvedEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestProject {
    pub id: ProjectId,
    pub name: String,
    pub version: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub asset: AssetId,
    pub selector: FragmentSelector,
    /// Length of the packaged bytes (the fragment, not the whole asset).
    pub size: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageManifest {
    pub format: String,
    pub generator: String,
    pub project: ManifestProject,
    pub directories: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

impl PackageManifest {
    /// Canonical form: keys sorted at every level, no whitespace, one LF.
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        let value = sort_keys(serde_json::to_value(self).expect("manifest is plain data"));
        let mut out = serde_json::to_vec(&value).expect("value serializes");
        out.push(b'\n');
        out
    }
}

/// Rebuilds every object with its keys in order, whether or not serde_json
/// was compiled with `preserve_order`.
fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let sorted: BTreeMap<String, Value> =
                map.into_iter().map(|(k, v)| (k, sort_keys(v))).collect();
            Value::Object(sorted.into_iter().collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

pub fn generator() -> String {
    format!("ran-core/{}", env!("CARGO_PKG_VERSION"))
}

fn ancestors(path: &str) -> impl Iterator<Item = String> + '_ {
    path.match_indices('/').map(|(i, _)| path[..=i].to_owned())
}

fn resolve(state: &State, project: ProjectId, selection: &Selection) -> Result<ResolvedSelection> {
    check_selection(state, project, selection)?;
    let p = &state.projects[&project];

    let mut folders = BTreeSet::new();
    for root in &selection.folders {
        folders.extend(subtree(state, *root));
    }
    let mut artifacts: BTreeSet<_> = selection.artifacts.iter().copied().collect();
    for f in &folders {
        if let Some(ids) = state.folder_artifacts.get(f) {
            artifacts.extend(ids.iter().copied());
        }
    }

    let mut directories: BTreeSet<String> = folders
        .iter()
        .map(|f| format!("{}/", folder_path(state, *f)))
        .collect();
    let mut entries: Vec<ResolvedEntry> = artifacts
        .iter()
        .map(|id| {
            let a = &state.artifacts[id];
            ResolvedEntry {
                path: format!("{}/{}", folder_path(state, a.folder), a.display_name),
                asset: a.asset.clone(),
                selector: a.selector.clone(),
            }
        })
        .collect();
    for e in &entries {
        directories.extend(ancestors(&e.path));
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    entries.dedup_by(|a, b| a.path == b.path);

    Ok(ResolvedSelection {
        project: ManifestProject {
            id: p.id,
            name: p.name.clone(),
            version: p.version,
        },
        directories: directories.into_iter().collect(),
        entries,
    })
}

impl Catalog {
    /// Expands selected folders recursively and maps every artifact to its
    /// archive path `<Root>/<sub>/.../<display name>`.
    pub fn resolve_selection(
        &self,
        requester: UserId,
        project: ProjectId,
        selection: &Selection,
    ) -> Result<ResolvedSelection> {
        self.read(|state| {
            viewable(state, requester, project)?;
            resolve(state, project, selection)
        })
    }
}

/// Builds the zip for a resolved selection. Returns the archive and its
/// manifest.
pub fn build_package(
    blobs: &BlobStore,
    resolved: &ResolvedSelection,
) -> Result<(Vec<u8>, PackageManifest)> {
    let mut files = Vec::with_capacity(resolved.entries.len());
    let mut manifest_entries = Vec::with_capacity(resolved.entries.len());
    for e in &resolved.entries {
        let data = blobs.extract(&e.asset, &e.selector).map_err(|err| match err {
            BlobError::NotFound(id) => Error::BlobMissing(id),
            other => Error::Blob(other),
        })?;
        manifest_entries.push(ManifestEntry {
            path: e.path.clone(),
            asset: e.asset.clone(),
            selector: e.selector.clone(),
            size: data.len() as u64,
        });
        files.push((e.path.as_str(), data));
    }
    let manifest = PackageManifest {
        format: PACKAGE_FORMAT.to_owned(),
        generator: generator(),
        project: resolved.project.clone(),
        directories: resolved.directories.clone(),
        entries: manifest_entries,
    };

    enum Item<'a> {
        Dir(&'a str),
        File(&'a str, &'a [u8]),
    }
    let mut items: Vec<Item<'_>> = resolved
        .directories
        .iter()
        .map(|d| Item::Dir(d))
        .chain(files.iter().map(|(p, d)| Item::File(p, d)))
        .collect();
    fn path<'a>(i: &Item<'a>) -> &'a str {
        match i {
            Item::Dir(p) | Item::File(p, _) => p,
        }
    }
    items.sort_by(|a, b| path(a).cmp(path(b)));

    let mut zip = StoredZipWriter::new(Vec::new());
    zip.add_file(MANIFEST_NAME, &manifest.to_canonical_bytes())?;
    for item in items {
        match item {
            Item::Dir(p) => zip.add_directory(p)?,
            Item::File(p, d) => zip.add_file(p, d)?,
        }
    }
    Ok((zip.finish()?, manifest))
}
