//! In-memory tables behind a redo journal.
//!
//! All writes go through [`Tx`], which applies row changes immediately and
//! keeps an undo list. On success the redo list is appended to the journal
//! as one JSON line and fsynced; on failure the undo list is replayed in
//! reverse. Replaying the journal from the start rebuilds the tables and
//! every derived index, including the search index.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::domain::{
    Artifact, ArtifactId, AssetId, AssetMeta, EventSeq, Folder, FolderId, Project, ProjectId,
    Rating, ReuseId, ReuseRecord, ReuseScope, Timestamp, TrackingEvent, User, UserId,
};
use crate::error::{Error, Result};
use crate::search::{EntityRef, SearchIndex};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct StoredUser {
    pub user: User,
    pub password_digest: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct SessionRow {
    /// Hex SHA-256 of the bearer token; the token itself is never stored.
    pub digest: String,
    pub user: UserId,
    pub created_at: Timestamp,
    pub expires_at: Timestamp,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "table", content = "row", rename_all = "snake_case")]
pub(crate) enum Row {
    User(StoredUser),
    Session(SessionRow),
    Project(Project),
    Folder(Folder),
    Artifact(Artifact),
    Asset(AssetMeta),
    Reuse(ReuseRecord),
    Rating(Rating),
    Event(TrackingEvent),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "table", content = "key", rename_all = "snake_case")]
pub(crate) enum Key {
    User(UserId),
    Session(String),
    Project(ProjectId),
    Folder(FolderId),
    Artifact(ArtifactId),
    Asset(AssetId),
    Reuse(ReuseId),
    Rating(ProjectId, UserId),
    Event(ProjectId, EventSeq),
}

impl Row {
    fn key(&self) -> Key {
        match self {
            Row::User(u) => Key::User(u.user.id),
            Row::Session(s) => Key::Session(s.digest.clone()),
            Row::Project(p) => Key::Project(p.id),
            Row::Folder(f) => Key::Folder(f.id),
            Row::Artifact(a) => Key::Artifact(a.id),
            Row::Asset(a) => Key::Asset(a.id.clone()),
            Row::Reuse(r) => Key::Reuse(r.id),
            Row::Rating(r) => Key::Rating(r.project, r.user),
            Row::Event(e) => Key::Event(e.project, e.seq),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub(crate) enum Change {
    Put(Row),
    Delete(Key),
}

/// Tables plus indexes derived from them.
#[derive(Default)]
pub(crate) struct State {
    pub users: BTreeMap<UserId, StoredUser>,
    pub sessions: HashMap<String, SessionRow>,
    pub projects: BTreeMap<ProjectId, Project>,
    pub folders: BTreeMap<FolderId, Folder>,
    pub artifacts: BTreeMap<ArtifactId, Artifact>,
    pub assets: BTreeMap<AssetId, AssetMeta>,
    pub reuse: BTreeMap<ReuseId, ReuseRecord>,
    pub ratings: BTreeMap<(ProjectId, UserId), Rating>,
    pub events: BTreeMap<(ProjectId, EventSeq), TrackingEvent>,

    pub emails: HashMap<String, UserId>,
    /// (owner, lowercase name) -> project
    pub project_names: HashMap<(UserId, String), ProjectId>,
    pub project_folders: HashMap<ProjectId, BTreeSet<FolderId>>,
    pub children: HashMap<FolderId, BTreeSet<FolderId>>,
    pub folder_artifacts: HashMap<FolderId, BTreeSet<ArtifactId>>,
    /// asset -> project -> number of artifacts in that project using it
    pub asset_projects: HashMap<AssetId, BTreeMap<ProjectId, u64>>,
    pub full_copies: HashSet<(UserId, ProjectId)>,
    pub search: SearchIndex,
}

fn multiset_remove<K: Ord>(map: &mut BTreeMap<K, u64>, key: &K) {
    if let Some(n) = map.get_mut(key) {
        *n -= 1;
        if *n == 0 {
            map.remove(key);
        }
    }
}

impl State {
    /// Inserts or replaces a row, returning the previous one.
    pub fn put(&mut self, row: Row) -> Option<Row> {
        let prev = self.delete(&row.key());
        match row {
            Row::User(u) => {
                self.emails.insert(u.user.email.clone(), u.user.id);
                self.users.insert(u.user.id, u);
            }
            Row::Session(s) => {
                self.sessions.insert(s.digest.clone(), s);
            }
            Row::Project(p) => {
                self.project_names
                    .insert((p.owner, p.name.to_lowercase()), p.id);
                self.search.index_project(&p);
                self.projects.insert(p.id, p);
            }
            Row::Folder(f) => {
                self.project_folders.entry(f.project).or_default().insert(f.id);
                if let Some(parent) = f.parent {
                    self.children.entry(parent).or_default().insert(f.id);
                }
                self.folders.insert(f.id, f);
            }
            Row::Artifact(a) => {
                self.folder_artifacts.entry(a.folder).or_default().insert(a.id);
                *self
                    .asset_projects
                    .entry(a.asset.clone())
                    .or_default()
                    .entry(a.project)
                    .or_default() += 1;
                self.artifacts.insert(a.id, a);
            }
            Row::Asset(m) => {
                self.search.index_asset(&m);
                self.assets.insert(m.id.clone(), m);
            }
            Row::Reuse(r) => {
                if r.scope == ReuseScope::Full {
                    self.full_copies.insert((r.user, r.source_project));
                }
                self.reuse.insert(r.id, r);
            }
            Row::Rating(r) => {
                self.ratings.insert((r.project, r.user), r);
            }
            Row::Event(e) => {
                self.events.insert((e.project, e.seq), e);
            }
        }
        prev
    }

    /// Removes a row, returning it if it existed.
    pub fn delete(&mut self, key: &Key) -> Option<Row> {
        match key {
            Key::User(id) => {
                let u = self.users.remove(id)?;
                self.emails.remove(&u.user.email);
                Some(Row::User(u))
            }
            Key::Session(d) => self.sessions.remove(d).map(Row::Session),
            Key::Project(id) => {
                let p = self.projects.remove(id)?;
                self.project_names.remove(&(p.owner, p.name.to_lowercase()));
                self.search.remove(&EntityRef::Project(p.id));
                Some(Row::Project(p))
            }
            Key::Folder(id) => {
                let f = self.folders.remove(id)?;
                if let Some(set) = self.project_folders.get_mut(&f.project) {
                    set.remove(id);
                    if set.is_empty() {
                        self.project_folders.remove(&f.project);
                    }
                }
                if let Some(parent) = f.parent {
                    if let Some(set) = self.children.get_mut(&parent) {
                        set.remove(id);
                        if set.is_empty() {
                            self.children.remove(&parent);
                        }
                    }
                }
                Some(Row::Folder(f))
            }
            Key::Artifact(id) => {
                let a = self.artifacts.remove(id)?;
                if let Some(set) = self.folder_artifacts.get_mut(&a.folder) {
                    set.remove(id);
                    if set.is_empty() {
                        self.folder_artifacts.remove(&a.folder);
                    }
                }
                if let Some(map) = self.asset_projects.get_mut(&a.asset) {
                    multiset_remove(map, &a.project);
                    if map.is_empty() {
                        self.asset_projects.remove(&a.asset);
                    }
                }
                Some(Row::Artifact(a))
            }
            Key::Asset(id) => {
                let m = self.assets.remove(id)?;
                self.search.remove(&EntityRef::Asset(m.id.clone()));
                Some(Row::Asset(m))
            }
            Key::Reuse(id) => {
                let r = self.reuse.remove(id)?;
                if r.scope == ReuseScope::Full {
                    let still = self.reuse.values().any(|o| {
                        o.scope == ReuseScope::Full
                            && o.user == r.user
                            && o.source_project == r.source_project
                    });
                    if !still {
                        self.full_copies.remove(&(r.user, r.source_project));
                    }
                }
                Some(Row::Reuse(r))
            }
            Key::Rating(p, u) => self.ratings.remove(&(*p, *u)).map(Row::Rating),
            Key::Event(p, s) => self.events.remove(&(*p, *s)).map(Row::Event),
        }
    }

    pub fn apply(&mut self, change: Change) {
        match change {
            Change::Put(row) => {
                self.put(row);
            }
            Change::Delete(key) => {
                self.delete(&key);
            }
        }
    }
}

/// Source of entity identifiers. Seeded generators make two catalogs fed the
/// same operations assign the same ids.
pub(crate) struct IdGen(ChaCha20Rng);

impl IdGen {
    pub fn new(seed: Option<u64>) -> Self {
        match seed {
            Some(seed) => Self(ChaCha20Rng::seed_from_u64(seed)),
            None => Self(ChaCha20Rng::from_entropy()),
        }
    }

    pub fn next_uuid(&mut self) -> Uuid {
        uuid::Builder::from_random_bytes(self.0.gen()).into_uuid()
    }
}

enum Undo {
    Restore(Row),
    Remove(Key),
}

/// A write transaction over [`State`].
pub(crate) struct Tx<'a> {
    state: &'a mut State,
    ids: &'a mut IdGen,
    undo: Vec<Undo>,
    redo: Vec<Change>,
    pub now: Timestamp,
}

impl<'a> Tx<'a> {
    pub fn new(state: &'a mut State, ids: &'a mut IdGen, now: Timestamp) -> Self {
        Self {
            state,
            ids,
            undo: Vec::new(),
            redo: Vec::new(),
            now,
        }
    }

    pub fn state(&self) -> &State {
        self.state
    }

    pub fn new_uuid(&mut self) -> Uuid {
        self.ids.next_uuid()
    }

    pub fn put(&mut self, row: Row) {
        let key = row.key();
        match self.state.put(row.clone()) {
            Some(prev) => self.undo.push(Undo::Restore(prev)),
            None => self.undo.push(Undo::Remove(key)),
        }
        self.redo.push(Change::Put(row));
    }

    pub fn delete(&mut self, key: Key) -> Option<Row> {
        let prev = self.state.delete(&key)?;
        self.undo.push(Undo::Restore(prev.clone()));
        self.redo.push(Change::Delete(key));
        Some(prev)
    }

    pub fn rollback(self) {
        TxUndo(self.undo).rollback(self.state);
    }

    /// Consumes the transaction, returning the redo list.
    pub fn into_changes(self) -> (Vec<Change>, TxUndo) {
        (self.redo, TxUndo(self.undo))
    }
}

/// Undo list detached from a finished transaction, kept until the journal
/// write succeeds.
pub(crate) struct TxUndo(Vec<Undo>);

impl TxUndo {
    pub fn rollback(self, state: &mut State) {
        for undo in self.0.into_iter().rev() {
            match undo {
                Undo::Restore(row) => {
                    state.put(row);
                }
                Undo::Remove(key) => {
                    state.delete(&key);
                }
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JournalEntry {
    changes: Vec<Change>,
}

/// Append-only redo log, one committed transaction per line.
pub(crate) struct Journal {
    path: PathBuf,
    file: File,
    len: u64,
    fsync: bool,
}

impl Journal {
    /// Opens (or creates) the journal and replays it into `state`. A torn
    /// final line from an interrupted append is discarded.
    pub fn open(path: &Path, fsync: bool, state: &mut State) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut valid_len = 0u64;
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            let mut lines = reader.split(b'\n').peekable();
            while let Some(line) = lines.next() {
                let line = line?;
                let is_last = lines.peek().is_none();
                match serde_json::from_slice::<JournalEntry>(&line) {
                    Ok(entry) => {
                        for change in entry.changes {
                            state.apply(change);
                        }
                        valid_len += line.len() as u64 + 1;
                    }
                    Err(_) if is_last => {
                        tracing::warn!(path = %path.display(), "discarding torn journal tail");
                        break;
                    }
                    Err(e) => {
                        return Err(Error::Storage(format!(
                            "corrupt journal {}: {e}",
                            path.display()
                        )))
                    }
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(path)?;
        if file.metadata()?.len() > valid_len {
            file.set_len(valid_len)?;
        }
        Ok(Self {
            path: path.to_owned(),
            file,
            len: valid_len,
            fsync,
        })
    }

    pub fn append(&mut self, changes: &[Change]) -> Result<()> {
        #[derive(Serialize)]
        struct Borrowed<'a> {
            changes: &'a [Change],
        }
        let mut line = serde_json::to_vec(&Borrowed { changes })
            .map_err(|e| Error::Storage(e.to_string()))?;
        line.push(b'\n');
        let written = self.file.write_all(&line).and_then(|_| {
            if self.fsync {
                self.file.sync_data()
            } else {
                Ok(())
            }
        });
        if let Err(e) = written {
            // drop any partial line so later appends stay parseable
            let _ = self.file.set_len(self.len);
            return Err(Error::Storage(format!("journal {}: {e}", self.path.display())));
        }
        self.len += line.len() as u64;
        Ok(())
    }
}
