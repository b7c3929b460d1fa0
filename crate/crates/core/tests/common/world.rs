//! Randomized operation driver with an independent model of project
//! versions, used by the invariant suites.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ran_core::{
    ArtifactId, AssetId, FolderId, NewArtifact, NewProject, ProjectId, ProjectPatch, RatingValue,
    Registry, Selection, UserId, Visibility,
};

use super::user;

const NAMES: [&str; 6] = ["alpha", "beta", "Gamma", "delta", "ALPHA", "eps"];

pub struct Driver {
    rng: ChaCha8Rng,
    pub users: Vec<UserId>,
    assets: Vec<AssetId>,
    /// Independently tracked version of every live project.
    expected: BTreeMap<ProjectId, u64>,
    owners: BTreeMap<ProjectId, UserId>,
    ratings: BTreeMap<(UserId, ProjectId), RatingValue>,
    pub applied: usize,
    pub rejected: usize,
}

impl Driver {
    pub fn new(reg: &Registry, seed: u64) -> Self {
        let users: Vec<UserId> = (0..4).map(|i| user(reg, &format!("u{i}"))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let assets = (0..8)
            .map(|i| {
                let len = rng.gen_range(1..64);
                let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
                reg.upload_asset(users[0], &format!("f{i}.bin"), &bytes[..], &[])
                    .unwrap()
                    .asset
                    .id
            })
            .collect();
        Self {
            rng,
            users,
            assets,
            expected: BTreeMap::new(),
            owners: BTreeMap::new(),
            ratings: BTreeMap::new(),
            applied: 0,
            rejected: 0,
        }
    }

    fn any_user(&mut self) -> UserId {
        *self.users.choose(&mut self.rng).unwrap()
    }

    fn any_project(&mut self) -> Option<(ProjectId, UserId)> {
        let ids: Vec<_> = self.owners.iter().map(|(p, o)| (*p, *o)).collect();
        ids.choose(&mut self.rng).copied()
    }

    fn name(&mut self) -> String {
        NAMES.choose(&mut self.rng).unwrap().to_string()
    }

    fn folders(reg: &Registry, owner: UserId, project: ProjectId) -> Vec<FolderId> {
        let mut out: Vec<FolderId> = reg
            .get_project(owner, project)
            .unwrap()
            .roots
            .iter()
            .map(|f| f.id)
            .collect();
        let mut i = 0;
        while i < out.len() {
            let listing = reg.folder_list(owner, out[i]).unwrap();
            out.extend(listing.subfolders.iter().map(|f| f.id));
            i += 1;
        }
        out
    }

    fn artifacts(reg: &Registry, owner: UserId, project: ProjectId) -> Vec<ArtifactId> {
        Self::folders(reg, owner, project)
            .into_iter()
            .flat_map(|f| reg.folder_list(owner, f).unwrap().artifacts)
            .map(|a| a.id)
            .collect()
    }

    fn bump(&mut self, project: ProjectId, by: u64) {
        *self.expected.get_mut(&project).unwrap() += by;
    }

    /// Runs one random operation, then checks every invariant. Returns a
    /// description of the first violation.
    pub fn step(&mut self, reg: &Registry) -> Result<(), String> {
        let ok = self.apply(reg);
        if ok {
            self.applied += 1;
        } else {
            self.rejected += 1;
        }
        self.check(reg)
    }

    fn apply(&mut self, reg: &Registry) -> bool {
        let op = if self.owners.is_empty() {
            0
        } else {
            self.rng.gen_range(0..12)
        };
        match op {
            0 => {
                let owner = self.any_user();
                let new = NewProject {
                    name: self.name(),
                    description: "random".into(),
                    tags: vec!["rnd".into()],
                    visibility: if self.rng.gen_bool(0.3) {
                        Visibility::Private
                    } else {
                        Visibility::Public
                    },
                };
                match reg.create_project(owner, new) {
                    Ok(p) => {
                        self.expected.insert(p.id, 1);
                        self.owners.insert(p.id, owner);
                        true
                    }
                    Err(_) => false,
                }
            }
            1 => {
                let Some((p, owner)) = self.any_project() else { return false };
                let actor = if self.rng.gen_bool(0.8) { owner } else { self.any_user() };
                let version = self.expected[&p] - u64::from(self.rng.gen_bool(0.1));
                let patch = ProjectPatch {
                    name: self.rng.gen_bool(0.5).then(|| self.name()),
                    visibility: self.rng.gen_bool(0.3).then(|| {
                        if self.rng.gen_bool(0.5) {
                            Visibility::Public
                        } else {
                            Visibility::Private
                        }
                    }),
                    ..Default::default()
                };
                let ok = reg.update_project_meta(actor, p, version, patch).is_ok();
                if ok {
                    self.bump(p, 1);
                }
                ok
            }
            2 => {
                if !self.rng.gen_bool(0.2) {
                    return false;
                }
                let Some((p, owner)) = self.any_project() else { return false };
                let ok = reg.delete_project(owner, p).is_ok();
                if ok {
                    self.expected.remove(&p);
                    self.owners.remove(&p);
                    self.ratings.retain(|(_, rp), _| *rp != p);
                }
                ok
            }
            3 => {
                let Some((p, owner)) = self.any_project() else { return false };
                let parent = *Self::folders(reg, owner, p).choose(&mut self.rng).unwrap();
                let name = self.name();
                let ok = reg.folder_create(owner, p, parent, &name).is_ok();
                if ok {
                    self.bump(p, 1);
                }
                ok
            }
            4 | 5 => {
                let Some((p, owner)) = self.any_project() else { return false };
                let folder = *Self::folders(reg, owner, p).choose(&mut self.rng).unwrap();
                let ok = if op == 4 {
                    let name = self.name();
                    reg.folder_rename(owner, folder, &name).is_ok()
                } else {
                    reg.folder_delete(owner, folder).is_ok()
                };
                if ok {
                    self.bump(p, 1);
                }
                ok
            }
            6 => {
                let Some((p, owner)) = self.any_project() else { return false };
                let folder = *Self::folders(reg, owner, p).choose(&mut self.rng).unwrap();
                let asset = self.assets.choose(&mut self.rng).unwrap().clone();
                let new = NewArtifact {
                    asset,
                    selector: Default::default(),
                    display_name: self.name(),
                    tags: vec![],
                };
                let ok = reg.artifact_add(owner, folder, new).is_ok();
                if ok {
                    self.bump(p, 1);
                }
                ok
            }
            7 => {
                let Some((p, owner)) = self.any_project() else { return false };
                let Some(a) = Self::artifacts(reg, owner, p).choose(&mut self.rng).copied() else {
                    return false;
                };
                let ok = reg.artifact_remove(owner, a).is_ok();
                if ok {
                    self.bump(p, 1);
                }
                ok
            }
            8 => {
                let Some((p, _)) = self.any_project() else { return false };
                let actor = self.any_user();
                let name = self.name();
                match reg.project_copy(actor, p, &name) {
                    Ok(copy) => {
                        self.expected.insert(copy.id, 1);
                        self.owners.insert(copy.id, actor);
                        self.bump(p, 1);
                        true
                    }
                    Err(_) => false,
                }
            }
            9 => {
                let Some((src, src_owner)) = self.any_project() else { return false };
                let Some((dst, dst_owner)) = self.any_project() else { return false };
                let mut selection = Selection::default();
                let folders = Self::folders(reg, src_owner, src);
                if let Some(f) = folders.choose(&mut self.rng) {
                    selection.folders.insert(*f);
                }
                if let Some(a) = Self::artifacts(reg, src_owner, src).choose(&mut self.rng) {
                    selection.artifacts.insert(*a);
                }
                let target_folder = *Self::folders(reg, dst_owner, dst)
                    .choose(&mut self.rng)
                    .unwrap();
                match reg.selection_import(dst_owner, src, &selection, dst, target_folder) {
                    Ok(summary) => {
                        self.bump(dst, summary.folders + summary.artifacts);
                        true
                    }
                    Err(_) => false,
                }
            }
            10 => {
                let Some((p, _)) = self.any_project() else { return false };
                let actor = self.any_user();
                let value = if self.rng.gen_bool(0.5) {
                    RatingValue::Up
                } else {
                    RatingValue::Down
                };
                let ok = reg.rate(actor, p, value).is_ok();
                if ok && self.ratings.insert((actor, p), value) != Some(value) {
                    self.bump(p, 1);
                }
                ok
            }
            _ => {
                let Some((p, _)) = self.any_project() else { return false };
                let actor = self.any_user();
                let ok = reg.unrate(actor, p).is_ok();
                if ok {
                    self.ratings.remove(&(actor, p));
                    self.bump(p, 1);
                }
                ok
            }
        }
    }

    fn check(&self, reg: &Registry) -> Result<(), String> {
        let report = reg.audit();
        if let Some(v) = report.violations.first() {
            return Err(v.clone());
        }
        if report.projects != self.expected.len() {
            return Err(format!(
                "{} projects stored, model has {}",
                report.projects,
                self.expected.len()
            ));
        }
        for (p, expected) in &self.expected {
            let actual = reg.get_project(self.owners[p], *p).unwrap().project.version;
            if actual != *expected {
                return Err(format!("project {p} at version {actual}, model says {expected}"));
            }
        }
        let model: BTreeSet<(UserId, ProjectId)> = self.ratings.keys().copied().collect();
        if report.ratings != model.len() {
            return Err(format!(
                "{} ratings stored, model has {}",
                report.ratings,
                model.len()
            ));
        }
        Ok(())
    }
}
