use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ops::entry_names;
use super::{Catalog, State};
use crate::domain::{canonical_roots, AssetId, FolderKind, ReuseRecord, ReuseScope};

/// Result of a full consistency scan. Empty `violations` means every checked
/// invariant holds.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub projects: usize,
    pub folders: usize,
    pub artifacts: usize,
    pub assets: usize,
    pub ratings: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn scan(state: &State) -> AuditReport {
    let mut report = AuditReport {
        projects: state.projects.len(),
        folders: state.folders.len(),
        artifacts: state.artifacts.len(),
        assets: state.assets.len(),
        ratings: state.ratings.len(),
        violations: Vec::new(),
    };
    let v = &mut report.violations;

    for p in state.projects.values() {
        let mut roots: Vec<(FolderKind, &str)> = state
            .folders
            .values()
            .filter(|f| f.project == p.id && f.parent.is_none())
            .map(|f| (f.kind, f.name.as_str()))
            .collect();
        roots.sort();
        let mut expected = canonical_roots().to_vec();
        expected.sort();
        if roots != expected {
            v.push(format!("project {} has roots {roots:?}", p.id));
        }

        let seqs: Vec<u64> = state
            .events
            .range((p.id, 0)..=(p.id, u64::MAX))
            .map(|((_, s), _)| *s)
            .collect();
        if seqs.iter().copied().ne(1..=seqs.len() as u64) {
            v.push(format!("project {} event log has gaps: {seqs:?}", p.id));
        }
        if p.version != seqs.len() as u64 {
            v.push(format!(
                "project {} version {} != {} events",
                p.id,
                p.version,
                seqs.len()
            ));
        }
    }

    for f in state.folders.values() {
        if !state.projects.contains_key(&f.project) {
            v.push(format!("folder {} belongs to missing project", f.id));
        }
        match f.parent {
            None if f.kind == FolderKind::Sub => v.push(format!("sub folder {} has no parent", f.id)),
            Some(_) if f.kind != FolderKind::Sub => {
                v.push(format!("root-kind folder {} is nested", f.id))
            }
            Some(parent) => match state.folders.get(&parent) {
                Some(pf) if pf.project == f.project => {}
                _ => v.push(format!("folder {} has a foreign or missing parent", f.id)),
            },
            None => {}
        }
        let mut names: Vec<String> = entry_names(state, f.id, None)
            .iter()
            .map(|n| n.to_lowercase())
            .collect();
        let before = names.len();
        names.sort();
        names.dedup();
        if names.len() != before {
            v.push(format!("folder {} has colliding entry names", f.id));
        }
    }

    let mut counted: HashMap<&AssetId, u64> = HashMap::new();
    for a in state.artifacts.values() {
        *counted.entry(&a.asset).or_default() += 1;
        match state.folders.get(&a.folder) {
            Some(f) if f.project == a.project => {}
            _ => v.push(format!("artifact {} is orphaned", a.id)),
        }
        if !state.assets.contains_key(&a.asset) {
            v.push(format!("artifact {} references unknown asset", a.id));
        }
    }
    for meta in state.assets.values() {
        let actual = counted.get(&meta.id).copied().unwrap_or(0);
        if meta.refcount != actual {
            v.push(format!(
                "asset {} refcount {} != {actual} referencing artifacts",
                meta.id, meta.refcount
            ));
        }
    }

    for r in state.ratings.values() {
        let full = state.reuse.values().any(|rec| {
            rec.user == r.user && rec.source_project == r.project && rec.scope == ReuseScope::Full
        });
        if !full {
            v.push(format!(
                "rating by {} on {} has no full reuse record",
                r.user, r.project
            ));
        }
    }

    for rec in state.reuse.values() {
        // owner at record time is unknowable after deletion; check live ones
        if let Some(src) = state.projects.get(&rec.source_project) {
            if src.owner == rec.user {
                v.push(format!("reuse record {} was made by the owner", rec.id));
            }
        }
    }
    report
}

impl Catalog {
    /// Full scan of the structural invariants.
    pub fn audit(&self) -> AuditReport {
        self.read(scan)
    }

    /// Every reuse record, oldest first.
    pub fn reuse_records(&self) -> Vec<ReuseRecord> {
        self.read(|state| {
            let mut out: Vec<ReuseRecord> = state.reuse.values().cloned().collect();
            out.sort_by(|a, b| a.at.cmp(&b.at).then(a.id.cmp(&b.id)));
            out
        })
    }
}
