//! Fixtures shared by the benchmarks.

use std::path::Path;

use ran_core::{
    Config, FolderKind, NewArtifact, NewProject, ProjectId, Registry, Selection, UserId, Visibility,
};

const WORDS: [&str; 12] = [
    "apple", "orange", "pear", "cnn", "resnet", "mnist", "lidar", "speech", "vision", "audio",
    "transformer", "segmentation",
];

/// Deterministic filler bytes; `seed` makes each buffer distinct.
pub fn bytes(seed: u64, len: usize) -> Vec<u8> {
    let mut x = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    (0..len)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            x as u8
        })
        .collect()
}

pub struct Fixture {
    pub registry: Registry,
    pub owner: UserId,
    pub reader: UserId,
    pub projects: Vec<ProjectId>,
}

/// `projects` public projects with tag and word mixes, each holding
/// `files` artifacts of `file_len` bytes in its Model folder.
pub fn populated(dir: &Path, projects: usize, files: usize, file_len: usize) -> Fixture {
    let registry = Registry::open(Config::for_tests(dir, 1)).expect("open registry");
    let pw = "benchmark password";
    let owner = registry.register("owner@example.org", "owner", pw).unwrap().id;
    let reader = registry.register("reader@example.org", "reader", pw).unwrap().id;
    let mut ids = Vec::with_capacity(projects);
    for i in 0..projects {
        let w = |k: usize| WORDS[(i * 7 + k * 5) % WORDS.len()];
        let p = registry
            .create_project(
                owner,
                NewProject {
                    name: format!("{} {} {i}", w(0), w(1)),
                    description: format!("{} model trained on {} data", w(2), w(3)),
                    tags: vec![w(4).to_owned(), w(5).to_owned()],
                    visibility: Visibility::Public,
                },
            )
            .unwrap();
        let model = registry.get_project(owner, p.id).unwrap().roots[2].id;
        for f in 0..files {
            let seed = (i * files + f) as u64;
            let up = registry
                .upload_asset(owner, &format!("layer{f}.bin"), &bytes(seed, file_len)[..], &[])
                .unwrap();
            registry
                .artifact_add(
                    owner,
                    model,
                    NewArtifact {
                        asset: up.asset.id,
                        selector: Default::default(),
                        display_name: format!("layer{f}.bin"),
                        tags: vec![],
                    },
                )
                .unwrap();
        }
        ids.push(p.id);
    }
    Fixture {
        registry,
        owner,
        reader,
        projects: ids,
    }
}

/// Selection of one root folder of `project`.
pub fn root_selection(reg: &Registry, user: UserId, project: ProjectId, kind: FolderKind) -> Selection {
    let root = reg
        .get_project(user, project)
        .unwrap()
        .roots
        .into_iter()
        .find(|f| f.kind == kind)
        .unwrap();
    Selection {
        folders: [root.id].into(),
        ..Default::default()
    }
}
