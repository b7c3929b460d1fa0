//! Exhaustive visibility check: three users, four projects with mixed
//! visibility, every read path compared against a one-line predicate.

use ran_core::{
    Error, NewArtifact, NewProject, PageRequest, ProjectId, Registry, UserId, Visibility,
};

use super::user;

struct Fixture {
    id: ProjectId,
    owner: UserId,
    visibility: Visibility,
    tag: String,
    asset: ran_core::AssetId,
}

fn oracle(owner: UserId, visibility: Visibility, viewer: UserId) -> bool {
    owner == viewer || visibility == Visibility::Public
}

#[derive(Default)]
struct Tally {
    out: Vec<String>,
    checks: usize,
}

impl Tally {
    fn check(&mut self, what: &str, viewer: UserId, p: &Fixture, got: bool) {
        self.checks += 1;
        let want = oracle(p.owner, p.visibility, viewer);
        if got != want {
            self.out
                .push(format!("{what}: viewer {viewer} project {} got {got} want {want}", p.id));
        }
    }
}

/// Returns one line per disagreement with the oracle, and the number of
/// checks made.
pub fn mismatches(reg: &Registry) -> (Vec<String>, usize) {
    let users: Vec<UserId> = ["vis-a", "vis-b", "vis-c"]
        .iter()
        .map(|n| user(reg, n))
        .collect();
    let layout = [
        (0, Visibility::Public),
        (0, Visibility::Private),
        (1, Visibility::Private),
        (2, Visibility::Public),
    ];
    let mut projects = Vec::new();
    for (i, (owner, visibility)) in layout.into_iter().enumerate() {
        let owner = users[owner];
        let tag = format!("world{i}");
        let p = reg
            .create_project(
                owner,
                NewProject {
                    name: format!("world project {i}"),
                    description: "shared visibility world".into(),
                    tags: vec![tag.clone(), "sharedworld".into()],
                    visibility,
                },
            )
            .unwrap();
        // the uploader always sees their own asset; use a unique one per project
        let asset = reg
            .upload_asset(owner, &format!("{tag}.txt"), format!("payload {i}").as_bytes(), &[tag.clone()])
            .unwrap()
            .asset
            .id;
        let root = reg.get_project(owner, p.id).unwrap().roots[0].id;
        reg.artifact_add(
            owner,
            root,
            NewArtifact {
                asset: asset.clone(),
                selector: Default::default(),
                display_name: format!("{tag}.txt"),
                tags: vec![],
            },
        )
        .unwrap();
        projects.push(Fixture {
            id: p.id,
            owner,
            visibility,
            tag,
            asset,
        });
    }

    let mut t = Tally::default();

    for &viewer in &users {
        let browse: Vec<ProjectId> = reg
            .browse(viewer, PageRequest::new(1, 100))
            .unwrap()
            .items
            .iter()
            .map(|s| s.project.id)
            .collect();
        let shared: Vec<String> = reg
            .search_projects(viewer, "sharedworld", PageRequest::new(1, 100))
            .unwrap()
            .items
            .into_iter()
            .map(|r| r.id)
            .collect();
        for p in &projects {
            let detail = reg.get_project(viewer, p.id);
            if let Err(e) = &detail {
                if !matches!(e, Error::Forbidden(_)) {
                    t.out.push(format!("get_project returned {e}"));
                }
            }
            t.check("get_project", viewer, p, detail.is_ok());
            let root = reg.get_project(p.owner, p.id).unwrap().roots[0].id;
            t.check("folder_list", viewer, p, reg.folder_list(viewer, root).is_ok());
            t.check("project_tree", viewer, p, reg.project_tree(viewer, p.id).is_ok());
            t.check(
                "tracking_feed",
                viewer,
                p,
                reg.tracking_feed(viewer, p.id, 10, None).is_ok(),
            );
            t.check("rating_status", viewer, p, reg.rating_status(viewer, p.id).is_ok());
            t.check("browse", viewer, p, browse.contains(&p.id));
            t.check("search shared term", viewer, p, shared.contains(&p.id.to_string()));
            let own_tag = reg
                .search_projects(viewer, &p.tag, PageRequest::default())
                .unwrap();
            t.check("search own tag", viewer, p, own_tag.total == 1);
            t.check("asset_meta", viewer, p, reg.asset_meta(viewer, &p.asset).is_ok());
            t.check(
                "download_asset",
                viewer,
                p,
                reg.download_asset(viewer, &p.asset).is_ok(),
            );
            let assets = reg
                .search_assets(viewer, &p.tag, PageRequest::default())
                .unwrap();
            t.check("search_assets", viewer, p, assets.total == 1);
            let everything = ran_core::Selection {
                folders: [root].into(),
                artifacts: Default::default(),
            };
            t.check(
                "resolve_selection",
                viewer,
                p,
                reg.resolve_selection(viewer, p.id, &everything).is_ok(),
            );
        }
    }

    // copies carry the source's tags, so they are made after all searches
    for &viewer in &users {
        for p in &projects {
            // owners are refused outright, others by visibility
            let copy = reg.project_copy(viewer, p.id, &format!("copy of {} by {viewer}", p.tag));
            if viewer == p.owner {
                t.checks += 1;
                if !matches!(copy, Err(Error::CopyOwnProject)) {
                    t.out.push(format!("owner copy of {} gave {copy:?}", p.id));
                }
            } else {
                t.check("project_copy", viewer, p, copy.is_ok());
            }
        }
    }
    (t.out, t.checks)
}
