//! A small fruit-classification project used by several suites.

use std::collections::BTreeMap;

use ran_core::archive::StoredZipWriter;
use ran_core::{
    AssetId, FolderKind, FragmentSelector, NewArtifact, NewProject, ProjectId, Registry, UserId,
    Visibility,
};

use super::user;

pub struct Fruit {
    pub owner: UserId,
    pub project: ProjectId,
    pub roots: BTreeMap<FolderKind, ran_core::FolderId>,
    /// display name -> asset
    pub assets: BTreeMap<String, AssetId>,
    /// Number of distinct byte strings uploaded.
    pub distinct_blobs: usize,
}

/// Deterministic stand-in for an image: a PNG signature and a seeded body.
pub fn image(seed: u8, len: usize) -> Vec<u8> {
    let mut out = b"\x89PNG\r\n\x1a\n".to_vec();
    out.extend((0..len).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)));
    out
}

pub fn scripts_zip() -> Vec<u8> {
    let mut w = StoredZipWriter::new(Vec::new());
    w.add_file("README.txt", b"fruit scripts\n").unwrap();
    w.add_file("train.py", b"print('train')\n").unwrap();
    w.add_file("eval.py", b"print('eval')\n").unwrap();
    w.finish().unwrap()
}

/// Builds the owner's project: labelled images under TrainData and TestData
/// (one TestData image repeats a TrainData image byte for byte), a model and
/// code.
pub fn fruit_project(reg: &Registry, owner_name: &str) -> Fruit {
    let owner = user(reg, owner_name);
    let project = reg
        .create_project(
            owner,
            NewProject {
                name: "Fruit classifier".into(),
                description: "Convolutional network for apple, orange and pears images".into(),
                tags: vec!["fruit".into(), "image-classification".into(), "apple".into()],
                visibility: Visibility::Public,
            },
        )
        .unwrap()
        .id;
    let roots: BTreeMap<FolderKind, _> = reg
        .get_project(owner, project)
        .unwrap()
        .roots
        .iter()
        .map(|f| (f.kind, f.id))
        .collect();
    let apples = reg
        .folder_create(owner, project, roots[&FolderKind::TrainData], "apples")
        .unwrap()
        .id;

    let files: Vec<(ran_core::FolderId, &str, Vec<u8>, Vec<&str>, FragmentSelector)> = vec![
        (apples, "apple_01.png", image(1, 300), vec!["apple", "fruit"], FragmentSelector::Whole),
        (apples, "apple_02.png", image(2, 280), vec!["apple", "fruit"], FragmentSelector::Whole),
        (roots[&FolderKind::TrainData], "orange_01.png", image(3, 310), vec!["orange", "fruit"], FragmentSelector::Whole),
        (roots[&FolderKind::TrainData], "pears_01.png", image(4, 290), vec!["pears", "fruit"], FragmentSelector::Whole),
        (roots[&FolderKind::TestData], "apple_test.png", image(1, 300), vec!["apple", "fruit"], FragmentSelector::Whole),
        (roots[&FolderKind::TestData], "orange_test.png", image(5, 305), vec!["orange", "fruit"], FragmentSelector::Whole),
        (
            roots[&FolderKind::Model],
            "network-330x330x40.bin",
            (0..4096u32).flat_map(|i| i.to_le_bytes()).collect(),
            vec!["cnn"],
            FragmentSelector::Whole,
        ),
        (
            roots[&FolderKind::Model],
            "network-header.bin",
            (0..4096u32).flat_map(|i| i.to_le_bytes()).collect(),
            vec![],
            FragmentSelector::ByteRange { offset: 0, len: 64 },
        ),
        (roots[&FolderKind::Code], "classifier.py", b"import numpy\n".to_vec(), vec!["python"], FragmentSelector::Whole),
        (
            roots[&FolderKind::Code],
            "train-only.zip",
            scripts_zip(),
            vec!["python"],
            FragmentSelector::Members {
                paths: vec!["train.py".into()],
            },
        ),
    ];

    let mut assets = BTreeMap::new();
    let mut distinct = std::collections::BTreeSet::new();
    for (folder, name, bytes, tags, selector) in files {
        let tags: Vec<String> = tags.into_iter().map(String::from).collect();
        let upload = reg.upload_asset(owner, name, &bytes[..], &tags).unwrap();
        distinct.insert(upload.asset.id.clone());
        reg.artifact_add(
            owner,
            folder,
            NewArtifact {
                asset: upload.asset.id.clone(),
                selector,
                display_name: name.into(),
                tags: vec![],
            },
        )
        .unwrap();
        assets.insert(name.to_owned(), upload.asset.id);
    }
    Fruit {
        owner,
        project,
        roots,
        assets,
        distinct_blobs: distinct.len(),
    }
}
