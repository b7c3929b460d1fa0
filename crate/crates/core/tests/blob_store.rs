mod common;

use std::collections::HashSet;
use std::sync::{Arc, Barrier};
use std::thread;

use common::oracle::sha256_hex;
use proptest::prelude::*;
use ran_core::{AssetId, BlobError, BlobStore};

fn store() -> (tempfile::TempDir, BlobStore) {
    let dir = tempfile::tempdir().unwrap();
    let store = BlobStore::open(dir.path(), 1 << 16).unwrap();
    (dir, store)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ids_match_reference_hash(chunks in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..2048), 1..8)) {
        let (_dir, store) = store();
        let mut distinct = HashSet::new();
        for bytes in &chunks {
            let stored = store.put_bytes(bytes).unwrap();
            prop_assert_eq!(stored.id.as_str(), sha256_hex(bytes));
            prop_assert_eq!(stored.existing, !distinct.insert(stored.id.clone()));
            prop_assert_eq!(&store.get(&stored.id).unwrap(), bytes);
            prop_assert_eq!(store.stat(&stored.id).unwrap().size_bytes, bytes.len() as u64);
        }
        prop_assert_eq!(store.list().unwrap().len(), distinct.len());
    }
}

#[test]
fn blob_layout_uses_two_level_fanout() {
    let (dir, store) = store();
    let id = store.put_bytes(b"layout").unwrap().id;
    let hex = id.as_str();
    let path = dir
        .path()
        .join("blobs")
        .join(&hex[..2])
        .join(&hex[2..4])
        .join(hex);
    assert_eq!(std::fs::read(path).unwrap(), b"layout");
}

#[test]
fn oversized_input_leaves_nothing_behind() {
    let (dir, store) = store();
    let big = vec![7u8; (1 << 16) + 1];
    assert!(matches!(
        store.put_bytes(&big),
        Err(BlobError::TooLarge { limit: 65536 })
    ));
    assert!(store.list().unwrap().is_empty());
    assert_eq!(std::fs::read_dir(dir.path().join("tmp")).unwrap().count(), 0);
    // exactly at the limit is fine
    store.put_bytes(&big[1..]).unwrap();
}

#[test]
fn gc_spares_blobs_put_under_a_guard() {
    let (_dir, store) = store();
    let store = Arc::new(store);
    let dead = store.put_bytes(b"dead").unwrap().id;
    let barrier = Arc::new(Barrier::new(2));

    let writer = {
        let store = store.clone();
        let barrier = barrier.clone();
        thread::spawn(move || {
            let _guard = store.ingest_guard();
            let id = store.put_bytes(b"fresh").unwrap().id;
            barrier.wait();
            // gc is now blocked until this guard drops
            thread::sleep(std::time::Duration::from_millis(50));
            id
        })
    };
    barrier.wait();
    let removed = store
        .gc_with(|| Ok::<_, BlobError>(HashSet::from([AssetId::of(b"fresh")])))
        .unwrap();
    let fresh = writer.join().unwrap();
    assert_eq!(removed, 1);
    assert!(store.contains(&fresh));
    assert!(matches!(store.get(&dead), Err(BlobError::NotFound(_))));
}

#[test]
fn concurrent_identical_puts_store_one_blob() {
    let (_dir, store) = store();
    let store = Arc::new(store);
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let store = store.clone();
            thread::spawn(move || store.put_bytes(b"same bytes").unwrap().id)
        })
        .collect();
    let ids: HashSet<AssetId> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(ids.len(), 1);
    assert_eq!(store.list().unwrap().len(), 1);
}

#[test]
fn reference_sha256_known_answers() {
    assert_eq!(
        sha256_hex(b""),
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
    assert_eq!(
        sha256_hex(b"abc"),
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
    assert_eq!(
        sha256_hex(b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"),
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1"
    );
}

#[test]
fn reference_crc32_known_answer() {
    assert_eq!(common::oracle::crc32(b"123456789"), 0xcbf4_3926);
}
