mod common;

use std::collections::BTreeMap;

use serde_json::Value;
use sha2::{Digest, Sha256};

use common::{run_cli, start, Harness, Person};

struct Shared {
    project: String,
    model: String,
}

/// Alice publishes an apple-tagged project with one model file and one
/// training image under TrainData/apples.
fn publish(h: &Harness, alice: &Person) -> Shared {
    let weights = h.path("weights.bin");
    std::fs::write(&weights, (0..200u8).collect::<Vec<_>>()).unwrap();
    let image = h.path("apple_01.png");
    std::fs::write(&image, b"not really a png").unwrap();

    let p = alice
        .ran(&["--json", "project", "create", "Fruit classifier", "--tag", "apple", "--tag", "fruit"])
        .ok()
        .json();
    let project = p["id"].as_str().unwrap().to_owned();
    let sub = alice
        .ran(&["--json", "folder", "create", &project, "TrainData", "apples"])
        .ok()
        .json();
    let w = alice
        .ran(&["--json", "asset", "upload", weights.to_str().unwrap(), "--tag", "cnn"])
        .ok()
        .json();
    assert_eq!(w["existing"], false);
    let i = alice
        .ran(&["--json", "asset", "upload", image.to_str().unwrap(), "--tag", "apple"])
        .ok()
        .json();
    let detail = alice.ran(&["--json", "project", "show", &project]).ok().json();
    let model = detail["roots"][2]["id"].as_str().unwrap().to_owned();
    alice
        .ran(&["artifact", "add", &model, w["asset"]["id"].as_str().unwrap(), "--name", "network.bin"])
        .ok();
    alice
        .ran(&[
            "artifact",
            "add",
            &model,
            w["asset"]["id"].as_str().unwrap(),
            "--name",
            "header.bin",
            "--range",
            "0:16",
        ])
        .ok();
    alice
        .ran(&["artifact", "add", sub["id"].as_str().unwrap(), i["asset"]["id"].as_str().unwrap(), "--name", "apple_01.png"])
        .ok();
    Shared { project, model }
}

#[test]
fn search_apple_json_lists_the_tagged_project() {
    let h = start(1);
    let alice = h.person("alice");
    let shared = publish(&h, &alice);
    let bob = h.person("bob");
    let found = bob.ran(&["project", "search", "Apple", "--json"]).ok().json();
    let ids: Vec<&str> = found.as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(ids, [shared.project.as_str()]);
    // golden: the JSON document is the API response body
    assert_eq!(found, bob.raw("/projects?query=Apple&page=1&per_page=20"));

    let human = bob.ran(&["project", "search", "Apple"]).ok().stdout;
    assert!(human.contains("Fruit classifier") && human.contains("(1 of 1)"), "{human}");
}

#[test]
fn repeated_downloads_are_identical() {
    let h = start(2);
    let alice = h.person("alice");
    let shared = publish(&h, &alice);
    let carol = h.person("carol");
    let mut digests = Vec::new();
    for name in ["one.zip", "two.zip"] {
        let out = h.path(name);
        let doc = carol
            .ran(&["--json", "project", "download", &shared.project, "--folders", "Model", "-o", out.to_str().unwrap()])
            .ok()
            .json();
        let bytes = std::fs::read(&out).unwrap();
        let digest = hex::encode(Sha256::digest(&bytes));
        assert_eq!(doc["sha256"], Value::String(digest.clone()));
        assert_eq!(doc["bytes"], bytes.len());
        digests.push(digest);
    }
    assert_eq!(digests[0], digests[1]);

    // by id gives the same package as by name
    let by_id = h.path("three.zip");
    carol
        .ran(&["project", "download", &shared.project, "--folders", &shared.model, "-o", by_id.to_str().unwrap()])
        .ok();
    assert_eq!(hex::encode(Sha256::digest(std::fs::read(&by_id).unwrap())), digests[0]);
}

#[test]
fn rating_without_copy_is_not_eligible() {
    let h = start(3);
    let alice = h.person("alice");
    let shared = publish(&h, &alice);
    let bob = h.person("bob");

    let o = bob.ran(&["project", "rate", &shared.project, "up"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("NotEligible"), "{}", o.stderr);

    let o = bob.ran(&["--json", "project", "rate", &shared.project, "up"]);
    assert_eq!(o.code, 1);
    assert_eq!(o.json()["error"]["code"], "NotEligible");

    bob.ran(&["project", "copy", &shared.project, "--name", "my fruit"]).ok();
    let status = bob.ran(&["--json", "project", "rate", &shared.project, "up"]).ok().json();
    assert_eq!(status["aggregate"]["net"], 1);
    assert_eq!(status, bob.raw(&format!("/projects/{}/rating", shared.project)));
    let human = bob.ran(&["project", "rating", &shared.project]).ok().stdout;
    assert_eq!(human.trim(), "score +1 (+1/-0); your vote: up; may vote: yes");
}

#[test]
fn search_import_download_pipeline_runs_unattended() {
    let h = start(4);
    let alice = h.person("alice");
    let shared = publish(&h, &alice);
    let bob = h.person("bob");

    let hits = bob.ran(&["--json", "project", "search", "apple"]).ok().json();
    let source = hits[0]["id"].as_str().unwrap();
    assert_eq!(source, shared.project);
    let mine = bob.ran(&["--json", "project", "create", "oranges"]).ok().json();
    let mine = mine["id"].as_str().unwrap();
    let summary = bob
        .ran(&[
            "--json", "project", "import", source, "--folders", "TrainData/apples", "--into-project", mine,
            "--into-folder", "TrainData",
        ])
        .ok()
        .json();
    assert_eq!(summary["artifacts"], 1);
    let out = h.path("mine.zip");
    let doc = bob
        .ran(&["--json", "project", "download", mine, "--folders", "TrainData", "-o", out.to_str().unwrap()])
        .ok()
        .json();
    assert!(doc["bytes"].as_u64().unwrap() > 0);

    let listing = bob.ran(&["--json", "folder", "list", &resolve_root(&bob, mine, 0)]).ok().json();
    assert_eq!(listing["subfolders"][0]["name"], "apples");
    // no blob was duplicated by the import
    assert_eq!(h.registry.blob_count().unwrap(), 2);
}

fn resolve_root(p: &Person, project: &str, index: usize) -> String {
    let d = p.ran(&["--json", "project", "show", project]).ok().json();
    d["roots"][index]["id"].as_str().unwrap().to_owned()
}

#[test]
fn json_output_matches_raw_responses() {
    let h = start(5);
    let alice = h.person("alice");
    let shared = publish(&h, &alice);
    let p = &shared.project;
    let cases: Vec<(Vec<&str>, String)> = vec![
        (vec!["project", "show", p], format!("/projects/{p}")),
        (vec!["project", "list"], "/projects?page=1&per_page=20".into()),
        (vec!["project", "events", p, "--limit", "3"], format!("/projects/{p}/events?limit=3")),
        (vec!["project", "rating", p], format!("/projects/{p}/rating")),
        (vec!["folder", "list", &shared.model], format!("/folders/{}", shared.model)),
        (vec!["asset", "search", "cnn"], "/assets?query=cnn&page=1&per_page=20".into()),
    ];
    for (args, path) in cases {
        let mut argv = vec!["--json"];
        argv.extend(args.iter().copied());
        assert_eq!(alice.ran(&argv).ok().json(), alice.raw(&path), "{args:?}");
    }
    let listing = alice.raw(&format!("/folders/{}", shared.model));
    let hash = listing["artifacts"][0]["asset"].as_str().unwrap();
    assert_eq!(
        alice.ran(&["--json", "asset", "show", hash]).ok().json(),
        alice.raw(&format!("/assets/{hash}/meta"))
    );
    let out = h.path("asset.bin");
    alice.ran(&["asset", "get", hash, "-o", out.to_str().unwrap()]).ok();
    assert_eq!(hex::encode(Sha256::digest(std::fs::read(&out).unwrap())), hash);
}

#[test]
fn usage_errors_exit_two() {
    let vars = BTreeMap::new();
    assert_eq!(run_cli(&["project"], vars.clone(), "").code, 2);
    assert_eq!(run_cli(&["bogus"], vars.clone(), "").code, 2);
    assert_eq!(run_cli(&["project", "rate", "x", "sideways"], vars.clone(), "").code, 2);
    let help = run_cli(&["--help"], vars.clone(), "");
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("project"));
    // no password source and no prompt
    let o = run_cli(&["register", "--email", "a@b.c", "--name", "a"], vars.clone(), "");
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("RAN_PASSWORD"));
    let o = run_cli(&["artifact", "add", "f", "a", "--name", "n", "--range", "12"], vars, "");
    assert_eq!(o.code, 2);
}

#[test]
fn unreachable_service_is_a_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let mut vars = BTreeMap::new();
    vars.insert("RAN_ENDPOINT".to_owned(), format!("http://{addr}"));
    let o = run_cli(&["--json", "project", "list"], vars, "");
    assert_eq!(o.code, 1);
    assert_eq!(o.json()["error"]["code"], "Transport");
}

#[test]
fn token_handling() {
    let h = start(6);
    let alice = h.person("alice");
    let token = alice.token();

    // the token never reaches stdout or stderr
    let o = alice.ran(&["--json", "login", "--email", &alice.email]).ok();
    let fresh = alice.token();
    assert_ne!(fresh, token);
    assert!(!o.stdout.contains(&fresh) && !o.stderr.contains(&fresh));
    assert_eq!(o.json()["user"]["email"], "alice@example.org");

    // environment beats the config file
    let mut vars = alice.vars.clone();
    vars.insert("RAN_TOKEN".into(), "forged".into());
    let o = alice.ran_with(&["--json", "project", "list"], vars, "");
    assert_eq!(o.code, 1);
    assert_eq!(o.json()["error"]["code"], "InvalidCredentials");

    // password from stdin
    let mut vars = alice.vars.clone();
    vars.remove("RAN_PASSWORD");
    alice
        .ran_with(&["login", "--email", &alice.email, "--password-stdin"], vars, &format!("{}\n", common::PASSWORD))
        .ok();

    alice.ran(&["logout"]).ok();
    let o = alice.ran(&["project", "list"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("InvalidCredentials"), "{}", o.stderr);
}
