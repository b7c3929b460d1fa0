#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ran_cli::Environment;
use ran_core::{Config, Registry};
use ran_server::AppState;
use serde_json::Value;
use tempfile::TempDir;

pub const PASSWORD: &str = "correct horse battery";

pub struct Harness {
    pub endpoint: String,
    pub registry: Arc<Registry>,
    pub dir: TempDir,
    rt: Option<tokio::runtime::Runtime>,
}

impl Drop for Harness {
    fn drop(&mut self) {
        if let Some(rt) = self.rt.take() {
            rt.shutdown_background();
        }
    }
}

pub fn start(seed: u64) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let registry = Arc::new(Registry::open(Config::for_tests(dir.path().join("data"), seed)).unwrap());
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .unwrap();
    let listener = rt
        .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
        .unwrap();
    let endpoint = format!("http://{}", listener.local_addr().unwrap());
    let state = AppState::new(registry.clone(), 1 << 20, 4);
    rt.spawn(ran_server::serve(listener, state, std::future::pending()));
    Harness {
        endpoint,
        registry,
        dir,
        rt: Some(rt),
    }
}

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout)
            .unwrap_or_else(|e| panic!("stdout is not one JSON document ({e}): {}", self.stdout))
    }

    pub fn ok(self) -> Self {
        assert_eq!(self.code, 0, "stderr: {}\nstdout: {}", self.stderr, self.stdout);
        self
    }
}

/// A user of the CLI with their own config file.
pub struct Person {
    pub vars: BTreeMap<String, String>,
    pub email: String,
}

impl Harness {
    pub fn person(&self, name: &str) -> Person {
        let config = self.dir.path().join(format!("{name}.toml"));
        let mut vars = BTreeMap::new();
        vars.insert("RAN_ENDPOINT".into(), self.endpoint.clone());
        vars.insert("RAN_CONFIG".into(), config.display().to_string());
        vars.insert("RAN_PASSWORD".into(), PASSWORD.into());
        let email = format!("{name}@example.org");
        let p = Person { vars, email };
        p.ran(&["register", "--email", &p.email, "--name", name]).ok();
        p.ran(&["login", "--email", &p.email]).ok();
        p
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

impl Person {
    pub fn ran(&self, args: &[&str]) -> Outcome {
        self.ran_with(args, self.vars.clone(), "")
    }

    pub fn ran_with(&self, args: &[&str], vars: BTreeMap<String, String>, stdin: &str) -> Outcome {
        run_cli(args, vars, stdin)
    }

    pub fn token(&self) -> String {
        let text = std::fs::read_to_string(Path::new(&self.vars["RAN_CONFIG"])).unwrap();
        let v: toml::Value = toml::from_str(&text).unwrap();
        v["token"].as_str().unwrap().to_owned()
    }

    /// Raw API GET with this person's token, for golden comparisons.
    pub fn raw(&self, path: &str) -> Value {
        let url = format!("{}/api/v1{path}", self.vars["RAN_ENDPOINT"]);
        reqwest::blocking::Client::new()
            .get(url)
            .bearer_auth(self.token())
            .send()
            .unwrap()
            .json()
            .unwrap()
    }
}

pub fn run_cli(args: &[&str], vars: BTreeMap<String, String>, stdin: &str) -> Outcome {
    let mut env = Environment {
        vars,
        stdin: Box::new(std::io::Cursor::new(stdin.as_bytes().to_vec())),
    };
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ran").chain(args.iter().copied());
    let code = ran_cli::run(argv, &mut env, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}
