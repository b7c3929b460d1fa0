#![allow(dead_code)]

use std::sync::Arc;

use ran_core::{Config, ManualClock, Registry, Timestamp};
use ran_server::AppState;
use reqwest::blocking::{Client, RequestBuilder, Response};
use reqwest::Method;
use serde::de::DeserializeOwned;
use serde_json::Value;
use tempfile::TempDir;

pub const PASSWORD: &str = "correct horse battery";
pub const START: i64 = 1_700_000_000_000;

pub fn registry(seed: u64) -> (TempDir, Arc<ManualClock>, Arc<Registry>) {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(Timestamp::from_millis(START)));
    let mut config = Config::for_tests(dir.path(), seed);
    config.clock = clock.clone();
    config.max_blob_bytes = 1 << 20;
    let reg = Arc::new(Registry::open(config).unwrap());
    (dir, clock, reg)
}

/// A live server on a loopback port, torn down on drop.
pub struct Server {
    pub base: String,
    pub registry: Arc<Registry>,
    pub clock: Arc<ManualClock>,
    pub http: Client,
    rt: Option<tokio::runtime::Runtime>,
    _dir: TempDir,
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(rt) = self.rt.take() {
            rt.shutdown_background();
        }
    }
}

pub fn start(seed: u64) -> Server {
    let (dir, clock, registry) = registry(seed);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .unwrap();
    let state = AppState::new(registry.clone(), 1 << 20, 4);
    let listener = rt
        .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
        .unwrap();
    let addr = listener.local_addr().unwrap();
    rt.spawn(ran_server::serve(listener, state, std::future::pending()));
    Server {
        base: format!("http://{addr}/api/v1"),
        registry,
        clock,
        http: Client::new(),
        rt: Some(rt),
        _dir: dir,
    }
}

impl Server {
    pub fn req(&self, method: Method, path: &str, token: Option<&str>) -> RequestBuilder {
        let rb = self.http.request(method, format!("{}{path}", self.base));
        match token {
            Some(t) => rb.bearer_auth(t),
            None => rb,
        }
    }

    /// Registers `<name>@example.org` and logs in. Returns the token.
    pub fn signup(&self, name: &str) -> String {
        let email = format!("{name}@example.org");
        let r = self
            .req(Method::POST, "/users", None)
            .json(&serde_json::json!({"email": email, "display_name": name, "password": PASSWORD}))
            .send()
            .unwrap();
        assert_eq!(r.status(), 201, "{}", r.text().unwrap());
        self.login(&email)
    }

    pub fn login(&self, email: &str) -> String {
        let r = self
            .req(Method::POST, "/sessions", None)
            .json(&serde_json::json!({"email": email, "password": PASSWORD}))
            .send()
            .unwrap();
        assert_eq!(r.status(), 201);
        r.json::<Value>().unwrap()["token"]
            .as_str()
            .unwrap()
            .to_owned()
    }
}

/// Error code of a failed response, or the decoded body of a successful one.
pub fn decode<T: DeserializeOwned>(r: Response) -> Result<T, String> {
    if r.status().is_success() {
        Ok(r.json().unwrap())
    } else {
        Err(error_code(r))
    }
}

pub fn error_code(r: Response) -> String {
    let body: Value = r.json().expect("error bodies are JSON");
    body["error"]["code"]
        .as_str()
        .expect("error.code present")
        .to_owned()
}
