#![allow(dead_code)]

pub mod oracle;
pub mod scenario;
pub mod visibility;
pub mod world;

use std::sync::Arc;

use ran_core::{Config, ManualClock, Registry, Timestamp, UserId};
use tempfile::TempDir;

pub const PASSWORD: &str = "correct horse battery";

pub struct Env {
    pub reg: Registry,
    pub clock: Arc<ManualClock>,
    pub dir: TempDir,
}

pub fn env(seed: u64) -> Env {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(Timestamp::from_millis(1_700_000_000_000)));
    let mut config = Config::for_tests(dir.path(), seed);
    config.clock = clock.clone();
    Env {
        reg: Registry::open(config).unwrap(),
        clock,
        dir,
    }
}

pub fn user(reg: &Registry, name: &str) -> UserId {
    reg.register(&format!("{name}@example.org"), name, PASSWORD)
        .unwrap()
        .id
}
