use std::collections::HashMap;
use std::net::IpAddr;
use std::sync::{Arc, Mutex};

/// Caps concurrent uploads per client address.
#[derive(Debug)]
pub struct UploadCap {
    per_ip: usize,
    active: Mutex<HashMap<IpAddr, usize>>,
}

pub struct UploadPermit {
    cap: Arc<UploadCap>,
    ip: IpAddr,
}

impl UploadCap {
    pub fn new(per_ip: usize) -> Self {
        Self {
            per_ip,
            active: Mutex::new(HashMap::new()),
        }
    }

    pub fn acquire(self: &Arc<Self>, ip: IpAddr) -> Option<UploadPermit> {
        let mut active = self.active.lock().unwrap_or_else(|p| p.into_inner());
        let n = active.entry(ip).or_default();
        if *n >= self.per_ip {
            return None;
        }
        *n += 1;
        Some(UploadPermit {
            cap: self.clone(),
            ip,
        })
    }
}

impl Drop for UploadPermit {
    fn drop(&mut self) {
        let mut active = self.cap.active.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(n) = active.get_mut(&self.ip) {
            *n -= 1;
            if *n == 0 {
                active.remove(&self.ip);
            }
        }
    }
}
