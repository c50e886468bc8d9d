//! Blocking HTTP plumbing shared by the linker and scorer clients.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

pub const DEFAULT_IN_FLIGHT: usize = 4;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Counting gate bounding concurrent requests from one client.
#[derive(Debug)]
pub struct InFlight {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a>(&'a InFlight);

impl InFlight {
    pub fn new(limit: usize) -> Self {
        Self {
            limit: limit.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap_or_else(|e| e.into_inner());
        }
        *active += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut active = self.0.active.lock().unwrap_or_else(|e| e.into_inner());
        *active -= 1;
        self.0.freed.notify_one();
    }
}

/// Agent that returns non-2xx responses instead of erroring, so callers can
/// map status codes themselves.
pub fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

pub fn join_url(base: &str, path: &str) -> String {
    format!(
        "{}/{}",
        base.trim_end_matches('/'),
        path.trim_start_matches('/')
    )
}
