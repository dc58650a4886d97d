//! In-memory job registry. Long-running operations are accepted with an
//! id and executed on the blocking pool; clients poll for the outcome.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use contamdet_api::{ApiError, JobState, JobStatus};
use contamdet_core::error::Result;

#[derive(Clone, Default)]
pub struct JobRegistry {
    inner: Arc<Inner>,
}

#[derive(Default)]
struct Inner {
    next_id: AtomicU64,
    jobs: Mutex<HashMap<u64, JobStatus>>,
}

impl JobRegistry {
    /// Accept a job and run `work` on the blocking pool.
    pub fn submit<F>(&self, kind: &str, work: F) -> u64
    where
        F: FnOnce() -> Result<serde_json::Value> + Send + 'static,
    {
        let id = self.inner.next_id.fetch_add(1, Ordering::Relaxed) + 1;
        {
            let mut jobs = self.inner.jobs.lock().unwrap();
            jobs.insert(
                id,
                JobStatus {
                    id,
                    kind: kind.to_string(),
                    state: JobState::Queued,
                    result: None,
                    error: None,
                },
            );
        }
        let registry = self.clone();
        tokio::task::spawn_blocking(move || {
            registry.set_state(id, JobState::Running);
            match work() {
                Ok(value) => {
                    let mut jobs = registry.inner.jobs.lock().unwrap();
                    if let Some(job) = jobs.get_mut(&id) {
                        job.state = JobState::Done;
                        job.result = Some(value);
                    }
                }
                Err(err) => {
                    let mut jobs = registry.inner.jobs.lock().unwrap();
                    if let Some(job) = jobs.get_mut(&id) {
                        job.state = JobState::Failed;
                        job.error = Some(ApiError {
                            kind: err.kind().to_string(),
                            message: err.to_string(),
                        });
                    }
                }
            }
        });
        id
    }

    fn set_state(&self, id: u64, state: JobState) {
        let mut jobs = self.inner.jobs.lock().unwrap();
        if let Some(job) = jobs.get_mut(&id) {
            job.state = state;
        }
    }

    pub fn status(&self, id: u64) -> Option<JobStatus> {
        self.inner.jobs.lock().unwrap().get(&id).cloned()
    }

    pub fn list(&self) -> Vec<JobStatus> {
        let mut jobs: Vec<JobStatus> =
            self.inner.jobs.lock().unwrap().values().cloned().collect();
        jobs.sort_by_key(|j| j.id);
        jobs
    }
}
