//! Job records, their event logs and the bounded worker pool.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::{watch, Semaphore};

use crate::error::CliError;

/// Events kept in a job record; the full log stays available to SSE clients.
pub const RECENT_EVENTS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    Generate,
    Tune,
    Embed,
    Coverage,
    TrainMeta,
    Recommend,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }

    fn can_move_to(self, next: JobStatus) -> bool {
        matches!(
            (self, next),
            (JobStatus::Queued, JobStatus::Running)
                | (JobStatus::Running, JobStatus::Done)
                | (JobStatus::Running, JobStatus::Failed)
                | (JobStatus::Queued, JobStatus::Failed)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobEvent {
    pub seq: u64,
    /// `progress`, `done` or `failed`.
    pub event: String,
    pub data: Value,
}

/// What `GET /api/jobs/{id}` returns and what the manifest stores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub kind: JobKind,
    pub status: JobStatus,
    pub created_ms: u64,
    pub event_count: u64,
    pub recent_events: Vec<JobEvent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A finished job's payload as written to its directory.
pub struct JobOutput {
    pub file_name: &'static str,
    pub content_type: &'static str,
    pub bytes: Vec<u8>,
}

struct Inner {
    status: JobStatus,
    events: Vec<JobEvent>,
    error: Option<String>,
    result: Option<(PathBuf, &'static str)>,
}

pub struct Job {
    pub id: String,
    pub kind: JobKind,
    pub created_ms: u64,
    pub dir: PathBuf,
    inner: Mutex<Inner>,
    bump: watch::Sender<u64>,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl Job {
    fn new(id: String, kind: JobKind, dir: PathBuf) -> Self {
        let inner = Inner { status: JobStatus::Queued, events: Vec::new(), error: None, result: None };
        Job { id, kind, created_ms: now_ms(), dir, inner: Mutex::new(inner), bump: watch::channel(0).0 }
    }

    pub fn record(&self) -> JobRecord {
        self.record_of(&self.inner.lock().expect("job lock"))
    }

    fn record_of(&self, g: &Inner) -> JobRecord {
        let from = g.events.len().saturating_sub(RECENT_EVENTS);
        JobRecord {
            id: self.id.clone(),
            kind: self.kind,
            status: g.status,
            created_ms: self.created_ms,
            event_count: g.events.len() as u64,
            recent_events: g.events[from..].to_vec(),
            result: g.result.as_ref().map(|_| format!("/api/jobs/{}/result", self.id)),
            error: g.error.clone(),
        }
    }

    pub fn status(&self) -> JobStatus {
        self.inner.lock().expect("job lock").status
    }

    /// Appends an event with the next sequence number.
    pub fn push(&self, event: &str, data: Value) -> u64 {
        let seq = {
            let mut g = self.inner.lock().expect("job lock");
            let seq = g.events.len() as u64;
            g.events.push(JobEvent { seq, event: event.to_string(), data });
            seq
        };
        self.bump.send_replace(seq + 1);
        seq
    }

    /// Events with `seq >= from`, and whether the log is closed.
    pub fn events_from(&self, from: u64) -> (Vec<JobEvent>, bool) {
        let g = self.inner.lock().expect("job lock");
        let from = (from as usize).min(g.events.len());
        (g.events[from..].to_vec(), g.status.is_terminal())
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.bump.subscribe()
    }

    pub fn result(&self) -> Option<(PathBuf, &'static str)> {
        self.inner.lock().expect("job lock").result.clone()
    }

    fn advance(&self, next: JobStatus) -> bool {
        let mut g = self.inner.lock().expect("job lock");
        if !g.status.can_move_to(next) {
            return false;
        }
        g.status = next;
        true
    }

    /// Records the outcome and the closing event under one lock, so a
    /// reader never sees a terminal status without its final event.
    fn finish(&self, outcome: Result<JobOutput, CliError>) {
        let outcome = outcome.and_then(|out| {
            let path = self.dir.join(out.file_name);
            std::fs::write(&path, &out.bytes)
                .map(|()| (path, out.content_type))
                .map_err(|e| CliError::Internal(format!("writing result: {e}")))
        });
        let seq = {
            let mut g = self.inner.lock().expect("job lock");
            let (event, data) = match outcome {
                Ok(result) => {
                    g.result = Some(result);
                    g.status = JobStatus::Done;
                    ("done", serde_json::json!({ "status": "done" }))
                }
                Err(e) => {
                    let msg = e.to_string();
                    g.status = JobStatus::Failed;
                    g.error = Some(msg.clone());
                    ("failed", serde_json::json!({ "status": "failed", "error": msg }))
                }
            };
            let seq = g.events.len() as u64;
            g.events.push(JobEvent { seq, event: event.to_string(), data });
            // the manifest is final before anyone can observe the new status
            self.save_manifest(&self.record_of(&g));
            seq
        };
        self.bump.send_replace(seq + 1);
    }

    fn write_manifest(&self) {
        self.save_manifest(&self.record());
    }

    fn save_manifest(&self, rec: &JobRecord) {
        if let Ok(text) = serde_json::to_vec_pretty(rec) {
            let _ = std::fs::write(self.dir.join("manifest.json"), text);
        }
    }
}

/// Registry of jobs plus the worker pool that runs them.
pub struct JobManager {
    jobs: RwLock<HashMap<String, Arc<Job>>>,
    root: PathBuf,
    pool: Arc<Semaphore>,
}

impl JobManager {
    pub fn new(data_dir: &Path, workers: usize) -> std::io::Result<Self> {
        let root = data_dir.join("jobs");
        std::fs::create_dir_all(&root)?;
        Ok(JobManager { jobs: RwLock::new(HashMap::new()), root, pool: Arc::new(Semaphore::new(workers.max(1))) })
    }

    pub fn get(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs.read().expect("registry lock").get(id).cloned()
    }

    /// Registers a job and queues `work` on the pool. `request` is stored in
    /// the job directory next to the manifest.
    pub fn submit<F>(&self, kind: JobKind, request: &Value, work: F) -> std::io::Result<Arc<Job>>
    where
        F: FnOnce(&Job) -> Result<JobOutput, CliError> + Send + 'static,
    {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let dir = self.root.join(&id);
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("request.json"), serde_json::to_vec_pretty(request).unwrap_or_default())?;
        let job = Arc::new(Job::new(id.clone(), kind, dir));
        job.write_manifest();
        self.jobs.write().expect("registry lock").insert(id, job.clone());
        let pool = self.pool.clone();
        let j = job.clone();
        tokio::spawn(async move {
            let Ok(_permit) = pool.acquire_owned().await else {
                j.finish(Err(CliError::Internal("worker pool closed".into())));
                return;
            };
            if !j.advance(JobStatus::Running) {
                return;
            }
            j.write_manifest();
            let worker = j.clone();
            let out = tokio::task::spawn_blocking(move || work(&worker)).await;
            let out = out.unwrap_or_else(|e| Err(CliError::Internal(format!("job panicked: {e}"))));
            j.finish(out);
        });
        Ok(job)
    }
}
