use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use crate::error::{ApiError, ApiResult};
use crate::session::{Progress, Session, SessionRecord, SessionSpec, DEFAULT_MAX_TUPLES};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_sessions: usize,
    pub idle_timeout: Duration,
    pub max_tuples: usize,
    /// Largest accepted request body in bytes (CSV uploads).
    pub body_limit: usize,
    /// If set, every session's record is written here after each change and
    /// reloaded at startup.
    pub state_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            max_sessions: 1000,
            idle_timeout: Duration::from_secs(3600),
            max_tuples: DEFAULT_MAX_TUPLES,
            body_limit: 64 << 20,
            state_dir: None,
        }
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // A panic inside one request should not take the session's other
    // requests down with it.
    m.lock().unwrap_or_else(|e| e.into_inner())
}

pub struct Entry {
    session: Mutex<Session>,
    last_access: Mutex<Instant>,
}

impl Entry {
    fn idle_for(&self, now: Instant) -> Duration {
        now.saturating_duration_since(*lock(&self.last_access))
    }
}

/// All live sessions. The map lock is held only to look entries up; each
/// session has its own lock, so requests for one session are serialized
/// while different sessions proceed independently.
pub struct Store {
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Entry>>>,
    expired: Mutex<HashSet<String>>,
}

impl Store {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            config,
            sessions: Mutex::new(HashMap::new()),
            expired: Mutex::new(HashSet::new()),
        }
    }

    /// A store with every record in the state directory replayed. Records
    /// that fail to replay are reported and skipped.
    pub fn open(config: ServiceConfig) -> std::io::Result<Self> {
        let store = Self::new(config);
        let Some(dir) = store.config.state_dir.clone() else {
            return Ok(store);
        };
        fs::create_dir_all(&dir)?;
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(String::from) else {
                continue;
            };
            let restored = fs::read(&path)
                .map_err(|e| e.to_string())
                .and_then(|b| serde_json::from_slice::<SessionRecord>(&b).map_err(|e| e.to_string()))
                .and_then(|r| Session::replay(&r, store.config.max_tuples).map_err(|e| e.to_string()));
            match restored {
                Ok(s) => store.insert(id, s),
                Err(e) => eprintln!("irm-service: skipping {}: {e}", path.display()),
            }
        }
        Ok(store)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn insert(&self, id: String, session: Session) {
        let entry = Entry { session: Mutex::new(session), last_access: Mutex::new(Instant::now()) };
        lock(&self.sessions).insert(id, Arc::new(entry));
    }

    pub fn len(&self) -> usize {
        lock(&self.sessions).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Builds a session (this may stream a large part of the dataset) and
    /// registers it under a fresh id.
    pub fn create(&self, spec: SessionSpec) -> ApiResult<(String, Progress)> {
        self.sweep();
        if self.len() >= self.config.max_sessions {
            return Err(ApiError::Capacity(self.config.max_sessions));
        }
        let session = Session::create(spec, self.config.max_tuples)?;
        let id = uuid::Uuid::new_v4().to_string();
        self.persist(&id, &session)?;
        let progress = session.progress();
        let mut map = lock(&self.sessions);
        if map.len() >= self.config.max_sessions {
            drop(map);
            self.forget(&id);
            return Err(ApiError::Capacity(self.config.max_sessions));
        }
        map.insert(
            id.clone(),
            Arc::new(Entry { session: Mutex::new(session), last_access: Mutex::new(Instant::now()) }),
        );
        Ok((id, progress))
    }

    fn entry(&self, id: &str) -> ApiResult<Arc<Entry>> {
        let found = lock(&self.sessions).get(id).cloned();
        let Some(entry) = found else {
            return Err(if lock(&self.expired).contains(id) {
                ApiError::Gone(id.into())
            } else {
                ApiError::NotFound(id.into())
            });
        };
        if entry.idle_for(Instant::now()) > self.config.idle_timeout {
            self.expire(id);
            return Err(ApiError::Gone(id.into()));
        }
        *lock(&entry.last_access) = Instant::now();
        Ok(entry)
    }

    /// Runs `f` on the session. Mutations are persisted before the lock is
    /// released, so the stored record never lags the served state.
    pub fn with<R>(&self, id: &str, mutate: bool, f: impl FnOnce(&mut Session) -> ApiResult<R>) -> ApiResult<R> {
        let entry = self.entry(id)?;
        let mut s = lock(&entry.session);
        let out = f(&mut s)?;
        if mutate {
            self.persist(id, &s)?;
        }
        Ok(out)
    }

    pub fn remove(&self, id: &str) -> ApiResult<()> {
        self.entry(id)?;
        lock(&self.sessions).remove(id);
        self.forget(id);
        Ok(())
    }

    fn expire(&self, id: &str) {
        if lock(&self.sessions).remove(id).is_some() {
            lock(&self.expired).insert(id.to_string());
            self.forget(id);
        }
    }

    /// Drops every session idle for longer than the timeout.
    pub fn sweep(&self) -> usize {
        let now = Instant::now();
        let stale: Vec<String> = lock(&self.sessions)
            .iter()
            .filter(|(_, e)| e.idle_for(now) > self.config.idle_timeout)
            .map(|(id, _)| id.clone())
            .collect();
        for id in &stale {
            self.expire(id);
        }
        stale.len()
    }

    fn record_path(&self, id: &str) -> Option<PathBuf> {
        self.config.state_dir.as_ref().map(|d| d.join(format!("{id}.json")))
    }

    fn persist(&self, id: &str, session: &Session) -> ApiResult<()> {
        let Some(path) = self.record_path(id) else {
            return Ok(());
        };
        let bytes = serde_json::to_vec(&session.record()).map_err(|e| ApiError::Internal(e.to_string()))?;
        write_atomic(&path, &bytes).map_err(|e| ApiError::Internal(format!("{}: {e}", path.display())))
    }

    fn forget(&self, id: &str) {
        if let Some(path) = self.record_path(id) {
            let _ = fs::remove_file(path);
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}
