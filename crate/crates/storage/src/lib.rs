//! Durable single-node persistence for qtrack.
//!
//! Layout under the store root (layout version 1):
//!
//! ```text
//! VERSION                                       "1\n"
//! LOCK                                          owner lock (flock)
//! meta/experiments.jsonl                        append-only, last record per id wins
//! runs/<exp_id>/<run_id>/run.json               run header, replaced atomically
//! runs/<exp_id>/<run_id>/metrics/<key>.jsonl    one MetricPoint per line
//! artifacts/by-sha/<sha[..2]>/<sha256>          blob bytes
//! artifacts/index/<run_id>.jsonl                one ArtifactRef per line
//! ```
//!
//! Disk is the source of truth; the [`Store`] keeps a write-through in-memory
//! snapshot of every run so readers never touch partially written files.

pub mod jsonl;
pub mod page_token;

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use qtrack_core::{
    ArtifactRef, CoreError, Experiment, Lifecycle, MetricPoint, Provenance, Run, RunStatus,
    Violation, Violations,
};

pub const LAYOUT_VERSION: u32 = 1;

/// Default and hard cap for page sizes.
pub const DEFAULT_MAX_RESULTS: usize = 100;
pub const MAX_RESULTS_CAP: usize = 1000;

const KEY_ENCODE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.');

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{kind} not found: {id}")]
    NotFound { kind: &'static str, id: String },
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid: {0}")]
    Invalid(#[from] Violations),
    #[error("invalid page token {0:?}")]
    InvalidToken(String),
    #[error("store layout version {found} is not supported (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },
    #[error("store at {0} does not exist")]
    Missing(PathBuf),
    #[error("store at {0} is locked by another process")]
    Locked(PathBuf),
    #[error("corrupt record in {path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<CoreError> for StoreError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::ParamConflict { .. } => StoreError::Conflict(e.to_string()),
            CoreError::Invalid(v) => StoreError::Invalid(v),
            other => StoreError::Invalid(Violations(vec![Violation::new("argument", other.to_string())])),
        }
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreRoot {
    pub root_path: PathBuf,
    pub layout_version: u32,
}

/// One page of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPage {
    pub items: Vec<Run>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_page_token: Option<String>,
}

/// Which run states accept a write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunGuard {
    Any,
    RunningOrFinished,
    RunningOnly,
}

impl RunGuard {
    fn check(self, status: RunStatus, run_id: &str) -> Result<()> {
        let ok = match self {
            RunGuard::Any => true,
            RunGuard::RunningOrFinished => matches!(status, RunStatus::Running | RunStatus::Finished),
            RunGuard::RunningOnly => status == RunStatus::Running,
        };
        if ok {
            Ok(())
        } else {
            Err(StoreError::InvalidState(format!("run {run_id} is {status}")))
        }
    }
}

/// `/`-separated relative path with no empty, `.` or `..` segments.
pub fn validate_artifact_path(path: &str) -> Result<(), Violations> {
    let bad = path.is_empty()
        || path.len() > 1024
        || path.contains(['\\', '\0'])
        || path.split('/').any(|seg| seg.is_empty() || seg == "." || seg == "..");
    if bad {
        Err(Violations(vec![Violation::new(
            "path",
            "relative `/`-separated path without empty, `.` or `..` segments",
        )]))
    } else {
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run fields persisted in `run.json`; metrics and artifacts live in their own files.
#[derive(Serialize, Deserialize)]
struct RunHeader {
    run_id: String,
    experiment_id: String,
    status: RunStatus,
    start_time: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end_time: Option<i64>,
    #[serde(default)]
    params: BTreeMap<String, String>,
    #[serde(default)]
    tags: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Provenance::is_empty")]
    provenance: Provenance,
}

impl RunHeader {
    fn of(run: &Run) -> Self {
        Self {
            run_id: run.run_id.clone(),
            experiment_id: run.experiment_id.clone(),
            status: run.status,
            start_time: run.start_time,
            end_time: run.end_time,
            params: run.params.clone(),
            tags: run.tags.clone(),
            provenance: run.provenance.clone(),
        }
    }

    fn into_run(self) -> Run {
        Run {
            run_id: self.run_id,
            experiment_id: self.experiment_id,
            status: self.status,
            start_time: self.start_time,
            end_time: self.end_time,
            params: self.params,
            tags: self.tags,
            metrics: BTreeMap::new(),
            artifacts: Vec::new(),
            provenance: self.provenance,
        }
    }
}

struct RunSlot {
    experiment_id: String,
    write: Mutex<()>,
    snapshot: RwLock<Arc<Run>>,
}

impl RunSlot {
    fn get(&self) -> Arc<Run> {
        self.snapshot.read().clone()
    }

    fn set(&self, run: Run) {
        *self.snapshot.write() = Arc::new(run);
    }
}

/// An open store root. Exactly one `Store` may own a root at a time.
pub struct Store {
    root: StoreRoot,
    _lock: File,
    experiments: RwLock<BTreeMap<String, Experiment>>,
    experiment_write: Mutex<()>,
    runs: RwLock<HashMap<String, Arc<RunSlot>>>,
    blob_write: Mutex<()>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("root", &self.root).finish_non_exhaustive()
    }
}

impl Store {
    /// Open (optionally creating) the store at `root_path` and take the owner lock.
    pub fn open(root_path: impl AsRef<Path>, create_if_missing: bool) -> Result<Store> {
        let root_path = root_path.as_ref().to_path_buf();
        let version_path = root_path.join("VERSION");
        if !version_path.exists() {
            if !create_if_missing {
                return Err(StoreError::Missing(root_path));
            }
            fs::create_dir_all(&root_path)?;
            let non_empty = fs::read_dir(&root_path)?.next().is_some();
            if non_empty && !root_path.join("meta").exists() {
                // refuse to adopt an unrelated directory
                return Err(StoreError::VersionMismatch {
                    found: "<missing VERSION>".into(),
                    expected: LAYOUT_VERSION,
                });
            }
            jsonl::write_atomic(&version_path, format!("{LAYOUT_VERSION}\n").as_bytes())?;
        }
        let found = fs::read_to_string(&version_path)?;
        if found.trim_end_matches('\n') != LAYOUT_VERSION.to_string() {
            return Err(StoreError::VersionMismatch {
                found: found.trim().to_string(),
                expected: LAYOUT_VERSION,
            });
        }

        let lock = File::options()
            .create(true)
            .truncate(false)
            .write(true)
            .open(root_path.join("LOCK"))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => return Err(StoreError::Locked(root_path)),
            Err(fs::TryLockError::Error(e)) => return Err(e.into()),
        }

        for dir in ["meta", "runs", "artifacts/by-sha", "artifacts/index"] {
            fs::create_dir_all(root_path.join(dir))?;
        }

        let store = Store {
            root: StoreRoot {
                root_path,
                layout_version: LAYOUT_VERSION,
            },
            _lock: lock,
            experiments: RwLock::new(BTreeMap::new()),
            experiment_write: Mutex::new(()),
            runs: RwLock::new(HashMap::new()),
            blob_write: Mutex::new(()),
        };
        store.recover()?;
        store.load()?;
        Ok(store)
    }

    pub fn root(&self) -> &StoreRoot {
        &self.root
    }

    fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.root.root_path.join(rel)
    }

    fn experiments_log(&self) -> PathBuf {
        self.path("meta/experiments.jsonl")
    }

    fn run_dir(&self, experiment_id: &str, run_id: &str) -> PathBuf {
        self.path("runs").join(experiment_id).join(run_id)
    }

    fn metric_file(&self, experiment_id: &str, run_id: &str, key: &str) -> PathBuf {
        let name = format!("{}.jsonl", utf8_percent_encode(key, KEY_ENCODE));
        self.run_dir(experiment_id, run_id).join("metrics").join(name)
    }

    fn index_file(&self, run_id: &str) -> PathBuf {
        self.path("artifacts/index").join(format!("{run_id}.jsonl"))
    }

    /// Location of the blob with the given digest.
    pub fn blob_path(&self, sha256: &str) -> PathBuf {
        self.path("artifacts/by-sha").join(&sha256[..2.min(sha256.len())]).join(sha256)
    }

    /// Remove temp files from interrupted rewrites and torn JSONL tails.
    fn recover(&self) -> Result<()> {
        let mut stack = vec![self.path("meta"), self.path("runs"), self.path("artifacts")];
        while let Some(dir) = stack.pop() {
            for entry in fs::read_dir(&dir)? {
                let entry = entry?;
                let path = entry.path();
                if entry.file_type()?.is_dir() {
                    stack.push(path);
                    continue;
                }
                let name = entry.file_name();
                let name = name.to_string_lossy();
                if name.contains(jsonl::TMP_MARKER) {
                    fs::remove_file(&path)?;
                } else if name.ends_with(".jsonl") {
                    jsonl::repair(&path)?;
                }
            }
        }
        Ok(())
    }

    fn load(&self) -> Result<()> {
        let mut experiments = BTreeMap::new();
        for exp in jsonl::read_all::<Experiment>(&self.experiments_log())? {
            experiments.insert(exp.experiment_id.clone(), exp);
        }

        let mut index: HashMap<String, Vec<ArtifactRef>> = HashMap::new();
        for entry in fs::read_dir(self.path("artifacts/index"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                for r in jsonl::read_all::<ArtifactRef>(&path)? {
                    index.entry(r.run_id.clone()).or_default().push(r);
                }
            }
        }

        let mut runs = HashMap::new();
        for exp_entry in fs::read_dir(self.path("runs"))? {
            let exp_entry = exp_entry?;
            if !exp_entry.file_type()?.is_dir() {
                continue;
            }
            for run_entry in fs::read_dir(exp_entry.path())? {
                let run_dir = run_entry?.path();
                let header_path = run_dir.join("run.json");
                if !header_path.exists() {
                    continue;
                }
                let header: RunHeader = serde_json::from_slice(&fs::read(&header_path)?).map_err(|e| {
                    StoreError::Corrupt {
                        path: header_path.clone(),
                        detail: e.to_string(),
                    }
                })?;
                let mut run = header.into_run();
                let metrics_dir = run_dir.join("metrics");
                if metrics_dir.exists() {
                    for m in fs::read_dir(&metrics_dir)? {
                        let m = m?.path();
                        let Some(stem) = m.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_suffix(".jsonl")) else {
                            continue;
                        };
                        let key = percent_decode_str(stem).decode_utf8_lossy().into_owned();
                        let points: Vec<MetricPoint> = jsonl::read_all(&m)?;
                        if !points.is_empty() {
                            run.metrics.insert(key, points);
                        }
                    }
                }
                run.artifacts = dedup_index(index.remove(&run.run_id).unwrap_or_default());
                runs.insert(
                    run.run_id.clone(),
                    Arc::new(RunSlot {
                        experiment_id: run.experiment_id.clone(),
                        write: Mutex::new(()),
                        snapshot: RwLock::new(Arc::new(run)),
                    }),
                );
            }
        }

        *self.experiments.write() = experiments;
        *self.runs.write() = runs;
        Ok(())
    }

    // ---- experiments ----------------------------------------------------

    /// Create an active experiment; names are unique among active experiments.
    pub fn create_experiment(&self, name: &str, tags: BTreeMap<String, String>) -> Result<Experiment> {
        let exp = Experiment {
            experiment_id: qtrack_core::new_id(),
            name: name.to_string(),
            creation_time: qtrack_core::now_millis(),
            lifecycle: Lifecycle::Active,
            tags,
        };
        self.put_experiment(&exp)?;
        Ok(exp)
    }

    /// Insert or replace an experiment record verbatim.
    pub fn put_experiment(&self, exp: &Experiment) -> Result<()> {
        exp.validate()?;
        let _guard = self.experiment_write.lock();
        if exp.lifecycle == Lifecycle::Active {
            let clash = self.experiments.read().values().any(|e| {
                e.lifecycle == Lifecycle::Active && e.name == exp.name && e.experiment_id != exp.experiment_id
            });
            if clash {
                return Err(StoreError::Conflict(format!(
                    "an active experiment named {:?} already exists",
                    exp.name
                )));
            }
        }
        jsonl::append(&self.experiments_log(), std::slice::from_ref(exp))?;
        self.experiments.write().insert(exp.experiment_id.clone(), exp.clone());
        Ok(())
    }

    /// Experiment by id, whatever its lifecycle.
    pub fn get_experiment(&self, experiment_id: &str) -> Result<Experiment> {
        self.experiments
            .read()
            .get(experiment_id)
            .cloned()
            .ok_or_else(|| not_found("experiment", experiment_id))
    }

    /// Active experiment with this exact name.
    pub fn get_experiment_by_name(&self, name: &str) -> Result<Experiment> {
        self.experiments
            .read()
            .values()
            .find(|e| e.lifecycle == Lifecycle::Active && e.name == name)
            .cloned()
            .ok_or_else(|| not_found("experiment", name))
    }

    /// Active experiments ordered by creation time, then id.
    pub fn list_experiments(&self) -> Vec<Experiment> {
        let mut out: Vec<_> = self
            .experiments
            .read()
            .values()
            .filter(|e| e.lifecycle == Lifecycle::Active)
            .cloned()
            .collect();
        out.sort_by(|a, b| {
            a.creation_time
                .cmp(&b.creation_time)
                .then_with(|| a.experiment_id.cmp(&b.experiment_id))
        });
        out
    }

    /// Flag an experiment as deleted. Nothing is removed from disk.
    pub fn delete_experiment(&self, experiment_id: &str) -> Result<Experiment> {
        let mut exp = self.get_experiment(experiment_id)?;
        exp.lifecycle = Lifecycle::Deleted;
        self.put_experiment(&exp)?;
        Ok(exp)
    }

    fn require_active_experiment(&self, experiment_id: &str) -> Result<Experiment> {
        match self.get_experiment(experiment_id)? {
            e if e.lifecycle == Lifecycle::Active => Ok(e),
            _ => Err(not_found("experiment", experiment_id)),
        }
    }

    // ---- runs -------------------------------------------------------------

    fn slot(&self, run_id: &str) -> Result<Arc<RunSlot>> {
        self.runs
            .read()
            .get(run_id)
            .cloned()
            .ok_or_else(|| not_found("run", run_id))
    }

    /// Start a new RUNNING run in an active experiment.
    pub fn create_run(
        &self,
        experiment_id: &str,
        tags: BTreeMap<String, String>,
        start_time: i64,
    ) -> Result<Run> {
        self.require_active_experiment(experiment_id)?;
        for key in tags.keys() {
            qtrack_core::validate_key("tags", key)?;
        }
        let mut run = Run::new(qtrack_core::new_id(), experiment_id.to_string(), start_time);
        run.tags = tags;
        self.put_run(&run)?;
        Ok(run)
    }

    /// Persist `run` in full, replacing any previous state of the same run id,
    /// including its metric histories and artifact index. Every referenced
    /// blob must already be stored.
    pub fn put_run(&self, run: &Run) -> Result<()> {
        run.validate()?;
        self.get_experiment(&run.experiment_id)?;
        for a in &run.artifacts {
            let blob = self.blob_path(&a.sha256);
            let len = fs::metadata(&blob).map(|m| m.len()).map_err(|_| not_found("blob", &a.sha256))?;
            if len != a.size_bytes {
                return Err(StoreError::Conflict(format!(
                    "artifact {} declares {} bytes but blob has {len}",
                    a.path, a.size_bytes
                )));
            }
        }

        let slot = {
            let mut runs = self.runs.write();
            let slot = runs.entry(run.run_id.clone()).or_insert_with(|| {
                Arc::new(RunSlot {
                    experiment_id: run.experiment_id.clone(),
                    write: Mutex::new(()),
                    snapshot: RwLock::new(Arc::new(run.clone())),
                })
            });
            if slot.experiment_id != run.experiment_id {
                return Err(StoreError::Conflict(format!(
                    "run {} belongs to experiment {}",
                    run.run_id, slot.experiment_id
                )));
            }
            slot.clone()
        };

        let _guard = slot.write.lock();
        let dir = self.run_dir(&run.experiment_id, &run.run_id);
        let metrics_dir = dir.join("metrics");
        fs::create_dir_all(&metrics_dir)?;
        for entry in fs::read_dir(&metrics_dir)? {
            let path = entry?.path();
            let keep = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(".jsonl"))
                .map(|stem| run.metrics.contains_key(percent_decode_str(stem).decode_utf8_lossy().as_ref()))
                .unwrap_or(false);
            if !keep {
                fs::remove_file(path)?;
            }
        }
        for (key, points) in &run.metrics {
            jsonl::write_all(&self.metric_file(&run.experiment_id, &run.run_id, key), points)?;
        }
        jsonl::write_all(&self.index_file(&run.run_id), &run.artifacts)?;
        jsonl::write_atomic(&dir.join("run.json"), &serde_json::to_vec(&RunHeader::of(run))?)?;
        slot.set(run.clone());
        Ok(())
    }

    pub fn get_run(&self, run_id: &str) -> Result<Run> {
        Ok((*self.slot(run_id)?.get()).clone())
    }

    /// Shared snapshot of a run; cheaper than [`Store::get_run`].
    pub fn run_snapshot(&self, run_id: &str) -> Result<Arc<Run>> {
        Ok(self.slot(run_id)?.get())
    }

    /// Apply `f` to the run header under the run's write lock and persist it.
    ///
    /// Changes `f` makes to metrics or artifacts are discarded; those have
    /// their own append paths. On error nothing is written.
    pub fn update_run<T>(
        &self,
        run_id: &str,
        f: impl FnOnce(&mut Run) -> Result<T>,
    ) -> Result<(T, Run)> {
        let slot = self.slot(run_id)?;
        let _guard = slot.write.lock();
        let current = slot.get();
        let mut next = (*current).clone();
        let out = f(&mut next)?;
        next.run_id = current.run_id.clone();
        next.experiment_id = current.experiment_id.clone();
        next.metrics = current.metrics.clone();
        next.artifacts = current.artifacts.clone();
        next.validate()?;
        let path = self.run_dir(&next.experiment_id, run_id).join("run.json");
        jsonl::write_atomic(&path, &serde_json::to_vec(&RunHeader::of(&next))?)?;
        slot.set(next.clone());
        Ok((out, next))
    }

    /// Append one point. The run must be RUNNING or FINISHED.
    pub fn append_metric(&self, run_id: &str, point: MetricPoint) -> Result<()> {
        self.append_metrics(run_id, &[point], RunGuard::RunningOrFinished)
    }

    /// Append a batch of points: all are validated before any is written, and
    /// each key's points land in a single write.
    pub fn append_metrics(&self, run_id: &str, points: &[MetricPoint], guard: RunGuard) -> Result<()> {
        let mut violations = Vec::new();
        for (i, p) in points.iter().enumerate() {
            if let Err(v) = p.validate() {
                violations.extend(v.scoped(&format!("points[{i}]")).0);
            }
        }
        Violations::check(violations)?;

        let slot = self.slot(run_id)?;
        let _guard = slot.write.lock();
        let current = slot.get();
        guard.check(current.status, run_id)?;

        let mut by_key: BTreeMap<&str, Vec<&MetricPoint>> = BTreeMap::new();
        for p in points {
            by_key.entry(p.key.as_str()).or_default().push(p);
        }
        let mut next = (*current).clone();
        for (key, batch) in by_key {
            jsonl::append(&self.metric_file(&slot.experiment_id, run_id, key), &batch)?;
            next.metrics
                .entry(key.to_string())
                .or_default()
                .extend(batch.into_iter().cloned());
        }
        slot.set(next);
        Ok(())
    }

    /// Store `bytes` under their digest and record them at `path` in the run.
    pub fn put_artifact(&self, run_id: &str, path: &str, bytes: &[u8], media_type: &str) -> Result<ArtifactRef> {
        self.put_artifact_guarded(run_id, path, bytes, media_type, RunGuard::Any)
    }

    /// [`Store::put_artifact`] with a run-state requirement.
    ///
    /// Re-putting identical bytes at an existing path returns the existing
    /// ref; different bytes at that path are a conflict.
    pub fn put_artifact_guarded(
        &self,
        run_id: &str,
        path: &str,
        bytes: &[u8],
        media_type: &str,
        guard: RunGuard,
    ) -> Result<ArtifactRef> {
        validate_artifact_path(path)?;
        let slot = self.slot(run_id)?;
        let _guard = slot.write.lock();
        let current = slot.get();
        guard.check(current.status, run_id)?;

        let sha256 = sha256_hex(bytes);
        if let Some(existing) = current.artifacts.iter().find(|a| a.path == path) {
            return if existing.sha256 == sha256 {
                Ok(existing.clone())
            } else {
                Err(StoreError::Conflict(format!(
                    "artifact {path} already stored with different content"
                )))
            };
        }

        self.write_blob(&sha256, bytes)?;
        let r = ArtifactRef {
            run_id: run_id.to_string(),
            path: path.to_string(),
            sha256,
            size_bytes: bytes.len() as u64,
            media_type: media_type.to_string(),
        };
        jsonl::append(&self.index_file(run_id), std::slice::from_ref(&r))?;
        let mut next = (*current).clone();
        let at = next.artifacts.partition_point(|a| a.path.as_str() < path);
        next.artifacts.insert(at, r.clone());
        slot.set(next);
        Ok(r)
    }

    /// Write a blob if no blob with this digest exists yet. Returns whether
    /// bytes were written.
    pub fn write_blob(&self, sha256: &str, bytes: &[u8]) -> Result<bool> {
        let blob = self.blob_path(sha256);
        let _guard = self.blob_write.lock();
        if blob.exists() {
            return Ok(false);
        }
        fs::create_dir_all(blob.parent().expect("blob has a parent"))?;
        jsonl::write_atomic(&blob, bytes)?;
        Ok(true)
    }

    /// Blob bytes, verified against their digest.
    pub fn read_blob(&self, sha256: &str) -> Result<Vec<u8>> {
        if !qtrack_core::is_sha256_hex(sha256) {
            return Err(not_found("blob", sha256));
        }
        let bytes = match fs::read(self.blob_path(sha256)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(not_found("blob", sha256)),
            Err(e) => return Err(e.into()),
        };
        if sha256_hex(&bytes) != sha256 {
            return Err(StoreError::Corrupt {
                path: self.blob_path(sha256),
                detail: "content does not match digest".into(),
            });
        }
        Ok(bytes)
    }

    pub fn get_artifact(&self, run_id: &str, path: &str) -> Result<(Vec<u8>, ArtifactRef)> {
        let run = self.run_snapshot(run_id)?;
        let r = run
            .artifacts
            .iter()
            .find(|a| a.path == path)
            .cloned()
            .ok_or_else(|| not_found("artifact", path))?;
        Ok((self.read_blob(&r.sha256)?, r))
    }

    /// Artifact refs of a run, sorted by path.
    pub fn list_artifacts(&self, run_id: &str) -> Result<Vec<ArtifactRef>> {
        Ok(self.run_snapshot(run_id)?.artifacts.clone())
    }

    /// Number of distinct blobs on disk.
    pub fn blob_count(&self) -> Result<usize> {
        let mut n = 0;
        for shard in fs::read_dir(self.path("artifacts/by-sha"))? {
            let shard = shard?;
            if shard.file_type()?.is_dir() {
                n += fs::read_dir(shard.path())?
                    .filter_map(|e| e.ok())
                    .filter(|e| !e.file_name().to_string_lossy().contains(jsonl::TMP_MARKER))
                    .count();
            }
        }
        Ok(n)
    }

    /// Snapshots of every run in the given experiments.
    pub fn runs_in(&self, experiment_ids: &[String]) -> Result<Vec<Arc<Run>>> {
        for id in experiment_ids {
            self.get_experiment(id)?;
        }
        Ok(self
            .runs
            .read()
            .values()
            .filter(|slot| experiment_ids.contains(&slot.experiment_id))
            .map(|slot| slot.get())
            .collect())
    }

    /// Runs of one experiment ordered by start_time desc, run_id asc.
    pub fn list_runs(&self, experiment_id: &str, max_results: usize, page_token: Option<&str>) -> Result<RunPage> {
        let max_results = check_max_results(max_results)?;
        let mut runs = self.runs_in(&[experiment_id.to_string()])?;
        runs.sort_by(|a, b| b.start_time.cmp(&a.start_time).then_with(|| a.run_id.cmp(&b.run_id)));
        let (page, next_page_token) =
            page_token::paginate(&runs, max_results, page_token, &format!("list_runs\0{experiment_id}"))?;
        Ok(RunPage {
            items: page.into_iter().map(|r| (*r).clone()).collect(),
            next_page_token,
        })
    }
}

/// Reject page sizes outside 1..=1000.
pub fn check_max_results(max_results: usize) -> Result<usize> {
    if (1..=MAX_RESULTS_CAP).contains(&max_results) {
        Ok(max_results)
    } else {
        Err(StoreError::Invalid(Violations(vec![Violation::new(
            "max_results",
            "max_results in 1..=1000",
        )])))
    }
}

fn not_found(kind: &'static str, id: &str) -> StoreError {
    StoreError::NotFound {
        kind,
        id: id.to_string(),
    }
}

/// The index is append-only; keep the first ref per path, sorted by path.
fn dedup_index(refs: Vec<ArtifactRef>) -> Vec<ArtifactRef> {
    let mut by_path = BTreeMap::new();
    for r in refs {
        by_path.entry(r.path.clone()).or_insert(r);
    }
    by_path.into_values().collect()
}
