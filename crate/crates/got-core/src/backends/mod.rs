//! Pluggable generation and inspection providers.
//!
//! Every provider speaks the same two-call generation protocol (propose
//! path annotations for a node, then propose prerequisite payloads for
//! one annotation) and the single-call inspection protocol. Calls are
//! recordable as JSONL and replayable by cache key, so golden tests never
//! touch the network.

pub mod llm;
pub mod noisy;
pub mod oracle;
pub mod replay;
pub mod templates;
pub mod tools;

use crate::error::BackendError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Llm,
    Oracle,
    NoisySim,
    Replay,
}

/// What a backend is and how it may be driven.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    pub concurrency_safe: bool,
    /// Sampling temperature; meaningful for LLM backends only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

impl BackendDescriptor {
    pub fn oracle() -> Self {
        BackendDescriptor {
            kind: BackendKind::Oracle,
            concurrency_safe: true,
            temperature: None,
        }
    }

    pub fn noisy() -> Self {
        BackendDescriptor {
            kind: BackendKind::NoisySim,
            concurrency_safe: false,
            temperature: None,
        }
    }

    pub fn replay() -> Self {
        BackendDescriptor {
            kind: BackendKind::Replay,
            concurrency_safe: true,
            temperature: None,
        }
    }

    pub fn llm(temperature: f64) -> Self {
        BackendDescriptor {
            kind: BackendKind::Llm,
            concurrency_safe: true,
            temperature: Some(temperature),
        }
    }
}

pub const DEFAULT_TEMPERATURE: f64 = 0.7;

/// Which task a run belongs to plus its canonical problem statement.
/// Travels inside every request so oracles can interpret node payloads.
/// `attempt` is the rebuild iteration; it keys otherwise-identical
/// requests apart so stochastic backends are re-sampled on a rebuild and
/// record/replay stays faithful per attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskContext {
    pub task: String,
    pub problem: String,
    #[serde(default)]
    pub attempt: u32,
}

impl TaskContext {
    pub fn new(task: impl Into<String>, problem: impl Into<String>) -> Self {
        TaskContext {
            task: task.into(),
            problem: problem.into(),
            attempt: 0,
        }
    }

    pub fn with_attempt(&self, attempt: u32) -> Self {
        TaskContext {
            attempt,
            ..self.clone()
        }
    }
}

/// One generation request in the two-call protocol. Conditions are sent
/// as sorted payload texts so identical states key identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "call", rename_all = "snake_case")]
pub enum GenerationRequest {
    /// Call 1: propose path annotations that could yield `node`.
    Paths {
        node: String,
        conditions: Vec<String>,
        task: TaskContext,
    },
    /// Call 2: propose prerequisite payloads for one annotation.
    Prereqs {
        node: String,
        annotation: String,
        conditions: Vec<String>,
        task: TaskContext,
    },
}

impl GenerationRequest {
    pub fn task(&self) -> &TaskContext {
        match self {
            GenerationRequest::Paths { task, .. } => task,
            GenerationRequest::Prereqs { task, .. } => task,
        }
    }
}

/// Structured response: annotations answer a `Paths` call, payloads answer
/// a `Prereqs` call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "items", rename_all = "snake_case")]
pub enum GenerationResponse {
    Annotations(Vec<String>),
    Payloads(Vec<String>),
}

/// One inspection request: does `annotation` correctly derive `node` from
/// the prerequisites? `round` and `sample` identify the update round and
/// the serial inspector slot, so the checker's independent draws key
/// apart in the record/replay cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionRequest {
    pub node: String,
    pub annotation: String,
    pub prereqs: Vec<String>,
    #[serde(default)]
    pub round: u32,
    #[serde(default)]
    pub sample: u32,
}

impl InspectionRequest {
    pub fn new(node: impl Into<String>, annotation: impl Into<String>, prereqs: Vec<String>) -> Self {
        InspectionRequest {
            node: node.into(),
            annotation: annotation.into(),
            prereqs,
            round: 0,
            sample: 0,
        }
    }
}

pub trait GenerationBackend: Send + Sync {
    fn descriptor(&self) -> BackendDescriptor;
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError>;
}

pub trait InspectionBackend: Send + Sync {
    fn descriptor(&self) -> BackendDescriptor;
    fn inspect(&self, request: &InspectionRequest) -> Result<bool, BackendError>;
}

/// Inspector that always answers the same verdict. `FixedInspector(true)`
/// is the vacuous checker.
pub struct FixedInspector(pub bool);

impl InspectionBackend for FixedInspector {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor::oracle()
    }

    fn inspect(&self, _request: &InspectionRequest) -> Result<bool, BackendError> {
        Ok(self.0)
    }
}

/// Inspector wrapper that counts calls; used by call-audit tests and the
/// update report.
pub struct CountingInspector<I> {
    inner: I,
    calls: Mutex<u64>,
}

impl<I: InspectionBackend> CountingInspector<I> {
    pub fn new(inner: I) -> Self {
        CountingInspector {
            inner,
            calls: Mutex::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        *self.calls.lock().unwrap()
    }
}

impl<I: InspectionBackend> InspectionBackend for CountingInspector<I> {
    fn descriptor(&self) -> BackendDescriptor {
        self.inner.descriptor()
    }

    fn inspect(&self, request: &InspectionRequest) -> Result<bool, BackendError> {
        *self.calls.lock().unwrap() += 1;
        self.inner.inspect(request)
    }
}

// ---------------------------------------------------------------------------
// Call records, cache and logging
// ---------------------------------------------------------------------------

/// Cache key: hash of the call kind plus the canonical request JSON.
/// Stable across live and replay runs.
pub fn cache_key(kind: &str, request_json: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(request_json).expect("request serializes");
    let digest = Sha256::digest(format!("{kind}\n{canonical}").as_bytes());
    digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
}

/// One recorded backend exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendCallRecord {
    pub cache_key: String,
    /// "generate" or "inspect".
    pub call_kind: String,
    pub request: serde_json::Value,
    pub response: serde_json::Value,
    pub timestamp_ms: u64,
    pub latency_ms: u64,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Append-only JSONL call log with an in-memory response cache. A single
/// logical run's log is strictly ordered; concurrent readers of the cache
/// are fine, writes are serialized by the mutex.
pub struct CallLog {
    path: Option<PathBuf>,
    state: Mutex<CallLogState>,
}

struct CallLogState {
    cache: BTreeMap<String, BackendCallRecord>,
    order: Vec<String>,
}

impl CallLog {
    /// In-memory log (no file).
    pub fn ephemeral() -> Self {
        CallLog {
            path: None,
            state: Mutex::new(CallLogState {
                cache: BTreeMap::new(),
                order: Vec::new(),
            }),
        }
    }

    /// Log backed by a JSONL file; existing records are loaded so a rerun
    /// resumes from cache.
    pub fn at_path(path: impl Into<PathBuf>) -> Result<Self, BackendError> {
        let path = path.into();
        let mut cache = BTreeMap::new();
        let mut order = Vec::new();
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let record: BackendCallRecord = serde_json::from_str(line).map_err(|e| {
                    BackendError::Http(format!("corrupt call log {}: {e}", path.display()))
                })?;
                order.push(record.cache_key.clone());
                cache.insert(record.cache_key.clone(), record);
            }
        }
        Ok(CallLog {
            path: Some(path),
            state: Mutex::new(CallLogState { cache, order }),
        })
    }

    pub fn load_fixture(path: &Path) -> Result<Self, BackendError> {
        if !path.exists() {
            return Err(BackendError::Http(format!(
                "fixture {} does not exist",
                path.display()
            )));
        }
        let log = CallLog::at_path(path)?;
        Ok(log)
    }

    pub fn lookup(&self, key: &str) -> Option<BackendCallRecord> {
        self.state.lock().unwrap().cache.get(key).cloned()
    }

    pub fn record(&self, record: BackendCallRecord) -> Result<(), BackendError> {
        let mut state = self.state.lock().unwrap();
        if state.cache.contains_key(&record.cache_key) {
            return Ok(());
        }
        if let Some(path) = &self.path {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            let mut file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)?;
            writeln!(file, "{}", serde_json::to_string(&record).expect("record serializes"))?;
        }
        state.order.push(record.cache_key.clone());
        state.cache.insert(record.cache_key.clone(), record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn records(&self) -> Vec<BackendCallRecord> {
        let state = self.state.lock().unwrap();
        state
            .order
            .iter()
            .filter_map(|k| state.cache.get(k).cloned())
            .collect()
    }
}

/// Wraps a generation backend with cache-first semantics: a hit returns
/// the recorded response without touching the inner backend, a miss calls
/// through and appends to the log.
pub struct RecordingGeneration<'a> {
    inner: &'a dyn GenerationBackend,
    log: &'a CallLog,
}

impl<'a> RecordingGeneration<'a> {
    pub fn new(inner: &'a dyn GenerationBackend, log: &'a CallLog) -> Self {
        RecordingGeneration { inner, log }
    }
}

impl GenerationBackend for RecordingGeneration<'_> {
    fn descriptor(&self) -> BackendDescriptor {
        self.inner.descriptor()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        let request_json = serde_json::to_value(request).expect("request serializes");
        let key = cache_key("generate", &request_json);
        if let Some(hit) = self.log.lookup(&key) {
            let response: GenerationResponse =
                serde_json::from_value(hit.response).map_err(|e| {
                    BackendError::Http(format!("corrupt cached response for {key}: {e}"))
                })?;
            return Ok(response);
        }
        let started = now_ms();
        let response = self.inner.generate(request)?;
        self.log.record(BackendCallRecord {
            cache_key: key,
            call_kind: "generate".into(),
            request: request_json,
            response: serde_json::to_value(&response).expect("response serializes"),
            timestamp_ms: started,
            latency_ms: now_ms().saturating_sub(started),
        })?;
        Ok(response)
    }
}

/// Same cache-first wrapper for inspection backends.
pub struct RecordingInspection<'a> {
    inner: &'a dyn InspectionBackend,
    log: &'a CallLog,
}

impl<'a> RecordingInspection<'a> {
    pub fn new(inner: &'a dyn InspectionBackend, log: &'a CallLog) -> Self {
        RecordingInspection { inner, log }
    }
}

impl InspectionBackend for RecordingInspection<'_> {
    fn descriptor(&self) -> BackendDescriptor {
        self.inner.descriptor()
    }

    fn inspect(&self, request: &InspectionRequest) -> Result<bool, BackendError> {
        let request_json = serde_json::to_value(request).expect("request serializes");
        let key = cache_key("inspect", &request_json);
        if let Some(hit) = self.log.lookup(&key) {
            return serde_json::from_value(hit.response).map_err(|e| {
                BackendError::Http(format!("corrupt cached response for {key}: {e}"))
            });
        }
        let started = now_ms();
        let verdict = self.inner.inspect(request)?;
        self.log.record(BackendCallRecord {
            cache_key: key,
            call_kind: "inspect".into(),
            request: request_json,
            response: serde_json::Value::Bool(verdict),
            timestamp_ms: started,
            latency_ms: now_ms().saturating_sub(started),
        })?;
        Ok(verdict)
    }
}
