//! Replay backends: answer every request from a recorded call log.
//!
//! A replay backend performs no network or backend work at all; a request
//! whose cache key has no recorded response is a fixture mismatch.

use super::{
    cache_key, BackendDescriptor, CallLog, GenerationBackend, GenerationRequest,
    GenerationResponse, InspectionBackend, InspectionRequest,
};
use crate::error::BackendError;

pub struct ReplayGeneration<'a> {
    log: &'a CallLog,
}

impl<'a> ReplayGeneration<'a> {
    pub fn new(log: &'a CallLog) -> Self {
        ReplayGeneration { log }
    }
}

impl GenerationBackend for ReplayGeneration<'_> {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor::replay()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        let request_json = serde_json::to_value(request).expect("request serializes");
        let key = cache_key("generate", &request_json);
        let record = self
            .log
            .lookup(&key)
            .ok_or(BackendError::FixtureMismatch { cache_key: key })?;
        serde_json::from_value(record.response).map_err(|e| {
            BackendError::Http(format!("corrupt recorded response for {}: {e}", record.cache_key))
        })
    }
}

pub struct ReplayInspection<'a> {
    log: &'a CallLog,
    descriptor: BackendDescriptor,
}

impl<'a> ReplayInspection<'a> {
    pub fn new(log: &'a CallLog) -> Self {
        ReplayInspection {
            log,
            descriptor: BackendDescriptor::replay(),
        }
    }

    /// Replay that reports the recorded backend's kind, so control flow
    /// keyed off inspector stochasticity (the updater's stop rule)
    /// reproduces the recorded run exactly. I/O behavior is unchanged:
    /// every response still comes from the log.
    pub fn impersonating(log: &'a CallLog, kind: super::BackendKind) -> Self {
        ReplayInspection {
            log,
            descriptor: BackendDescriptor {
                kind,
                concurrency_safe: true,
                temperature: None,
            },
        }
    }
}

impl InspectionBackend for ReplayInspection<'_> {
    fn descriptor(&self) -> BackendDescriptor {
        self.descriptor.clone()
    }

    fn inspect(&self, request: &InspectionRequest) -> Result<bool, BackendError> {
        let request_json = serde_json::to_value(request).expect("request serializes");
        let key = cache_key("inspect", &request_json);
        let record = self
            .log
            .lookup(&key)
            .ok_or(BackendError::FixtureMismatch { cache_key: key })?;
        serde_json::from_value(record.response).map_err(|e| {
            BackendError::Http(format!("corrupt recorded response for {}: {e}", record.cache_key))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{RecordingGeneration, TaskContext};
    use super::*;

    struct Scripted;

    impl GenerationBackend for Scripted {
        fn descriptor(&self) -> BackendDescriptor {
            BackendDescriptor::oracle()
        }

        fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
            match request {
                GenerationRequest::Paths { .. } => {
                    Ok(GenerationResponse::Annotations(vec!["only step".into()]))
                }
                GenerationRequest::Prereqs { .. } => {
                    Ok(GenerationResponse::Payloads(vec!["origin".into()]))
                }
            }
        }
    }

    fn paths_request(node: &str) -> GenerationRequest {
        GenerationRequest::Paths {
            node: node.into(),
            conditions: vec![],
            task: TaskContext::new("test", "p"),
        }
    }

    #[test]
    fn replay_returns_recorded_response() {
        let log = CallLog::ephemeral();
        let live = Scripted;
        let recorder = RecordingGeneration::new(&live, &log);
        let recorded = recorder.generate(&paths_request("goal")).unwrap();

        let replay = ReplayGeneration::new(&log);
        let replayed = replay.generate(&paths_request("goal")).unwrap();
        assert_eq!(recorded, replayed);
    }

    #[test]
    fn missing_fixture_names_the_cache_key() {
        let log = CallLog::ephemeral();
        let replay = ReplayGeneration::new(&log);
        match replay.generate(&paths_request("unseen")) {
            Err(BackendError::FixtureMismatch { cache_key }) => {
                assert!(!cache_key.is_empty());
            }
            other => panic!("expected FixtureMismatch, got {other:?}"),
        }
    }
}
