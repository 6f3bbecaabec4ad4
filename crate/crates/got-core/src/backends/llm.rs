//! Live chat-completions backend (OpenAI-compatible wire protocol).
//!
//! Requests render from the task's prompt templates; responses must parse
//! into an enumerated list (generation) or a True/False verdict
//! (inspection), with a bounded re-prompt budget before a parse error
//! surfaces. Transport failures and rate limits retry with exponential
//! backoff. Credentials come from the environment only.

use super::templates::TemplateSet;
use super::{
    BackendDescriptor, GenerationBackend, GenerationRequest, GenerationResponse,
    InspectionBackend, InspectionRequest, TaskContext, DEFAULT_TEMPERATURE,
};
use crate::error::BackendError;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct LlmConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    /// Retries for transport errors and 429/5xx responses.
    pub max_retries: u32,
    pub backoff_ms: u64,
    /// Re-prompts allowed when output fails to parse.
    pub reprompt_budget: u32,
    pub api_key_env: String,
    pub max_paths_per_call: usize,
    pub timeout_secs: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4".into(),
            temperature: DEFAULT_TEMPERATURE,
            max_retries: 3,
            backoff_ms: 500,
            reprompt_budget: 2,
            api_key_env: "OPENAI_API_KEY".into(),
            max_paths_per_call: 3,
            timeout_secs: 120,
        }
    }
}

pub struct LlmBackend {
    config: LlmConfig,
    templates: TemplateSet,
    task: TaskContext,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl LlmBackend {
    pub fn new(config: LlmConfig, templates: TemplateSet, task: TaskContext) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .new_agent();
        LlmBackend {
            config,
            templates,
            task,
            agent,
        }
    }

    fn api_key(&self) -> Result<String, BackendError> {
        std::env::var(&self.config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| BackendError::Auth(self.config.api_key_env.clone()))
    }

    /// One chat call with retry/backoff; returns the first choice's text.
    pub fn chat(&self, prompt: &str) -> Result<String, BackendError> {
        let key = self.api_key()?;
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut attempt = 0u32;
        loop {
            let outcome = self
                .agent
                .post(&url)
                .header("Authorization", &format!("Bearer {key}"))
                .send_json(&body);
            match outcome {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    if status == 429 || status >= 500 {
                        if attempt >= self.config.max_retries {
                            return Err(if status == 429 {
                                BackendError::RateLimited {
                                    attempts: attempt + 1,
                                }
                            } else {
                                BackendError::Http(format!("status {status} after {attempt} retries"))
                            });
                        }
                        self.backoff(attempt);
                        attempt += 1;
                        continue;
                    }
                    if status != 200 {
                        let text = response.body_mut().read_to_string().unwrap_or_default();
                        if status == 401 || status == 403 {
                            return Err(BackendError::Auth(self.config.api_key_env.clone()));
                        }
                        return Err(BackendError::Http(format!("status {status}: {text}")));
                    }
                    let parsed: ChatResponse = response
                        .body_mut()
                        .read_json()
                        .map_err(|e| BackendError::Http(format!("bad response body: {e}")))?;
                    return parsed
                        .choices
                        .into_iter()
                        .next()
                        .map(|c| c.message.content)
                        .ok_or_else(|| BackendError::Http("response with no choices".into()));
                }
                Err(e) => {
                    if attempt >= self.config.max_retries {
                        return Err(BackendError::Http(e.to_string()));
                    }
                    self.backoff(attempt);
                    attempt += 1;
                }
            }
        }
    }

    fn backoff(&self, attempt: u32) {
        let wait = self.config.backoff_ms.saturating_mul(1u64 << attempt.min(8));
        std::thread::sleep(Duration::from_millis(wait));
    }

    fn generation_prompt(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        let task = &request.task().task;
        match request {
            GenerationRequest::Paths { node, conditions, task: ctx } => {
                let mut bindings = BTreeMap::new();
                bindings.insert("problem", ctx.problem.clone());
                bindings.insert("node", node.clone());
                bindings.insert("conditions", conditions.join("\n"));
                bindings.insert("k", self.config.max_paths_per_call.to_string());
                self.templates.render(&format!("{task}/got_paths"), &bindings)
            }
            GenerationRequest::Prereqs { node, annotation, task: ctx, .. } => {
                let mut bindings = BTreeMap::new();
                bindings.insert("problem", ctx.problem.clone());
                bindings.insert("node", node.clone());
                bindings.insert("annotation", annotation.clone());
                self.templates.render(&format!("{task}/got_prereqs"), &bindings)
            }
        }
    }

    fn listed_response(&self, prompt: &str) -> Result<Vec<String>, BackendError> {
        let mut prompt = prompt.to_string();
        let mut last_raw = String::new();
        for attempt in 0..=self.config.reprompt_budget {
            let raw = self.chat(&prompt)?;
            if let Some(items) = parse_enumerated_list(&raw) {
                return Ok(items);
            }
            last_raw = raw;
            prompt.push_str("\nRespond ONLY with a numbered list, one item per line.");
            let _ = attempt;
        }
        Err(BackendError::Parse {
            attempts: self.config.reprompt_budget + 1,
            raw: last_raw,
        })
    }
}

impl GenerationBackend for LlmBackend {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor::llm(self.config.temperature)
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        let prompt = self.generation_prompt(request)?;
        let items = self.listed_response(&prompt)?;
        Ok(match request {
            GenerationRequest::Paths { .. } => GenerationResponse::Annotations(items),
            GenerationRequest::Prereqs { .. } => GenerationResponse::Payloads(items),
        })
    }
}

impl InspectionBackend for LlmBackend {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor::llm(self.config.temperature)
    }

    fn inspect(&self, request: &InspectionRequest) -> Result<bool, BackendError> {
        let mut bindings = BTreeMap::new();
        bindings.insert("problem", self.task.problem.clone());
        bindings.insert("node", request.node.clone());
        bindings.insert("annotation", request.annotation.clone());
        bindings.insert("prereqs", request.prereqs.join("; "));
        let mut prompt = self
            .templates
            .render(&format!("{}/inspect", self.task.task), &bindings)?;
        let mut last_raw = String::new();
        for _ in 0..=self.config.reprompt_budget {
            let raw = self.chat(&prompt)?;
            if let Some(verdict) = parse_verdict(&raw) {
                return Ok(verdict);
            }
            last_raw = raw;
            prompt.push_str("\nAnswer with exactly one word: True or False.");
        }
        Err(BackendError::Parse {
            attempts: self.config.reprompt_budget + 1,
            raw: last_raw,
        })
    }
}

/// Extracts an enumerated list: `1.`/`1)`/`-`/`*` markers, or a single
/// bare line.
pub fn parse_enumerated_list(text: &str) -> Option<Vec<String>> {
    let mut items = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(item) = strip_list_marker(line) {
            if !item.is_empty() {
                items.push(item);
            }
        }
    }
    if !items.is_empty() {
        return Some(items);
    }
    let bare: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if bare.len() == 1 {
        return Some(vec![bare[0].to_string()]);
    }
    None
}

fn strip_list_marker(line: &str) -> Option<String> {
    for bullet in ["- ", "* ", "• "] {
        if let Some(rest) = line.strip_prefix(bullet) {
            return Some(rest.trim().to_string());
        }
    }
    let digits: String = line.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() {
        return None;
    }
    let rest = &line[digits.len()..];
    for sep in [". ", ") ", ".", ")"] {
        if let Some(item) = rest.strip_prefix(sep) {
            let item = item.trim();
            if !item.is_empty() {
                return Some(item.to_string());
            }
        }
    }
    None
}

/// Leading-word True/False, case-insensitive.
pub fn parse_verdict(text: &str) -> Option<bool> {
    let first = text
        .split_whitespace()
        .next()?
        .trim_matches(|c: char| !c.is_ascii_alphabetic());
    match first.to_ascii_lowercase().as_str() {
        "true" | "yes" => Some(true),
        "false" | "no" => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    #[test]
    fn list_parsing_variants() {
        let text = "1. formula method\n2. prime factoring\n3. numerical substitution";
        assert_eq!(
            parse_enumerated_list(text).unwrap(),
            vec![
                "formula method".to_string(),
                "prime factoring".to_string(),
                "numerical substitution".to_string()
            ]
        );
        assert_eq!(
            parse_enumerated_list("- a\n- b").unwrap(),
            vec!["a".to_string(), "b".to_string()]
        );
        assert_eq!(parse_enumerated_list("13-10=3").unwrap(), vec!["13-10=3".to_string()]);
        assert!(parse_enumerated_list("I am not sure.\nMaybe try something?").is_none());
        assert!(parse_enumerated_list("").is_none());
    }

    #[test]
    fn verdict_parsing() {
        assert_eq!(parse_verdict("True"), Some(true));
        assert_eq!(parse_verdict("false, because 18-12 is 6"), Some(false));
        assert_eq!(parse_verdict("Yes."), Some(true));
        assert_eq!(parse_verdict("perhaps"), None);
    }

    /// Tiny canned-response HTTP server for driving the client without a
    /// network.
    fn serve_responses(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<usize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let mut served = 0usize;
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = vec![0u8; 65536];
                let mut read_total = 0usize;
                loop {
                    let n = stream.read(&mut buf[read_total..]).unwrap();
                    read_total += n;
                    let text = String::from_utf8_lossy(&buf[..read_total]);
                    if let Some(header_end) = text.find("\r\n\r\n") {
                        let content_length = text
                            .lines()
                            .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                            .unwrap_or(0);
                        if read_total >= header_end + 4 + content_length {
                            break;
                        }
                    }
                    if n == 0 {
                        break;
                    }
                }
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
                served += 1;
            }
            served
        });
        (format!("http://{addr}"), handle)
    }

    fn chat_body(content: &str) -> String {
        serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": content}}]
        })
        .to_string()
    }

    fn backend(base_url: &str, key_env: &str) -> LlmBackend {
        LlmBackend::new(
            LlmConfig {
                base_url: base_url.into(),
                backoff_ms: 1,
                api_key_env: key_env.into(),
                ..LlmConfig::default()
            },
            TemplateSet::embedded(),
            TaskContext::new("polynomial", "3*x^4 - 69*x^3 + 1284*x^2 - 4212*x - 3888 = 0"),
        )
    }

    #[test]
    fn approaches_list_parses_from_canned_response() {
        let (url, handle) = serve_responses(vec![(
            200,
            chat_body("1. the formula method\n2. Prime factoring\n3. numerical substitution"),
        )]);
        std::env::set_var("GOT_TEST_KEY_A", "k");
        let backend = backend(&url, "GOT_TEST_KEY_A");
        let request = GenerationRequest::Paths {
            node: "all roots of: 3*x^4 - 69*x^3 + 1284*x^2 - 4212*x - 3888 = 0".into(),
            conditions: vec![],
            task: TaskContext::new("polynomial", "3*x^4 - 69*x^3 + 1284*x^2 - 4212*x - 3888 = 0"),
        };
        let response = backend.generate(&request).unwrap();
        assert_eq!(
            response,
            GenerationResponse::Annotations(vec![
                "the formula method".into(),
                "Prime factoring".into(),
                "numerical substitution".into()
            ])
        );
        assert_eq!(handle.join().unwrap(), 1);
    }

    #[test]
    fn rate_limit_retries_then_succeeds() {
        let (url, handle) = serve_responses(vec![
            (429, "{}".into()),
            (200, chat_body("True")),
        ]);
        std::env::set_var("GOT_TEST_KEY_B", "k");
        let backend = backend(&url, "GOT_TEST_KEY_B");
        let verdict = backend
            .inspect(&InspectionRequest::new("x = -9", "substitute", vec![]))
            .unwrap();
        assert!(verdict);
        assert_eq!(handle.join().unwrap(), 2);
    }

    #[test]
    fn unparseable_output_thrice_is_a_parse_error() {
        let junk = chat_body("I could not decide on a list.\nSorry about that.");
        let (url, handle) = serve_responses(vec![
            (200, junk.clone()),
            (200, junk.clone()),
            (200, junk),
        ]);
        std::env::set_var("GOT_TEST_KEY_C", "k");
        let backend = backend(&url, "GOT_TEST_KEY_C");
        let request = GenerationRequest::Paths {
            node: "goal".into(),
            conditions: vec![],
            task: TaskContext::new("polynomial", "x^2 - 1 = 0"),
        };
        match backend.generate(&request) {
            Err(BackendError::Parse { attempts, raw }) => {
                assert_eq!(attempts, 3);
                assert!(raw.contains("could not decide"));
            }
            other => panic!("expected Parse error, got {other:?}"),
        }
        assert_eq!(handle.join().unwrap(), 3);
    }

    #[test]
    fn missing_key_is_auth_error() {
        let backend = backend("http://127.0.0.1:9", "GOT_TEST_KEY_MISSING");
        match backend.chat("hello") {
            Err(BackendError::Auth(var)) => assert_eq!(var, "GOT_TEST_KEY_MISSING"),
            other => panic!("expected Auth error, got {other:?}"),
        }
    }
}
