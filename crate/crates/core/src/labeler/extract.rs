//! LLM-backed label extraction: prompt rendering, an injectable transport,
//! tolerant structured-response parsing, retries, and an on-disk cache.
//!
//! The transport is a trait so tests run against in-memory stubs and any
//! vendor endpoint can be adapted without touching the extraction logic.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::schema::{LabelAssignment, LabelSchema};

pub const REPORT_PLACEHOLDER: &str = "{report}";
pub const SCHEMA_PLACEHOLDER: &str = "{schema}";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportRequest {
    pub endpoint: String,
    pub model_name: String,
    pub prompt: String,
    pub auth_token: Option<String>,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportResponse {
    /// Opaque response text; parsing happens downstream.
    pub body: String,
}

/// One request/response exchange with a model endpoint.
///
/// `Sync` so corpus extraction can share one transport across workers.
pub trait Transport: Sync {
    fn send(&self, request: &TransportRequest) -> Result<TransportResponse>;
}

/// POSTs a message-style JSON body and returns the raw response text.
pub struct HttpTransport;

impl Transport for HttpTransport {
    fn send(&self, request: &TransportRequest) -> Result<TransportResponse> {
        let body = serde_json::json!({
            "model": request.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
        });
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(request.timeout))
            .build()
            .into();
        let mut call = agent.post(&request.endpoint);
        if let Some(token) = &request.auth_token {
            call = call.header("authorization", &format!("Bearer {token}"));
        }
        let mut response = call
            .send_json(&body)
            .map_err(|e| Error::Transport(e.to_string()))?;
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(TransportResponse { body: text })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    pub endpoint: String,
    pub model_name: String,
    /// Must contain both `{report}` and `{schema}`.
    pub prompt_template: String,
    /// Additional attempts after the first; 0 means exactly one attempt.
    pub max_retries: u32,
    pub timeout_secs: u64,
    /// Directory for response caching; `None` disables the cache.
    pub cache_path: Option<PathBuf>,
    /// Bearer token, usually injected from the environment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auth_token: Option<String>,
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.prompt_template.contains(REPORT_PLACEHOLDER) {
            return Err(Error::InvalidExtractorConfig(format!(
                "prompt template is missing the {REPORT_PLACEHOLDER} placeholder"
            )));
        }
        if !self.prompt_template.contains(SCHEMA_PLACEHOLDER) {
            return Err(Error::InvalidExtractorConfig(format!(
                "prompt template is missing the {SCHEMA_PLACEHOLDER} placeholder"
            )));
        }
        if self.endpoint.is_empty() {
            return Err(Error::InvalidExtractorConfig(
                "endpoint must not be empty".to_string(),
            ));
        }
        Ok(())
    }
}

/// Fills the template with the report text and the level's label names
/// (as a JSON array, so the model sees the exact expected keys).
pub fn render_prompt(
    config: &ExtractorConfig,
    report_text: &str,
    schema: &LabelSchema,
    level: usize,
) -> Result<String> {
    let names = schema
        .label_names(level)
        .ok_or_else(|| Error::InvalidInput(format!("schema has no level {level}")))?;
    let names: Vec<&String> = names.iter().collect();
    let schema_json = serde_json::to_string(&names).expect("label names serialize");
    Ok(config
        .prompt_template
        .replace(REPORT_PLACEHOLDER, report_text)
        .replace(SCHEMA_PLACEHOLDER, &schema_json))
}

/// Pulls the first balanced `{...}` object out of `raw` (models often wrap
/// their answer in prose), then validates it strictly against the schema
/// level: every label present, no extras, every value binary.
pub fn parse_structured_response(
    raw: &str,
    schema: &LabelSchema,
    level: usize,
    sample_id: &str,
) -> Result<LabelAssignment> {
    let parsed = first_parsable_object(raw).ok_or(Error::NoStructuredObject)?;

    let mut values = BTreeMap::new();
    for (label, value) in &parsed {
        let truth = match value {
            serde_json::Value::Number(n) if n.as_u64() == Some(0) => false,
            serde_json::Value::Number(n) if n.as_u64() == Some(1) => true,
            serde_json::Value::Bool(b) => *b,
            other => {
                return Err(Error::NonBinaryValue {
                    label: label.clone(),
                    value: other.to_string(),
                })
            }
        };
        values.insert(label.clone(), truth);
    }

    let expected = schema
        .label_names(level)
        .ok_or_else(|| Error::InvalidInput(format!("schema has no level {level}")))?;
    let got: std::collections::BTreeSet<String> = values.keys().cloned().collect();
    let missing: Vec<String> = expected.difference(&got).cloned().collect();
    let unknown: Vec<String> = got.difference(&expected).cloned().collect();
    if !missing.is_empty() || !unknown.is_empty() {
        return Err(Error::ResponseSchemaViolation { missing, unknown });
    }
    Ok(LabelAssignment::new(sample_id, values))
}

/// First `{...}` span in `raw` that parses as a non-empty JSON object.
/// Every `{` is tried as a start, so stray braces in surrounding prose
/// cannot mask the real payload; the span itself is matched string-aware.
/// Empty objects are skipped: no schema level is empty, so `{}` can only
/// be decoration.
fn first_parsable_object(raw: &str) -> Option<serde_json::Map<String, serde_json::Value>> {
    for (start, byte) in raw.bytes().enumerate() {
        if byte != b'{' {
            continue;
        }
        let Some(span) = balanced_span(raw, start) else {
            continue;
        };
        if let Ok(parsed) = serde_json::from_str::<serde_json::Map<_, _>>(span) {
            if !parsed.is_empty() {
                return Some(parsed);
            }
        }
    }
    None
}

/// The balanced `{...}` slice starting at `start`, if braces close.
fn balanced_span(raw: &str, start: usize) -> Option<&str> {
    let bytes = raw.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&raw[start..=i]);
                }
            }
            _ => {}
        }
    }
    None
}

/// How one sample's extraction went.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelOutcome {
    pub assignment: LabelAssignment,
    /// Transport calls made for this sample; 0 on a cache hit.
    pub attempts: u32,
    pub cache_hit: bool,
}

impl LabelOutcome {
    /// Attempts beyond the first, the conventional retry count.
    pub fn retries(&self) -> u32 {
        self.attempts.saturating_sub(1)
    }
}

/// Extracts one report's labels, retrying transport and parse-level
/// failures up to `max_retries` extra attempts.
///
/// A response that parses but covers the wrong label set fails immediately:
/// that is a contract violation by the model, not transient noise, and
/// imputing the gap would silently fabricate labels. Cached responses are
/// keyed by (model, prompt) content, so a hit never touches the transport.
pub fn llm_label(
    report_text: &str,
    schema: &LabelSchema,
    level: usize,
    config: &ExtractorConfig,
    transport: &dyn Transport,
    sample_id: &str,
) -> Result<LabelOutcome> {
    config.validate()?;
    let prompt = render_prompt(config, report_text, schema, level)?;
    let cache_file = config
        .cache_path
        .as_ref()
        .map(|dir| dir.join(cache_key(&config.model_name, &prompt)));

    if let Some(path) = &cache_file {
        if let Ok(body) = fs::read_to_string(path) {
            let assignment = parse_structured_response(&body, schema, level, sample_id)?;
            return Ok(LabelOutcome {
                assignment,
                attempts: 0,
                cache_hit: true,
            });
        }
    }

    let request = TransportRequest {
        endpoint: config.endpoint.clone(),
        model_name: config.model_name.clone(),
        prompt,
        auth_token: config.auth_token.clone(),
        timeout: Duration::from_secs(config.timeout_secs),
    };

    let mut last_error = String::new();
    let mut last_response: Option<String> = None;
    let total_attempts = config.max_retries + 1;
    for attempt in 1..=total_attempts {
        match transport.send(&request) {
            Err(e) => {
                last_error = e.to_string();
                last_response = None;
            }
            Ok(response) => {
                match parse_structured_response(&response.body, schema, level, sample_id) {
                    Ok(assignment) => {
                        if let Some(path) = &cache_file {
                            write_cache(path, &response.body)?;
                        }
                        return Ok(LabelOutcome {
                            assignment,
                            attempts: attempt,
                            cache_hit: false,
                        });
                    }
                    Err(e @ Error::ResponseSchemaViolation { .. }) => return Err(e),
                    Err(e) => {
                        last_error = e.to_string();
                        last_response = Some(response.body);
                    }
                }
            }
        }
    }
    Err(Error::ExtractionFailed {
        attempts: total_attempts,
        last_error,
        last_response,
    })
}

/// Content-addressed cache key over the exact request identity.
fn cache_key(model_name: &str, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model_name.as_bytes());
    hasher.update([0u8]);
    hasher.update(prompt.as_bytes());
    format!("{:x}.json", hasher.finalize())
}

static CACHE_WRITE_SEQ: AtomicU64 = AtomicU64::new(0);

/// Write-then-rename so concurrent writers never expose a torn file.
fn write_cache(path: &Path, body: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|cause| Error::Io {
        path: dir.to_path_buf(),
        cause,
    })?;
    let seq = CACHE_WRITE_SEQ.fetch_add(1, Ordering::Relaxed);
    let tmp = dir.join(format!(
        ".tmp-{}-{}-{}",
        std::process::id(),
        seq,
        path.file_name().and_then(|n| n.to_str()).unwrap_or("cache")
    ));
    fs::write(&tmp, body).map_err(|cause| Error::Io {
        path: tmp.clone(),
        cause,
    })?;
    fs::rename(&tmp, path).map_err(|cause| Error::Io {
        path: path.to_path_buf(),
        cause,
    })?;
    Ok(())
}

/// Extracts a whole corpus with at most `max_in_flight` concurrent
/// requests. Results come back in input order regardless of completion
/// order; the first error wins deterministically by input position.
pub fn label_corpus_llm(
    reports: &[(String, String)],
    schema: &LabelSchema,
    level: usize,
    config: &ExtractorConfig,
    transport: &(dyn Transport + Sync),
    max_in_flight: usize,
) -> Result<Vec<LabelOutcome>> {
    config.validate()?;
    if reports.is_empty() {
        return Ok(Vec::new());
    }
    let workers = max_in_flight.max(1).min(reports.len());
    let next = AtomicU64::new(0);
    let mut slots: Vec<Option<Result<LabelOutcome>>> = Vec::new();
    slots.resize_with(reports.len(), || None);
    let slots = std::sync::Mutex::new(slots);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed) as usize;
                if i >= reports.len() {
                    break;
                }
                let (sample_id, text) = &reports[i];
                let outcome = llm_label(text, schema, level, config, transport, sample_id);
                slots.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every slot filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::LabelDef;
    use std::sync::Mutex;

    fn schema_ab() -> LabelSchema {
        LabelSchema::new(
            "test-v1",
            vec![vec![
                LabelDef {
                    name: "a".to_string(),
                    level: 1,
                    parent: None,
                },
                LabelDef {
                    name: "b".to_string(),
                    level: 1,
                    parent: None,
                },
            ]],
        )
        .unwrap()
    }

    fn config(max_retries: u32, cache: Option<PathBuf>) -> ExtractorConfig {
        ExtractorConfig {
            endpoint: "http://localhost:0/v1".to_string(),
            model_name: "stub-model".to_string(),
            prompt_template: "Labels {schema} for report: {report}".to_string(),
            max_retries,
            timeout_secs: 5,
            cache_path: cache,
            auth_token: None,
        }
    }

    /// Replays scripted bodies in order; `Err` entries are transport
    /// failures. Counts calls so cache bypasses are observable.
    struct ScriptedTransport {
        script: Mutex<Vec<Result<String>>>,
        calls: AtomicU64,
    }

    impl ScriptedTransport {
        fn new(script: Vec<Result<String>>) -> Self {
            ScriptedTransport {
                script: Mutex::new(script),
                calls: AtomicU64::new(0),
            }
        }

        fn calls(&self) -> u64 {
            self.calls.load(Ordering::Relaxed)
        }
    }

    impl Transport for ScriptedTransport {
        fn send(&self, _request: &TransportRequest) -> Result<TransportResponse> {
            self.calls.fetch_add(1, Ordering::Relaxed);
            let mut script = self.script.lock().unwrap();
            if script.is_empty() {
                return Err(Error::Transport("script exhausted".to_string()));
            }
            script.remove(0).map(|body| TransportResponse { body })
        }
    }

    #[test]
    fn template_placeholders_are_required() {
        let mut c = config(0, None);
        c.prompt_template = "no placeholders".to_string();
        assert!(matches!(
            c.validate(),
            Err(Error::InvalidExtractorConfig(_))
        ));
        c.prompt_template = "only {report}".to_string();
        assert!(c.validate().is_err());
        c.prompt_template = "{report} and {schema}".to_string();
        assert!(c.validate().is_ok());
    }

    #[test]
    fn prompt_embeds_report_and_label_names() {
        let c = config(0, None);
        let prompt = render_prompt(&c, "Lungs clear.", &schema_ab(), 1).unwrap();
        assert!(prompt.contains("Lungs clear."));
        assert!(prompt.contains("[\"a\",\"b\"]"));
    }

    #[test]
    fn parses_bare_and_wrapped_objects() {
        let schema = schema_ab();
        let bare = parse_structured_response(r#"{"a": 1, "b": 0}"#, &schema, 1, "s").unwrap();
        assert!(bare.values["a"]);
        assert!(!bare.values["b"]);

        let wrapped = parse_structured_response(
            "Sure! Here are the labels:\n{\"a\": 0, \"b\": 1}\nLet me know.",
            &schema,
            1,
            "s",
        )
        .unwrap();
        assert!(wrapped.values["b"]);

        // Braces inside strings must not confuse the matcher.
        let tricky = parse_structured_response(
            r#"note "{" here {"a": true, "b": false} tail"#,
            &schema,
            1,
            "s",
        )
        .unwrap();
        assert!(tricky.values["a"]);
    }

    #[test]
    fn rejects_prose_non_binary_and_wrong_keys() {
        let schema = schema_ab();
        assert!(matches!(
            parse_structured_response("no object here", &schema, 1, "s"),
            Err(Error::NoStructuredObject)
        ));
        assert!(matches!(
            parse_structured_response(r#"{"a": "maybe", "b": 0}"#, &schema, 1, "s"),
            Err(Error::NonBinaryValue { .. })
        ));
        match parse_structured_response(r#"{"a": 1, "c": 0}"#, &schema, 1, "s") {
            Err(Error::ResponseSchemaViolation { missing, unknown }) => {
                assert_eq!(missing, vec!["b".to_string()]);
                assert_eq!(unknown, vec!["c".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn well_formed_response_passes_through() {
        let transport = ScriptedTransport::new(vec![Ok(r#"{"a": 1, "b": 0}"#.to_string())]);
        let outcome =
            llm_label("text", &schema_ab(), 1, &config(0, None), &transport, "s1").unwrap();
        assert_eq!(outcome.attempts, 1);
        assert_eq!(outcome.retries(), 0);
        assert!(!outcome.cache_hit);
        assert!(outcome.assignment.values["a"]);
    }

    #[test]
    fn malformed_twice_then_valid_counts_two_retries() {
        let transport = ScriptedTransport::new(vec![
            Ok("garbage".to_string()),
            Err(Error::Transport("connection reset".to_string())),
            Ok(r#"{"a": 0, "b": 1}"#.to_string()),
        ]);
        let outcome =
            llm_label("text", &schema_ab(), 1, &config(2, None), &transport, "s1").unwrap();
        assert_eq!(outcome.retries(), 2);
        assert_eq!(transport.calls(), 3);
    }

    #[test]
    fn exhausted_retries_carry_the_last_response() {
        let transport =
            ScriptedTransport::new(vec![Ok("bad one".to_string()), Ok("bad two".to_string())]);
        let err =
            llm_label("text", &schema_ab(), 1, &config(1, None), &transport, "s1").unwrap_err();
        match err {
            Error::ExtractionFailed {
                attempts,
                last_response,
                ..
            } => {
                assert_eq!(attempts, 2);
                assert_eq!(last_response.as_deref(), Some("bad two"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_label_fails_without_retry() {
        let transport = ScriptedTransport::new(vec![
            Ok(r#"{"a": 1}"#.to_string()),
            Ok(r#"{"a": 1, "b": 0}"#.to_string()),
        ]);
        let err =
            llm_label("text", &schema_ab(), 1, &config(3, None), &transport, "s1").unwrap_err();
        assert!(matches!(err, Error::ResponseSchemaViolation { .. }));
        // The second, valid body must never have been requested.
        assert_eq!(transport.calls(), 1);
    }

    #[test]
    fn cache_hit_bypasses_transport() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(0, Some(dir.path().to_path_buf()));
        let transport = ScriptedTransport::new(vec![Ok(r#"{"a": 1, "b": 1}"#.to_string())]);
        let first = llm_label("text", &schema_ab(), 1, &c, &transport, "s1").unwrap();
        assert!(!first.cache_hit);
        assert_eq!(transport.calls(), 1);

        let second = llm_label("text", &schema_ab(), 1, &c, &transport, "s1").unwrap();
        assert!(second.cache_hit);
        assert_eq!(second.attempts, 0);
        assert_eq!(transport.calls(), 1);
        assert_eq!(second.assignment, first.assignment);

        // A different report misses the cache and hits the transport.
        let err = llm_label("other", &schema_ab(), 1, &c, &transport, "s2");
        assert!(err.is_err());
        assert_eq!(transport.calls(), 2);
    }

    #[test]
    fn corpus_extraction_preserves_input_order() {
        struct EchoTransport;
        impl Transport for EchoTransport {
            fn send(&self, request: &TransportRequest) -> Result<TransportResponse> {
                // Mark "a" positive iff the report text says so.
                let a = request.prompt.contains("yes-a");
                Ok(TransportResponse {
                    body: format!(r#"{{"a": {}, "b": 0}}"#, a as u8),
                })
            }
        }
        let reports: Vec<(String, String)> = (0..20)
            .map(|i| {
                let text = if i % 3 == 0 { "yes-a" } else { "nothing" };
                (format!("s{i:02}"), text.to_string())
            })
            .collect();
        let outcomes = label_corpus_llm(
            &reports,
            &schema_ab(),
            1,
            &config(0, None),
            &EchoTransport,
            4,
        )
        .unwrap();
        assert_eq!(outcomes.len(), 20);
        for (i, outcome) in outcomes.iter().enumerate() {
            assert_eq!(outcome.assignment.sample_id, format!("s{i:02}"));
            assert_eq!(outcome.assignment.values["a"], i % 3 == 0);
        }
    }
}
