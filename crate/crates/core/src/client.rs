//! Completion endpoint client and the generation driver.
//!
//! The wire protocol is the de-facto HTTP JSON chat-completion shape:
//! request `{model, messages, temperature, max_tokens, seed}`, response
//! `{choices: [{message: {content}}]}`. Any server speaking it can back the
//! pipeline. Calls retry with exponential backoff on transport errors and
//! 5xx responses, sending byte-identical payloads each attempt; 4xx
//! responses surface immediately with the body captured.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::document::Document;
use crate::error::{Error, Result};
use crate::hashing::Fnv1a;
use crate::lang::Lang;
use crate::prompt::{render_prompt, TemplateSet};
use crate::routing::{RouteMode, Router};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: u64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            temperature: 0.8,
            max_tokens: 4096,
            seed: 0,
        }
    }
}

/// One generation task: a style, its placeholder bindings, and sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub style: String,
    pub bindings: BTreeMap<String, String>,
    pub target_language: Lang,
    #[serde(default)]
    pub sampling: SamplingParams,
}

/// A single completion call, fully resolved.
#[derive(Debug, Clone)]
pub struct CompletionRequest<'a> {
    pub endpoint: &'a str,
    pub model: &'a str,
    pub prompt: &'a str,
    pub sampling: &'a SamplingParams,
}

impl CompletionRequest<'_> {
    /// Canonical JSON payload; serialized once so retries are byte-identical.
    pub fn payload(&self) -> String {
        json!({
            "model": self.model,
            "messages": [{"role": "user", "content": self.prompt}],
            "temperature": self.sampling.temperature,
            "max_tokens": self.sampling.max_tokens,
            "seed": self.sampling.seed,
        })
        .to_string()
    }
}

pub trait CompletionClient: Send + Sync {
    /// Run one completion, returning the generated text.
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String>;
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Debug, Deserialize)]
struct ChatMessage {
    content: String,
}

/// Blocking HTTP client with optional JSONL request/response audit log.
pub struct HttpCompletionClient {
    http: reqwest::blocking::Client,
    audit: Option<Mutex<BufWriter<File>>>,
}

impl HttpCompletionClient {
    pub fn new(timeout: Duration) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::transport(e.to_string()))?;
        Ok(HttpCompletionClient { http, audit: None })
    }

    /// Append every request/response pair to a JSONL audit log.
    pub fn with_audit_log(mut self, path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.audit = Some(Mutex::new(BufWriter::new(file)));
        Ok(self)
    }

    fn audit_line(&self, endpoint: &str, payload: &str, outcome: &str) {
        if let Some(log) = &self.audit {
            if let Ok(mut w) = log.lock() {
                let line = json!({
                    "endpoint": endpoint,
                    "request": payload,
                    "outcome": outcome,
                });
                let _ = writeln!(w, "{line}");
                let _ = w.flush();
            }
        }
    }
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String> {
        let payload = req.payload();
        let response = self
            .http
            .post(req.endpoint)
            .header("content-type", "application/json")
            .body(payload.clone())
            .send()
            .map_err(|e| {
                self.audit_line(req.endpoint, &payload, &format!("transport: {e}"));
                Error::transport(e.to_string())
            })?;
        let status = response.status().as_u16();
        let body = response
            .text()
            .map_err(|e| Error::transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            self.audit_line(req.endpoint, &payload, &format!("http {status}"));
            return Err(Error::Upstream { status, body });
        }
        let parsed: ChatResponse = serde_json::from_str(&body)
            .map_err(|e| Error::format(format!("malformed completion response: {e}")))?;
        let content = parsed
            .choices
            .first()
            .map(|c| c.message.content.clone())
            .ok_or_else(|| Error::format("completion response has no choices"))?;
        self.audit_line(req.endpoint, &payload, "ok");
        Ok(content)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 500,
        }
    }
}

fn retryable(err: &Error) -> bool {
    match err {
        Error::Transport(_) => true,
        Error::Upstream { status, .. } => *status >= 500,
        _ => false,
    }
}

fn complete_with_retry(
    client: &dyn CompletionClient,
    req: &CompletionRequest<'_>,
    retry: &RetryPolicy,
) -> Result<String> {
    let mut attempt = 0u32;
    loop {
        match client.complete(req) {
            Ok(text) => return Ok(text),
            Err(err) if retryable(&err) && attempt < retry.max_retries => {
                let delay = retry.base_delay_ms.saturating_mul(1 << attempt.min(16));
                log::warn!(
                    "completion attempt {} failed ({err}); retrying in {delay} ms",
                    attempt + 1
                );
                if delay > 0 {
                    std::thread::sleep(Duration::from_millis(delay));
                }
                attempt += 1;
            }
            Err(err) => {
                // Exhausted retries on a retryable error is a transport error.
                if retryable(&err) && attempt >= retry.max_retries {
                    return Err(Error::transport(format!(
                        "giving up after {} attempts: {err}",
                        attempt + 1
                    )));
                }
                return Err(err);
            }
        }
    }
}

/// Endpoint-backed counter-example writer for the mitigation loop: asks a
/// completion model to reverse the stereotypical associations instead of
/// the deterministic word swap.
pub struct EndpointRewriter<'a> {
    pub client: &'a dyn CompletionClient,
    pub endpoint: String,
    pub model: String,
    pub sampling: SamplingParams,
    pub retry: RetryPolicy,
}

impl crate::mitigate::CounterRewriter for EndpointRewriter<'_> {
    fn rewrite(&self, doc: &Document, spec: &crate::weat::WeatSpec) -> Result<String> {
        let prompt = format!(
            "Rewrite the following text so the associations it expresses are reversed: \
             wherever the terms [{x} or {y}] appear together with [{a}] qualities, rewrite \
             the passage so they appear with [{b}] qualities instead, and vice versa. \
             Keep the language, style, length and all other content unchanged. \
             Output only the rewritten text.\n\n{text}",
            x = spec.x.join(", "),
            y = spec.y.join(", "),
            a = spec.a.join(", "),
            b = spec.b.join(", "),
            text = doc.text
        );
        complete_with_retry(
            self.client,
            &CompletionRequest {
                endpoint: &self.endpoint,
                model: &self.model,
                prompt: &prompt,
                sampling: &self.sampling,
            },
            &self.retry,
        )
    }
}

/// Deterministic translation-target assignment: hash(seed, id) mod |langs|.
pub fn assign_translation_language(doc_id: &str, languages: &[Lang], seed: u64) -> Result<Lang> {
    if languages.is_empty() {
        return Err(Error::config("translation language list is empty"));
    }
    let mut h = Fnv1a::with_seed(seed);
    h.write(doc_id.as_bytes());
    Ok(languages[(h.finish() % languages.len() as u64) as usize])
}

/// Drives template rendering, routing and endpoint calls.
pub struct Generator<'a> {
    client: &'a dyn CompletionClient,
    router: Router,
    templates: TemplateSet,
    retry: RetryPolicy,
}

impl<'a> Generator<'a> {
    pub fn new(
        client: &'a dyn CompletionClient,
        router: Router,
        templates: TemplateSet,
        retry: RetryPolicy,
    ) -> Self {
        Generator {
            client,
            router,
            templates,
            retry,
        }
    }

    /// Render, route and call the endpoint(s); returns the generated
    /// document with style/language/model metadata filled in.
    ///
    /// Ids are derived from the request content and sampling seed, so the
    /// same request yields the same id.
    pub fn generate(&mut self, req: &GenerationRequest) -> Result<Document> {
        let template = self.templates.get(&req.style)?;
        let prompt = render_prompt(template, &req.bindings)?;
        let route = self.router.route(req.target_language)?;

        let text = complete_with_retry(
            self.client,
            &CompletionRequest {
                endpoint: &route.endpoint,
                model: &route.model_id,
                prompt: &prompt,
                sampling: &req.sampling,
            },
            &self.retry,
        )?;

        let mut model_ids = vec![route.model_id.clone()];
        let text = match route.mode {
            RouteMode::Direct => text,
            RouteMode::EnThenTranslate => {
                let translate_model = route
                    .translate_model_id
                    .as_deref()
                    .expect("validated at router construction");
                let translation_prompt = format!(
                    "Translate the following text to {} language in {} script. \
                     Preserve the meaning, tone and formatting. Output only the translation.\n\n{}",
                    req.target_language.english_name(),
                    req.target_language.script_name(),
                    text
                );
                let translated = complete_with_retry(
                    self.client,
                    &CompletionRequest {
                        endpoint: &route.endpoint,
                        model: translate_model,
                        prompt: &translation_prompt,
                        sampling: &req.sampling,
                    },
                    &self.retry,
                )?;
                model_ids.push(translate_model.to_string());
                translated
            }
        };

        let mut h = Fnv1a::with_seed(req.sampling.seed);
        h.write(req.style.as_bytes())
            .sep()
            .write(req.target_language.tag().as_bytes())
            .sep()
            .write(prompt.as_bytes());
        let mut doc = Document::new(format!("gen-{:016x}", h.finish()), text, req.target_language)?
            .with_style(req.style.clone())
            .with_source("generated");
        doc.metadata.insert("model_ids".into(), model_ids.join(","));
        doc.metadata.insert(
            "mode".into(),
            match route.mode {
                RouteMode::Direct => "direct".into(),
                RouteMode::EnThenTranslate => "en_then_translate".into(),
            },
        );
        doc.metadata
            .insert("sampling_seed".into(), req.sampling.seed.to_string());
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::{reference_routes, ModelRoute};
    use std::sync::atomic::{AtomicU32, Ordering};

    struct EchoClient {
        payloads: Mutex<Vec<String>>,
    }

    impl EchoClient {
        fn new() -> Self {
            EchoClient {
                payloads: Mutex::new(Vec::new()),
            }
        }
    }

    impl CompletionClient for EchoClient {
        fn complete(&self, req: &CompletionRequest<'_>) -> Result<String> {
            self.payloads.lock().unwrap().push(req.payload());
            Ok(req.prompt.to_string())
        }
    }

    struct FailingClient {
        calls: AtomicU32,
        fail_times: u32,
        status: u16,
    }

    impl CompletionClient for FailingClient {
        fn complete(&self, req: &CompletionRequest<'_>) -> Result<String> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_times {
                Err(Error::Upstream {
                    status: self.status,
                    body: "boom".into(),
                })
            } else {
                Ok(req.prompt.to_string())
            }
        }
    }

    fn request(style: &str, lang: Lang) -> GenerationRequest {
        let mut bindings = BTreeMap::new();
        for name in TemplateSet::bundled().get(style).unwrap().placeholders() {
            let value = match name.as_str() {
                "extract" => "a short web extract",
                "topic" => "",
                "language" => lang.english_name(),
                "script" => lang.script_name(),
                "persona" => "a schoolteacher from Pune",
                "seed_text" => "seed text",
                "question" => "1+1?",
                "solution" => "2",
                _ => "value",
            };
            bindings.insert(name.clone(), value.to_string());
        }
        GenerationRequest {
            style: style.to_string(),
            bindings,
            target_language: lang,
            sampling: SamplingParams::default(),
        }
    }

    fn no_delay() -> RetryPolicy {
        RetryPolicy {
            max_retries: 2,
            base_delay_ms: 0,
        }
    }

    fn routes() -> Vec<ModelRoute> {
        reference_routes("http://localhost:9/v1/chat/completions", "sarvam-translate")
    }

    #[test]
    fn echo_endpoint_round_trip() {
        let client = EchoClient::new();
        let mut generator = Generator::new(
            &client,
            Router::new(routes(), 7).unwrap(),
            TemplateSet::bundled(),
            no_delay(),
        );
        let doc = generator.generate(&request("wikihow", Lang::Hindi)).unwrap();
        assert!(doc.text.contains("Write a long and very detailed tutorial"));
        assert!(doc.text.contains("a short web extract"));
        assert_eq!(doc.target_language, Lang::Hindi);
        assert_eq!(doc.style.as_deref(), Some("wikihow"));
        assert_eq!(doc.metadata["mode"], "direct");
        assert!(doc.id.starts_with("gen-"));
    }

    #[test]
    fn generation_ids_are_idempotent() {
        let client = EchoClient::new();
        let req = request("blogpost", Lang::Telugu);
        let make = || {
            let mut generator = Generator::new(
                &client,
                Router::new(routes(), 7).unwrap(),
                TemplateSet::bundled(),
                no_delay(),
            );
            generator.generate(&req).unwrap()
        };
        assert_eq!(make().id, make().id);
    }

    #[test]
    fn translate_mode_records_both_models_in_order() {
        let client = EchoClient::new();
        let mut generator = Generator::new(
            &client,
            Router::new(routes(), 7).unwrap(),
            TemplateSet::bundled(),
            no_delay(),
        );
        let doc = generator.generate(&request("blogpost", Lang::Kannada)).unwrap();
        assert_eq!(doc.metadata["model_ids"], "krutrim-2,sarvam-translate");
        assert_eq!(doc.metadata["mode"], "en_then_translate");
        assert!(doc.text.contains("Translate the following text to Kannada"));
    }

    #[test]
    fn retries_send_identical_payloads_then_succeed() {
        let client = FailingClient {
            calls: AtomicU32::new(0),
            fail_times: 2,
            status: 500,
        };
        let mut generator = Generator::new(
            &client,
            Router::new(routes(), 7).unwrap(),
            TemplateSet::bundled(),
            no_delay(),
        );
        let doc = generator.generate(&request("wikihow", Lang::Hindi));
        assert!(doc.is_ok());
        assert_eq!(client.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn exhausted_retries_become_transport_error() {
        let client = FailingClient {
            calls: AtomicU32::new(0),
            fail_times: 10,
            status: 500,
        };
        let mut generator = Generator::new(
            &client,
            Router::new(routes(), 7).unwrap(),
            TemplateSet::bundled(),
            no_delay(),
        );
        let err = generator.generate(&request("wikihow", Lang::Hindi)).unwrap_err();
        assert!(matches!(err, Error::Transport(_)), "{err}");
        // retry limit 2 => 3 attempts total
        assert_eq!(client.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn client_refusal_is_upstream_error_with_body() {
        let client = FailingClient {
            calls: AtomicU32::new(0),
            fail_times: 10,
            status: 400,
        };
        let mut generator = Generator::new(
            &client,
            Router::new(routes(), 7).unwrap(),
            TemplateSet::bundled(),
            no_delay(),
        );
        let err = generator.generate(&request("wikihow", Lang::Hindi)).unwrap_err();
        match err {
            Error::Upstream { status, body } => {
                assert_eq!(status, 400);
                assert_eq!(body, "boom");
            }
            other => panic!("expected upstream error, got {other}"),
        }
        assert_eq!(client.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn payloads_are_byte_identical_across_calls() {
        let client = EchoClient::new();
        let req = request("persona", Lang::Marathi);
        {
            let mut generator = Generator::new(
                &client,
                Router::new(routes(), 7).unwrap(),
                TemplateSet::bundled(),
                no_delay(),
            );
            generator.generate(&req).unwrap();
        }
        {
            let mut generator = Generator::new(
                &client,
                Router::new(routes(), 7).unwrap(),
                TemplateSet::bundled(),
                no_delay(),
            );
            generator.generate(&req).unwrap();
        }
        let payloads = client.payloads.lock().unwrap();
        assert_eq!(payloads[0], payloads[1]);
    }

    #[test]
    fn endpoint_rewriter_drives_mitigation() {
        use crate::mitigate::{mitigate, CounterRewriter};
        use crate::weat::{BiasAspect, WeatSpec};

        let client = EchoClient::new();
        let rewriter = EndpointRewriter {
            client: &client,
            endpoint: "http://localhost:9/v1/chat/completions".into(),
            model: "rewriter".into(),
            sampling: SamplingParams::default(),
            retry: no_delay(),
        };
        let spec = WeatSpec {
            name: "toy".into(),
            aspect: BiasAspect::Gender,
            x: vec!["xa".into()],
            y: vec!["ya".into()],
            a: vec!["awful".into()],
            b: vec!["great".into()],
        };
        let doc = Document::new("d1", "xa is awful today", Lang::English).unwrap();
        let text = rewriter.rewrite(&doc, &spec).unwrap();
        assert!(text.contains("xa is awful today"));
        assert!(text.contains("Output only the rewritten text"));

        let outcome = mitigate(&[doc], &spec, 3, 5, Some(&rewriter)).unwrap();
        assert_eq!(outcome.corpus.len(), 2);
        assert!(outcome.corpus[1].text.contains("associations it expresses are reversed"));
    }

    #[test]
    fn translation_assignment_is_deterministic_and_uniform() {
        let langs: Vec<Lang> = Lang::ALL[..10].to_vec();
        let a = assign_translation_language("doc-123", &langs, 9).unwrap();
        let b = assign_translation_language("doc-123", &langs, 9).unwrap();
        assert_eq!(a, b);

        let single = [Lang::Hindi];
        assert_eq!(
            assign_translation_language("anything", &single, 0).unwrap(),
            Lang::Hindi
        );
        assert!(assign_translation_language("x", &[], 0).is_err());

        let mut counts: BTreeMap<Lang, u64> = BTreeMap::new();
        for i in 0..20_000u32 {
            let lang = assign_translation_language(&format!("doc-{i}"), &langs, 9).unwrap();
            *counts.entry(lang).or_insert(0) += 1;
        }
        for (&lang, &count) in &counts {
            let share = count as f64 / 20_000.0;
            assert!(
                (share - 0.1).abs() < 0.01,
                "{lang}: share {share} out of tolerance"
            );
        }
    }

    // The HTTP client against a real local socket speaking the wire format.
    #[test]
    fn http_client_against_local_server() {
        use std::io::{BufRead, BufReader, Read, Write};
        use std::net::TcpListener;

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut content_length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    content_length = v.trim().parse().unwrap();
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0u8; content_length];
            reader.read_exact(&mut body).unwrap();
            let request: serde_json::Value = serde_json::from_slice(&body).unwrap();
            let prompt = request["messages"][0]["content"].as_str().unwrap();
            let reply = json!({
                "choices": [{"message": {"role": "assistant", "content": format!("echo: {prompt}")}}]
            })
            .to_string();
            let response = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{}",
                reply.len(),
                reply
            );
            stream.write_all(response.as_bytes()).unwrap();
        });

        let client = HttpCompletionClient::new(Duration::from_secs(5)).unwrap();
        let sampling = SamplingParams::default();
        let endpoint = format!("http://{addr}/v1/chat/completions");
        let text = client
            .complete(&CompletionRequest {
                endpoint: &endpoint,
                model: "test-model",
                prompt: "hello over http",
                sampling: &sampling,
            })
            .unwrap();
        assert_eq!(text, "echo: hello over http");
        handle.join().unwrap();
    }
}
