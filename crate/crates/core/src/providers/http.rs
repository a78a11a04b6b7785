//! OpenAI-compatible HTTP provider.

use std::sync::atomic::{AtomicU64, Ordering};
use std::thread::sleep;
use std::time::{Duration, Instant};

use rand::RngCore;
use serde_json::{json, Value};

use super::{FinishReason, GenerationRequest, GenerationResponse, Provider, ProviderError};
use crate::mutate::chat::{Endpoint, PromptText};

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const MAX_ATTEMPTS: u32 = 4;

pub fn default_model(endpoint: Endpoint) -> &'static str {
    match endpoint {
        Endpoint::Chat => "gpt-3.5-turbo",
        Endpoint::Completion => "gpt-3.5-turbo-instruct",
    }
}

pub struct HttpProvider {
    base_url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    backoff_base: Duration,
    max_attempts: u32,
    calls: AtomicU64,
}

impl HttpProvider {
    pub fn new(base_url: &str, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            agent,
            backoff_base: Duration::from_secs(1),
            max_attempts: MAX_ATTEMPTS,
            calls: AtomicU64::new(0),
        }
    }

    /// Reads `OPENAI_BASE_URL` and `OPENAI_API_KEY`.
    pub fn from_env(timeout: Duration) -> Self {
        let base = std::env::var("OPENAI_BASE_URL").unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        Self::new(&base, std::env::var("OPENAI_API_KEY").ok(), timeout)
    }

    /// Delay before the second attempt; it doubles on each further retry.
    pub fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    pub fn request_body(request: &GenerationRequest) -> (String, Value) {
        let model = if request.model_name.is_empty() {
            default_model(request.endpoint)
        } else {
            &request.model_name
        };
        let cfg = &request.cfg;
        match (&request.payload.text, request.endpoint) {
            (PromptText::Chat { system, user }, Endpoint::Chat) => (
                "/v1/chat/completions".to_string(),
                json!({
                    "model": model,
                    "messages": [
                        {"role": "system", "content": system},
                        {"role": "user", "content": user},
                    ],
                    "max_tokens": cfg.max_tokens,
                    "n": cfg.n,
                    "temperature": cfg.temperature,
                }),
            ),
            (PromptText::Completion { prompt }, _) => (
                "/v1/completions".to_string(),
                json!({
                    "model": model,
                    "prompt": prompt,
                    "max_tokens": cfg.max_tokens,
                    "n": cfg.n,
                    "temperature": cfg.temperature,
                }),
            ),
            (PromptText::Chat { system, user }, Endpoint::Completion) => (
                "/v1/completions".to_string(),
                json!({
                    "model": model,
                    "prompt": format!("{system}\n{user}"),
                    "max_tokens": cfg.max_tokens,
                    "n": cfg.n,
                    "temperature": cfg.temperature,
                }),
            ),
        }
    }

    pub fn parse_body(endpoint: Endpoint, body: &str) -> Result<(Vec<String>, Vec<FinishReason>), ProviderError> {
        let v: Value = serde_json::from_str(body).map_err(|e| ProviderError::Protocol(e.to_string()))?;
        let choices = v
            .get("choices")
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::Protocol("response has no choices array".into()))?;
        let mut texts = Vec::with_capacity(choices.len());
        let mut reasons = Vec::with_capacity(choices.len());
        for c in choices {
            let text = match endpoint {
                Endpoint::Chat => c.pointer("/message/content"),
                Endpoint::Completion => c.get("text"),
            }
            .and_then(Value::as_str)
            .ok_or_else(|| ProviderError::Protocol("choice without text".into()))?;
            texts.push(text.to_string());
            reasons.push(FinishReason::from_wire(c.get("finish_reason").and_then(Value::as_str)));
        }
        Ok((texts, reasons))
    }

    fn attempt(&self, url: &str, body: &Value) -> Result<(u16, String), String> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(body.to_string()).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok((status, text))
    }
}

impl Provider for HttpProvider {
    fn generate(&self, request: &GenerationRequest, _rng: &mut dyn RngCore) -> Result<GenerationResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let (path, body) = Self::request_body(request);
        let url = format!("{}{}", self.base_url, path);
        let start = Instant::now();
        let mut last = String::new();
        for attempt in 1..=self.max_attempts {
            if attempt > 1 {
                sleep(self.backoff_base * 2u32.pow(attempt - 2));
            }
            match self.attempt(&url, &body) {
                Ok((200..=299, text)) => {
                    let (choices, finish_reasons) = Self::parse_body(request.endpoint, &text)?;
                    return Ok(GenerationResponse {
                        choices,
                        latency_s: start.elapsed().as_secs_f64(),
                        finish_reasons,
                    });
                }
                Ok((status @ (429 | 500..=599), text)) => last = format!("HTTP {status}: {text}"),
                Ok((status, text)) => return Err(ProviderError::Rejected { status, detail: text }),
                Err(e) => last = e,
            }
            log::debug!("attempt {attempt} to {url} failed: {last}");
        }
        Err(ProviderError::Unavailable {
            attempts: self.max_attempts,
            detail: last,
        })
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mutate::chat::{build_prompt, ChatRequestConfig, PromptVariant};
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// Serves the given (status, body) responses in order and records request bodies.
    fn stub(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<(String, String)>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = format!("http://{}", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = seen.clone();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let Ok((stream, _)) = listener.accept() else { return };
                let mut reader = BufReader::new(stream);
                let mut request_line = String::new();
                reader.read_line(&mut request_line).unwrap();
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                let path = request_line.split_whitespace().nth(1).unwrap_or_default().to_string();
                log.lock().unwrap().push((path, String::from_utf8(buf).unwrap()));
                let mut stream = reader.into_inner();
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (addr, seen)
    }

    fn request(endpoint: Endpoint) -> GenerationRequest {
        GenerationRequest {
            payload: build_prompt(PromptVariant::Ai, endpoint, "xml", Some(b"<a/>")).unwrap(),
            cfg: ChatRequestConfig::new(64, 2, 0.5).unwrap(),
            endpoint,
            model_name: "m".into(),
        }
    }

    fn provider(addr: &str) -> HttpProvider {
        HttpProvider::new(addr, Some("k".into()), Duration::from_secs(5)).with_backoff_base(Duration::from_millis(1))
    }

    #[test]
    fn chat_wire_format() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"<b/>"},"finish_reason":"stop"},
                                  {"message":{"role":"assistant","content":"<c"},"finish_reason":"length"}]}"#;
        let (addr, seen) = stub(vec![(200, body.into())]);
        let p = provider(&addr);
        let r = p.generate(&request(Endpoint::Chat), &mut rand::rng()).unwrap();
        assert_eq!(r.choices, vec!["<b/>", "<c"]);
        assert_eq!(r.finish_reasons, vec![FinishReason::Stop, FinishReason::Length]);
        let (path, sent) = seen.lock().unwrap()[0].clone();
        assert_eq!(path, "/v1/chat/completions");
        let sent: Value = serde_json::from_str(&sent).unwrap();
        assert_eq!(sent["messages"][0]["role"], "system");
        assert_eq!(sent["messages"][1]["content"], "Here is an example xml file, generate another one.\n<a/>");
        assert_eq!((sent["max_tokens"].as_u64(), sent["n"].as_u64()), (Some(64), Some(2)));
        assert_eq!(p.calls(), 1);
    }

    #[test]
    fn completion_wire_format() {
        let (addr, seen) = stub(vec![(200, r#"{"choices":[{"text":"<z/>","finish_reason":"stop"}]}"#.into())]);
        let r = provider(&addr).generate(&request(Endpoint::Completion), &mut rand::rng()).unwrap();
        assert_eq!(r.choices, vec!["<z/>"]);
        let (path, sent) = seen.lock().unwrap()[0].clone();
        assert_eq!(path, "/v1/completions");
        let sent: Value = serde_json::from_str(&sent).unwrap();
        assert_eq!(sent["prompt"], "<a/>\nAnd here is another xml file like above: ");
    }

    #[test]
    fn retries_then_succeeds() {
        let ok = r#"{"choices":[{"text":"x","finish_reason":"stop"}]}"#.to_string();
        let (addr, seen) = stub(vec![(429, "{}".into()), (503, "{}".into()), (200, ok)]);
        let r = provider(&addr).generate(&request(Endpoint::Completion), &mut rand::rng()).unwrap();
        assert_eq!(r.choices.len(), 1);
        assert_eq!(seen.lock().unwrap().len(), 3);
    }

    #[test]
    fn gives_up_after_four_attempts() {
        let (addr, seen) = stub(vec![(500, "{}".into()); 4]);
        let e = provider(&addr).generate(&request(Endpoint::Chat), &mut rand::rng()).unwrap_err();
        assert!(matches!(e, ProviderError::Unavailable { attempts: 4, .. }));
        assert_eq!(seen.lock().unwrap().len(), 4);
    }

    #[test]
    fn no_retry_on_client_errors() {
        for status in [400u16, 401, 404] {
            let (addr, seen) = stub(vec![(status, "{}".into()), (200, "{}".into())]);
            let e = provider(&addr).generate(&request(Endpoint::Chat), &mut rand::rng()).unwrap_err();
            assert!(matches!(e, ProviderError::Rejected { status: s, .. } if s == status));
            assert_eq!(seen.lock().unwrap().len(), 1);
        }
    }

    #[test]
    fn malformed_json_is_protocol_error() {
        let (addr, _) = stub(vec![(200, "not json".into())]);
        let e = provider(&addr).generate(&request(Endpoint::Chat), &mut rand::rng()).unwrap_err();
        assert!(matches!(e, ProviderError::Protocol(_)));
        assert!(matches!(HttpProvider::parse_body(Endpoint::Chat, r#"{"choices":[{"text":"x"}]}"#), Err(ProviderError::Protocol(_))));
    }
}
