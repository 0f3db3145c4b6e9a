//! Chat-completions HTTP client. Any endpoint speaking the common
//! `POST {base}/chat/completions` JSON schema works.

use std::thread;

use serde_json::json;

use super::{Backend, BackendConfig, BackendError, CompletionRequest};

const SYSTEM_MESSAGE: &str =
    "You are a player in a five-player werewolf party game. Follow the instructions exactly.";

pub struct HttpBackend {
    config: BackendConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Result<HttpBackend, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(HttpBackend { config, client })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn send_once(&self, body: &serde_json::Value) -> Result<String, (bool, BackendError)> {
        let mut req = self.client.post(self.endpoint()).json(body);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| (true, BackendError::Failure(format!("transport: {e}"))))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| (true, BackendError::Failure(format!("body read: {e}"))))?;
        if status.is_server_error() || status.as_u16() == 429 {
            return Err((true, BackendError::Failure(format!("status {status}: {text}"))));
        }
        if !status.is_success() {
            return Err((false, BackendError::Failure(format!("status {status}: {text}"))));
        }
        let parsed: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| (false, BackendError::Failure(format!("bad response json: {e}"))))?;
        let content = parsed["choices"][0]["message"]["content"]
            .as_str()
            .unwrap_or("")
            .to_string();
        if content.is_empty() {
            return Err((false, BackendError::Failure("empty completion".to_string())));
        }
        Ok(content)
    }
}

impl Backend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let model = request
            .model_id
            .clone()
            .unwrap_or_else(|| self.config.models.model_for(request.purpose).to_string());
        let body = json!({
            "model": model,
            "messages": [
                {"role": "system", "content": SYSTEM_MESSAGE},
                {"role": "user", "content": request.prompt_text},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let mut last_err = BackendError::Failure("no attempts made".to_string());
        for attempt in 0..=self.config.retry_count {
            if attempt > 0 {
                thread::sleep(self.config.retry_backoff() * attempt);
            }
            match self.send_once(&body) {
                Ok(content) => return Ok(content),
                Err((transient, err)) => {
                    log::warn!("completion attempt {attempt} failed: {err}");
                    last_err = err;
                    if !transient {
                        break;
                    }
                }
            }
        }
        Err(last_err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{ModelMap, Purpose};
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    /// Tiny one-shot HTTP stub: answers `bodies` in order, records request
    /// bodies, then shuts down.
    fn stub_server(bodies: Vec<(u16, String)>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for (status, body) in bodies {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = Vec::new();
                let mut tmp = [0u8; 4096];
                loop {
                    let n = stream.read(&mut tmp).unwrap();
                    buf.extend_from_slice(&tmp[..n]);
                    if let Some(pos) = find_header_end(&buf) {
                        let headers = String::from_utf8_lossy(&buf[..pos]).to_string();
                        let len = content_length(&headers);
                        while buf.len() < pos + 4 + len {
                            let n = stream.read(&mut tmp).unwrap();
                            buf.extend_from_slice(&tmp[..n]);
                        }
                        let req_body =
                            String::from_utf8_lossy(&buf[pos + 4..pos + 4 + len]).to_string();
                        tx.send(req_body).unwrap();
                        break;
                    }
                }
                let reason = if status == 200 { "OK" } else { "ERR" };
                let resp = format!(
                    "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(resp.as_bytes()).unwrap();
            }
        });
        (format!("http://{addr}"), rx)
    }

    fn find_header_end(buf: &[u8]) -> Option<usize> {
        buf.windows(4).position(|w| w == b"\r\n\r\n")
    }

    fn content_length(headers: &str) -> usize {
        headers
            .lines()
            .find_map(|l| {
                let (name, value) = l.split_once(':')?;
                name.eq_ignore_ascii_case("content-length")
                    .then(|| value.trim().parse().ok())?
            })
            .unwrap_or(0)
    }

    fn completion_body(content: &str) -> String {
        json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
    }

    fn config(base_url: String) -> BackendConfig {
        BackendConfig {
            base_url,
            api_key_env: "LYCAN_TEST_KEY_UNSET".to_string(),
            models: ModelMap::uniform("model-b"),
            timeout_secs: 5,
            retry_count: 1,
            retry_backoff_ms: 10,
        }
    }

    #[test]
    fn stubbed_completion_is_surfaced_verbatim() {
        let (url, _rx) = stub_server(vec![(200, completion_body("the exact stub text"))]);
        let backend = HttpBackend::new(config(url)).unwrap();
        let out = backend
            .complete(&CompletionRequest::new(Purpose::Talk, "hello"))
            .unwrap();
        assert_eq!(out, "the exact stub text");
    }

    #[test]
    fn vote_declarations_route_to_their_model() {
        let (url, rx) = stub_server(vec![(200, completion_body("ok"))]);
        let mut cfg = config(url);
        cfg.models
            .per_purpose
            .insert(Purpose::VoteDeclaration, "model-a".to_string());
        let backend = HttpBackend::new(cfg).unwrap();
        backend
            .complete(&CompletionRequest::new(Purpose::VoteDeclaration, "declare"))
            .unwrap();
        let sent: serde_json::Value = serde_json::from_str(&rx.recv().unwrap()).unwrap();
        assert_eq!(sent["model"], "model-a");
        assert_eq!(sent["messages"][1]["content"], "declare");
    }

    #[test]
    fn transient_errors_are_retried() {
        let (url, _rx) = stub_server(vec![
            (500, "{\"error\":\"boom\"}".to_string()),
            (200, completion_body("recovered")),
        ]);
        let backend = HttpBackend::new(config(url)).unwrap();
        let out = backend
            .complete(&CompletionRequest::new(Purpose::Summary, "sum"))
            .unwrap();
        assert_eq!(out, "recovered");
    }

    #[test]
    fn client_errors_fail_fast() {
        let (url, _rx) = stub_server(vec![(400, "{\"error\":\"bad\"}".to_string())]);
        let backend = HttpBackend::new(config(url)).unwrap();
        let err = backend
            .complete(&CompletionRequest::new(Purpose::Talk, "x"))
            .unwrap_err();
        assert!(matches!(err, BackendError::Failure(_)));
    }
}
