use std::time::Duration;

use serde_json::{json, Value};

use crate::exchange::TemperatureClass;
use crate::provider::{ChatProvider, CompletionRequest, ProviderError};

#[derive(Debug, Clone)]
pub struct HttpConfig {
    /// Base URL up to and excluding `/chat/completions`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub creative_temperature: f64,
}

impl HttpConfig {
    /// Reads `ELMI_HTTP_BASE_URL`, `ELMI_HTTP_API_KEY`, `ELMI_HTTP_MODEL`.
    pub fn from_env() -> Result<Self, String> {
        let base_url = std::env::var("ELMI_HTTP_BASE_URL").map_err(|_| "ELMI_HTTP_BASE_URL is not set".to_string())?;
        Ok(HttpConfig {
            base_url,
            api_key: std::env::var("ELMI_HTTP_API_KEY").ok(),
            model: std::env::var("ELMI_HTTP_MODEL").unwrap_or_else(|_| "gpt-4o".into()),
            timeout: Duration::from_secs(60),
            creative_temperature: 0.7,
        })
    }
}

/// OpenAI-compatible chat-completions client.
pub struct HttpProvider {
    config: HttpConfig,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        HttpProvider { config, agent }
    }

    pub fn request_body(&self, request: &CompletionRequest) -> Value {
        let temperature = match request.temperature {
            TemperatureClass::Deterministic => 0.0,
            TemperatureClass::Creative => self.config.creative_temperature,
        };
        let mut body = json!({
            "model": self.config.model,
            "messages": request.messages,
            "temperature": temperature,
        });
        if request.temperature == TemperatureClass::Deterministic {
            body["seed"] = json!(0);
        }
        body
    }
}

fn classify_status(code: u16, body: String) -> ProviderError {
    let msg = format!("HTTP {code}: {}", body.chars().take(300).collect::<String>());
    if code == 408 || code == 429 || code >= 500 {
        ProviderError::Transient(msg)
    } else {
        ProviderError::Permanent(msg)
    }
}

impl ChatProvider for HttpProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut req = self.agent.post(&url).set("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let response = match req.send_json(self.request_body(request)) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => return Err(classify_status(code, r.into_string().unwrap_or_default())),
            Err(ureq::Error::Transport(t)) => return Err(ProviderError::Transient(t.to_string())),
        };
        let value: Value = response
            .into_json()
            .map_err(|e| ProviderError::Permanent(format!("response is not JSON: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Permanent("response lacks choices[0].message.content".into()))
    }

    fn name(&self) -> &str {
        "http"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::WireMessage;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    /// Serves one canned response per connection and returns the request bodies.
    fn serve(responses: Vec<(u16, &'static str)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut bodies = Vec::new();
            for (code, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream);
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                bodies.push(String::from_utf8(buf).unwrap());
                let mut stream = reader.into_inner();
                write!(stream, "HTTP/1.1 {code} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len()).unwrap();
            }
            bodies
        });
        (url, handle)
    }

    fn provider(url: String) -> HttpProvider {
        HttpProvider::new(HttpConfig { base_url: url, api_key: Some("k".into()), model: "m".into(), timeout: Duration::from_secs(5), creative_temperature: 0.7 })
    }

    fn request() -> CompletionRequest {
        CompletionRequest {
            messages: vec![WireMessage { role: "user".into(), content: "hi".into() }],
            temperature: TemperatureClass::Deterministic,
            key: None,
            attempt: 0,
            retry: 0,
        }
    }

    #[test]
    fn round_trip_and_wire_format() {
        let (url, server) = serve(vec![(200, r#"{"choices":[{"message":{"role":"assistant","content":"hello"}}]}"#)]);
        assert_eq!(provider(url).complete(&request()).unwrap(), "hello");
        let body: Value = serde_json::from_str(&server.join().unwrap()[0]).unwrap();
        assert_eq!(body["model"], "m");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["messages"][0]["content"], "hi");
    }

    #[test]
    fn status_classification() {
        let (url, server) = serve(vec![(429, "{}"), (400, "{}"), (200, "{}")]);
        let p = provider(url);
        assert!(p.complete(&request()).unwrap_err().is_transient());
        assert!(matches!(p.complete(&request()), Err(ProviderError::Permanent(_))));
        assert!(matches!(p.complete(&request()), Err(ProviderError::Permanent(_))));
        server.join().unwrap();
    }

    #[test]
    fn connection_refused_is_transient() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        drop(listener);
        assert!(provider(url).complete(&request()).unwrap_err().is_transient());
    }
}
