use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::exchange::{ChatExchange, Turn};
use crate::provider::{ChatProvider, CompletionRequest, PromptKey, ProviderError};
use crate::structured::{parse_json_object, StructuredSpec};
use crate::template::TemplateError;

#[derive(Debug, Error, PartialEq)]
pub enum LlmError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("no valid reply after {attempts} attempts: {last_error}")]
    ValidationExhausted { attempts: u32, last_error: String, last_raw: String },
}

/// Token bucket shared by every caller of one client.
#[derive(Debug)]
pub struct RateLimiter {
    per_second: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(requests_per_minute: u32, burst: u32) -> Self {
        let capacity = burst.max(1) as f64;
        RateLimiter {
            per_second: requests_per_minute.max(1) as f64 / 60.0,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Blocks until a request may be sent.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().expect("limiter lock");
                let now = Instant::now();
                let refill = now.duration_since(state.1).as_secs_f64() * self.per_second;
                state.0 = (state.0 + refill).min(self.capacity);
                state.1 = now;
                if state.0 >= 1.0 {
                    state.0 -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - state.0) / self.per_second)
            };
            std::thread::sleep(wait);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallRecord {
    pub template: Option<String>,
    pub values_hash: Option<String>,
    pub attempt: u32,
    pub retry: u32,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredReply {
    pub record: Map<String, Value>,
    pub raw: String,
    pub retries_used: u32,
}

/// Provider handle with retry, rate limiting and a call log. Cheap to share
/// behind an `Arc`.
pub struct LlmClient {
    provider: Arc<dyn ChatProvider>,
    limiter: Option<RateLimiter>,
    retry_delay: Duration,
    log: Mutex<Vec<CallRecord>>,
}

impl LlmClient {
    pub fn new(provider: Arc<dyn ChatProvider>) -> Self {
        LlmClient { provider, limiter: None, retry_delay: Duration::ZERO, log: Mutex::new(Vec::new()) }
    }

    pub fn with_rate_limit(mut self, limiter: RateLimiter) -> Self {
        self.limiter = Some(limiter);
        self
    }

    pub fn with_retry_delay(mut self, delay: Duration) -> Self {
        self.retry_delay = delay;
        self
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.log.lock().expect("log lock").clone()
    }

    /// Number of logged provider calls for one template.
    pub fn calls_for(&self, template: &str) -> usize {
        self.log.lock().expect("log lock").iter().filter(|c| c.template.as_deref() == Some(template)).count()
    }

    pub fn clear_log(&self) {
        self.log.lock().expect("log lock").clear();
    }

    fn send(&self, exchange: &ChatExchange, key: Option<&PromptKey>, attempt: u32) -> Result<String, ProviderError> {
        let mut request = CompletionRequest {
            messages: exchange.to_wire(),
            temperature: exchange.temperature,
            key: key.cloned(),
            attempt,
            retry: 0,
        };
        loop {
            if let Some(l) = &self.limiter {
                l.acquire();
            }
            let result = self.provider.complete(&request);
            self.log.lock().expect("log lock").push(CallRecord {
                template: key.map(|k| k.template.clone()),
                values_hash: key.map(|k| k.values_hash.clone()),
                attempt,
                retry: request.retry,
                ok: result.is_ok(),
            });
            match result {
                Err(e) if e.is_transient() && request.retry == 0 => {
                    request.retry = 1;
                    if !self.retry_delay.is_zero() {
                        std::thread::sleep(self.retry_delay);
                    }
                }
                other => return other,
            }
        }
    }

    /// Free-text completion. A transient failure is retried once.
    pub fn complete(&self, exchange: &ChatExchange, key: Option<&PromptKey>) -> Result<String, LlmError> {
        Ok(self.send(exchange, key, 0)?)
    }

    /// Free-text completion for a given re-prompt attempt number.
    pub fn complete_attempt(&self, exchange: &ChatExchange, key: Option<&PromptKey>, attempt: u32) -> Result<String, LlmError> {
        Ok(self.send(exchange, key, attempt)?)
    }

    /// Completion parsed as a JSON object and checked against `spec` and
    /// then `check`. A rejected reply is answered with the error and the
    /// request repeated, up to `spec.max_retries` times.
    pub fn complete_structured(
        &self,
        exchange: &ChatExchange,
        key: Option<&PromptKey>,
        spec: &StructuredSpec,
        check: &dyn Fn(&Map<String, Value>) -> Result<(), String>,
    ) -> Result<StructuredReply, LlmError> {
        let validate = |raw: &str| -> Result<Map<String, Value>, String> {
            let record = parse_json_object(raw)?;
            spec.validate(&record)?;
            check(&record)?;
            Ok(record)
        };
        let mut convo = exchange.clone();
        let mut attempt = 0;
        loop {
            let raw = self.send(&convo, key, attempt)?;
            match validate(&raw) {
                Ok(record) => {
                    return Ok(StructuredReply { record, raw, retries_used: attempt });
                }
                Err(error) if attempt >= spec.max_retries => {
                    return Err(LlmError::ValidationExhausted { attempts: attempt + 1, last_error: error, last_raw: raw });
                }
                Err(error) => {
                    if convo.push(Turn::assistant(raw)).is_ok() {
                        let _ = convo.push(Turn::user(format!(
                            "That reply was rejected: {error}. Answer again with a single JSON object that fixes this."
                        )));
                    }
                    attempt += 1;
                }
            }
        }
    }
}
