use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BatchFailure, ClientConfig, SegmentationSource};
use crate::error::{Error, Result};

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: [Message<'a>; 1],
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Blocking client for an OpenAI-compatible chat-completions endpoint.
pub struct ChatClient {
    config: ClientConfig,
    http: reqwest::blocking::Client,
}

impl ChatClient {
    pub fn new(config: ClientConfig) -> Result<Self> {
        config.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::Config(format!("cannot build HTTP client: {e}")))?;
        Ok(ChatClient { config, http })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    /// Sends one batch and splits the reply into lines.
    ///
    /// Transport errors and non-2xx statuses are retried with exponential
    /// backoff. A 2xx reply whose body cannot be read yields no lines.
    pub fn request_segmentation<S: AsRef<str>>(
        &self,
        batch: &[S],
    ) -> std::result::Result<Vec<String>, BatchFailure> {
        let prompt = self.config.render_prompt(batch);
        let body = ChatRequest {
            model: &self.config.model,
            temperature: self.config.temperature,
            messages: [Message {
                role: "user",
                content: &prompt,
            }],
        };
        let mut last_error = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let delay = self
                    .config
                    .backoff_ms
                    .saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            let mut req = self.http.post(&self.config.endpoint).json(&body);
            if let Some(key) = &self.config.api_key {
                req = req.bearer_auth(key);
            }
            match req.send() {
                Ok(resp) if resp.status().is_success() => {
                    let text = resp.text().unwrap_or_default();
                    return Ok(reply_lines(&text));
                }
                Ok(resp) => {
                    last_error = format!("HTTP {}", resp.status());
                }
                Err(e) => last_error = e.to_string(),
            }
            log::warn!("request attempt {} failed: {last_error}", attempt + 1);
        }
        Err(BatchFailure(last_error))
    }
}

fn reply_lines(body: &str) -> Vec<String> {
    match serde_json::from_str::<ChatResponse>(body) {
        Ok(r) => r
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .map(|c| c.lines().map(str::to_owned).collect())
            .unwrap_or_default(),
        Err(e) => {
            log::warn!("malformed chat response: {e}");
            Vec::new()
        }
    }
}

impl SegmentationSource for ChatClient {
    fn segment_batch(&self, batch: &[&str]) -> std::result::Result<Vec<String>, BatchFailure> {
        self.request_segmentation(batch)
    }
}
