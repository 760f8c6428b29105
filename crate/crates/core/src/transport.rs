//! Blocking JSON-over-HTTP with retries, shared by the embedding, scorer and
//! generation clients.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use ureq::Agent;

#[derive(Debug, Clone)]
pub struct JsonClient {
    agent: Agent,
    retries: u32,
    bearer: Option<String>,
}

impl JsonClient {
    pub fn new(timeout: Duration, retries: u32, bearer: Option<String>) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        JsonClient { agent, retries, bearer }
    }

    /// Reads a bearer token from the named environment variable, if set.
    pub fn bearer_from_env(var: Option<&str>) -> Option<String> {
        var.and_then(|v| std::env::var(v).ok()).filter(|k| !k.is_empty())
    }

    /// POSTs `body` and decodes the JSON reply. Transport failures and 5xx
    /// replies are retried up to `retries` extra times; 4xx is final.
    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, url: &str, body: &Req) -> Result<Resp, String> {
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(50 << attempt.min(6)));
            }
            let mut req = self.agent.post(url);
            if let Some(token) = &self.bearer {
                req = req.header("Authorization", &format!("Bearer {token}"));
            }
            match req.send_json(body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if (200..300).contains(&status) {
                        return resp
                            .body_mut()
                            .read_json::<Resp>()
                            .map_err(|e| format!("{url}: bad response body: {e}"));
                    }
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    last = format!("{url}: HTTP {status}: {}", text.trim());
                    if status < 500 && status != 429 {
                        return Err(last);
                    }
                }
                Err(e) => last = format!("{url}: {e}"),
            }
            log::debug!("request attempt {} failed: {last}", attempt + 1);
        }
        Err(last)
    }
}
