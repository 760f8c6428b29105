use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_dimension, EmbedError, Embedder, EmbeddingVector, ProviderSpec};
use crate::transport::JsonClient;

type BatchResult = Vec<Result<EmbeddingVector, EmbedError>>;

#[derive(Debug, Clone, PartialEq)]
pub struct HttpEmbedderConfig {
    pub model: String,
    pub endpoint: String,
    pub dimension: usize,
    pub api_key_env: Option<String>,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub timeout: Duration,
    pub retries: u32,
}

impl HttpEmbedderConfig {
    pub fn from_spec(spec: &ProviderSpec) -> Result<Self, EmbedError> {
        let missing = |what: &str| EmbedError::ProviderError(format!("http provider needs {what}"));
        Ok(HttpEmbedderConfig {
            model: spec.model_id.clone().ok_or_else(|| missing("a model id"))?,
            endpoint: spec.endpoint.clone().ok_or_else(|| missing("an endpoint"))?,
            dimension: spec
                .dimension
                .filter(|&d| d > 0)
                .ok_or_else(|| missing("a positive dimension"))?,
            api_key_env: spec.api_key_env.clone(),
            batch_size: spec.batch_size.unwrap_or(32).max(1),
            max_in_flight: spec.max_in_flight.unwrap_or(4).max(1),
            timeout: Duration::from_secs(spec.timeout_secs.unwrap_or(60)),
            retries: spec.retries.unwrap_or(3),
        })
    }
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

/// Client for OpenAI-compatible `POST {model, input: [..]}` embedding
/// endpoints. Inputs are sent in batches with a bounded number in flight.
#[derive(Debug)]
pub struct HttpEmbedder {
    config: HttpEmbedderConfig,
    client: JsonClient,
}

impl HttpEmbedder {
    pub fn new(config: HttpEmbedderConfig) -> Self {
        let bearer = JsonClient::bearer_from_env(config.api_key_env.as_deref());
        let client = JsonClient::new(config.timeout, config.retries, bearer);
        HttpEmbedder { config, client }
    }

    fn request_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let resp: EmbeddingResponse = self
            .client
            .post(
                &self.config.endpoint,
                &EmbeddingRequest {
                    model: &self.config.model,
                    input: texts,
                },
            )
            .map_err(EmbedError::ProviderError)?;
        let mut slots: Vec<Option<EmbeddingVector>> = vec![None; texts.len()];
        for d in resp.data {
            let slot = slots
                .get_mut(d.index)
                .ok_or_else(|| EmbedError::ProviderError(format!("response index {} out of range", d.index)))?;
            *slot = Some(check_dimension(
                EmbeddingVector::new(d.embedding)?,
                self.config.dimension,
            )?);
        }
        slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| EmbedError::ProviderError(format!("response is missing index {i}"))))
            .collect()
    }
}

impl Embedder for HttpEmbedder {
    fn model_id(&self) -> &str {
        &self.config.model
    }

    fn dimension(&self) -> usize {
        self.config.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        self.request_batch(&[text])?
            .pop()
            .ok_or_else(|| EmbedError::ProviderError("empty response".into()))
    }

    fn embed_batch(&self, texts: &[&str]) -> Vec<Result<EmbeddingVector, EmbedError>> {
        let chunks: Vec<&[&str]> = texts.chunks(self.config.batch_size).collect();
        let results: Mutex<Vec<Option<BatchResult>>> = Mutex::new((0..chunks.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.min(chunks.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(chunk) = chunks.get(i) else { break };
                    let out = match self.request_batch(chunk) {
                        Ok(vs) => vs.into_iter().map(Ok).collect(),
                        Err(e) => vec![Err(e); chunk.len()],
                    };
                    results.lock().expect("result lock")[i] = Some(out);
                });
            }
        });
        results
            .into_inner()
            .expect("result lock")
            .into_iter()
            .flat_map(|r| r.expect("every chunk processed"))
            .collect()
    }
}
