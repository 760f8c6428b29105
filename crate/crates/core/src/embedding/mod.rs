//! Sentence embedding providers and the vector type they produce.
//!
//! Every provider implements [`Embedder`]. The built-in hashed embedders are
//! pure functions of (text, spec); [`VectorFileEmbedder`] replays vectors
//! materialized earlier; [`HttpEmbedder`] calls an OpenAI-compatible
//! embeddings endpoint. Vectors are stored raw: normalization happens in
//! the matcher.

mod hashed;
mod http;
mod vector_file;

pub use hashed::{fnv1a64, BagOfWordsEmbedder, CharNgramEmbedder, FNV_OFFSET, FNV_PRIME};
pub use http::{HttpEmbedder, HttpEmbedderConfig};
pub use vector_file::{
    load_vector_file, save_vector_file, text_hash, VectorEncoding, VectorFile, VectorFileEmbedder, VectorFileHeader,
};

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("no stored vector for text hash {0}")]
    MissingVector(String),
    #[error("provider error: {0}")]
    ProviderError(String),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector has non-finite component at index {0}")]
    NonFinite(usize),
    #[error("zero-length vector")]
    Empty,
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("vector file: {0}")]
    FormatError(String),
}

/// A finite, non-empty feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(components: Vec<f64>) -> Result<Self, EmbedError> {
        if components.is_empty() {
            return Err(EmbedError::Empty);
        }
        if let Some(i) = components.iter().position(|x| !x.is_finite()) {
            return Err(EmbedError::NonFinite(i));
        }
        Ok(EmbeddingVector(components))
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = EmbedError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        EmbeddingVector::new(v)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

/// Scales to unit L2 norm.
pub fn normalize(v: &EmbeddingVector) -> Result<EmbeddingVector, EmbedError> {
    let norm = v.l2_norm();
    if norm == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    Ok(EmbeddingVector(v.0.iter().map(|x| x / norm).collect()))
}

pub trait Embedder: Send + Sync {
    fn model_id(&self) -> &str;

    fn dimension(&self) -> usize;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    /// Embeds many texts. Remote providers override this to batch requests.
    fn embed_batch(&self, texts: &[&str]) -> Vec<Result<EmbeddingVector, EmbedError>> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

pub(crate) fn check_dimension(v: EmbeddingVector, expected: usize) -> Result<EmbeddingVector, EmbedError> {
    if v.dimension() != expected {
        return Err(EmbedError::DimensionMismatch {
            expected,
            found: v.dimension(),
        });
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    VectorFile,
    HttpApi,
    BagOfWords,
    CharNgram,
}

/// Declarative description of a provider, as read from flags or config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderSpec {
    pub kind: ProviderKind,
    #[serde(default)]
    pub model_id: Option<String>,
    #[serde(default)]
    pub dimension: Option<usize>,
    /// Vector file path for `VectorFile`.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Environment variable holding the bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub max_in_flight: Option<usize>,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
    #[serde(default)]
    pub retries: Option<u32>,
}

pub const DEFAULT_BOW_DIM: usize = 64;
pub const DEFAULT_CHAR_DIM: usize = 512;

impl ProviderSpec {
    fn bare(kind: ProviderKind) -> Self {
        ProviderSpec {
            kind,
            model_id: None,
            dimension: None,
            path: None,
            endpoint: None,
            api_key_env: None,
            batch_size: None,
            max_in_flight: None,
            timeout_secs: None,
            retries: None,
        }
    }

    pub fn bag_of_words(dimension: usize) -> Self {
        ProviderSpec {
            dimension: Some(dimension),
            ..Self::bare(ProviderKind::BagOfWords)
        }
    }

    pub fn char_ngram(dimension: usize) -> Self {
        ProviderSpec {
            dimension: Some(dimension),
            ..Self::bare(ProviderKind::CharNgram)
        }
    }

    pub fn vector_file(path: impl Into<PathBuf>) -> Self {
        ProviderSpec {
            path: Some(path.into()),
            ..Self::bare(ProviderKind::VectorFile)
        }
    }

    pub fn http(model: &str, endpoint: &str, dimension: usize) -> Self {
        ProviderSpec {
            model_id: Some(model.to_string()),
            endpoint: Some(endpoint.to_string()),
            dimension: Some(dimension),
            ..Self::bare(ProviderKind::HttpApi)
        }
    }

    /// Instantiates the provider. Vector files are read here.
    pub fn build(&self) -> Result<Arc<dyn Embedder>, EmbedError> {
        match self.kind {
            ProviderKind::BagOfWords => Ok(Arc::new(BagOfWordsEmbedder::new(
                self.dimension.unwrap_or(DEFAULT_BOW_DIM),
            )?)),
            ProviderKind::CharNgram => Ok(Arc::new(CharNgramEmbedder::new(
                3,
                self.dimension.unwrap_or(DEFAULT_CHAR_DIM),
            )?)),
            ProviderKind::VectorFile => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| EmbedError::FormatError("vector_file provider needs a path".into()))?;
                let file = load_vector_file(path)?;
                if let Some(dim) = self.dimension {
                    if dim != file.header.dimension {
                        return Err(EmbedError::DimensionMismatch {
                            expected: dim,
                            found: file.header.dimension,
                        });
                    }
                }
                Ok(Arc::new(VectorFileEmbedder::new(file)))
            }
            ProviderKind::HttpApi => {
                let cfg = HttpEmbedderConfig::from_spec(self)?;
                Ok(Arc::new(HttpEmbedder::new(cfg)))
            }
        }
    }
}

impl FromStr for ProviderSpec {
    type Err = String;

    /// `bow[:DIM]`, `char[:DIM]`, `file:PATH`, `http:MODEL@ENDPOINT#DIM`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let dim = |r: Option<&str>, default: usize| -> Result<usize, String> {
            match r {
                None => Ok(default),
                Some(r) => r
                    .parse::<usize>()
                    .ok()
                    .filter(|&d| d > 0)
                    .ok_or_else(|| format!("bad dimension {r:?} in provider {s:?}")),
            }
        };
        match head.to_ascii_lowercase().as_str() {
            "bow" | "bag_of_words" => Ok(Self::bag_of_words(dim(rest, DEFAULT_BOW_DIM)?)),
            "char" | "char3" | "char_ngram" => Ok(Self::char_ngram(dim(rest, DEFAULT_CHAR_DIM)?)),
            "file" | "vectors" => {
                let path = rest.filter(|r| !r.is_empty()).ok_or("file provider needs a path")?;
                Ok(Self::vector_file(path))
            }
            "http" => {
                let rest = rest.ok_or("http provider needs MODEL@ENDPOINT#DIM")?;
                let (model, tail) = rest.split_once('@').ok_or("http provider needs MODEL@ENDPOINT#DIM")?;
                let (endpoint, d) = tail.rsplit_once('#').ok_or("http provider needs MODEL@ENDPOINT#DIM")?;
                Ok(Self::http(model, endpoint, dim(Some(d), 0)?))
            }
            _ => Err(format!("unknown provider {s:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_three_four_five() {
        let v = EmbeddingVector::new(vec![3.0, 4.0]).unwrap();
        let n = normalize(&v).unwrap();
        assert!((n.components()[0] - 0.6).abs() < 1e-15);
        assert!((n.components()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn normalize_unit_is_identity() {
        let v = EmbeddingVector::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(normalize(&v).unwrap(), v);
    }

    #[test]
    fn normalize_zero_fails() {
        let v = EmbeddingVector::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(normalize(&v), Err(EmbedError::ZeroVector));
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(EmbeddingVector::new(vec![1.0, f64::NAN]), Err(EmbedError::NonFinite(1)));
        assert_eq!(EmbeddingVector::new(vec![]), Err(EmbedError::Empty));
    }

    #[test]
    fn provider_strings() {
        assert_eq!(
            "bow:64".parse::<ProviderSpec>().unwrap(),
            ProviderSpec::bag_of_words(64)
        );
        assert_eq!("char".parse::<ProviderSpec>().unwrap(), ProviderSpec::char_ngram(512));
        assert_eq!(
            "file:/tmp/v.jsonl".parse::<ProviderSpec>().unwrap(),
            ProviderSpec::vector_file("/tmp/v.jsonl")
        );
        assert_eq!(
            "http:m1@http://localhost:9/v1/embeddings#8"
                .parse::<ProviderSpec>()
                .unwrap(),
            ProviderSpec::http("m1", "http://localhost:9/v1/embeddings", 8)
        );
        assert!("bow:0".parse::<ProviderSpec>().is_err());
        assert!("nope".parse::<ProviderSpec>().is_err());
    }
}
