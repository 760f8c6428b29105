use super::{EmbedError, Embedder, EmbeddingVector};
use crate::tagger::tokens::tokenize;

pub const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn bucket(feature: &str, dim: usize) -> usize {
    (fnv1a64(feature.as_bytes()) % dim as u64) as usize
}

fn check_dim(dim: usize) -> Result<usize, EmbedError> {
    if dim == 0 {
        Err(EmbedError::Empty)
    } else {
        Ok(dim)
    }
}

/// Token counts hashed into `dim` buckets. Order-insensitive by construction.
#[derive(Debug, Clone)]
pub struct BagOfWordsEmbedder {
    dim: usize,
    model_id: String,
}

impl BagOfWordsEmbedder {
    pub fn new(dim: usize) -> Result<Self, EmbedError> {
        let dim = check_dim(dim)?;
        Ok(BagOfWordsEmbedder {
            dim,
            model_id: format!("bow-fnv1a-{dim}"),
        })
    }
}

impl Embedder for BagOfWordsEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut v = vec![0.0; self.dim];
        for tok in tokenize(text).iter() {
            v[bucket(tok, self.dim)] += 1.0;
        }
        EmbeddingVector::new(v)
    }
}

/// Character n-gram counts over the lowercased raw string (spaces and
/// punctuation included), hashed into `dim` buckets.
#[derive(Debug, Clone)]
pub struct CharNgramEmbedder {
    n: usize,
    dim: usize,
    model_id: String,
}

impl CharNgramEmbedder {
    pub fn new(n: usize, dim: usize) -> Result<Self, EmbedError> {
        let dim = check_dim(dim)?;
        let n = n.max(1);
        Ok(CharNgramEmbedder {
            n,
            dim,
            model_id: format!("char{n}-fnv1a-{dim}"),
        })
    }

    pub fn grams(&self, text: &str) -> Vec<String> {
        let chars: Vec<char> = text.to_lowercase().chars().collect();
        if chars.is_empty() {
            return Vec::new();
        }
        if chars.len() < self.n {
            return vec![chars.iter().collect()];
        }
        chars.windows(self.n).map(|w| w.iter().collect()).collect()
    }
}

impl Embedder for CharNgramEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut v = vec![0.0; self.dim];
        for g in self.grams(text) {
            v[bucket(&g, self.dim)] += 1.0;
        }
        EmbeddingVector::new(v)
    }
}
