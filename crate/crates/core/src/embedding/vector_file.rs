//! Line-delimited vector files.
//!
//! ```text
//! {"model_id":"all-MiniLM-L6-v2","dimension":384,"count":2,"encoding":"decimal"}
//! {"text_hash":"9f86...","text":"first sentence","components":[0.1,...]}
//! {"text_hash":"60303...","components":"<base64 of little-endian f64>"}
//! ```
//!
//! Decimal components are written with shortest round-trip formatting, so
//! both encodings reload bit-exact.

use std::collections::HashMap;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbedError, Embedder, EmbeddingVector};
use crate::corpus::nfc;
use crate::io::write_atomic;

/// sha256 hex of the NFC-normalized text.
pub fn text_hash(text: &str) -> String {
    hex::encode(Sha256::digest(nfc(text).as_bytes()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorEncoding {
    #[default]
    Decimal,
    /// base64 of the components as little-endian IEEE-754 f64
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorFileHeader {
    pub model_id: String,
    pub dimension: usize,
    pub count: usize,
    #[serde(default)]
    pub encoding: VectorEncoding,
    /// Free-form note on how vectors were pooled (set by exporters).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooling: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Components {
    Decimal(Vec<f64>),
    Binary(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    text_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    components: Components,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorEntry {
    pub text_hash: String,
    pub text: Option<String>,
    pub vector: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFile {
    pub header: VectorFileHeader,
    entries: Vec<VectorEntry>,
    index: HashMap<String, usize>,
}

impl VectorFile {
    pub fn new(model_id: impl Into<String>, dimension: usize, encoding: VectorEncoding) -> Self {
        VectorFile {
            header: VectorFileHeader {
                model_id: model_id.into(),
                dimension,
                count: 0,
                encoding,
                pooling: None,
            },
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Adds a vector for `text`; a text already present is left unchanged.
    pub fn insert(&mut self, text: &str, vector: EmbeddingVector, keep_text: bool) -> Result<(), EmbedError> {
        let vector = super::check_dimension(vector, self.header.dimension)?;
        let hash = text_hash(text);
        if self.index.contains_key(&hash) {
            return Ok(());
        }
        self.index.insert(hash.clone(), self.entries.len());
        self.entries.push(VectorEntry {
            text_hash: hash,
            text: keep_text.then(|| nfc(text)),
            vector,
        });
        self.header.count = self.entries.len();
        Ok(())
    }

    pub fn get(&self, text: &str) -> Option<&EmbeddingVector> {
        self.get_by_hash(&text_hash(text))
    }

    pub fn get_by_hash(&self, hash: &str) -> Option<&EmbeddingVector> {
        self.index.get(hash).map(|&i| &self.entries[i].vector)
    }

    pub fn entries(&self) -> &[VectorEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for e in &self.entries {
            let components = match self.header.encoding {
                VectorEncoding::Decimal => Components::Decimal(e.vector.components().to_vec()),
                VectorEncoding::Binary => {
                    let bytes: Vec<u8> = e.vector.components().iter().flat_map(|x| x.to_le_bytes()).collect();
                    Components::Binary(B64.encode(bytes))
                }
            };
            let rec = Record {
                text_hash: e.text_hash.clone(),
                text: e.text.clone(),
                components,
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, EmbedError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| EmbedError::FormatError("missing header line".into()))?;
        let header: VectorFileHeader =
            serde_json::from_str(first).map_err(|e| EmbedError::FormatError(format!("header: {e}")))?;
        if header.dimension == 0 {
            return Err(EmbedError::FormatError("header dimension must be positive".into()));
        }
        let mut file = VectorFile::new(header.model_id.clone(), header.dimension, header.encoding);
        file.header.pooling = header.pooling.clone();
        for (idx, line) in lines {
            let rec: Record =
                serde_json::from_str(line).map_err(|e| EmbedError::FormatError(format!("line {}: {e}", idx + 1)))?;
            let components = match rec.components {
                Components::Decimal(v) => v,
                Components::Binary(s) => {
                    let bytes = B64
                        .decode(s.as_bytes())
                        .map_err(|e| EmbedError::FormatError(format!("line {}: {e}", idx + 1)))?;
                    if bytes.len() % 8 != 0 {
                        return Err(EmbedError::FormatError(format!(
                            "line {}: binary payload is not a whole number of f64",
                            idx + 1
                        )));
                    }
                    bytes
                        .chunks_exact(8)
                        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                        .collect()
                }
            };
            let vector = EmbeddingVector::new(components)?;
            if vector.dimension() != header.dimension {
                return Err(EmbedError::DimensionMismatch {
                    expected: header.dimension,
                    found: vector.dimension(),
                });
            }
            if file.index.contains_key(&rec.text_hash) {
                continue;
            }
            file.index.insert(rec.text_hash.clone(), file.entries.len());
            file.entries.push(VectorEntry {
                text_hash: rec.text_hash,
                text: rec.text,
                vector,
            });
        }
        if file.entries.len() != header.count {
            return Err(EmbedError::FormatError(format!(
                "header declares {} vectors, file holds {}",
                header.count,
                file.entries.len()
            )));
        }
        file.header.count = file.entries.len();
        Ok(file)
    }
}

pub fn load_vector_file(path: &Path) -> Result<VectorFile, EmbedError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| EmbedError::FormatError(format!("{}: {e}", path.display())))?;
    VectorFile::parse(&text)
}

pub fn save_vector_file(path: &Path, file: &VectorFile) -> Result<(), EmbedError> {
    write_atomic(path, file.to_text().as_bytes())
        .map_err(|e| EmbedError::FormatError(format!("{}: {e}", path.display())))
}

/// Replays vectors from a loaded file; unknown texts are a miss.
#[derive(Debug, Clone)]
pub struct VectorFileEmbedder {
    file: VectorFile,
}

impl VectorFileEmbedder {
    pub fn new(file: VectorFile) -> Self {
        VectorFileEmbedder { file }
    }
}

impl Embedder for VectorFileEmbedder {
    fn model_id(&self) -> &str {
        &self.file.header.model_id
    }

    fn dimension(&self) -> usize {
        self.file.header.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let hash = text_hash(text);
        self.file
            .get_by_hash(&hash)
            .cloned()
            .ok_or(EmbedError::MissingVector(hash))
    }
}
