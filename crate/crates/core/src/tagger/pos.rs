//! Coarse part-of-speech tagging behind the [`PosTagger`] trait.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, LazyLock};

use thiserror::Error;

use super::tokens::TokenSequence;

/// Coarse tag classes. A fine Penn tag belongs to a class when it starts with
/// the class prefix (`VBD` is `VB`, `NNP` is `NN`, `PRP$` is `PRP`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    NN,
    PRP,
    JJ,
    RB,
    VB,
    OtherTag,
}

impl PosTag {
    pub fn from_fine(tag: &str) -> PosTag {
        // PRP before NN/RB so "PRP$" never falls through.
        const CLASSES: [(&str, PosTag); 5] = [
            ("PRP", PosTag::PRP),
            ("NN", PosTag::NN),
            ("JJ", PosTag::JJ),
            ("RB", PosTag::RB),
            ("VB", PosTag::VB),
        ];
        CLASSES
            .iter()
            .find(|(prefix, _)| tag.starts_with(prefix))
            .map(|&(_, t)| t)
            .unwrap_or(PosTag::OtherTag)
    }

    pub fn is_object(self) -> bool {
        matches!(self, PosTag::NN | PosTag::PRP)
    }

    pub fn is_modifier(self) -> bool {
        matches!(self, PosTag::JJ | PosTag::RB)
    }
}

pub trait PosTagger: Send + Sync {
    /// One tag per token position.
    fn tag(&self, tokens: &TokenSequence) -> Vec<PosTag>;
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: expected word<TAB>TAG")]
    Format { line: usize },
    #[error("cannot read lexicon: {0}")]
    Io(#[from] std::io::Error),
}

/// Word to most-frequent-tag lookup with suffix fallbacks for unknown words.
#[derive(Debug, Clone)]
pub struct LexiconTagger {
    entries: HashMap<String, PosTag>,
}

static BUNDLED: LazyLock<Arc<LexiconTagger>> = LazyLock::new(|| {
    Arc::new(LexiconTagger::parse(include_str!("../../data/lexicon.tsv")).expect("bundled lexicon is well formed"))
});

impl LexiconTagger {
    /// The lexicon shipped with the crate, loaded once.
    pub fn bundled() -> Arc<LexiconTagger> {
        BUNDLED.clone()
    }

    pub fn from_path(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut entries = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tag) = line.split_once('\t').ok_or(LexiconError::Format { line: idx + 1 })?;
            let (word, tag) = (word.trim(), tag.trim());
            if word.is_empty() || tag.is_empty() {
                return Err(LexiconError::Format { line: idx + 1 });
            }
            entries
                .entry(word.to_lowercase())
                .or_insert_with(|| PosTag::from_fine(tag));
        }
        Ok(LexiconTagger { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, word: &str) -> Option<PosTag> {
        self.entries.get(word).copied()
    }

    fn tag_one(&self, token: &str) -> PosTag {
        if let Some(tag) = self.lookup(token) {
            return tag;
        }
        if token.ends_with("ly") {
            PosTag::RB
        } else if token.ends_with("ing") || token.ends_with("ed") {
            PosTag::VB
        } else if ["ous", "ful", "ive"].iter().any(|s| token.ends_with(s)) {
            PosTag::JJ
        } else {
            // capitalized unknowns are names; everything else defaults to NN too
            PosTag::NN
        }
    }
}

impl PosTagger for LexiconTagger {
    fn tag(&self, tokens: &TokenSequence) -> Vec<PosTag> {
        tokens.iter().map(|t| self.tag_one(t)).collect()
    }
}
