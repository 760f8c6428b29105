//! Tokenization, quantifier extraction and first-difference search.

use std::collections::{HashMap, HashSet};
use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

/// Lowercased word tokens of a sentence, with their original surface forms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    tokens: Vec<String>,
    surface: Vec<String>,
}

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Original-case form of each token (punctuation stripped).
    pub fn surface(&self) -> &[String] {
        &self.surface
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn sorted(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.iter().collect();
        v.sort_unstable();
        v
    }

    pub fn counts(&self) -> HashMap<&str, usize> {
        let mut m = HashMap::new();
        for t in self.iter() {
            *m.entry(t).or_insert(0) += 1;
        }
        m
    }
}

impl<S: AsRef<str>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let surface: Vec<String> = iter.into_iter().map(|s| s.as_ref().to_string()).collect();
        TokenSequence {
            tokens: surface.iter().map(|s| s.to_lowercase()).collect(),
            surface,
        }
    }
}

fn strip_token(raw: &str) -> &str {
    let start = raw
        .char_indices()
        .find(|&(i, c)| c.is_alphanumeric() || (c == '-' && raw[i + 1..].starts_with(|d: char| d.is_ascii_digit())))
        .map(|(i, _)| i);
    let Some(start) = start else { return "" };
    let end = raw
        .char_indices()
        .rev()
        .find(|&(_, c)| c.is_alphanumeric())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(start);
    if end <= start {
        return "";
    }
    &raw[start..end]
}

/// Splits on whitespace, strips leading and trailing punctuation from each
/// piece and lowercases. A leading minus sign directly before a digit is
/// kept; interior punctuation ("8.0", "don't") survives.
pub fn tokenize(text: &str) -> TokenSequence {
    text.split_whitespace()
        .map(strip_token)
        .filter(|t| !t.is_empty())
        .collect()
}

static QUANTIFIER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"-?[0-9]+(?:\.[0-9]+)?").expect("valid quantifier pattern"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quantifier {
    pub text: String,
    pub span: Range<usize>,
}

/// Every non-overlapping match of the signed-number pattern, in order.
pub fn extract_quantifiers(text: &str) -> Vec<Quantifier> {
    QUANTIFIER
        .find_iter(text)
        .map(|m| Quantifier {
            text: m.as_str().to_string(),
            span: m.range(),
        })
        .collect()
}

/// True when the whole token is exactly one quantifier match.
pub fn is_quantifier_token(token: &str) -> bool {
    QUANTIFIER
        .find(token)
        .is_some_and(|m| m.start() == 0 && m.end() == token.len())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffPair {
    pub w1: String,
    pub w2: String,
    pub position: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiffError {
    #[error("token sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("token sequences are identical")]
    NoDifference,
}

/// First position at which two equal-length sequences disagree.
pub fn find_diff(w1: &TokenSequence, w2: &TokenSequence) -> Result<DiffPair, DiffError> {
    if w1.len() != w2.len() {
        return Err(DiffError::LengthMismatch(w1.len(), w2.len()));
    }
    w1.iter()
        .zip(w2.iter())
        .enumerate()
        .find(|(_, (a, b))| a != b)
        .map(|(position, (a, b))| DiffPair {
            w1: a.to_string(),
            w2: b.to_string(),
            position,
        })
        .ok_or(DiffError::NoDifference)
}

static STOPWORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    include_str!("../../data/stopwords.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
});

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(token)
}

/// Tokens that are not function words.
pub fn content_words(tokens: &TokenSequence) -> Vec<&str> {
    tokens.iter().filter(|t| !is_stopword(t)).collect()
}
