//! Order-sensitive text-pair scorers.
//!
//! A scorer maps `(s1, s2)` to a score in `[0, 1]`, higher meaning a better
//! match. Remote scorers speak `POST {s1, s2}` returning `{score}`; recorded
//! scores replay from a cassette of `{s1_hash, s2_hash, score}` lines.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::text_hash;
use crate::io::write_atomic;
use crate::tagger::tokens::tokenize;
use crate::transport::JsonClient;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScorerError {
    #[error("scorer request failed: {0}")]
    Request(String),
    #[error("score {0} outside [0, 1]")]
    RangeViolation(f64),
    #[error("no recorded score for ({s1_hash}, {s2_hash})")]
    Unrecorded { s1_hash: String, s2_hash: String },
    #[error("cassette: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSemantics {
    #[default]
    Similarity,
    /// Probability that `s1` entails `s2`.
    EntailmentProbability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerSpec {
    pub endpoint: String,
    #[serde(default)]
    pub semantics: ScoreSemantics,
    #[serde(default)]
    pub order_sensitive: bool,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default)]
    pub api_key_env: Option<String>,
}

fn default_timeout() -> u64 {
    30
}

fn default_retries() -> u32 {
    2
}

impl ScorerSpec {
    pub fn new(endpoint: impl Into<String>) -> Self {
        ScorerSpec {
            endpoint: endpoint.into(),
            semantics: ScoreSemantics::default(),
            order_sensitive: false,
            timeout_secs: default_timeout(),
            retries: default_retries(),
            api_key_env: None,
        }
    }
}

/// Rejects scores outside `[0, 1]`, including NaN.
pub fn check_range(score: f64) -> Result<f64, ScorerError> {
    if (0.0..=1.0).contains(&score) {
        Ok(score)
    } else {
        Err(ScorerError::RangeViolation(score))
    }
}

pub trait Scorer: Send + Sync {
    fn id(&self) -> &str;

    fn order_sensitive(&self) -> bool;

    fn score(&self, s1: &str, s2: &str) -> Result<f64, ScorerError>;
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    s1: &'a str,
    s2: &'a str,
}

#[derive(Deserialize)]
struct ScoreResponse {
    score: f64,
}

#[derive(Debug)]
pub struct HttpScorer {
    spec: ScorerSpec,
    client: JsonClient,
}

impl HttpScorer {
    pub fn new(spec: ScorerSpec) -> Self {
        let bearer = JsonClient::bearer_from_env(spec.api_key_env.as_deref());
        let client = JsonClient::new(Duration::from_secs(spec.timeout_secs), spec.retries, bearer);
        HttpScorer { spec, client }
    }
}

impl Scorer for HttpScorer {
    fn id(&self) -> &str {
        &self.spec.endpoint
    }

    fn order_sensitive(&self) -> bool {
        self.spec.order_sensitive
    }

    fn score(&self, s1: &str, s2: &str) -> Result<f64, ScorerError> {
        let resp: ScoreResponse = self
            .client
            .post(&self.spec.endpoint, &ScoreRequest { s1, s2 })
            .map_err(ScorerError::Request)?;
        check_range(resp.score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CassetteRecord {
    s1_hash: String,
    s2_hash: String,
    score: f64,
}

/// Recorded scores keyed by the ordered pair of text hashes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cassette {
    records: Vec<CassetteRecord>,
    index: HashMap<(String, String), usize>,
}

impl Cassette {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, s1: &str, s2: &str, score: f64) -> Result<(), ScorerError> {
        self.insert_hashed(text_hash(s1), text_hash(s2), check_range(score)?);
        Ok(())
    }

    fn insert_hashed(&mut self, s1_hash: String, s2_hash: String, score: f64) {
        let key = (s1_hash.clone(), s2_hash.clone());
        match self.index.get(&key) {
            Some(&i) => self.records[i].score = score,
            None => {
                self.index.insert(key, self.records.len());
                self.records.push(CassetteRecord {
                    s1_hash,
                    s2_hash,
                    score,
                });
            }
        }
    }

    pub fn get(&self, s1: &str, s2: &str) -> Option<f64> {
        self.index
            .get(&(text_hash(s1), text_hash(s2)))
            .map(|&i| self.records[i].score)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self, ScorerError> {
        let mut c = Cassette::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let rec: CassetteRecord =
                serde_json::from_str(line).map_err(|e| ScorerError::Format(format!("line {}: {e}", i + 1)))?;
            let score = check_range(rec.score)?;
            c.insert_hashed(rec.s1_hash, rec.s2_hash, score);
        }
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("cassette record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self, ScorerError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ScorerError::Format(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScorerError> {
        write_atomic(path, self.to_text().as_bytes())
            .map_err(|e| ScorerError::Format(format!("{}: {e}", path.display())))
    }
}

/// Replays a cassette; unrecorded pairs are errors.
#[derive(Debug, Clone)]
pub struct CassetteScorer {
    id: String,
    cassette: Cassette,
    order_sensitive: bool,
}

impl CassetteScorer {
    pub fn new(id: impl Into<String>, cassette: Cassette, order_sensitive: bool) -> Self {
        CassetteScorer {
            id: id.into(),
            cassette,
            order_sensitive,
        }
    }
}

impl Scorer for CassetteScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn order_sensitive(&self) -> bool {
        self.order_sensitive
    }

    fn score(&self, s1: &str, s2: &str) -> Result<f64, ScorerError> {
        self.cassette.get(s1, s2).ok_or_else(|| ScorerError::Unrecorded {
            s1_hash: text_hash(s1),
            s2_hash: text_hash(s2),
        })
    }
}

/// Always returns the same score.
#[derive(Debug, Clone, Copy)]
pub struct ConstantScorer(pub f64);

impl Scorer for ConstantScorer {
    fn id(&self) -> &str {
        "constant"
    }

    fn order_sensitive(&self) -> bool {
        false
    }

    fn score(&self, _: &str, _: &str) -> Result<f64, ScorerError> {
        check_range(self.0)
    }
}

/// 1.0 when every token of `s2` occurs in `s1` (with multiplicity), else
/// 0.0. A crude one-directional entailment: a sentence "entails" any of its
/// own deletions but not the reverse.
#[derive(Debug, Clone, Copy, Default)]
pub struct ContainmentScorer;

impl Scorer for ContainmentScorer {
    fn id(&self) -> &str {
        "containment"
    }

    fn order_sensitive(&self) -> bool {
        true
    }

    fn score(&self, s1: &str, s2: &str) -> Result<f64, ScorerError> {
        let have = tokenize(s1);
        let mut available = have.counts();
        for tok in tokenize(s2).iter() {
            match available.get_mut(tok) {
                Some(n) if *n > 0 => *n -= 1,
                _ => return Ok(0.0),
            }
        }
        Ok(1.0)
    }
}

/// Jaccard similarity of the token sets. Symmetric; `score(x, x) == 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct JaccardScorer;

impl Scorer for JaccardScorer {
    fn id(&self) -> &str {
        "jaccard"
    }

    fn order_sensitive(&self) -> bool {
        false
    }

    fn score(&self, s1: &str, s2: &str) -> Result<f64, ScorerError> {
        let a = tokenize(s1);
        let b = tokenize(s2);
        let a: std::collections::HashSet<&str> = a.iter().collect();
        let b: std::collections::HashSet<&str> = b.iter().collect();
        let union = a.union(&b).count();
        if union == 0 {
            return Ok(1.0);
        }
        Ok(a.intersection(&b).count() as f64 / union as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_similarity_of_identical_text() {
        assert_eq!(JaccardScorer.score("the cat sat", "the cat sat").unwrap(), 1.0);
    }

    #[test]
    fn containment_is_directional() {
        let long = "In 2012, Jordan started all 16 games";
        let short = "Jordan started all 16 games";
        assert_eq!(ContainmentScorer.score(long, short).unwrap(), 1.0);
        assert_eq!(ContainmentScorer.score(short, long).unwrap(), 0.0);
    }

    #[test]
    fn containment_counts_repeats() {
        assert_eq!(ContainmentScorer.score("a b", "a a").unwrap(), 0.0);
        assert_eq!(ContainmentScorer.score("a b a", "a a").unwrap(), 1.0);
    }

    #[test]
    fn range_is_enforced() {
        assert_eq!(check_range(1.5), Err(ScorerError::RangeViolation(1.5)));
        assert!(check_range(f64::NAN).is_err());
        assert!(ConstantScorer(-0.1).score("a", "b").is_err());
        assert_eq!(check_range(0.0), Ok(0.0));
    }

    #[test]
    fn cassette_round_trip_and_order() {
        let mut c = Cassette::new();
        c.insert("a", "b", 0.25).unwrap();
        c.insert("b", "a", 0.75).unwrap();
        let c2 = Cassette::parse(&c.to_text()).unwrap();
        assert_eq!(c2, c);
        let s = CassetteScorer::new("rec", c2, true);
        assert_eq!(s.score("a", "b").unwrap(), 0.25);
        assert_eq!(s.score("b", "a").unwrap(), 0.75);
        assert!(matches!(s.score("a", "c"), Err(ScorerError::Unrecorded { .. })));
    }

    #[test]
    fn cassette_rejects_out_of_range() {
        let line = format!(
            "{{\"s1_hash\":\"{}\",\"s2_hash\":\"{}\",\"score\":2.0}}\n",
            text_hash("a"),
            text_hash("b")
        );
        assert_eq!(Cassette::parse(&line), Err(ScorerError::RangeViolation(2.0)));
    }
}
