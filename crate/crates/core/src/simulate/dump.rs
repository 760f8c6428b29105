//! Outcome dumps: a header naming the corpus, then one line per
//! (triplet, method) outcome.
//!
//! ```text
//! {"corpus_name":"sample","corpus_hash":"3f1c..."}
//! {"triplet_id":"ws-1","category":"WordSwap","method_id":"bow-fnv1a-64+CD","d_pos":0.42,"d_neg":0.0,"verdict":"FalseMatch"}
//! {"triplet_id":"ws-2","category":"WordSwap","method_id":"file+CD","error":"no stored vector for text hash 9f86..."}
//! ```

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::MrCategory;

use super::{outcome_key, MatchFailure, MatchOutcome, Measure, Outcome, Verdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DumpError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("corpus hash mismatch: {0} vs {1}")]
    CorpusMismatch(String, String),
    #[error("outcome for triplet {triplet_id} under {method_id} appears twice")]
    Duplicate { triplet_id: String, method_id: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDump {
    pub corpus_name: String,
    pub corpus_hash: String,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DumpHeader {
    corpus_name: String,
    corpus_hash: String,
}

fn is_distance(m: &Measure) -> bool {
    *m == Measure::Distance
}

#[derive(Debug, Serialize, Deserialize)]
struct DumpRecord {
    triplet_id: String,
    category: MrCategory,
    method_id: String,
    #[serde(default, skip_serializing_if = "is_distance")]
    measure: Measure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d_pos: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d_neg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl From<&Outcome> for DumpRecord {
    fn from(o: &Outcome) -> Self {
        match o {
            Ok(m) => DumpRecord {
                triplet_id: m.triplet_id.clone(),
                category: m.category,
                method_id: m.method_id.clone(),
                measure: m.measure,
                d_pos: Some(m.d_pos),
                d_neg: Some(m.d_neg),
                verdict: Some(m.verdict),
                error: None,
            },
            Err(f) => DumpRecord {
                triplet_id: f.triplet_id.clone(),
                category: f.category,
                method_id: f.method_id.clone(),
                measure: Measure::Distance,
                d_pos: None,
                d_neg: None,
                verdict: None,
                error: Some(f.error.clone()),
            },
        }
    }
}

impl DumpRecord {
    fn into_outcome(self) -> Result<Outcome, String> {
        if let Some(error) = self.error {
            return Ok(Err(MatchFailure {
                triplet_id: self.triplet_id,
                category: self.category,
                method_id: self.method_id,
                error,
            }));
        }
        let (Some(d_pos), Some(d_neg), Some(verdict)) = (self.d_pos, self.d_neg, self.verdict) else {
            return Err("record needs d_pos, d_neg and verdict, or an error".into());
        };
        let expected = self.measure.verdict(d_pos, d_neg);
        if verdict != expected {
            return Err(format!(
                "verdict {verdict:?} contradicts values (expected {expected:?})"
            ));
        }
        Ok(Ok(MatchOutcome {
            triplet_id: self.triplet_id,
            category: self.category,
            method_id: self.method_id,
            measure: self.measure,
            d_pos,
            d_neg,
            verdict,
        }))
    }
}

pub fn serialize_dump(d: &OutcomeDump) -> String {
    let header = DumpHeader {
        corpus_name: d.corpus_name.clone(),
        corpus_hash: d.corpus_hash.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("dump header serializes");
    out.push('\n');
    for o in &d.outcomes {
        out.push_str(&serde_json::to_string(&DumpRecord::from(o)).expect("dump record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_dump(text: &str) -> Result<OutcomeDump, DumpError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let malformed = |line: usize, reason: String| DumpError::Malformed { line, reason };
    let (i, first) = lines.next().ok_or_else(|| malformed(1, "missing header".into()))?;
    let header: DumpHeader = serde_json::from_str(first).map_err(|e| malformed(i + 1, e.to_string()))?;
    let mut outcomes = Vec::new();
    for (i, line) in lines {
        let rec: DumpRecord = serde_json::from_str(line).map_err(|e| malformed(i + 1, e.to_string()))?;
        outcomes.push(rec.into_outcome().map_err(|r| malformed(i + 1, r))?);
    }
    Ok(OutcomeDump {
        corpus_name: header.corpus_name,
        corpus_hash: header.corpus_hash,
        outcomes,
    })
}

/// Concatenates dumps of the same corpus. Mixed corpora and repeated
/// (triplet, method) outcomes are rejected.
pub fn merge_dumps(dumps: Vec<OutcomeDump>) -> Result<OutcomeDump, DumpError> {
    let mut iter = dumps.into_iter();
    let Some(mut merged) = iter.next() else {
        return Ok(OutcomeDump {
            corpus_name: String::new(),
            corpus_hash: String::new(),
            outcomes: Vec::new(),
        });
    };
    for d in iter {
        if d.corpus_hash != merged.corpus_hash {
            return Err(DumpError::CorpusMismatch(merged.corpus_hash, d.corpus_hash));
        }
        merged.outcomes.extend(d.outcomes);
    }
    let mut seen = HashSet::new();
    for o in &merged.outcomes {
        let (method_id, triplet_id) = outcome_key(o);
        if !seen.insert((method_id, triplet_id)) {
            return Err(DumpError::Duplicate {
                triplet_id: triplet_id.to_string(),
                method_id: method_id.to_string(),
            });
        }
    }
    Ok(merged)
}
