//! Sentences, labeled pairs, triplets and corpora, plus the line-delimited
//! on-disk formats for triplet corpora and tagger input pairs.
//!
//! A corpus file is an optional header line followed by one triplet record
//! per line:
//!
//! ```text
//! {"header":{"name":"sample","seed":7,"composition":{...}}}
//! {"id":"ws-1","category":"WordSwap","base":{"text":"...","source":"Collected"},...}
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate triplet ids: {}", format_duplicates(.0))]
    DuplicateId(Vec<(usize, String)>),
    #[error("line {line}: empty text in slot {slot}")]
    EmptyText { line: usize, slot: &'static str },
    #[error("line {line}: triplet {id} violates {violations:?}")]
    InvariantViolation {
        line: usize,
        id: String,
        violations: Vec<Violation>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn format_duplicates(dups: &[(usize, String)]) -> String {
    dups.iter()
        .map(|(line, id)| format!("{id} (line {line})"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Where a sentence came from: taken from a labeled dataset, or produced by
/// the builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    Collected,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub id: String,
    pub text: String,
    pub source: Source,
}

impl Sentence {
    /// Builds a sentence, applying NFC normalization to the text.
    pub fn new(id: impl Into<String>, text: &str, source: Source) -> Self {
        Sentence {
            id: id.into(),
            text: nfc(text),
            source,
        }
    }

    pub fn is_blank(&self) -> bool {
        self.text.trim().is_empty()
    }
}

pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationLabel {
    Entailment,
    Contradiction,
    Neutral,
    Other,
}

impl FromStr for RelationLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "entailment" => Ok(RelationLabel::Entailment),
            "contradiction" => Ok(RelationLabel::Contradiction),
            "neutral" => Ok(RelationLabel::Neutral),
            "other" => Ok(RelationLabel::Other),
            _ => Err(format!("unknown relation label {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub id: String,
    pub s1: Sentence,
    pub s2: Sentence,
    pub label: RelationLabel,
}

impl SentencePair {
    pub fn new(id: impl Into<String>, s1: &str, s2: &str, label: RelationLabel) -> Self {
        let id = id.into();
        SentencePair {
            s1: Sentence::new(format!("{id}/s1"), s1, Source::Collected),
            s2: Sentence::new(format!("{id}/s2"), s2, Source::Collected),
            id,
            label,
        }
    }
}

/// The metamorphic relation a pair or triplet belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MrCategory {
    WordSwap,
    ObjSub,
    ActSub,
    NegaExp,
    WordDel,
    QuantSub,
    ErrTrans,
    ErrNli,
    Other,
}

impl MrCategory {
    /// The eight relations a triplet can carry, in reporting order.
    pub const RELATIONS: [MrCategory; 8] = [
        MrCategory::WordSwap,
        MrCategory::ObjSub,
        MrCategory::ActSub,
        MrCategory::NegaExp,
        MrCategory::WordDel,
        MrCategory::QuantSub,
        MrCategory::ErrTrans,
        MrCategory::ErrNli,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MrCategory::WordSwap => "WordSwap",
            MrCategory::ObjSub => "ObjSub",
            MrCategory::ActSub => "ActSub",
            MrCategory::NegaExp => "NegaExp",
            MrCategory::WordDel => "WordDel",
            MrCategory::QuantSub => "QuantSub",
            MrCategory::ErrTrans => "ErrTrans",
            MrCategory::ErrNli => "ErrNli",
            MrCategory::Other => "Other",
        }
    }

    pub fn is_word_level(self) -> bool {
        matches!(
            self,
            MrCategory::WordSwap
                | MrCategory::ObjSub
                | MrCategory::ActSub
                | MrCategory::NegaExp
                | MrCategory::WordDel
                | MrCategory::QuantSub
        )
    }
}

impl fmt::Display for MrCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MrCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MrCategory::RELATIONS
            .iter()
            .copied()
            .chain([MrCategory::Other])
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown category {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triplet {
    pub id: String,
    pub base: Sentence,
    pub positive: Sentence,
    pub negative: Sentence,
    pub category: MrCategory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Violation {
    EmptyText,
    PairwiseDistinct,
    CategoryOther,
}

impl Triplet {
    pub fn new(
        id: impl Into<String>,
        category: MrCategory,
        base: (&str, Source),
        positive: (&str, Source),
        negative: (&str, Source),
    ) -> Self {
        let id = id.into();
        Triplet {
            base: Sentence::new(format!("{id}/base"), base.0, base.1),
            positive: Sentence::new(format!("{id}/positive"), positive.0, positive.1),
            negative: Sentence::new(format!("{id}/negative"), negative.0, negative.1),
            category,
            id,
        }
    }

    pub fn texts(&self) -> [&str; 3] {
        [&self.base.text, &self.positive.text, &self.negative.text]
    }
}

/// Lists every triplet invariant that does not hold. Empty means valid.
pub fn validate_triplet(t: &Triplet) -> Vec<Violation> {
    let mut out = Vec::new();
    if t.base.is_blank() || t.positive.is_blank() || t.negative.is_blank() {
        out.push(Violation::EmptyText);
    }
    let [b, p, n] = t.texts();
    if b == p || b == n || p == n {
        out.push(Violation::PairwiseDistinct);
    }
    if t.category == MrCategory::Other {
        out.push(Violation::CategoryOther);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMetadata {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Set when the corpus is the swapped-negative control variant.
    #[serde(default, skip_serializing_if = "is_false")]
    pub nonmetamorphic: bool,
    /// Triplets left without a swap partner by the control transform.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unpaired: Vec<String>,
    /// Original negatives replaced by the control transform, by triplet id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub displaced: BTreeMap<String, SlotText>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotText {
    pub text: String,
    pub source: Source,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub metadata: CorpusMetadata,
    pub triplets: Vec<Triplet>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, triplets: Vec<Triplet>) -> Self {
        Corpus {
            metadata: CorpusMetadata {
                name: name.into(),
                ..Default::default()
            },
            triplets,
        }
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    /// Number of triplets per relation. Relations with no triplets are omitted.
    pub fn composition(&self) -> BTreeMap<MrCategory, usize> {
        let mut counts = BTreeMap::new();
        for t in &self.triplets {
            *counts.entry(t.category).or_insert(0) += 1;
        }
        counts
    }

    /// Every distinct sentence text, in first-appearance order.
    pub fn distinct_texts(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for t in &self.triplets {
            for text in t.texts() {
                if seen.insert(text) {
                    out.push(text);
                }
            }
        }
        out
    }

    /// Content hash over the triplet records (header excluded).
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for t in &self.triplets {
            hasher.update(record_line(t).as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SlotRecord {
    text: String,
    source: Source,
}

#[derive(Debug, Serialize, Deserialize)]
struct TripletRecord {
    id: String,
    category: MrCategory,
    base: SlotRecord,
    positive: SlotRecord,
    negative: SlotRecord,
}

#[derive(Debug, Serialize, Deserialize)]
struct HeaderBody {
    #[serde(flatten)]
    metadata: CorpusMetadata,
    #[serde(default)]
    composition: BTreeMap<MrCategory, usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct HeaderRecord {
    header: HeaderBody,
}

fn record_line(t: &Triplet) -> String {
    let slot = |s: &Sentence| SlotRecord {
        text: s.text.clone(),
        source: s.source,
    };
    let rec = TripletRecord {
        id: t.id.clone(),
        category: t.category,
        base: slot(&t.base),
        positive: slot(&t.positive),
        negative: slot(&t.negative),
    };
    serde_json::to_string(&rec).expect("triplet record serializes")
}

/// Writes the header line and one record per triplet.
pub fn serialize_corpus(c: &Corpus) -> String {
    let header = HeaderRecord {
        header: HeaderBody {
            metadata: c.metadata.clone(),
            composition: c.composition(),
        },
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for t in &c.triplets {
        out.push_str(&record_line(t));
        out.push('\n');
    }
    out
}

pub fn parse_corpus_str(text: &str) -> Result<Corpus, CorpusError> {
    parse_corpus(text.as_bytes())
}

/// Parses a corpus, validating every triplet and id uniqueness. Input order
/// is preserved.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::default();
    let mut first_seen: HashMap<String, usize> = HashMap::new();
    let mut duplicates = Vec::new();
    let mut saw_record = false;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        if value.get("header").is_some() {
            if saw_record {
                return Err(CorpusError::MalformedRecord {
                    line: line_no,
                    reason: "header after data records".into(),
                });
            }
            let header: HeaderRecord = serde_json::from_value(value).map_err(|e| CorpusError::MalformedRecord {
                line: line_no,
                reason: e.to_string(),
            })?;
            corpus.metadata = header.header.metadata;
            continue;
        }
        saw_record = true;
        let rec: TripletRecord = serde_json::from_value(value).map_err(|e| CorpusError::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        for (slot, s) in [
            ("base", &rec.base),
            ("positive", &rec.positive),
            ("negative", &rec.negative),
        ] {
            if s.text.trim().is_empty() {
                return Err(CorpusError::EmptyText { line: line_no, slot });
            }
        }
        let triplet = Triplet::new(
            rec.id,
            rec.category,
            (&rec.base.text, rec.base.source),
            (&rec.positive.text, rec.positive.source),
            (&rec.negative.text, rec.negative.source),
        );
        let violations = validate_triplet(&triplet);
        if !violations.is_empty() {
            return Err(CorpusError::InvariantViolation {
                line: line_no,
                id: triplet.id,
                violations,
            });
        }
        if first_seen.contains_key(&triplet.id) {
            duplicates.push((line_no, triplet.id.clone()));
        } else {
            first_seen.insert(triplet.id.clone(), line_no);
        }
        corpus.triplets.push(triplet);
    }
    if !duplicates.is_empty() {
        return Err(CorpusError::DuplicateId(duplicates));
    }
    Ok(corpus)
}

/// A tagger input record, optionally carrying the tag assigned to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub s1: String,
    pub s2: String,
    pub label: RelationLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<MrCategory>,
}

impl PairRecord {
    pub fn to_pair(&self) -> SentencePair {
        SentencePair::new(self.id.clone(), &self.s1, &self.s2, self.label)
    }
}

/// Parses line-delimited pair records. The error carries the 1-based line
/// number of the first bad record.
pub fn parse_pairs<R: BufRead>(reader: R) -> Result<Vec<PairRecord>, CorpusError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PairRecord = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        if rec.s1.trim().is_empty() || rec.s2.trim().is_empty() {
            return Err(CorpusError::EmptyText {
                line: idx + 1,
                slot: if rec.s1.trim().is_empty() { "s1" } else { "s2" },
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn serialize_pairs(pairs: &[PairRecord]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::to_string(p).expect("pair record serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws_record() -> &'static str {
        r#"{"id":"ws-1","category":"WordSwap","base":{"text":"The only industry in the town is light farming on the small rice paddies.","source":"Collected"},"positive":{"text":"Light farming on the small rice paddies is the only industry in the town.","source":"Generated"},"negative":{"text":"The light industry in the town is only farming on the small rice paddies.","source":"Collected"}}"#
    }

    #[test]
    fn one_record_parses() {
        let c = parse_corpus_str(ws_record()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.triplets[0].category, MrCategory::WordSwap);
        assert_eq!(c.triplets[0].positive.source, Source::Generated);
    }

    #[test]
    fn negative_equal_to_base_is_rejected() {
        let line = r#"{"id":"x","category":"ObjSub","base":{"text":"a b","source":"Collected"},"positive":{"text":"c d","source":"Generated"},"negative":{"text":"a b","source":"Collected"}}"#;
        match parse_corpus_str(line) {
            Err(CorpusError::InvariantViolation { violations, .. }) => {
                assert_eq!(violations, vec![Violation::PairwiseDistinct])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blank_text_is_rejected() {
        let line = r#"{"id":"x","category":"ObjSub","base":{"text":"  ","source":"Collected"},"positive":{"text":"c d","source":"Generated"},"negative":{"text":"a b","source":"Collected"}}"#;
        assert!(matches!(
            parse_corpus_str(line),
            Err(CorpusError::EmptyText { line: 1, slot: "base" })
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{}\n{{not json\n", ws_record());
        assert!(matches!(
            parse_corpus_str(&text),
            Err(CorpusError::MalformedRecord { line: 2, .. })
        ));
    }

    #[test]
    fn every_duplicate_is_reported() {
        let text = [ws_record(), ws_record(), ws_record()].join("\n");
        match parse_corpus_str(&text) {
            Err(CorpusError::DuplicateId(d)) => assert_eq!(d.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_flags_positive_equal_base_and_other() {
        let t = Triplet::new(
            "t",
            MrCategory::Other,
            ("x y", Source::Collected),
            ("x y", Source::Generated),
            ("z", Source::Collected),
        );
        assert_eq!(
            validate_triplet(&t),
            vec![Violation::PairwiseDistinct, Violation::CategoryOther]
        );
    }

    #[test]
    fn empty_corpus_has_no_data_lines() {
        let text = serialize_corpus(&Corpus::new("empty", vec![]));
        assert_eq!(text.lines().count(), 1);
        assert!(parse_corpus_str(&text).unwrap().is_empty());
    }

    #[test]
    fn ingest_applies_nfc() {
        let s = Sentence::new("s", "cafe\u{301}", Source::Collected);
        assert_eq!(s.text, "caf\u{e9}");
    }

    #[test]
    fn category_names_round_trip() {
        for c in MrCategory::RELATIONS {
            assert_eq!(c.as_str().parse::<MrCategory>().unwrap(), c);
        }
    }
}
