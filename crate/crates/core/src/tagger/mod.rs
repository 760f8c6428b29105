//! Metamorphic-relation tagging of labeled sentence pairs.
//!
//! [`MrTagger::gold_tag`] is the word-level classifier: it compares the two
//! lowercased token lists and decides whether the contradiction came from a
//! reordering, a single-word substitution (numeric, object, modifier or
//! verb), or a deletion/insertion. Pairs it cannot place fall back to the
//! sentence-level heuristics in [`MrTagger::tag_sentence_level`].

pub mod pos;
pub mod tokens;

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::corpus::{MrCategory, RelationLabel, SentencePair};
use pos::{LexiconTagger, PosTag, PosTagger};
use tokens::{content_words, find_diff, is_quantifier_token, tokenize, TokenSequence};

/// Cut-offs for the sentence-level relations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentenceLevelThresholds {
    /// shorter/longer token count for back-translation pairs
    pub min_length_ratio: f64,
    /// Jaccard overlap of content-word sets for back-translation pairs
    pub min_content_overlap: f64,
    /// share of the claim's content words found in the context
    pub min_claim_coverage: f64,
}

impl Default for SentenceLevelThresholds {
    fn default() -> Self {
        SentenceLevelThresholds {
            min_length_ratio: 0.75,
            min_content_overlap: 0.6,
            min_claim_coverage: 0.8,
        }
    }
}

#[derive(Clone)]
pub struct MrTagger {
    pos: Arc<dyn PosTagger>,
    thresholds: SentenceLevelThresholds,
}

impl Default for MrTagger {
    fn default() -> Self {
        MrTagger::new(LexiconTagger::bundled())
    }
}

impl std::fmt::Debug for MrTagger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MrTagger")
            .field("thresholds", &self.thresholds)
            .finish_non_exhaustive()
    }
}

fn multiset_union_len(a: &HashMap<&str, usize>, b: &HashMap<&str, usize>) -> usize {
    let keys: HashSet<&str> = a.keys().chain(b.keys()).copied().collect();
    keys.iter()
        .map(|k| {
            let ca = a.get(k).copied().unwrap_or(0);
            let cb = b.get(k).copied().unwrap_or(0);
            ca.max(cb)
        })
        .sum()
}

/// Tokens of `long` left over after removing one occurrence of each token of
/// `short`, or `None` when `short` is not a sub-multiset of `long`.
fn multiset_remainder<'a>(short: &TokenSequence, long: &'a TokenSequence) -> Option<Vec<&'a str>> {
    let mut need = short.counts();
    let mut rest = Vec::new();
    for t in long.iter() {
        match need.get_mut(t) {
            Some(c) if *c > 0 => *c -= 1,
            _ => rest.push(t),
        }
    }
    need.values().all(|&c| c == 0).then_some(rest)
}

impl MrTagger {
    pub fn new(pos: Arc<dyn PosTagger>) -> Self {
        MrTagger {
            pos,
            thresholds: SentenceLevelThresholds::default(),
        }
    }

    pub fn with_thresholds(mut self, thresholds: SentenceLevelThresholds) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn thresholds(&self) -> SentenceLevelThresholds {
        self.thresholds
    }

    /// Word-level relation of a labeled pair. Entailment pairs are always
    /// `Other`; so are pairs whose token lists are identical.
    pub fn gold_tag(&self, pair: &SentencePair) -> MrCategory {
        if pair.label == RelationLabel::Entailment {
            return MrCategory::Other;
        }
        let w1 = tokenize(&pair.s1.text);
        let w2 = tokenize(&pair.s2.text);

        if w1.sorted() == w2.sorted() {
            return if w1.tokens() == w2.tokens() {
                MrCategory::Other
            } else {
                MrCategory::WordSwap
            };
        }

        let (c1, c2) = (w1.counts(), w2.counts());
        let union = multiset_union_len(&c1, &c2);
        if w1.len() == w2.len() && (union - w1.len() <= 1 || union - w2.len() <= 1) {
            let Ok(diff) = find_diff(&w1, &w2) else {
                return MrCategory::Other;
            };
            if is_quantifier_token(&diff.w1) && is_quantifier_token(&diff.w2) {
                return MrCategory::QuantSub;
            }
            let tag1 = self.pos.tag(&w1)[diff.position];
            let tag2 = self.pos.tag(&w2)[diff.position];
            return classify_substitution(tag1, tag2);
        }

        let (short, long) = if w1.len() <= w2.len() { (&w1, &w2) } else { (&w2, &w1) };
        match multiset_remainder(short, long) {
            Some(removed) if long.len() - short.len() <= 2 && removed.contains(&"not") => MrCategory::NegaExp,
            Some(_) => MrCategory::WordDel,
            None => MrCategory::Other,
        }
    }

    /// Sentence-level relation for a pair the word-level pass left as
    /// `Other`. Contradictions are tested for back-translation drift,
    /// entailments for claim-in-context containment.
    pub fn tag_sentence_level(&self, pair: &SentencePair) -> MrCategory {
        let w1 = tokenize(&pair.s1.text);
        let w2 = tokenize(&pair.s2.text);
        if w1.is_empty() || w2.is_empty() {
            return MrCategory::Other;
        }
        let (short, long) = if w1.len() <= w2.len() { (&w1, &w2) } else { (&w2, &w1) };
        let short_content: HashSet<&str> = content_words(short).into_iter().collect();
        let long_content: HashSet<&str> = content_words(long).into_iter().collect();

        match pair.label {
            RelationLabel::Contradiction => {
                let ratio = short.len() as f64 / long.len() as f64;
                let union = short_content.union(&long_content).count();
                if union == 0 {
                    return MrCategory::Other;
                }
                let overlap = short_content.intersection(&long_content).count() as f64 / union as f64;
                if ratio >= self.thresholds.min_length_ratio && overlap >= self.thresholds.min_content_overlap {
                    MrCategory::ErrTrans
                } else {
                    MrCategory::Other
                }
            }
            RelationLabel::Entailment => {
                if short_content.is_empty() {
                    return MrCategory::Other;
                }
                let covered = short_content.intersection(&long_content).count() as f64 / short_content.len() as f64;
                if covered >= self.thresholds.min_claim_coverage {
                    MrCategory::ErrNli
                } else {
                    MrCategory::Other
                }
            }
            RelationLabel::Neutral | RelationLabel::Other => MrCategory::Other,
        }
    }

    /// Word-level tag, falling back to the sentence-level heuristics.
    pub fn tag(&self, pair: &SentencePair) -> MrCategory {
        match self.gold_tag(pair) {
            MrCategory::Other => self.tag_sentence_level(pair),
            tag => tag,
        }
    }
}

fn classify_substitution(tag1: PosTag, tag2: PosTag) -> MrCategory {
    if tag1 == PosTag::OtherTag || tag2 == PosTag::OtherTag {
        MrCategory::Other
    } else if tag1.is_object() && tag2.is_object() {
        MrCategory::ObjSub
    } else if tag1.is_modifier() && tag2.is_modifier() {
        MrCategory::NegaExp
    } else if tag1 == PosTag::VB && tag2 == PosTag::VB {
        MrCategory::ActSub
    } else {
        MrCategory::Other
    }
}
