//! Completes tagged sentence pairs into triplets and derives the
//! non-metamorphic control corpus.
//!
//! Each relation has its own completion route:
//!
//! | relation | base | positive | negative |
//! |---|---|---|---|
//! | QuantSub | s1 | generated rewrite | s1 with its first number rescaled |
//! | other word-level, ErrTrans | s1 | generated rewrite | s2 |
//! | ErrNli | shorter sentence (claim) | longer sentence (context) | context with the evidence removed |

pub mod generate;
pub mod quantity;
pub mod transform;

use std::collections::HashSet;

use thiserror::Error;

use crate::corpus::{validate_triplet, Corpus, MrCategory, Sentence, SentencePair, Triplet, Violation};
use crate::exec::{map_ordered_capped, ExecMode};
use crate::tagger::tokens::tokenize;

pub use generate::{
    generate_negative_by_evidence_removal, generate_positive, GenerationKind, GenerationRequest, HttpGenerator,
    HttpGeneratorConfig, RecordedGenerator, RuleBasedGenerator, TextGenerator,
};
pub use quantity::{rescale_quantity, substitute_quantifier, RngState};
pub use transform::make_nonmetamorphic;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("sentence has no quantifier")]
    NoQuantifier,
    #[error("quantity {0} cannot be rescaled to a different value")]
    DegenerateQuantity(String),
    #[error("generation failed: {0}")]
    GenerationFailed(String),
    #[error("generation client: {0}")]
    ClientError(String),
    #[error("generated text rejected: {0}")]
    ValidationFailed(String),
    #[error("triplet invalid: {0:?}")]
    InvalidTriplet(Vec<Violation>),
    #[error("relation {0} has no completion route")]
    Unroutable(MrCategory),
    #[error("duplicate pair id")]
    DuplicateId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub seed: u64,
    pub exec: ExecMode,
    pub max_in_flight: usize,
}

impl BuildOptions {
    pub fn new(seed: u64) -> Self {
        BuildOptions {
            seed,
            exec: ExecMode::default(),
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildFailure {
    pub id: String,
    pub category: MrCategory,
    pub error: BuildError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutcome {
    pub corpus: Corpus,
    pub failures: Vec<BuildFailure>,
    /// Ids of pairs tagged Other, which have no triplet form.
    pub skipped: Vec<String>,
}

impl BuildOutcome {
    /// Failed pairs over attempted pairs; 0 when nothing was attempted.
    pub fn failure_rate(&self) -> f64 {
        let attempted = self.corpus.len() + self.failures.len();
        if attempted == 0 {
            0.0
        } else {
            self.failures.len() as f64 / attempted as f64
        }
    }
}

fn claim_and_context(pair: &SentencePair) -> (&Sentence, &Sentence) {
    if tokenize(&pair.s2.text).len() < tokenize(&pair.s1.text).len() {
        (&pair.s2, &pair.s1)
    } else {
        (&pair.s1, &pair.s2)
    }
}

fn triplet_from(id: &str, category: MrCategory, base: &Sentence, pos: &Sentence, neg: &Sentence) -> Triplet {
    Triplet::new(
        id,
        category,
        (&base.text, base.source),
        (&pos.text, pos.source),
        (&neg.text, neg.source),
    )
}

/// Builds one triplet from a tagged pair. `index` is the pair's position in
/// the input and selects its random state.
pub fn complete_pair(
    pair: &SentencePair,
    category: MrCategory,
    gen: &dyn TextGenerator,
    run_seed: u64,
    index: usize,
) -> Result<Triplet, BuildError> {
    let rng = RngState::for_item(run_seed, index);
    let id = pair.id.as_str();
    let triplet = match category {
        MrCategory::Other => return Err(BuildError::Unroutable(category)),
        MrCategory::QuantSub => {
            let neg = substitute_quantifier(&pair.s1, format!("{id}/negative"), &rng)?;
            let pos = generate_positive(&pair.s1, format!("{id}/positive"), gen, rng.seed)?;
            triplet_from(id, category, &pair.s1, &pos, &neg)
        }
        MrCategory::ErrNli => {
            let (claim, context) = claim_and_context(pair);
            let neg = generate_negative_by_evidence_removal(claim, context, format!("{id}/negative"), gen, rng.seed)?;
            triplet_from(id, category, claim, context, &neg)
        }
        _ => {
            let pos = generate_positive(&pair.s1, format!("{id}/positive"), gen, rng.seed)?;
            triplet_from(id, category, &pair.s1, &pos, &pair.s2)
        }
    };
    let violations = validate_triplet(&triplet);
    if violations.is_empty() {
        Ok(triplet)
    } else {
        Err(BuildError::InvalidTriplet(violations))
    }
}

/// Completes every tagged pair. Pairs tagged Other are skipped; failures are
/// collected instead of aborting the run. Output order follows input order
/// and does not depend on the execution mode.
pub fn build_corpus(
    name: &str,
    pairs: &[(SentencePair, MrCategory)],
    gen: &dyn TextGenerator,
    opts: &BuildOptions,
) -> BuildOutcome {
    let mut seen = HashSet::new();
    let duplicate: Vec<bool> = pairs.iter().map(|(p, _)| !seen.insert(p.id.as_str())).collect();
    let indexed: Vec<usize> = (0..pairs.len()).collect();
    let results = map_ordered_capped(opts.exec, opts.max_in_flight, &indexed, |&i| {
        let (pair, category) = &pairs[i];
        if *category == MrCategory::Other {
            None
        } else if duplicate[i] {
            Some(Err(BuildError::DuplicateId))
        } else {
            Some(complete_pair(pair, *category, gen, opts.seed, i))
        }
    });

    let mut corpus = Corpus::new(name, Vec::new());
    corpus.metadata.seed = Some(opts.seed);
    let mut failures = Vec::new();
    let mut skipped = Vec::new();
    for ((pair, category), result) in pairs.iter().zip(results) {
        match result {
            None => skipped.push(pair.id.clone()),
            Some(Ok(t)) => corpus.triplets.push(t),
            Some(Err(error)) => {
                log::warn!("pair {}: {error}", pair.id);
                failures.push(BuildFailure {
                    id: pair.id.clone(),
                    category: *category,
                    error,
                });
            }
        }
    }
    BuildOutcome {
        corpus,
        failures,
        skipped,
    }
}
