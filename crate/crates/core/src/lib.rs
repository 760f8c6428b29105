//! Metamorphic test harness for false vector matching.
//!
//! Labeled sentence pairs are tagged with the metamorphic relation that
//! produced them ([`tagger`]), completed into {base, positive, negative}
//! triplets ([`builder`]), embedded ([`embedding`]) and matched under a
//! distance metric ([`metrics`]). [`simulate`] replays the two-candidate
//! retrieval for every (triplet, method) pair and reports how often the
//! positive candidate wins. Order-sensitive text scorers plug in through
//! [`scorer`].

pub mod builder;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod exec;
pub mod io;
pub mod metrics;
pub mod scorer;
pub mod simulate;
pub mod tables;
pub mod tagger;
pub mod transport;

pub use corpus::{Corpus, MrCategory, RelationLabel, Sentence, SentencePair, Source, Triplet};
pub use exec::ExecMode;
pub use metrics::MetricId;
