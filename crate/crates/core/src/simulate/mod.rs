//! Two-candidate retrieval simulation.
//!
//! For every triplet the base is the query and the positive and negative are
//! the candidates. A method is an embedding provider paired with a distance
//! metric; the match is correct when the positive is strictly closer. Text
//! scorers are evaluated the same way with "higher score wins".

pub mod dump;
pub mod report;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, MrCategory, Triplet};
use crate::embedding::text_hash;
use crate::embedding::{normalize, EmbedError, Embedder, EmbeddingVector, ProviderSpec};
use crate::exec::{map_ordered, map_ordered_capped, ExecMode};
use crate::metrics::{distance, fit_covariance, CovarianceModel, MetricId, DEFAULT_EPS_SCALE};
use crate::scorer::Scorer;

pub use dump::{merge_dumps, parse_dump, serialize_dump, DumpError, OutcomeDump};
pub use report::{accuracy_drop, CategoryStats, DropRow, EvalReport, MethodReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Correct,
    FalseMatch,
    Tie,
}

impl Verdict {
    /// Smaller distance wins.
    pub fn from_distances(d_pos: f64, d_neg: f64) -> Self {
        if d_pos < d_neg {
            Verdict::Correct
        } else if d_pos == d_neg {
            Verdict::Tie
        } else {
            Verdict::FalseMatch
        }
    }

    /// Higher score wins.
    pub fn from_scores(s_pos: f64, s_neg: f64) -> Self {
        Self::from_distances(-s_pos, -s_neg)
    }

    pub fn is_correct(self) -> bool {
        self == Verdict::Correct
    }
}

/// Whether outcome values are distances (lower is closer) or scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[default]
    Distance,
    Score,
}

impl Measure {
    pub fn verdict(self, pos: f64, neg: f64) -> Verdict {
        match self {
            Measure::Distance => Verdict::from_distances(pos, neg),
            Measure::Score => Verdict::from_scores(pos, neg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub provider: ProviderSpec,
    pub metric: MetricId,
}

impl MethodSpec {
    pub fn new(provider: ProviderSpec, metric: MetricId) -> Self {
        MethodSpec { provider, metric }
    }
}

impl FromStr for MethodSpec {
    type Err = String;

    /// `PROVIDER+METRIC`, e.g. `char:512+CD` or `bow+MhD`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (provider, metric) = s
            .rsplit_once('+')
            .ok_or_else(|| format!("method {s:?} is not PROVIDER+METRIC"))?;
        Ok(MethodSpec {
            provider: provider.parse()?,
            metric: metric.parse()?,
        })
    }
}

/// The result of one (triplet, method) match. For scorers `d_pos` and
/// `d_neg` hold the positive and negative scores.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub triplet_id: String,
    pub category: MrCategory,
    pub method_id: String,
    pub measure: Measure,
    pub d_pos: f64,
    pub d_neg: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchFailure {
    pub triplet_id: String,
    pub category: MrCategory,
    pub method_id: String,
    pub error: String,
}

pub type Outcome = Result<MatchOutcome, MatchFailure>;

pub fn outcome_key(o: &Outcome) -> (&str, &str) {
    match o {
        Ok(m) => (&m.method_id, &m.triplet_id),
        Err(f) => (&f.method_id, &f.triplet_id),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("triplet {triplet_id}: {cause}")]
pub struct MatchError {
    pub triplet_id: String,
    pub cause: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no methods to evaluate")]
    NoMethods,
    #[error("method {0} is listed more than once")]
    DuplicateMethod(String),
    #[error("two different providers report model id {0}")]
    DuplicateModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub exec: ExecMode,
    /// Covariance regularization for Mahalanobis, relative to the mean
    /// variance.
    pub eps_scale: f64,
    /// Concurrent scorer requests.
    pub max_in_flight: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            exec: ExecMode::default(),
            eps_scale: DEFAULT_EPS_SCALE,
            max_in_flight: 8,
        }
    }
}

/// All outcomes of a run, in method-major, corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub corpus_name: String,
    pub corpus_hash: String,
    pub outcomes: Vec<Outcome>,
}

impl Evaluation {
    pub fn report(&self) -> EvalReport {
        EvalReport::from_outcomes(&self.outcomes)
    }

    pub fn dump(&self) -> OutcomeDump {
        OutcomeDump {
            corpus_name: self.corpus_name.clone(),
            corpus_hash: self.corpus_hash.clone(),
            outcomes: self.outcomes.clone(),
        }
    }
}

fn compare(
    pos: &[f64],
    neg: &[f64],
    base: &[f64],
    metric: MetricId,
    cov: Option<&CovarianceModel>,
) -> Result<(f64, f64), String> {
    let d_pos = distance(base, pos, metric, cov).map_err(|e| e.to_string())?;
    let d_neg = distance(base, neg, metric, cov).map_err(|e| e.to_string())?;
    Ok((d_pos, d_neg))
}

fn embed_normalized(e: &dyn Embedder, text: &str) -> Result<EmbeddingVector, EmbedError> {
    normalize(&e.embed(text)?)
}

/// Embeds the three texts of `t`, normalizes them and compares the base to
/// each candidate. `cov` is required for Mahalanobis.
pub fn match_triplet(
    t: &Triplet,
    embedder: &dyn Embedder,
    metric: MetricId,
    cov: Option<&CovarianceModel>,
) -> Result<MatchOutcome, MatchError> {
    let err = |cause: String| MatchError {
        triplet_id: t.id.clone(),
        cause,
    };
    let [b, p, n] = t
        .texts()
        .map(|text| embed_normalized(embedder, text).map_err(|e| err(e.to_string())));
    let (b, p, n) = (b?, p?, n?);
    let (d_pos, d_neg) = compare(p.components(), n.components(), b.components(), metric, cov).map_err(err)?;
    Ok(MatchOutcome {
        triplet_id: t.id.clone(),
        category: t.category,
        method_id: format!("{}+{}", embedder.model_id(), metric),
        measure: Measure::Distance,
        d_pos,
        d_neg,
        verdict: Verdict::from_distances(d_pos, d_neg),
    })
}

/// Normalized vectors keyed by (model id, text hash). Each text is embedded
/// once per model, however many methods or corpora use it.
#[derive(Debug, Default)]
pub struct EmbeddingCache {
    vectors: HashMap<(String, String), Result<Arc<EmbeddingVector>, EmbedError>>,
}

impl EmbeddingCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn fill(&mut self, embedder: &dyn Embedder, texts: &[&str]) {
        let model = embedder.model_id().to_string();
        let missing: Vec<(&str, String)> = texts
            .iter()
            .map(|t| (*t, text_hash(t)))
            .filter(|(_, h)| !self.vectors.contains_key(&(model.clone(), h.clone())))
            .collect();
        if missing.is_empty() {
            return;
        }
        let batch: Vec<&str> = missing.iter().map(|(t, _)| *t).collect();
        let results = embedder.embed_batch(&batch);
        for ((_, hash), r) in missing.into_iter().zip(results) {
            let v = r.and_then(|v| normalize(&v)).map(Arc::new);
            self.vectors.insert((model.clone(), hash), v);
        }
    }

    pub fn get(&self, model: &str, text: &str) -> Result<Arc<EmbeddingVector>, EmbedError> {
        self.vectors
            .get(&(model.to_string(), text_hash(text)))
            .cloned()
            .unwrap_or_else(|| Err(EmbedError::MissingVector(text_hash(text))))
    }
}

struct PreparedProvider {
    model_id: String,
    build_error: Option<String>,
    covariance: Option<Result<CovarianceModel, String>>,
}

fn prepare(
    corpus: &Corpus,
    methods: &[MethodSpec],
    cache: &mut EmbeddingCache,
    eps_scale: f64,
) -> Result<(Vec<PreparedProvider>, Vec<usize>), EvalError> {
    let texts = corpus.distinct_texts();
    let mut specs: Vec<&ProviderSpec> = Vec::new();
    let mut method_provider = Vec::with_capacity(methods.len());
    for m in methods {
        let idx = specs.iter().position(|s| **s == m.provider).unwrap_or_else(|| {
            specs.push(&m.provider);
            specs.len() - 1
        });
        method_provider.push(idx);
    }
    let built: Vec<_> = specs.iter().map(|spec| spec.build()).collect();
    let mut seen = HashSet::new();
    for e in built.iter().flatten() {
        if !seen.insert(e.model_id().to_string()) {
            return Err(EvalError::DuplicateModel(e.model_id().to_string()));
        }
    }
    let providers = specs
        .iter()
        .zip(built)
        .enumerate()
        .map(|(pi, (spec, built))| {
            let embedder = match built {
                Ok(e) => e,
                Err(e) => {
                    log::error!("provider {spec:?}: {e}");
                    return PreparedProvider {
                        model_id: format!("{:?}", spec.kind).to_lowercase(),
                        build_error: Some(e.to_string()),
                        covariance: None,
                    };
                }
            };
            cache.fill(embedder.as_ref(), &texts);
            let model_id = embedder.model_id().to_string();
            let needs_cov = methods
                .iter()
                .zip(&method_provider)
                .any(|(m, &p)| p == pi && m.metric.needs_covariance());
            let covariance = needs_cov.then(|| {
                let vectors: Vec<Arc<EmbeddingVector>> =
                    texts.iter().filter_map(|t| cache.get(&model_id, t).ok()).collect();
                let refs: Vec<&[f64]> = vectors.iter().map(|v| v.components()).collect();
                fit_covariance(&refs, eps_scale).map_err(|e| e.to_string())
            });
            PreparedProvider {
                model_id,
                build_error: None,
                covariance,
            }
        })
        .collect();
    Ok((providers, method_provider))
}

fn match_cached(t: &Triplet, provider: &PreparedProvider, metric: MetricId, cache: &EmbeddingCache) -> Outcome {
    let method_id = format!("{}+{}", provider.model_id, metric);
    let fail = |error: String| MatchFailure {
        triplet_id: t.id.clone(),
        category: t.category,
        method_id: method_id.clone(),
        error,
    };
    if let Some(e) = &provider.build_error {
        return Err(fail(e.clone()));
    }
    let cov = match (&provider.covariance, metric.needs_covariance()) {
        (Some(Ok(c)), true) => Some(c),
        (Some(Err(e)), true) => return Err(fail(e.clone())),
        _ => None,
    };
    let get = |text: &str| cache.get(&provider.model_id, text).map_err(|e| fail(e.to_string()));
    let (b, p, n) = (get(&t.base.text)?, get(&t.positive.text)?, get(&t.negative.text)?);
    let (d_pos, d_neg) = compare(p.components(), n.components(), b.components(), metric, cov).map_err(fail)?;
    Ok(MatchOutcome {
        triplet_id: t.id.clone(),
        category: t.category,
        method_id,
        measure: Measure::Distance,
        d_pos,
        d_neg,
        verdict: Verdict::from_distances(d_pos, d_neg),
    })
}

/// Matches every triplet under every method. Failures are kept as outcomes
/// so they can be tallied; the run itself only fails on empty input.
pub fn evaluate(corpus: &Corpus, methods: &[MethodSpec], opts: &EvalOptions) -> Result<Evaluation, EvalError> {
    evaluate_cached(corpus, methods, opts, &mut EmbeddingCache::new())
}

/// [`evaluate`] with a caller-owned cache, so a corpus and its control
/// variant share embeddings.
pub fn evaluate_cached(
    corpus: &Corpus,
    methods: &[MethodSpec],
    opts: &EvalOptions,
    cache: &mut EmbeddingCache,
) -> Result<Evaluation, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    if methods.is_empty() {
        return Err(EvalError::NoMethods);
    }
    let (providers, method_provider) = prepare(corpus, methods, cache, opts.eps_scale)?;
    for (i, m) in methods.iter().enumerate() {
        if methods[..i].contains(m) {
            let p = &providers[method_provider[i]];
            return Err(EvalError::DuplicateMethod(format!("{}+{}", p.model_id, m.metric)));
        }
    }
    let cache: &EmbeddingCache = cache;
    let jobs: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|m| (0..corpus.len()).map(move |t| (m, t)))
        .collect();
    let outcomes = map_ordered(opts.exec, &jobs, |&(m, t)| {
        match_cached(
            &corpus.triplets[t],
            &providers[method_provider[m]],
            methods[m].metric,
            cache,
        )
    });
    Ok(Evaluation {
        corpus_name: corpus.metadata.name.clone(),
        corpus_hash: corpus.content_hash(),
        outcomes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreOrder {
    /// `score(base, candidate)`
    Forward,
    /// `score(candidate, base)`
    Reverse,
}

impl fmt::Display for ScoreOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreOrder::Forward => "forward",
            ScoreOrder::Reverse => "reverse",
        })
    }
}

pub fn scorer_method_id(scorer: &dyn Scorer, order: ScoreOrder) -> String {
    match order {
        ScoreOrder::Forward => scorer.id().to_string(),
        ScoreOrder::Reverse => format!("{}-R", scorer.id()),
    }
}

/// Scores base against both candidates; the match is correct when the
/// positive scores strictly higher. `Reverse` swaps the arguments of every
/// call.
pub fn evaluate_with_scorer(
    corpus: &Corpus,
    scorer: &dyn Scorer,
    order: ScoreOrder,
    opts: &EvalOptions,
) -> Result<Evaluation, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let method_id = scorer_method_id(scorer, order);
    let call = |base: &str, cand: &str| match order {
        ScoreOrder::Forward => scorer.score(base, cand),
        ScoreOrder::Reverse => scorer.score(cand, base),
    };
    let outcomes = map_ordered_capped(opts.exec, opts.max_in_flight, &corpus.triplets, |t| {
        let scored =
            call(&t.base.text, &t.positive.text).and_then(|p| call(&t.base.text, &t.negative.text).map(|n| (p, n)));
        match scored {
            Ok((s_pos, s_neg)) => Ok(MatchOutcome {
                triplet_id: t.id.clone(),
                category: t.category,
                method_id: method_id.clone(),
                measure: Measure::Score,
                d_pos: s_pos,
                d_neg: s_neg,
                verdict: Verdict::from_scores(s_pos, s_neg),
            }),
            Err(e) => Err(MatchFailure {
                triplet_id: t.id.clone(),
                category: t.category,
                method_id: method_id.clone(),
                error: e.to_string(),
            }),
        }
    });
    Ok(Evaluation {
        corpus_name: corpus.metadata.name.clone(),
        corpus_hash: corpus.content_hash(),
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;
    use crate::embedding::BagOfWordsEmbedder;
    use crate::scorer::ConstantScorer;

    fn trip(id: &str, cat: MrCategory, b: &str, p: &str, n: &str) -> Triplet {
        let s = Source::Collected;
        Triplet::new(id, cat, (b, s), (p, s), (n, s))
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(Verdict::from_distances(0.1, 0.2), Verdict::Correct);
        assert_eq!(Verdict::from_distances(0.2, 0.2), Verdict::Tie);
        assert_eq!(Verdict::from_distances(0.3, 0.2), Verdict::FalseMatch);
        assert_eq!(Verdict::from_scores(0.9, 0.2), Verdict::Correct);
        assert_eq!(Verdict::from_scores(0.1, 0.2), Verdict::FalseMatch);
    }

    #[test]
    fn repeated_methods_are_rejected() {
        let c = Corpus::new("c", vec![trip("t", MrCategory::WordDel, "a b c", "a b c d", "x y z")]);
        let m = MethodSpec::new(ProviderSpec::bag_of_words(64), MetricId::CD);
        assert_eq!(
            evaluate(&c, &[m.clone(), m], &EvalOptions::default()).unwrap_err(),
            EvalError::DuplicateMethod("bow-fnv1a-64+CD".into())
        );
    }

    #[test]
    fn vector_file_shadowing_a_builtin_model_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.jsonl");
        let c = Corpus::new("c", vec![trip("t", MrCategory::WordDel, "a b c", "a b c d", "x y z")]);
        let e = BagOfWordsEmbedder::new(64).unwrap();
        let mut file = crate::embedding::VectorFile::new(e.model_id(), 64, crate::embedding::VectorEncoding::Decimal);
        for text in c.distinct_texts() {
            file.insert(text, e.embed(text).unwrap(), false).unwrap();
        }
        std::fs::write(&path, file.to_text()).unwrap();
        let methods = [
            MethodSpec::new(ProviderSpec::bag_of_words(64), MetricId::CD),
            MethodSpec::new(ProviderSpec::vector_file(&path), MetricId::CD),
        ];
        assert_eq!(
            evaluate(&c, &methods, &EvalOptions::default()).unwrap_err(),
            EvalError::DuplicateModel("bow-fnv1a-64".into())
        );
    }

    #[test]
    fn bow_cosine_prefers_superset() {
        let t = trip("t", MrCategory::WordDel, "a b c", "a b c d", "x y z");
        let e = BagOfWordsEmbedder::new(64).unwrap();
        let o = match_triplet(&t, &e, MetricId::CD, None).unwrap();
        assert_eq!(o.verdict, Verdict::Correct);
        assert_eq!(o.method_id, "bow-fnv1a-64+CD");
    }

    #[test]
    fn mahalanobis_without_covariance_errors() {
        let t = trip("t", MrCategory::WordDel, "a b c", "a b c d", "x y z");
        let e = BagOfWordsEmbedder::new(64).unwrap();
        let err = match_triplet(&t, &e, MetricId::MD, None).unwrap_err();
        assert_eq!(err.triplet_id, "t");
    }

    #[test]
    fn constant_scorer_ties_everything() {
        let c = Corpus::new(
            "c",
            vec![
                trip("a", MrCategory::WordSwap, "a b", "b a c", "x"),
                trip("b", MrCategory::ObjSub, "c d", "d c e", "y"),
            ],
        );
        let ev = evaluate_with_scorer(&c, &ConstantScorer(0.5), ScoreOrder::Forward, &EvalOptions::default()).unwrap();
        assert!(ev.outcomes.iter().all(|o| o.as_ref().unwrap().verdict == Verdict::Tie));
        assert_eq!(ev.report().methods[0].overall.accuracy(), Some(0.0));
    }

    #[test]
    fn empty_inputs_rejected() {
        let c = Corpus::new("c", vec![]);
        let m = vec![MethodSpec::new(ProviderSpec::bag_of_words(8), MetricId::CD)];
        assert_eq!(evaluate(&c, &m, &EvalOptions::default()), Err(EvalError::EmptyCorpus));
        let c = Corpus::new("c", vec![trip("a", MrCategory::WordSwap, "a b", "b a c", "x")]);
        assert_eq!(evaluate(&c, &[], &EvalOptions::default()), Err(EvalError::NoMethods));
    }

    #[test]
    fn missing_vector_file_becomes_error_outcomes() {
        let c = Corpus::new("c", vec![trip("a", MrCategory::WordSwap, "a b", "b a c", "x")]);
        let m = vec![
            MethodSpec::new(ProviderSpec::vector_file("/nonexistent/vectors.jsonl"), MetricId::CD),
            MethodSpec::new(ProviderSpec::bag_of_words(8), MetricId::ED),
        ];
        let ev = evaluate(&c, &m, &EvalOptions::default()).unwrap();
        assert!(ev.outcomes[0].is_err());
        assert!(ev.outcomes[1].is_ok());
    }

    #[test]
    fn method_spec_parsing() {
        let m: MethodSpec = "char:128+MhD".parse().unwrap();
        assert_eq!(m.provider, ProviderSpec::char_ngram(128));
        assert_eq!(m.metric, MetricId::MhD);
        assert!("bow".parse::<MethodSpec>().is_err());
    }
}
