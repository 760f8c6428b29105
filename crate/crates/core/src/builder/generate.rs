//! Text generation for positive rewrites and evidence removal.
//!
//! Generation goes through [`TextGenerator`]. Three implementations ship:
//! [`HttpGenerator`] for a live service, [`RecordedGenerator`] that replays
//! stored responses, and [`RuleBasedGenerator`], a deterministic offline
//! rewriter used by `--stub` builds and tests.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::BuildError;
use crate::corpus::{Sentence, Source};
use crate::tagger::tokens::{content_words, tokenize, TokenSequence};
use crate::transport::JsonClient;

pub const POSITIVE_REWRITE_TEMPLATE: &str = "positive_rewrite.v1";
pub const EVIDENCE_REMOVAL_TEMPLATE: &str = "evidence_removal.v1";

const TEMPLATES: [(&str, &str); 2] = [
    (
        POSITIVE_REWRITE_TEMPLATE,
        include_str!("../../templates/positive_rewrite.v1.txt"),
    ),
    (
        EVIDENCE_REMOVAL_TEMPLATE,
        include_str!("../../templates/evidence_removal.v1.txt"),
    ),
];

pub fn template_text(id: &str) -> Option<&'static str> {
    TEMPLATES.iter().find(|(k, _)| *k == id).map(|(_, t)| *t)
}

/// Generated positives are rejected when their structural overlap with the
/// base exceeds this.
pub const MAX_POSITIVE_OVERLAP: f64 = 0.9;
pub const MAX_ATTEMPTS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GenerationKind {
    PositiveRewrite,
    NegativeEvidenceRemoval,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub kind: GenerationKind,
    pub template_id: String,
    pub variables: BTreeMap<String, String>,
    pub seed: u64,
}

impl GenerationRequest {
    pub fn positive_rewrite(base: &str, seed: u64) -> Self {
        GenerationRequest {
            kind: GenerationKind::PositiveRewrite,
            template_id: POSITIVE_REWRITE_TEMPLATE.into(),
            variables: BTreeMap::from([("base".to_string(), base.to_string())]),
            seed,
        }
    }

    pub fn evidence_removal(claim: &str, context: &str, seed: u64) -> Self {
        GenerationRequest {
            kind: GenerationKind::NegativeEvidenceRemoval,
            template_id: EVIDENCE_REMOVAL_TEMPLATE.into(),
            variables: BTreeMap::from([
                ("claim".to_string(), claim.to_string()),
                ("context".to_string(), context.to_string()),
            ]),
            seed,
        }
    }

    fn var(&self, name: &str) -> Result<&str, BuildError> {
        self.variables
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| BuildError::ClientError(format!("request lacks variable {name:?}")))
    }

    /// Template text with `{{name}}` placeholders filled in.
    pub fn render(&self) -> Result<String, BuildError> {
        let mut text = template_text(&self.template_id)
            .ok_or_else(|| BuildError::ClientError(format!("unknown template {}", self.template_id)))?
            .to_string();
        for (k, v) in &self.variables {
            text = text.replace(&format!("{{{{{k}}}}}"), v);
        }
        Ok(text)
    }

    /// Stable key for recorded responses.
    pub fn cache_key(&self) -> String {
        let canonical =
            serde_json::to_string(&(&self.template_id, &self.variables, self.seed)).expect("request key serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

pub trait TextGenerator: Send + Sync {
    fn generate(&self, req: &GenerationRequest) -> Result<String, BuildError>;
}

/// Longest common token subsequence over the longer length; 1.0 means same
/// token order.
pub fn structural_overlap(a: &TokenSequence, b: &TokenSequence) -> f64 {
    let (a, b) = (a.tokens(), b.tokens());
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()] as f64 / longest as f64
}

fn positive_rejection(base: &TokenSequence, candidate: &str) -> Option<String> {
    let toks = tokenize(candidate);
    if toks.is_empty() {
        return Some("empty output".into());
    }
    if toks.tokens() == base.tokens() {
        return Some("identical to base".into());
    }
    let overlap = structural_overlap(base, &toks);
    (overlap > MAX_POSITIVE_OVERLAP).then(|| format!("overlap {overlap:.3} above {MAX_POSITIVE_OVERLAP}"))
}

/// Asks the generator for a structural paraphrase of `base`, retrying with
/// the next seed when the output is empty, unchanged or too close to the
/// base word order.
pub fn generate_positive(
    base: &Sentence,
    id: impl Into<String>,
    gen: &dyn TextGenerator,
    seed: u64,
) -> Result<Sentence, BuildError> {
    let base_tokens = tokenize(&base.text);
    let mut reasons = Vec::new();
    for attempt in 0..MAX_ATTEMPTS {
        let req = GenerationRequest::positive_rewrite(&base.text, seed.wrapping_add(attempt));
        let text = gen.generate(&req)?;
        match positive_rejection(&base_tokens, &text) {
            None => return Ok(Sentence::new(id, text.trim(), Source::Generated)),
            Some(r) => reasons.push(r),
        }
    }
    Err(BuildError::GenerationFailed(reasons.join("; ")))
}

/// Content words shared by claim and context that are absent from `output`.
pub fn removed_evidence(claim: &str, context: &str, output: &str) -> Vec<String> {
    let claim_toks = tokenize(claim);
    let context_toks = tokenize(context);
    let out_toks = tokenize(output);
    let claim_words: HashSet<&str> = content_words(&claim_toks).into_iter().collect();
    let out_words: HashSet<&str> = out_toks.iter().collect();
    let mut seen = HashSet::new();
    content_words(&context_toks)
        .into_iter()
        .filter(|w| claim_words.contains(w) && !out_words.contains(w) && seen.insert(*w))
        .map(str::to_string)
        .collect()
}

/// Rewrites `context` so the evidence for `claim` is gone. Valid output
/// lacks at least one content word the claim and context share.
pub fn generate_negative_by_evidence_removal(
    claim: &Sentence,
    context: &Sentence,
    id: impl Into<String>,
    gen: &dyn TextGenerator,
    seed: u64,
) -> Result<Sentence, BuildError> {
    let mut last_output = None;
    for attempt in 0..MAX_ATTEMPTS {
        let req = GenerationRequest::evidence_removal(&claim.text, &context.text, seed.wrapping_add(attempt));
        let text = gen.generate(&req)?;
        if text.trim().is_empty() {
            continue;
        }
        if !removed_evidence(&claim.text, &context.text, &text).is_empty() {
            return Ok(Sentence::new(id, text.trim(), Source::Generated));
        }
        last_output = Some(text);
    }
    match last_output {
        Some(text) => Err(BuildError::ValidationFailed(format!(
            "output keeps every shared content word: {:?}",
            text.trim()
        ))),
        None => Err(BuildError::GenerationFailed("empty output".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpGeneratorConfig {
    pub endpoint: String,
    pub api_key_env: Option<String>,
    pub timeout: Duration,
    pub retries: u32,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    template_id: &'a str,
    variables: &'a BTreeMap<String, String>,
    seed: u64,
    prompt: String,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

/// `POST {template_id, variables, seed, prompt}` returning `{text}`.
#[derive(Debug)]
pub struct HttpGenerator {
    endpoint: String,
    client: JsonClient,
}

impl HttpGenerator {
    pub fn new(config: HttpGeneratorConfig) -> Self {
        let bearer = JsonClient::bearer_from_env(config.api_key_env.as_deref());
        HttpGenerator {
            endpoint: config.endpoint,
            client: JsonClient::new(config.timeout, config.retries, bearer),
        }
    }
}

impl TextGenerator for HttpGenerator {
    fn generate(&self, req: &GenerationRequest) -> Result<String, BuildError> {
        let body = WireRequest {
            template_id: &req.template_id,
            variables: &req.variables,
            seed: req.seed,
            prompt: req.render()?,
        };
        let resp: WireResponse = self
            .client
            .post(&self.endpoint, &body)
            .map_err(BuildError::ClientError)?;
        Ok(resp.text)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordedResponse {
    pub template_id: String,
    pub variables: BTreeMap<String, String>,
    pub seed: u64,
    pub text: String,
}

/// Replays responses recorded as JSON lines of [`RecordedResponse`].
#[derive(Debug, Clone, Default)]
pub struct RecordedGenerator {
    responses: HashMap<String, String>,
}

impl RecordedGenerator {
    pub fn from_records(records: impl IntoIterator<Item = RecordedResponse>) -> Self {
        let responses = records
            .into_iter()
            .map(|r| {
                let key = GenerationRequest {
                    kind: GenerationKind::PositiveRewrite,
                    template_id: r.template_id,
                    variables: r.variables,
                    seed: r.seed,
                }
                .cache_key();
                (key, r.text)
            })
            .collect();
        RecordedGenerator { responses }
    }

    pub fn load(path: &Path) -> Result<Self, BuildError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| BuildError::ClientError(format!("{}: {e}", path.display())))?;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            records.push(
                serde_json::from_str(line)
                    .map_err(|e| BuildError::ClientError(format!("{} line {}: {e}", path.display(), i + 1)))?,
            );
        }
        Ok(Self::from_records(records))
    }
}

impl TextGenerator for RecordedGenerator {
    fn generate(&self, req: &GenerationRequest) -> Result<String, BuildError> {
        self.responses
            .get(&req.cache_key())
            .cloned()
            .ok_or_else(|| BuildError::ClientError(format!("no recorded response for {}", req.template_id)))
    }
}

/// Deterministic offline generator.
///
/// Rewrites rotate the sentence around a clause boundary ("In 1865, an open
/// sewer system replaced the sewers." becomes "An open sewer system replaced
/// the sewers in 1865."). Evidence removal replaces the first run of words
/// shared with the claim, and every later repeat of them, with "something".
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleBasedGenerator;

fn split_terminal(text: &str) -> (&str, &str) {
    let trimmed = text.trim_end();
    let body = trimmed.trim_end_matches(['.', '!', '?']);
    (body, &trimmed[body.len()..])
}

fn decapitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) if word != "I" && !word.starts_with("I'") => c.to_lowercase().chain(chars).collect(),
        _ => word.to_string(),
    }
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

impl RuleBasedGenerator {
    fn rotate(&self, text: &str, seed: u64) -> String {
        let (body, terminal) = split_terminal(text);
        let words: Vec<&str> = body.split_whitespace().collect();
        let n = words.len();
        if n < 2 {
            return text.to_string();
        }
        let balanced = |k: usize| (k.max(n - k) as f64 / n as f64) <= MAX_POSITIVE_OVERLAP;
        let comma_split = words[..n - 1]
            .iter()
            .position(|w| w.ends_with(','))
            .map(|i| i + 1)
            .filter(|&k| balanced(k));
        let split = comma_split.unwrap_or_else(|| {
            let jitter = (seed % 3) as usize;
            (n / 2 + jitter).saturating_sub(1).clamp(1, n - 1)
        });
        let head: Vec<String> = words[..split]
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let w = if i == 0 { decapitalize(w) } else { w.to_string() };
                if i == split - 1 {
                    w.trim_end_matches([',', ';', ':']).to_string()
                } else {
                    w
                }
            })
            .collect();
        let mut tail: Vec<String> = words[split..].iter().map(|w| w.to_string()).collect();
        tail[0] = capitalize(&tail[0]);
        let mut out = tail.join(" ");
        out.push(' ');
        out.push_str(&head.join(" "));
        out.push_str(if terminal.is_empty() { "." } else { terminal });
        out
    }

    fn strip_evidence(&self, claim: &str, context: &str) -> String {
        let claim_toks = tokenize(claim);
        let shared: HashSet<&str> = content_words(&claim_toks).into_iter().collect();
        let words: Vec<&str> = context.split_whitespace().collect();
        let key = |w: &str| tokenize(w).tokens().first().cloned().unwrap_or_default();
        let is_shared = |w: &str| shared.contains(key(w).as_str());

        let Some(start) = words.iter().position(|w| is_shared(w)) else {
            return context.to_string();
        };
        let end = words[start..]
            .iter()
            .position(|w| !is_shared(w))
            .map_or(words.len(), |p| start + p);
        let targets: HashSet<String> = words[start..end].iter().map(|w| key(w)).collect();

        let mut out: Vec<String> = Vec::with_capacity(words.len());
        let mut i = 0;
        while i < words.len() {
            if targets.contains(&key(words[i])) {
                let mut j = i;
                while j < words.len() && targets.contains(&key(words[j])) {
                    j += 1;
                }
                let last = words[j - 1];
                let trailing: String = last
                    .chars()
                    .rev()
                    .take_while(|c| !c.is_alphanumeric())
                    .collect::<Vec<_>>()
                    .into_iter()
                    .rev()
                    .collect();
                let at_start = out.is_empty();
                out.push(format!(
                    "{}{trailing}",
                    if at_start { "Something" } else { "something" }
                ));
                i = j;
            } else {
                out.push(words[i].to_string());
                i += 1;
            }
        }
        out.join(" ")
    }
}

impl TextGenerator for RuleBasedGenerator {
    fn generate(&self, req: &GenerationRequest) -> Result<String, BuildError> {
        match req.kind {
            GenerationKind::PositiveRewrite => Ok(self.rotate(req.var("base")?, req.seed)),
            GenerationKind::NegativeEvidenceRemoval => Ok(self.strip_evidence(req.var("claim")?, req.var("context")?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(&'static str);

    impl TextGenerator for Fixed {
        fn generate(&self, _: &GenerationRequest) -> Result<String, BuildError> {
            Ok(self.0.to_string())
        }
    }

    fn base(text: &str) -> Sentence {
        Sentence::new("b", text, Source::Collected)
    }

    #[test]
    fn rotation_moves_leading_clause() {
        let out = RuleBasedGenerator.rotate("In 1865, an open sewer system replaced the underground sewers.", 0);
        assert_eq!(out, "An open sewer system replaced the underground sewers in 1865.");
    }

    #[test]
    fn verbatim_output_fails_after_retries() {
        let b = base("I think we know what we are going to speak about.");
        let gen = Fixed("I think we know what we are going to speak about.");
        assert!(matches!(
            generate_positive(&b, "p", &gen, 0),
            Err(BuildError::GenerationFailed(_))
        ));
    }

    #[test]
    fn fixed_paraphrase_is_accepted() {
        let b = base("I think we know what we are going to speak about.");
        let gen = Fixed("I believe we are aware of what to discuss.");
        let p = generate_positive(&b, "p", &gen, 0).unwrap();
        assert_eq!(p.text, "I believe we are aware of what to discuss.");
        assert_eq!(p.source, Source::Generated);
    }

    #[test]
    fn one_word_edit_is_too_close() {
        let b = base("the quick brown fox jumps over the lazy dog near the river bank");
        let gen = Fixed("the quick brown fox leaps over the lazy dog near the river bank");
        assert!(generate_positive(&b, "p", &gen, 0).is_err());
    }

    #[test]
    fn overlap_of_rotation() {
        let a = tokenize("a b c d e f");
        let b = tokenize("d e f a b c");
        assert!((structural_overlap(&a, &b) - 0.5).abs() < 1e-12);
        assert_eq!(structural_overlap(&a, &a), 1.0);
    }

    #[test]
    fn evidence_removal_stub() {
        let claim = base("The sewing machine was built in 1804.");
        let context = base("In 1804, a sewing machine was built by the Englishmen Thomas Stone and James Henderson.");
        let neg = generate_negative_by_evidence_removal(&claim, &context, "n", &RuleBasedGenerator, 0).unwrap();
        assert!(!removed_evidence(&claim.text, &context.text, &neg.text).is_empty());
    }

    #[test]
    fn evidence_kept_is_validation_failure() {
        let claim = base("The sewing machine was built in 1804.");
        let context = base("In 1804, a sewing machine was built by two Englishmen.");
        let gen = Fixed("In 1804, a sewing machine was built by two men from England.");
        assert!(matches!(
            generate_negative_by_evidence_removal(&claim, &context, "n", &gen, 0),
            Err(BuildError::ValidationFailed(_))
        ));
    }

    #[test]
    fn render_fills_placeholders() {
        let r = GenerationRequest::evidence_removal("c1", "c2", 0).render().unwrap();
        assert!(r.contains("Claim: c1"));
        assert!(r.contains("Context: c2"));
        assert!(!r.contains("{{"));
    }

    #[test]
    fn recorded_generator_replays() {
        let rec = RecordedGenerator::from_records([RecordedResponse {
            template_id: POSITIVE_REWRITE_TEMPLATE.into(),
            variables: BTreeMap::from([("base".into(), "x y".into())]),
            seed: 9,
            text: "y then x".into(),
        }]);
        assert_eq!(
            rec.generate(&GenerationRequest::positive_rewrite("x y", 9)).unwrap(),
            "y then x"
        );
        assert!(rec.generate(&GenerationRequest::positive_rewrite("x y", 10)).is_err());
    }
}
