use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BuildError;
use crate::corpus::{Sentence, Source};
use crate::tagger::tokens::extract_quantifiers;

/// Seeded draw source. The generator is ChaCha8; the same seed always yields
/// the same draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    pub seed: u64,
}

impl RngState {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        RngState { seed }
    }

    /// Per-item state derived from the run seed, independent of scheduling.
    pub fn for_item(run_seed: u64, index: usize) -> Self {
        RngState {
            seed: run_seed ^ index as u64,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

const MAX_DRAWS: usize = 1000;

fn decimals(q: &str) -> usize {
    q.split_once('.').map_or(0, |(_, frac)| frac.len())
}

fn strictly_between_zero_and_double(v: f64, q: f64) -> bool {
    if q > 0.0 {
        v > 0.0 && v < 2.0 * q
    } else {
        v < 0.0 && v > 2.0 * q
    }
}

/// Rescales `q` by a multiplier drawn from (0, 2) away from 1, keeping its
/// integer/decimal format.
pub fn rescale_quantity(q: &str, rng: &RngState) -> Result<String, BuildError> {
    let value: f64 = q.parse().map_err(|_| BuildError::DegenerateQuantity(q.to_string()))?;
    let places = decimals(q);
    let mut draws = rng.rng();
    for _ in 0..MAX_DRAWS {
        let r: f64 = draws.random_range(0.0..2.0);
        if r == 0.0 || (r - 1.0).abs() < 0.1 {
            continue;
        }
        let formatted = format!("{:.*}", places, value * r);
        if formatted == q {
            continue;
        }
        let back: f64 = formatted.parse().expect("formatted number parses");
        if strictly_between_zero_and_double(back, value) {
            return Ok(formatted);
        }
    }
    Err(BuildError::DegenerateQuantity(q.to_string()))
}

/// Negative sentence for a quantifier triplet: the first number in `base`
/// is rescaled, everything else is left as is.
pub fn substitute_quantifier(base: &Sentence, id: impl Into<String>, rng: &RngState) -> Result<Sentence, BuildError> {
    let first = extract_quantifiers(&base.text)
        .into_iter()
        .next()
        .ok_or(BuildError::NoQuantifier)?;
    let replacement = rescale_quantity(&first.text, rng)?;
    let mut text = String::with_capacity(base.text.len() + 4);
    text.push_str(&base.text[..first.span.start]);
    text.push_str(&replacement);
    text.push_str(&base.text[first.span.end..]);
    Ok(Sentence::new(id, &text, Source::Generated))
}
