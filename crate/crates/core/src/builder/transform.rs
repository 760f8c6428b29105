use std::collections::BTreeMap;

use crate::corpus::{validate_triplet, Corpus, MrCategory, Sentence, SlotText, Triplet};

/// Result of pairing triplets for the control transform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapPlan {
    /// Index pairs whose negatives trade places with the partner's positive.
    pub pairs: Vec<(usize, usize)>,
    /// Indices left untouched.
    pub unpaired: Vec<usize>,
}

fn swapped_negative(t: &Triplet, partner: &Triplet) -> Sentence {
    Sentence {
        id: t.negative.id.clone(),
        text: partner.positive.text.clone(),
        source: partner.positive.source,
    }
}

fn swap_is_valid(a: &Triplet, b: &Triplet) -> bool {
    let mut a2 = a.clone();
    a2.negative = swapped_negative(a, b);
    let mut b2 = b.clone();
    b2.negative = swapped_negative(b, a);
    validate_triplet(&a2).is_empty() && validate_triplet(&b2).is_empty()
}

/// Pairs consecutive triplets within each category, in corpus order. An odd
/// one out, or a pair whose swap would make two slots equal, stays unpaired.
pub fn plan_swaps(triplets: &[Triplet]) -> SwapPlan {
    let mut by_category: BTreeMap<MrCategory, Vec<usize>> = BTreeMap::new();
    for (i, t) in triplets.iter().enumerate() {
        by_category.entry(t.category).or_default().push(i);
    }
    let mut plan = SwapPlan {
        pairs: Vec::new(),
        unpaired: Vec::new(),
    };
    for indices in by_category.values() {
        for chunk in indices.chunks(2) {
            match *chunk {
                [a, b] if swap_is_valid(&triplets[a], &triplets[b]) => plan.pairs.push((a, b)),
                _ => plan.unpaired.extend_from_slice(chunk),
            }
        }
    }
    plan.pairs.sort_unstable();
    plan.unpaired.sort_unstable();
    plan
}

/// Toggles the control variant of a corpus.
///
/// On a metamorphic corpus, each paired triplet's negative becomes its
/// partner's positive, so both candidates differ structurally from the base.
/// The replaced negatives are kept in the metadata, which makes a second
/// application restore the original corpus exactly.
pub fn make_nonmetamorphic(c: &Corpus) -> Corpus {
    let mut out = c.clone();
    if c.metadata.nonmetamorphic {
        for t in &mut out.triplets {
            if let Some(orig) = out.metadata.displaced.remove(&t.id) {
                t.negative = Sentence {
                    id: t.negative.id.clone(),
                    text: orig.text,
                    source: orig.source,
                };
            }
        }
        out.metadata.displaced.clear();
        out.metadata.unpaired.clear();
        out.metadata.nonmetamorphic = false;
        return out;
    }

    let plan = plan_swaps(&c.triplets);
    for &(a, b) in &plan.pairs {
        let (ta, tb) = (&c.triplets[a], &c.triplets[b]);
        out.triplets[a].negative = swapped_negative(ta, tb);
        out.triplets[b].negative = swapped_negative(tb, ta);
        for t in [ta, tb] {
            out.metadata.displaced.insert(
                t.id.clone(),
                SlotText {
                    text: t.negative.text.clone(),
                    source: t.negative.source,
                },
            );
        }
    }
    out.metadata.unpaired = plan.unpaired.iter().map(|&i| c.triplets[i].id.clone()).collect();
    out.metadata.nonmetamorphic = true;
    out
}
