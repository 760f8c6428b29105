mod common;

use common::{fixture, fixture_corpus, fixture_text};
use falsematch::corpus::MrCategory;
use falsematch::scorer::{Cassette, CassetteScorer, Scorer, ScorerError};
use falsematch::simulate::{evaluate_with_scorer, EvalOptions, ScoreOrder};

#[test]
fn six_recorded_pairs_replay_bit_exact() {
    let c = Cassette::load(&fixture("six_pairs.cassette.jsonl")).unwrap();
    let s = CassetteScorer::new("nli-recorded", c, true);
    let cases: [(&str, &str, u64); 6] = [
        (
            "The museum is open on Sundays.",
            "On Sundays, visitors can enter the museum.",
            0.8837000131607056f64.to_bits(),
        ),
        (
            "The museum is open on Sundays.",
            "The museum is not open on Sundays.",
            0.0071000000461936f64.to_bits(),
        ),
        (
            "In 2019, Sara published her first novel in Paris.",
            "Sara published her first novel in Paris.",
            0.03420000150799751f64.to_bits(),
        ),
        (
            "Sara published her first novel in Paris.",
            "In 2019, Sara published her first novel in Paris.",
            0.9915000200271606f64.to_bits(),
        ),
        (
            "The bridge was opened in 1932.",
            "In 1932, the bridge was opened by the mayor after four years of construction.",
            0.12070000171661377f64.to_bits(),
        ),
        (
            "In 1932, the bridge was opened by the mayor after four years of construction.",
            "The bridge was opened in 1932.",
            0.9883999824523926f64.to_bits(),
        ),
    ];
    for (s1, s2, bits) in cases {
        assert_eq!(s.score(s1, s2).unwrap().to_bits(), bits, "{s1} / {s2}");
        // Each value is an f32 widened to f64.
        assert_eq!(f64::from(f64::from_bits(bits) as f32).to_bits(), bits);
    }
    assert!(matches!(
        s.score("The museum is not open on Sundays.", "The museum is open on Sundays."),
        Err(ScorerError::Unrecorded { .. })
    ));
}

#[test]
fn cassette_text_is_stable() {
    for name in ["six_pairs.cassette.jsonl", "one_per_category.cassette.jsonl"] {
        let text = fixture_text(name);
        assert_eq!(Cassette::parse(&text).unwrap().to_text(), text, "{name}");
    }
}

#[test]
fn recorded_scorer_accuracies_are_pinned() {
    let corpus = fixture_corpus("one_per_category.jsonl");
    let c = Cassette::load(&fixture("one_per_category.cassette.jsonl")).unwrap();
    let s = CassetteScorer::new("recorded", c, true);
    let r = evaluate_with_scorer(&corpus, &s, ScoreOrder::Forward, &EvalOptions::default())
        .unwrap()
        .report();
    let m = &r.methods[0];
    assert_eq!(m.method_id, "recorded");
    assert_eq!(m.overall.accuracy(), Some(0.5));
    assert_eq!(m.overall.ties, 1);
    let correct: Vec<MrCategory> = m
        .per_category
        .iter()
        .filter(|(_, s)| s.accuracy() == Some(1.0))
        .map(|(c, _)| *c)
        .collect();
    assert_eq!(
        correct,
        [
            MrCategory::ObjSub,
            MrCategory::WordDel,
            MrCategory::ErrTrans,
            MrCategory::ErrNli
        ]
    );
    // Reverse calls were never recorded.
    let rev = evaluate_with_scorer(&corpus, &s, ScoreOrder::Reverse, &EvalOptions::default())
        .unwrap()
        .report();
    assert_eq!(rev.methods[0].method_id, "recorded-R");
    assert_eq!(rev.methods[0].overall.errors, 8);
    assert!(rev.empty_methods().contains(&"recorded-R"));
}
