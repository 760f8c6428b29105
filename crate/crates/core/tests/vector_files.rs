mod common;

use common::fixture_corpus;
use falsematch::embedding::{
    load_vector_file, save_vector_file, text_hash, BagOfWordsEmbedder, Embedder, EmbeddingVector, ProviderSpec,
    VectorEncoding, VectorFile,
};
use falsematch::simulate::{evaluate, EvalOptions, MethodSpec};
use falsematch::MetricId;
use proptest::prelude::*;

#[test]
fn bow_a_b_a_hits_two_buckets() {
    // Published FNV-1a 64 values: "a" = 0xaf63dc4c8601ec8c, "b" = 0xaf63df4c8601f1a5.
    let a = (0xaf63dc4c8601ec8cu64 % 64) as usize;
    let b = (0xaf63df4c8601f1a5u64 % 64) as usize;
    assert_eq!((a, b), (12, 37));
    let v = BagOfWordsEmbedder::new(64).unwrap().embed("a b a").unwrap();
    let mut want = vec![0.0; 64];
    want[a] = 2.0;
    want[b] = 1.0;
    assert_eq!(v.components(), &want[..]);
}

#[test]
fn text_hash_is_plain_sha256() {
    assert_eq!(
        text_hash("abc"),
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
    // "é" decomposed and precomposed hash alike.
    assert_eq!(text_hash("caf\u{65}\u{301}"), text_hash("caf\u{e9}"));
}

fn awkward_values() -> Vec<f64> {
    vec![
        0.1,
        -0.0,
        1e-310,
        f64::MAX,
        f64::MIN_POSITIVE,
        -1.0 / 3.0,
        123456.789e-20,
        f64::EPSILON,
    ]
}

#[test]
fn both_encodings_reload_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    for enc in [VectorEncoding::Binary, VectorEncoding::Decimal] {
        let mut f = VectorFile::new("m", 8, enc);
        f.insert("one", EmbeddingVector::new(awkward_values()).unwrap(), true)
            .unwrap();
        let rev: Vec<f64> = awkward_values().into_iter().rev().collect();
        f.insert("two", EmbeddingVector::new(rev).unwrap(), false).unwrap();
        let path = dir.path().join(format!("{enc:?}.jsonl"));
        save_vector_file(&path, &f).unwrap();
        let back = load_vector_file(&path).unwrap();
        assert_eq!(back.header, f.header);
        for (x, y) in f.entries().iter().zip(back.entries()) {
            assert_eq!(x.text_hash, y.text_hash);
            assert_eq!(x.text, y.text);
            let bits = |v: &EmbeddingVector| v.components().iter().map(|c| c.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&x.vector), bits(&y.vector));
        }
        assert_eq!(back.to_text(), f.to_text());
    }
}

#[test]
fn adapter_style_file_loads() {
    let text = concat!(
        "{\"model_id\":\"sentence-transformers/all-MiniLM-L6-v2\",\"dimension\":3,\"count\":2,\"encoding\":\"binary\",\"pooling\":\"mean\"}\n",
        "{\"text_hash\":\"ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad\",\"text\":\"abc\",\"components\":\"AAAAAAAA8D8AAAAAAAAAAAAAAAAAAADA\"}\n",
        "{\"text_hash\":\"3e23e8160039594a33894f6564e1b1348bbd7a0088d42c4acb73eeaed59c009d\",\"components\":\"AAAAAAAA4D8AAAAAAADgPwAAAAAAAAAA\"}\n",
    );
    let f = VectorFile::parse(text).unwrap();
    assert_eq!(f.header.model_id, "sentence-transformers/all-MiniLM-L6-v2");
    assert_eq!(f.header.dimension, 3);
    assert_eq!(f.header.pooling.as_deref(), Some("mean"));
    assert_eq!(f.get("abc").unwrap().components(), &[1.0, 0.0, -2.0]);
    assert_eq!(f.get("b").unwrap().components(), &[0.5, 0.5, 0.0]);
    assert_eq!(f.to_text(), text);
}

#[test]
fn vector_file_provider_replays_builtin_vectors() {
    let corpus = fixture_corpus("oracle_corpus.jsonl");
    let bow = BagOfWordsEmbedder::new(64).unwrap();
    let mut f = VectorFile::new(bow.model_id(), 64, VectorEncoding::Binary);
    for t in corpus.distinct_texts() {
        f.insert(t, bow.embed(t).unwrap(), false).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.jsonl");
    save_vector_file(&path, &f).unwrap();
    let opts = EvalOptions::default();
    for m in [MetricId::CD, MetricId::MD, MetricId::LD] {
        let a = evaluate(&corpus, &[MethodSpec::new(ProviderSpec::vector_file(&path), m)], &opts).unwrap();
        let b = evaluate(&corpus, &[MethodSpec::new(ProviderSpec::bag_of_words(64), m)], &opts).unwrap();
        assert_eq!(a.outcomes, b.outcomes, "{m}");
    }
}

#[test]
fn missing_vectors_fail_only_their_triplets() {
    let corpus = fixture_corpus("one_per_category.jsonl");
    let bow = BagOfWordsEmbedder::new(64).unwrap();
    let mut f = VectorFile::new("partial", 64, VectorEncoding::Decimal);
    let dropped = &corpus.triplets[0].negative.text;
    for t in corpus.distinct_texts().into_iter().filter(|t| *t != dropped) {
        f.insert(t, bow.embed(t).unwrap(), false).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.jsonl");
    save_vector_file(&path, &f).unwrap();
    let eval = evaluate(
        &corpus,
        &[MethodSpec::new(ProviderSpec::vector_file(&path), MetricId::ED)],
        &EvalOptions::default(),
    )
    .unwrap();
    assert!(eval.outcomes[0].is_err());
    assert!(eval.outcomes[1..].iter().all(|o| o.is_ok()));
    let report = eval.report();
    assert_eq!(report.methods[0].overall.errors, 1);
    assert_eq!(report.methods[0].overall.n, 7);
}

proptest! {
    #[test]
    fn random_vectors_round_trip(vs in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 5), 1..10)) {
        for enc in [VectorEncoding::Binary, VectorEncoding::Decimal] {
            let mut f = VectorFile::new("p", 5, enc);
            for (i, v) in vs.iter().enumerate() {
                f.insert(&format!("text {i}"), EmbeddingVector::new(v.clone()).unwrap(), false).unwrap();
            }
            let back = VectorFile::parse(&f.to_text()).unwrap();
            for (x, y) in f.entries().iter().zip(back.entries()) {
                let bx: Vec<u64> = x.vector.components().iter().map(|c| c.to_bits()).collect();
                let by: Vec<u64> = y.vector.components().iter().map(|c| c.to_bits()).collect();
                prop_assert_eq!(bx, by);
            }
        }
    }
}
