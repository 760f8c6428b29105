#![allow(dead_code)]

pub mod oracle;
pub mod stub_server;

use std::path::PathBuf;

use falsematch::corpus::{parse_corpus_str, Corpus};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn fixture_corpus(name: &str) -> Corpus {
    parse_corpus_str(&fixture_text(name)).unwrap()
}
