//! TOML run configuration.
//!
//! String values may reference environment variables as `${NAME}`; they are
//! substituted before parsing, so secrets stay out of the file:
//!
//! ```toml
//! seed = 7
//! corpus = "data/sample.jsonl"
//! output_dir = "out"
//! providers = ["bow:64", "char:512"]
//! metrics = ["CD", "ED", "MD"]
//!
//! [generator]
//! endpoint = "${GEN_URL}/v1/generate"
//! api_key_env = "GEN_API_KEY"
//!
//! [[scorers]]
//! endpoint = "http://localhost:8080/score"
//! order_sensitive = true
//! ```

use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

use crate::embedding::ProviderSpec;
use crate::metrics::MetricId;
use crate::scorer::ScorerSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("environment variable {0} is not set")]
    MissingVar(String),
    #[error("config: {0}")]
    Parse(String),
    #[error("config references missing path {}", .0.display())]
    MissingPath(PathBuf),
    #[error("reading {path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ProviderEntry {
    Short(String),
    Full(ProviderSpec),
}

impl ProviderEntry {
    pub fn spec(&self) -> Result<ProviderSpec, ConfigError> {
        match self {
            ProviderEntry::Short(s) => s.parse().map_err(ConfigError::Parse),
            ProviderEntry::Full(p) => Ok(p.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GeneratorConfig {
    pub endpoint: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_gen_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_gen_retries")]
    pub retries: u32,
}

fn default_gen_timeout() -> u64 {
    60
}

fn default_gen_retries() -> u32 {
    3
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub corpus: Option<PathBuf>,
    /// Control corpus for the accuracy-drop table.
    pub control_corpus: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub providers: Vec<ProviderEntry>,
    #[serde(default)]
    pub metrics: Vec<MetricId>,
    #[serde(default)]
    pub scorers: Vec<ScorerSpec>,
    pub generator: Option<GeneratorConfig>,
    pub max_in_flight: Option<usize>,
    pub eps_scale: Option<f64>,
}

static VAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}").expect("valid pattern"));

/// Replaces every `${NAME}` using `lookup`. Unset names are an error.
pub fn interpolate(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String, ConfigError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for cap in VAR.captures_iter(text) {
        let whole = cap.get(0).expect("match");
        let name = &cap[1];
        out.push_str(&text[last..whole.start()]);
        out.push_str(&lookup(name).ok_or_else(|| ConfigError::MissingVar(name.to_string()))?);
        last = whole.end();
    }
    out.push_str(&text[last..]);
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_with(text, |k| std::env::var(k).ok())
    }

    pub fn parse_with(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let text = interpolate(text, lookup)?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_relative(dir);
        }
        Ok(cfg)
    }

    fn resolve_relative(&mut self, dir: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.control_corpus);
        fix(&mut self.pairs);
        fix(&mut self.output_dir);
        for entry in &mut self.providers {
            if let ProviderEntry::Full(spec) = entry {
                fix(&mut spec.path);
            }
        }
    }

    pub fn provider_specs(&self) -> Result<Vec<ProviderSpec>, ConfigError> {
        self.providers.iter().map(ProviderEntry::spec).collect()
    }

    /// Fails on the first input path that does not exist.
    pub fn check_paths(&self) -> Result<(), ConfigError> {
        let mut paths: Vec<PathBuf> = [&self.corpus, &self.control_corpus, &self.pairs]
            .into_iter()
            .flatten()
            .cloned()
            .collect();
        for spec in self.provider_specs()? {
            paths.extend(spec.path);
        }
        match paths.into_iter().find(|p| !p.exists()) {
            Some(p) => Err(ConfigError::MissingPath(p)),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(k: &str) -> Option<String> {
        match k {
            "HOST" => Some("http://gen.local".into()),
            _ => None,
        }
    }

    #[test]
    fn full_config_parses() {
        let text = r#"
seed = 7
corpus = "c.jsonl"
providers = ["bow:64", { kind = "char_ngram", dimension = 128 }]
metrics = ["CD", "MhD"]
eps_scale = 1e-5

[generator]
endpoint = "${HOST}/generate"
api_key_env = "GEN_KEY"

[[scorers]]
endpoint = "http://s/score"
order_sensitive = true
"#;
        let cfg = RunConfig::parse_with(text, env).unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.metrics, vec![MetricId::CD, MetricId::MhD]);
        assert_eq!(
            cfg.provider_specs().unwrap(),
            vec![ProviderSpec::bag_of_words(64), ProviderSpec::char_ngram(128)]
        );
        assert_eq!(cfg.generator.unwrap().endpoint, "http://gen.local/generate");
        assert!(cfg.scorers[0].order_sensitive);
    }

    #[test]
    fn unset_variable_is_an_error() {
        assert!(matches!(
            RunConfig::parse_with("corpus = \"${NOPE}\"", env),
            Err(ConfigError::MissingVar(v)) if v == "NOPE"
        ));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunConfig::parse_with("sed = 7", env).is_err());
    }

    #[test]
    fn missing_path_reported() {
        let cfg = RunConfig::parse_with("corpus = \"/definitely/not/here.jsonl\"", env).unwrap();
        assert!(matches!(cfg.check_paths(), Err(ConfigError::MissingPath(_))));
    }
}
