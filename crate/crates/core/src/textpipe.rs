//! Text preprocessing: tokenization, normalization, then stopword removal.
//!
//! The stage order is fixed. Lemmatizing first matters because some
//! inflected forms only become stopwords after normalization ("done" ->
//! "do"), so filtering first would let them through.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_LEMMAS: &str = include_str!("../data/lemmas.txt");
const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Stems shorter than this are left alone by the suffix rules ("has", "was").
const MIN_STEM: usize = 3;

/// Normalized, stopword-free terms in document order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSequence {
    pub terms: Vec<String>,
}

impl TermSequence {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn join(&self) -> String {
        self.terms.join(" ")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizerConfig {
    pub lemma_map: BTreeMap<String, String>,
    /// Tried in order; the first suffix that matches wins.
    pub suffix_rules: Vec<(String, String)>,
    pub stopwords: BTreeSet<String>,
}

impl Default for NormalizerConfig {
    fn default() -> Self {
        NormalizerConfig {
            lemma_map: parse_lemma_map(DEFAULT_LEMMAS).expect("bundled lemma map is well formed"),
            suffix_rules: default_suffix_rules(),
            stopwords: parse_stopwords(DEFAULT_STOPWORDS),
        }
    }
}

fn default_suffix_rules() -> Vec<(String, String)> {
    [
        ("sses", "ss"),
        ("ies", "y"),
        ("ches", "ch"),
        ("shes", "sh"),
        ("xes", "x"),
        ("ss", "ss"),
        ("us", "us"),
        ("is", "is"),
        ("s", ""),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect()
}

impl NormalizerConfig {
    pub fn empty() -> Self {
        NormalizerConfig {
            lemma_map: BTreeMap::new(),
            suffix_rules: Vec::new(),
            stopwords: BTreeSet::new(),
        }
    }

    /// Bundled suffix rules with lemma map and stopwords read from files.
    /// Either path may be omitted to keep the bundled list.
    pub fn from_files(lemma_path: Option<&Path>, stopword_path: Option<&Path>) -> Result<Self> {
        let mut cfg = NormalizerConfig::default();
        if let Some(p) = lemma_path {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            cfg.lemma_map = parse_lemma_map(&text)?;
        }
        if let Some(p) = stopword_path {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            cfg.stopwords = parse_stopwords(&text);
        }
        Ok(cfg)
    }
}

/// Two whitespace-separated columns per line: `word lemma`.
pub fn parse_lemma_map(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        match (cols.next(), cols.next(), cols.next()) {
            (Some(w), Some(l), None) => {
                map.insert(w.to_lowercase(), l.to_lowercase());
            }
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected `word lemma`, got `{line}`"),
                })
            }
        }
    }
    Ok(map)
}

pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Lowercased alphanumeric runs. Everything else separates tokens, so
/// punctuation never survives and digits stand as their own tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn normalize_token(token: &str, config: &NormalizerConfig) -> String {
    if let Some(lemma) = config.lemma_map.get(token) {
        return lemma.clone();
    }
    for (suffix, replacement) in &config.suffix_rules {
        if let Some(stem) = token.strip_suffix(suffix.as_str()) {
            if stem.chars().count() + replacement.chars().count() >= MIN_STEM {
                return format!("{stem}{replacement}");
            }
            // a matching rule whose stem is too short blocks the later,
            // more general rules
            return token.to_string();
        }
    }
    token.to_string()
}

pub fn normalize(tokens: &[String], config: &NormalizerConfig) -> Vec<String> {
    tokens.iter().map(|t| normalize_token(t, config)).collect()
}

pub fn remove_stopwords(lemmas: Vec<String>, config: &NormalizerConfig) -> TermSequence {
    TermSequence {
        terms: lemmas
            .into_iter()
            .filter(|t| !t.is_empty() && !config.stopwords.contains(t))
            .collect(),
    }
}

pub fn preprocess(text: &str, config: &NormalizerConfig) -> TermSequence {
    let tokens = tokenize(text);
    let lemmas = normalize(&tokens, config);
    remove_stopwords(lemmas, config)
}
