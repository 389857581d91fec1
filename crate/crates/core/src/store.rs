//! Versioned JSON artifacts. Every file carries a `format` string such as
//! `jurisqa-ranker/1`, the run configuration that produced it, and the
//! payload.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{Article, ParagraphUnit, QueryCase};
use crate::entailment::{AuxConfig, EntailmentNet, QaTrainReport};
use crate::error::{Error, Result};
use crate::ranker::RankModel;
use crate::simfeatures::SimilarityModels;
use crate::textpipe::NormalizerConfig;

/// Artifact kinds and their current format strings.
pub trait ArtifactKind: Serialize + DeserializeOwned {
    const KIND: &'static str;
    const FORMAT: &'static str;
    /// Conventional file name inside a model directory.
    const FILE: &'static str;
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    format: &'static str,
    config: &'a BTreeMap<String, String>,
    payload: &'a T,
}

#[derive(Deserialize)]
struct Header {
    format: String,
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    config: BTreeMap<String, String>,
    payload: T,
}

pub struct Loaded<T> {
    pub config: BTreeMap<String, String>,
    pub payload: T,
}

pub fn to_json<T: ArtifactKind>(payload: &T, config: &BTreeMap<String, String>) -> Result<String> {
    let env = EnvelopeOut {
        format: T::FORMAT,
        config,
        payload,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: ArtifactKind>(text: &str) -> Result<Loaded<T>> {
    let header: Header = serde_json::from_str(text)?;
    if header.format != T::FORMAT {
        return Err(Error::Version {
            kind: T::KIND,
            found: header.format,
            expected: T::FORMAT.to_string(),
        });
    }
    let env: EnvelopeIn<T> = serde_json::from_str(text)?;
    Ok(Loaded {
        config: env.config,
        payload: env.payload,
    })
}

pub fn save<T: ArtifactKind>(path: &Path, payload: &T, config: &BTreeMap<String, String>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, to_json(payload, config)?).map_err(|e| Error::io(path, e))
}

/// Fails with `Error::MissingArtifact` when the file does not exist.
pub fn load<T: ArtifactKind>(path: &Path) -> Result<Loaded<T>> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            kind: T::KIND,
            path: path.to_path_buf(),
        });
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

/// Parsed civil code, its retrieval units, and the query cases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStore {
    pub articles: Vec<Article>,
    pub units: Vec<ParagraphUnit>,
    /// Ids of articles that produced no unit.
    pub skipped: Vec<String>,
    pub cases: Vec<QueryCase>,
    pub split: bool,
    pub expand_references: bool,
}

impl ArtifactKind for CorpusStore {
    const KIND: &'static str = "corpus";
    const FORMAT: &'static str = "jurisqa-corpus/1";
    const FILE: &'static str = "corpus.json";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexStore {
    pub models: SimilarityModels,
    pub normalizer: NormalizerConfig,
}

impl ArtifactKind for IndexStore {
    const KIND: &'static str = "index";
    const FORMAT: &'static str = "jurisqa-index/1";
    const FILE: &'static str = "index.json";
}

impl ArtifactKind for RankModel {
    const KIND: &'static str = "ranker";
    const FORMAT: &'static str = "jurisqa-ranker/1";
    const FILE: &'static str = "ranker.json";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaStore {
    pub report: QaTrainReport,
    pub aux: AuxConfig,
    /// Embedding file the network was trained against.
    pub embeddings: String,
}

impl QaStore {
    pub fn net(&self) -> &EntailmentNet {
        &self.report.net
    }
}

impl ArtifactKind for QaStore {
    const KIND: &'static str = "entailment";
    const FORMAT: &'static str = "jurisqa-entailment/1";
    const FILE: &'static str = "entailment.json";
}
