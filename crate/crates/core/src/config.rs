//! Run configuration: defaults, a flat `key = value` file format, and an
//! ordered echo written into every artifact.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::entailment::{AuxConfig, AuxMode, AuxSides, QaTrainConfig};
use crate::error::{Error, Result};
use crate::pipeline::{Averaging, IrProtocol, VotingScenario};
use crate::ranker::{SamplerConfig, TrainConfig};
use crate::simfeatures::{parse_kinds, FeatureKind, TopicSimilarity};
use crate::vectorspace::{LdaConfig, LsiConfig, Weighting};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub civil_code: Option<PathBuf>,
    /// A query XML file or a directory of them.
    pub queries: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub model_dir: PathBuf,
    pub lemmas: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,

    pub split: bool,
    pub expand_references: bool,

    pub kinds: Vec<FeatureKind>,
    pub c: f64,
    pub ratio: f64,
    pub top_k: Option<usize>,
    pub ranker_epochs: usize,
    pub eta0: f64,
    pub hard_negatives: usize,
    pub random_negatives: usize,

    pub lsi_dim: usize,
    /// 0 skips the LDA model.
    pub lda_dim: usize,
    pub lda_iterations: usize,
    pub topic_similarity: TopicSimilarity,

    pub filters: usize,
    pub filter_len: usize,
    pub pool: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub restarts: usize,
    pub qa_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub aux_lsi: AuxMode,
    pub aux_tfidf: AuxMode,
    pub aux_sides: AuxSides,

    pub seed: u64,
    pub split_seeds: Vec<u64>,
    pub test_fraction: f64,
    pub averaging: Averaging,
    pub scenario: VotingScenario,
    pub vote_k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            civil_code: None,
            queries: None,
            embeddings: None,
            model_dir: PathBuf::from("model"),
            lemmas: None,
            stopwords: None,
            split: true,
            expand_references: false,
            kinds: vec![FeatureKind::LsiCosine, FeatureKind::ManhattanTf, FeatureKind::JaccardTfidf],
            c: 600.0,
            ratio: 0.85,
            top_k: None,
            ranker_epochs: 200,
            eta0: 0.1,
            hard_negatives: 50,
            random_negatives: 50,
            lsi_dim: 300,
            lda_dim: 300,
            lda_iterations: 500,
            topic_similarity: TopicSimilarity::Cosine,
            filters: 10,
            filter_len: 2,
            pool: 100,
            hidden1: 200,
            hidden2: 200,
            restarts: 10,
            qa_epochs: 200,
            learning_rate: 0.01,
            batch_size: 16,
            patience: 20,
            aux_lsi: AuxMode::Vector,
            aux_tfidf: AuxMode::Vector,
            aux_sides: AuxSides::Both,
            seed: 0,
            split_seeds: (0..5).collect(),
            test_fraction: 0.2,
            averaging: Averaging::Micro,
            scenario: VotingScenario::Majority,
            vote_k: 5,
        }
    }
}

fn bad(key: &str, value: &str, want: &str) -> Error {
    Error::InvalidParam(format!("{key} = `{value}`: expected {want}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, want: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value, want))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(bad(key, value, "true or false")),
    }
}

fn parse_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn parse_aux(key: &str, value: &str) -> Result<AuxMode> {
    match value.to_ascii_lowercase().as_str() {
        "none" => Ok(AuxMode::None),
        "scalar" => Ok(AuxMode::Scalar),
        "vector" => Ok(AuxMode::Vector),
        _ => Err(bad(key, value, "none, scalar or vector")),
    }
}

fn aux_name(m: AuxMode) -> &'static str {
    match m {
        AuxMode::None => "none",
        AuxMode::Scalar => "scalar",
        AuxMode::Vector => "vector",
    }
}

fn path_str(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    /// Sets one field from its textual form. Keys may use `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "civil_code" => self.civil_code = parse_path(value),
            "queries" => self.queries = parse_path(value),
            "embeddings" => self.embeddings = parse_path(value),
            "model_dir" => self.model_dir = PathBuf::from(value),
            "lemmas" => self.lemmas = parse_path(value),
            "stopwords" => self.stopwords = parse_path(value),
            "split" => self.split = parse_bool(k, value)?,
            "expand_references" => self.expand_references = parse_bool(k, value)?,
            "kinds" | "features" => {
                self.kinds = parse_kinds(value)?;
                if self.kinds.is_empty() {
                    return Err(bad(k, value, "at least one feature kind"));
                }
            }
            "c" => self.c = parse_num(k, value, "a number")?,
            "ratio" => self.ratio = parse_num(k, value, "a number")?,
            "top_k" => {
                self.top_k = match value {
                    "" | "none" => None,
                    v => Some(parse_num(k, v, "a count or none")?),
                }
            }
            "ranker_epochs" => self.ranker_epochs = parse_num(k, value, "a count")?,
            "eta0" => self.eta0 = parse_num(k, value, "a number")?,
            "hard_negatives" => self.hard_negatives = parse_num(k, value, "a count")?,
            "random_negatives" => self.random_negatives = parse_num(k, value, "a count")?,
            "lsi_dim" => self.lsi_dim = parse_num(k, value, "a count")?,
            "lda_dim" => self.lda_dim = parse_num(k, value, "a count")?,
            "lda_iterations" => self.lda_iterations = parse_num(k, value, "a count")?,
            "topic_similarity" => {
                self.topic_similarity = match value.to_ascii_lowercase().as_str() {
                    "cosine" => TopicSimilarity::Cosine,
                    "hellinger" => TopicSimilarity::Hellinger,
                    _ => return Err(bad(k, value, "cosine or hellinger")),
                }
            }
            "filters" => self.filters = parse_num(k, value, "a count")?,
            "filter_len" => self.filter_len = parse_num(k, value, "a count")?,
            "pool" => self.pool = parse_num(k, value, "a count")?,
            "hidden1" => self.hidden1 = parse_num(k, value, "a count")?,
            "hidden2" => self.hidden2 = parse_num(k, value, "a count")?,
            "hidden" => {
                let h = parse_num(k, value, "a count")?;
                self.hidden1 = h;
                self.hidden2 = h;
            }
            "restarts" => self.restarts = parse_num(k, value, "a count")?,
            "qa_epochs" => self.qa_epochs = parse_num(k, value, "a count")?,
            "learning_rate" => self.learning_rate = parse_num(k, value, "a number")?,
            "batch_size" => self.batch_size = parse_num(k, value, "a count")?,
            "patience" => self.patience = parse_num(k, value, "a count")?,
            "aux_lsi" => self.aux_lsi = parse_aux(k, value)?,
            "aux_tfidf" => self.aux_tfidf = parse_aux(k, value)?,
            "aux_sides" => {
                self.aux_sides = match value.to_ascii_lowercase().as_str() {
                    "both" => AuxSides::Both,
                    "question" => AuxSides::Question,
                    "article" => AuxSides::Article,
                    _ => return Err(bad(k, value, "both, question or article")),
                }
            }
            "seed" => self.seed = parse_num(k, value, "an unsigned integer")?,
            "split_seeds" => {
                self.split_seeds = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_num(k, s.trim(), "comma-separated unsigned integers"))
                    .collect::<Result<_>>()?;
                if self.split_seeds.is_empty() {
                    return Err(bad(k, value, "at least one seed"));
                }
            }
            "test_fraction" => self.test_fraction = parse_num(k, value, "a number in (0, 1)")?,
            "averaging" => self.averaging = value.parse()?,
            "scenario" => self.scenario = value.parse()?,
            "vote_k" => self.vote_k = parse_num(k, value, "a count")?,
            _ => return Err(Error::InvalidParam(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// `key = value` lines; blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    /// Every field in its textual form; feeding these back through `set`
    /// reproduces the config.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let pairs: Vec<(&str, String)> = vec![
            ("civil_code", path_str(&self.civil_code)),
            ("queries", path_str(&self.queries)),
            ("embeddings", path_str(&self.embeddings)),
            ("model_dir", self.model_dir.display().to_string()),
            ("lemmas", path_str(&self.lemmas)),
            ("stopwords", path_str(&self.stopwords)),
            ("split", self.split.to_string()),
            ("expand_references", self.expand_references.to_string()),
            ("kinds", self.kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(",")),
            ("c", self.c.to_string()),
            ("ratio", self.ratio.to_string()),
            ("top_k", self.top_k.map(|k| k.to_string()).unwrap_or_else(|| "none".into())),
            ("ranker_epochs", self.ranker_epochs.to_string()),
            ("eta0", self.eta0.to_string()),
            ("hard_negatives", self.hard_negatives.to_string()),
            ("random_negatives", self.random_negatives.to_string()),
            ("lsi_dim", self.lsi_dim.to_string()),
            ("lda_dim", self.lda_dim.to_string()),
            ("lda_iterations", self.lda_iterations.to_string()),
            (
                "topic_similarity",
                match self.topic_similarity {
                    TopicSimilarity::Cosine => "cosine",
                    TopicSimilarity::Hellinger => "hellinger",
                }
                .into(),
            ),
            ("filters", self.filters.to_string()),
            ("filter_len", self.filter_len.to_string()),
            ("pool", self.pool.to_string()),
            ("hidden1", self.hidden1.to_string()),
            ("hidden2", self.hidden2.to_string()),
            ("restarts", self.restarts.to_string()),
            ("qa_epochs", self.qa_epochs.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("patience", self.patience.to_string()),
            ("aux_lsi", aux_name(self.aux_lsi).into()),
            ("aux_tfidf", aux_name(self.aux_tfidf).into()),
            (
                "aux_sides",
                match self.aux_sides {
                    AuxSides::Both => "both",
                    AuxSides::Question => "question",
                    AuxSides::Article => "article",
                }
                .into(),
            ),
            ("seed", self.seed.to_string()),
            ("split_seeds", join(&self.split_seeds)),
            ("test_fraction", self.test_fraction.to_string()),
            (
                "averaging",
                match self.averaging {
                    Averaging::Micro => "micro",
                    Averaging::Macro => "macro",
                }
                .into(),
            ),
            ("scenario", self.scenario.name().into()),
            ("vote_k", self.vote_k.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Range checks that do not need any data.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParam(msg));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return fail(format!("c must be positive, got {}", self.c));
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return fail(format!("ratio must lie in (0, 1], got {}", self.ratio));
        }
        if self.top_k == Some(0) {
            return fail("top_k must be at least 1".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return fail(format!("test_fraction must lie in (0, 1), got {}", self.test_fraction));
        }
        if !(self.eta0 > 0.0 && self.learning_rate > 0.0) {
            return fail("eta0 and learning_rate must be positive".into());
        }
        let counts = [
            ("ranker_epochs", self.ranker_epochs),
            ("lda_iterations", self.lda_iterations),
            ("filters", self.filters),
            ("filter_len", self.filter_len),
            ("pool", self.pool),
            ("hidden1", self.hidden1),
            ("hidden2", self.hidden2),
            ("restarts", self.restarts),
            ("qa_epochs", self.qa_epochs),
            ("batch_size", self.batch_size),
            ("vote_k", self.vote_k),
        ];
        if let Some((k, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return fail(format!("{k} must be at least 1"));
        }
        Ok(())
    }

    pub fn lsi(&self) -> LsiConfig {
        LsiConfig {
            k: self.lsi_dim,
            seed: self.seed,
            weighting: Weighting::TfIdf,
            ..LsiConfig::default()
        }
    }

    pub fn lda(&self) -> LdaConfig {
        LdaConfig {
            k: self.lda_dim,
            iterations: self.lda_iterations,
            seed: self.seed,
            ..LdaConfig::default()
        }
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            hard_negatives: self.hard_negatives,
            random_negatives: self.random_negatives,
            seed: self.seed,
        }
    }

    pub fn ranker_train(&self) -> TrainConfig {
        TrainConfig {
            c: self.c,
            epochs: self.ranker_epochs,
            eta0: self.eta0,
            seed: self.seed,
        }
    }

    pub fn ir_protocol(&self) -> IrProtocol {
        IrProtocol {
            train: self.ranker_train(),
            ratio: self.ratio,
            top_k: self.top_k,
            averaging: self.averaging,
            test_fraction: self.test_fraction,
            split_seeds: self.split_seeds.clone(),
        }
    }

    pub fn aux(&self) -> AuxConfig {
        AuxConfig {
            lsi: self.aux_lsi,
            tfidf: self.aux_tfidf,
            sides: self.aux_sides,
        }
    }

    pub fn qa_train(&self) -> QaTrainConfig {
        QaTrainConfig {
            filters: self.filters,
            filter_len: self.filter_len,
            pool: self.pool,
            hidden1: self.hidden1,
            hidden2: self.hidden2,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.qa_epochs,
            patience: self.patience,
            restarts: self.restarts,
            seed: self.seed,
            ..QaTrainConfig::default()
        }
    }
}
