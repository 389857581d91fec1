//! File-level steps shared by the command line and the tests: ingest,
//! index building, and loading the pieces a command needs.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::config::RunConfig;
use crate::corpus::{expand_all, parse_civil_code, parse_query_file, split_articles, whole_articles, QueryCase};
use crate::entailment::{load_embeddings, train_qa, EmbeddingTable, QaEncoder, QaTrainReport};
use crate::error::{Error, Result};
use crate::pipeline::{qa_examples, FeatureTable};
use crate::ranker::{train_ranker, IndexedCorpus, RankModel};
use crate::simfeatures::SimilarityModels;
use crate::store::{ArtifactKind, CorpusStore, IndexStore};
use crate::textpipe::{preprocess, NormalizerConfig};
use crate::vectorspace::{fit_lda, fit_lsi, Vocabulary, Weighting};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads one query file, or every `*.xml` file of a directory in name
/// order. Case ids must be unique across files.
pub fn read_queries(path: &Path) -> Result<Vec<QueryCase>> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("xml")))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    let mut cases = Vec::new();
    let mut seen = BTreeSet::new();
    for f in files {
        let parsed = parse_query_file(&read(&f)?).map_err(|e| Error::Data(format!("{}: {e}", f.display())))?;
        for c in parsed {
            if !seen.insert(c.id.clone()) {
                return Err(Error::Data(format!("{}: duplicate case id {}", f.display(), c.id)));
            }
            cases.push(c);
        }
    }
    Ok(cases)
}

pub fn ingest(code: &str, cases: Vec<QueryCase>, split: bool, expand_references: bool) -> Result<CorpusStore> {
    let articles = parse_civil_code(code)?;
    let source = if expand_references { expand_all(&articles) } else { articles.clone() };
    let result = if split { split_articles(&source) } else { whole_articles(&source) };
    Ok(CorpusStore {
        articles,
        units: result.units,
        skipped: result.skipped,
        cases,
        split,
        expand_references,
    })
}

pub fn ingest_files(cfg: &RunConfig) -> Result<CorpusStore> {
    let code_path = cfg
        .civil_code
        .as_ref()
        .ok_or_else(|| Error::InvalidParam("no civil code file given".into()))?;
    let cases = match &cfg.queries {
        Some(q) => read_queries(q)?,
        None => Vec::new(),
    };
    ingest(&read(code_path)?, cases, cfg.split, cfg.expand_references)
}

pub fn normalizer(cfg: &RunConfig) -> Result<NormalizerConfig> {
    NormalizerConfig::from_files(cfg.lemmas.as_deref(), cfg.stopwords.as_deref())
}

/// Vocabulary, LSI on tf-idf weights, and LDA on raw counts. A zero
/// dimension skips the latent model.
pub fn build_index(corpus: &CorpusStore, normalizer: NormalizerConfig, cfg: &RunConfig) -> Result<IndexStore> {
    let docs: Vec<_> = corpus.units.iter().map(|u| preprocess(&u.text, &normalizer)).collect();
    let vocab = Vocabulary::build(&docs)?;
    info!("vocabulary: {} terms over {} units", vocab.len(), docs.len());
    let mut models = SimilarityModels::new(vocab);
    models.topic_similarity = cfg.topic_similarity;
    if cfg.lsi_dim > 0 {
        models.lsi = Some(fit_lsi(&models.vocab.matrix(&docs, Weighting::TfIdf), &cfg.lsi())?);
    }
    if cfg.lda_dim > 0 {
        models.lda = Some(fit_lda(&models.vocab.matrix(&docs, Weighting::Tf), &cfg.lda())?);
    }
    Ok(IndexStore { models, normalizer })
}

pub fn indexed(corpus: &CorpusStore, index: &IndexStore) -> IndexedCorpus {
    IndexedCorpus::new(corpus.units.clone(), &index.models, &index.normalizer)
}

pub fn train_rank_model(corpus: &CorpusStore, index: &IndexStore, cfg: &RunConfig) -> Result<RankModel> {
    if corpus.cases.is_empty() {
        return Err(Error::Data("the corpus store holds no query cases".into()));
    }
    train_ranker(
        &corpus.cases,
        &indexed(corpus, index),
        &index.models,
        &index.normalizer,
        &cfg.kinds,
        &cfg.sampler(),
        &cfg.ranker_train(),
    )
}

pub fn embeddings(cfg: &RunConfig) -> Result<EmbeddingTable> {
    let path = cfg
        .embeddings
        .as_ref()
        .ok_or_else(|| Error::InvalidParam("no embedding file given".into()))?;
    if !path.exists() {
        return Err(Error::MissingArtifact {
            kind: "embeddings",
            path: path.clone(),
        });
    }
    load_embeddings(path)
}

pub fn train_entailment(
    cases: &[QueryCase],
    corpus: &CorpusStore,
    index: &IndexStore,
    table: &EmbeddingTable,
    cfg: &RunConfig,
) -> Result<QaTrainReport> {
    let units = indexed(corpus, index);
    let examples = qa_examples(cases, &units, &index.models, &index.normalizer);
    let aux = cfg.aux();
    let encoder = QaEncoder {
        table,
        models: Some(&index.models),
        normalizer: &index.normalizer,
        aux: &aux,
    };
    let encoded = examples.iter().map(|e| encoder.encode(e)).collect::<Result<Vec<_>>>()?;
    let report = train_qa(&encoded, &cfg.qa_train())?;
    let s = report.chosen_score();
    info!(
        "restart seed {} chosen: validation accuracy {:.3}, training accuracy {:.3}",
        s.seed, s.validation_accuracy, s.training_accuracy
    );
    Ok(report)
}

pub fn feature_table(corpus: &CorpusStore, index: &IndexStore, cfg: &RunConfig, all_kinds: bool) -> Result<FeatureTable> {
    use crate::simfeatures::FeatureKind;
    let kinds: Vec<FeatureKind> = if all_kinds {
        FeatureKind::ALL
            .iter()
            .copied()
            .filter(|k| index.models.check_kinds(&[*k]).is_ok())
            .collect()
    } else {
        cfg.kinds.clone()
    };
    if all_kinds && kinds.len() < FeatureKind::ALL.len() {
        warn!("latent models missing; ablating over {} of 6 features", kinds.len());
    }
    FeatureTable::build(
        &corpus.cases,
        &indexed(corpus, index),
        &index.models,
        &index.normalizer,
        &kinds,
        &cfg.sampler(),
    )
}

/// `<model_dir>/<file>` for an artifact kind.
pub fn artifact_path<T: ArtifactKind>(cfg: &RunConfig) -> PathBuf {
    cfg.model_dir.join(T::FILE)
}
