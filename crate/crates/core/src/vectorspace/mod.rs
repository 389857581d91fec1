//! Term vocabulary and the TF, TF-IDF, LSI and LDA document representations.

mod lda;
mod lsi;
mod sparse;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textpipe::TermSequence;

pub use lda::{fit_lda, LdaConfig, LdaModel};
pub use lsi::{fit_lsi, LsiConfig, LsiModel};
pub use sparse::SparseVector;

/// Which raw weighting a latent model was fitted on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    Tf,
    TfIdf,
}

/// Terms are indexed in lexicographic order, so the index assignment does
/// not depend on corpus order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyData")]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<u32>,
    document_count: usize,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn build(docs: &[TermSequence]) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, u32> = BTreeMap::new();
        for doc in docs {
            let distinct: BTreeSet<&str> = doc.terms.iter().map(String::as_str).collect();
            for t in distinct {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let mut vocab = Vocabulary {
            terms: df.keys().map(|t| t.to_string()).collect(),
            df: df.values().copied().collect(),
            document_count: docs.len(),
            index: HashMap::new(),
        };
        vocab.rebuild_index();
        Ok(vocab)
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn document_count(&self) -> usize {
        self.document_count
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: u32) -> &str {
        &self.terms[index as usize]
    }

    pub fn df(&self, term: &str) -> Option<u32> {
        self.index_of(term).map(|i| self.df[i as usize])
    }

    pub fn df_at(&self, index: u32) -> u32 {
        self.df[index as usize]
    }

    /// Smoothed inverse document frequency `ln((1+N)/(1+df)) + 1`.
    pub fn idf_at(&self, index: u32) -> f64 {
        idf(self.document_count, self.df[index as usize])
    }

    pub fn tf_vector(&self, terms: &TermSequence) -> SparseVector {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for t in &terms.terms {
            if let Some(i) = self.index_of(t) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        SparseVector::from_sorted(counts.into_iter().collect())
    }

    pub fn tfidf_vector(&self, terms: &TermSequence) -> SparseVector {
        let tf = self.tf_vector(terms);
        tf.map_values(|i, w| w * self.idf_at(i))
    }

    pub fn vectorize(&self, terms: &TermSequence, weighting: Weighting) -> SparseVector {
        match weighting {
            Weighting::Tf => self.tf_vector(terms),
            Weighting::TfIdf => self.tfidf_vector(terms),
        }
    }

    pub fn matrix(&self, docs: &[TermSequence], weighting: Weighting) -> DocTermMatrix {
        DocTermMatrix {
            rows: docs.iter().map(|d| self.vectorize(d, weighting)).collect(),
            n_cols: self.len(),
        }
    }
}

#[derive(Deserialize)]
struct VocabularyData {
    terms: Vec<String>,
    df: Vec<u32>,
    document_count: usize,
}

impl TryFrom<VocabularyData> for Vocabulary {
    type Error = String;

    fn try_from(d: VocabularyData) -> std::result::Result<Self, String> {
        if d.terms.len() != d.df.len() {
            return Err(format!("{} terms but {} document frequencies", d.terms.len(), d.df.len()));
        }
        let mut vocab = Vocabulary {
            terms: d.terms,
            df: d.df,
            document_count: d.document_count,
            index: HashMap::new(),
        };
        vocab.rebuild_index();
        if vocab.index.len() != vocab.terms.len() {
            return Err("duplicate terms".into());
        }
        Ok(vocab)
    }
}

pub fn idf(document_count: usize, df: u32) -> f64 {
    ((1.0 + document_count as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Documents as sparse rows over a fixed column count.
#[derive(Clone, Debug, PartialEq)]
pub struct DocTermMatrix {
    pub rows: Vec<SparseVector>,
    pub n_cols: usize,
}

impl DocTermMatrix {
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        DocTermMatrix {
            rows: rows.iter().map(|r| SparseVector::from_dense(r)).collect(),
            n_cols,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}
