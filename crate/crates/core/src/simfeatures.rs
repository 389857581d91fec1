//! The six query-article similarity features and their scaling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textpipe::TermSequence;
use crate::vectorspace::{LdaModel, LsiModel, SparseVector, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "TFIDF_COSINE")]
    TfidfCosine,
    #[serde(rename = "EUCLIDEAN_TF")]
    EuclideanTf,
    #[serde(rename = "MANHATTAN_TF")]
    ManhattanTf,
    #[serde(rename = "JACCARD_TFIDF")]
    JaccardTfidf,
    #[serde(rename = "LSI_COSINE")]
    LsiCosine,
    #[serde(rename = "LDA_COSINE")]
    LdaCosine,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 6] = [
        FeatureKind::TfidfCosine,
        FeatureKind::EuclideanTf,
        FeatureKind::ManhattanTf,
        FeatureKind::JaccardTfidf,
        FeatureKind::LsiCosine,
        FeatureKind::LdaCosine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::TfidfCosine => "TFIDF_COSINE",
            FeatureKind::EuclideanTf => "EUCLIDEAN_TF",
            FeatureKind::ManhattanTf => "MANHATTAN_TF",
            FeatureKind::JaccardTfidf => "JACCARD_TFIDF",
            FeatureKind::LsiCosine => "LSI_COSINE",
            FeatureKind::LdaCosine => "LDA_COSINE",
        }
    }

    /// Short label used in report rows ("LSI, Manhattan, Jaccard").
    pub fn label(self) -> &'static str {
        match self {
            FeatureKind::TfidfCosine => "TF-IDF",
            FeatureKind::EuclideanTf => "Euclidean",
            FeatureKind::ManhattanTf => "Manhattan",
            FeatureKind::JaccardTfidf => "Jaccard",
            FeatureKind::LsiCosine => "LSI",
            FeatureKind::LdaCosine => "LDA",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        Ok(match key.as_str() {
            "TFIDF_COSINE" | "TFIDF" | "TF_IDF" => FeatureKind::TfidfCosine,
            "EUCLIDEAN_TF" | "EUCLIDEAN" => FeatureKind::EuclideanTf,
            "MANHATTAN_TF" | "MANHATTAN" => FeatureKind::ManhattanTf,
            "JACCARD_TFIDF" | "JACCARD" => FeatureKind::JaccardTfidf,
            "LSI_COSINE" | "LSI" => FeatureKind::LsiCosine,
            "LDA_COSINE" | "LDA" => FeatureKind::LdaCosine,
            _ => return Err(Error::UnknownFeature(s.trim().to_string())),
        })
    }
}

/// Parses a comma-separated kind list such as `LSI,MANHATTAN_TF,JACCARD_TFIDF`.
pub fn parse_kinds(list: &str) -> Result<Vec<FeatureKind>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

pub fn kinds_label(kinds: &[FeatureKind]) -> String {
    kinds.iter().map(|k| k.label()).collect::<Vec<_>>().join(", ")
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn cosine_sparse(a: &SparseVector, b: &SparseVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        a.dot(b) / (na * nb)
    }
}

pub fn euclidean_tf(q: &SparseVector, a: &SparseVector) -> f64 {
    q.zip_union(a).map(|(_, x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn manhattan_tf(q: &SparseVector, a: &SparseVector) -> f64 {
    q.zip_union(a).map(|(_, x, y)| (x - y).abs()).sum()
}

/// `sum(min(x_i, y_i)) / sum(max(x_i, y_i))` over the union support.
/// Two empty vectors are identical and score 1.
pub fn generalized_jaccard(q: &SparseVector, a: &SparseVector) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, x, y) in q.zip_union(a) {
        if x < 0.0 || y < 0.0 {
            return Err(Error::NegativeWeight {
                index: i,
                weight: x.min(y),
            });
        }
        num += x.min(y);
        den += x.max(y);
    }
    Ok(if den == 0.0 { 1.0 } else { num / den })
}

pub fn jaccard_distance(q: &SparseVector, a: &SparseVector) -> Result<f64> {
    Ok(1.0 - generalized_jaccard(q, a)?)
}

/// How two topic distributions become one score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopicSimilarity {
    #[default]
    Cosine,
    /// `1 - H(p, q)` with H the Hellinger distance.
    Hellinger,
}

fn hellinger_similarity(p: &[f64], q: &[f64]) -> f64 {
    let bc: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
    1.0 - (1.0 - bc.min(1.0)).max(0.0).sqrt()
}

/// Everything needed to turn text into the representations the features use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityModels {
    pub vocab: Vocabulary,
    pub lsi: Option<LsiModel>,
    pub lda: Option<LdaModel>,
    #[serde(default)]
    pub topic_similarity: TopicSimilarity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DocRepr {
    pub tf: SparseVector,
    pub tfidf: SparseVector,
    pub lsi: Option<Vec<f64>>,
    pub lda: Option<Vec<f64>>,
}

impl SimilarityModels {
    pub fn new(vocab: Vocabulary) -> Self {
        SimilarityModels {
            vocab,
            lsi: None,
            lda: None,
            topic_similarity: TopicSimilarity::Cosine,
        }
    }

    pub fn represent(&self, terms: &TermSequence) -> DocRepr {
        let tf = self.vocab.tf_vector(terms);
        let tfidf = self.vocab.tfidf_vector(terms);
        let lsi = self.lsi.as_ref().map(|m| {
            let src = match m.weighting() {
                crate::vectorspace::Weighting::Tf => &tf,
                crate::vectorspace::Weighting::TfIdf => &tfidf,
            };
            m.project(src)
        });
        let lda = self.lda.as_ref().map(|m| m.infer(&tf));
        DocRepr { tf, tfidf, lsi, lda }
    }

    /// Raw (unscaled) feature values in `kinds` order.
    pub fn values(&self, q: &DocRepr, a: &DocRepr, kinds: &[FeatureKind]) -> Result<Vec<f64>> {
        kinds
            .iter()
            .map(|&kind| {
                Ok(match kind {
                    FeatureKind::TfidfCosine => cosine_sparse(&q.tfidf, &a.tfidf),
                    FeatureKind::EuclideanTf => euclidean_tf(&q.tf, &a.tf),
                    FeatureKind::ManhattanTf => manhattan_tf(&q.tf, &a.tf),
                    FeatureKind::JaccardTfidf => jaccard_distance(&q.tfidf, &a.tfidf)?,
                    FeatureKind::LsiCosine => match (&q.lsi, &a.lsi) {
                        (Some(x), Some(y)) => cosine(x, y),
                        _ => return Err(Error::MissingModel(kind.name())),
                    },
                    FeatureKind::LdaCosine => match (&q.lda, &a.lda) {
                        (Some(x), Some(y)) => match self.topic_similarity {
                            TopicSimilarity::Cosine => cosine(x, y),
                            TopicSimilarity::Hellinger => hellinger_similarity(x, y),
                        },
                        _ => return Err(Error::MissingModel(kind.name())),
                    },
                })
            })
            .collect()
    }

    pub fn check_kinds(&self, kinds: &[FeatureKind]) -> Result<()> {
        for &k in kinds {
            match k {
                FeatureKind::LsiCosine if self.lsi.is_none() => return Err(Error::MissingModel(k.name())),
                FeatureKind::LdaCosine if self.lda.is_none() => return Err(Error::MissingModel(k.name())),
                _ => {}
            }
        }
        Ok(())
    }
}

/// Per-feature min-max statistics from training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Option<Self> {
        let mut it = rows.into_iter();
        let first = it.next()?;
        let mut s = Scaler {
            min: first.to_vec(),
            max: first.to_vec(),
        };
        for r in it {
            for (j, &x) in r.iter().enumerate() {
                s.min[j] = s.min[j].min(x);
                s.max[j] = s.max[j].max(x);
            }
        }
        Some(s)
    }

    /// Maps into `[0, 1]`, clamping values outside the training range.
    /// A constant training feature maps to 0.
    pub fn apply(&self, values: &mut [f64]) {
        for (j, x) in values.iter_mut().enumerate() {
            let span = self.max[j] - self.min[j];
            *x = if span > 0.0 {
                ((*x - self.min[j]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub query_id: String,
    pub unit_id: String,
    pub values: Vec<f64>,
    pub scaled: bool,
}

pub fn feature_vector(
    query_id: &str,
    query: &TermSequence,
    unit_id: &str,
    unit: &TermSequence,
    kinds: &[FeatureKind],
    models: &SimilarityModels,
    scaler: Option<&Scaler>,
) -> Result<FeatureVector> {
    models.check_kinds(kinds)?;
    let q = models.represent(query);
    let a = models.represent(unit);
    let mut values = models.values(&q, &a, kinds)?;
    if let Some(s) = scaler {
        s.apply(&mut values);
    }
    Ok(FeatureVector {
        query_id: query_id.to_string(),
        unit_id: unit_id.to_string(),
        values,
        scaled: scaler.is_some(),
    })
}
