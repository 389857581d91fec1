//! Yes/no entailment classifier: bag-of-words sentence embeddings, an
//! interleaved question/article input, one convolution layer with average
//! pooling, optional TF-IDF/LSI side features, and two sigmoid hidden layers.

mod embeddings;
mod net;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simfeatures::{cosine, cosine_sparse, SimilarityModels};
use crate::textpipe::{preprocess, NormalizerConfig, TermSequence};

pub use embeddings::{bow_vector, load_embeddings, parse_embeddings, EmbeddingTable};
pub use net::{EntailmentNet, Gradients, NetShape};
pub use train::{train_qa, QaTrainConfig, QaTrainReport, RestartScore};

/// `out[2i] = q[i]`, `out[2i+1] = a[i]`.
pub fn interleave(q: &[f64], a: &[f64]) -> Result<Vec<f64>> {
    if q.len() != a.len() {
        return Err(Error::Shape(format!(
            "question vector has length {}, article vector {}",
            q.len(),
            a.len()
        )));
    }
    Ok(q.iter().zip(a).flat_map(|(&x, &y)| [x, y]).collect())
}

/// Stride-1 valid convolution: `o_i = w . input[i..i+h]`.
pub fn convolve(input: &[f64], filter: &[f64]) -> Result<Vec<f64>> {
    let h = filter.len();
    if h == 0 || h > input.len() {
        return Err(Error::Shape(format!(
            "filter length {h} does not fit input length {}",
            input.len()
        )));
    }
    Ok(input
        .windows(h)
        .map(|win| win.iter().zip(filter).map(|(x, w)| x * w).sum())
        .collect())
}

/// Non-overlapping windows of width `p`; the last one may be shorter and
/// is averaged over its actual length.
pub fn avg_pool(map: &[f64], p: usize) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::InvalidParam("pooling window must be at least 1".into()));
    }
    Ok(map
        .chunks(p)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect())
}

pub fn pooled_len(map_len: usize, p: usize) -> usize {
    map_len.div_ceil(p)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuxMode {
    #[default]
    None,
    /// One cosine similarity in the source's space.
    Scalar,
    /// The raw vectors in the source's space.
    Vector,
}

/// Which sides contribute a vector in `AuxMode::Vector`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuxSides {
    #[default]
    Both,
    Question,
    Article,
}

impl AuxSides {
    fn count(self) -> usize {
        match self {
            AuxSides::Both => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxConfig {
    pub lsi: AuxMode,
    pub tfidf: AuxMode,
    pub sides: AuxSides,
}

impl Default for AuxConfig {
    fn default() -> Self {
        AuxConfig {
            lsi: AuxMode::Vector,
            tfidf: AuxMode::Vector,
            sides: AuxSides::Both,
        }
    }
}

impl AuxConfig {
    pub fn none() -> Self {
        AuxConfig {
            lsi: AuxMode::None,
            tfidf: AuxMode::None,
            sides: AuxSides::Both,
        }
    }

    pub fn width(&self, models: Option<&SimilarityModels>) -> Result<usize> {
        let block = |mode: AuxMode, dim: Option<usize>, name: &'static str| -> Result<usize> {
            Ok(match mode {
                AuxMode::None => 0,
                AuxMode::Scalar => 1,
                AuxMode::Vector => dim.ok_or(Error::MissingModel(name))? * self.sides.count(),
            })
        };
        let lsi_dim = models.and_then(|m| m.lsi.as_ref()).map(|l| l.k);
        let tfidf_dim = models.map(|m| m.vocab.len());
        Ok(block(self.lsi, lsi_dim, "LSI")? + block(self.tfidf, tfidf_dim, "TF-IDF")?)
    }
}

/// Side features: the LSI block, then the TF-IDF block.
pub fn auxiliary_features(
    question: &TermSequence,
    article: &TermSequence,
    config: &AuxConfig,
    models: Option<&SimilarityModels>,
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let push_sides = |out: &mut Vec<f64>, q: Vec<f64>, a: Vec<f64>| match config.sides {
        AuxSides::Both => {
            out.extend(q);
            out.extend(a);
        }
        AuxSides::Question => out.extend(q),
        AuxSides::Article => out.extend(a),
    };
    if config.lsi != AuxMode::None {
        let m = models.ok_or(Error::MissingModel("LSI"))?;
        let lsi = m.lsi.as_ref().ok_or(Error::MissingModel("LSI"))?;
        let vec_of = |t: &TermSequence| {
            let v = match lsi.weighting() {
                crate::vectorspace::Weighting::Tf => m.vocab.tf_vector(t),
                crate::vectorspace::Weighting::TfIdf => m.vocab.tfidf_vector(t),
            };
            lsi.project(&v)
        };
        let (q, a) = (vec_of(question), vec_of(article));
        match config.lsi {
            AuxMode::Scalar => out.push(cosine(&q, &a)),
            AuxMode::Vector => push_sides(&mut out, q, a),
            AuxMode::None => {}
        }
    }
    if config.tfidf != AuxMode::None {
        let m = models.ok_or(Error::MissingModel("TF-IDF"))?;
        let (q, a) = (m.vocab.tfidf_vector(question), m.vocab.tfidf_vector(article));
        match config.tfidf {
            AuxMode::Scalar => out.push(cosine_sparse(&q, &a)),
            AuxMode::Vector => {
                let n = m.vocab.len();
                push_sides(&mut out, q.to_dense(n), a.to_dense(n))
            }
            AuxMode::None => {}
        }
    }
    Ok(out)
}

/// Splits on sentence-final punctuation and semicolons, keeping the mark.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        cur.push(ch);
        if matches!(ch, '.' | '?' | '!' | ';') {
            let s = cur.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            cur.clear();
        }
    }
    let s = cur.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}

/// The sentence of `unit_text` with the highest tf-idf cosine to the
/// question; earliest wins ties.
pub fn select_article_sentence(
    unit_text: &str,
    question: &TermSequence,
    models: &SimilarityModels,
    normalizer: &NormalizerConfig,
) -> String {
    let sentences = split_sentences(unit_text);
    if sentences.len() <= 1 {
        return sentences.into_iter().next().unwrap_or_else(|| unit_text.trim().to_string());
    }
    let q = models.vocab.tfidf_vector(question);
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, s) in sentences.iter().enumerate() {
        let score = cosine_sparse(&q, &models.vocab.tfidf_vector(&preprocess(s, normalizer)));
        if score > best.0 {
            best = (score, i);
        }
    }
    sentences[best.1].clone()
}

/// One question paired with one article sentence, ready for the network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedExample {
    pub id: String,
    pub input: Vec<f64>,
    pub aux: Vec<f64>,
    pub label: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaExample {
    pub id: String,
    pub question: String,
    pub sentence: String,
    pub label: bool,
}

/// Turns question/sentence text into network inputs.
pub struct QaEncoder<'a> {
    pub table: &'a EmbeddingTable,
    pub models: Option<&'a SimilarityModels>,
    pub normalizer: &'a NormalizerConfig,
    pub aux: &'a AuxConfig,
}

impl QaEncoder<'_> {
    pub fn aux_width(&self) -> Result<usize> {
        self.aux.width(self.models)
    }

    pub fn encode_text(&self, question: &str, sentence: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        let q = preprocess(question, self.normalizer);
        let a = preprocess(sentence, self.normalizer);
        let input = interleave(&bow_vector(&q.terms, self.table), &bow_vector(&a.terms, self.table))?;
        let aux = auxiliary_features(&q, &a, self.aux, self.models)?;
        Ok((input, aux))
    }

    pub fn encode(&self, ex: &QaExample) -> Result<EncodedExample> {
        let (input, aux) = self.encode_text(&ex.question, &ex.sentence)?;
        Ok(EncodedExample {
            id: ex.id.clone(),
            input,
            aux,
            label: ex.label,
        })
    }
}
