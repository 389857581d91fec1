//! Pairwise linear ranking SVM and score-ratio retrieval.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ParagraphUnit, QueryCase, UnitIndex};
use crate::error::{Error, Result};
use crate::simfeatures::{cosine_sparse, DocRepr, FeatureKind, FeatureVector, Scaler, SimilarityModels};
use crate::textpipe::{preprocess, NormalizerConfig};

/// Units with their precomputed representations.
#[derive(Clone, Debug)]
pub struct IndexedCorpus {
    pub units: Vec<ParagraphUnit>,
    pub reprs: Vec<DocRepr>,
    pub index: UnitIndex,
}

impl IndexedCorpus {
    pub fn new(units: Vec<ParagraphUnit>, models: &SimilarityModels, normalizer: &NormalizerConfig) -> Self {
        let reprs = units
            .iter()
            .map(|u| models.represent(&preprocess(&u.text, normalizer)))
            .collect();
        let index = UnitIndex::new(&units);
        IndexedCorpus { units, reprs, index }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Non-gold units with the highest tf-idf cosine to the query.
    pub hard_negatives: usize,
    /// Further non-gold units drawn uniformly.
    pub random_negatives: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            hard_negatives: 50,
            random_negatives: 50,
            seed: 0,
        }
    }
}

/// Training pairs of one query: every relevant vector is paired with
/// every irrelevant one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryPairs {
    pub query_id: String,
    pub relevant: Vec<FeatureVector>,
    pub irrelevant: Vec<FeatureVector>,
}

impl QueryPairs {
    pub fn pairs(&self) -> impl Iterator<Item = (&FeatureVector, &FeatureVector)> {
        self.relevant
            .iter()
            .flat_map(move |u| self.irrelevant.iter().map(move |v| (u, v)))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairwiseSet {
    pub kinds: Vec<FeatureKind>,
    pub queries: Vec<QueryPairs>,
}

impl PairwiseSet {
    pub fn pair_count(&self) -> usize {
        self.queries
            .iter()
            .map(|q| q.relevant.len() * q.irrelevant.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pair_count() == 0
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&FeatureVector, &FeatureVector)> {
        self.queries.iter().flat_map(QueryPairs::pairs)
    }

    /// Min-max statistics over every vector taking part in a pair.
    pub fn fit_scaler(&self) -> Option<Scaler> {
        Scaler::fit(
            self.queries
                .iter()
                .flat_map(|q| q.relevant.iter().chain(&q.irrelevant))
                .map(|fv| fv.values.as_slice()),
        )
    }

    pub fn scaled(&self, scaler: &Scaler) -> PairwiseSet {
        let scale = |fv: &FeatureVector| {
            let mut fv = fv.clone();
            scaler.apply(&mut fv.values);
            fv.scaled = true;
            fv
        };
        PairwiseSet {
            kinds: self.kinds.clone(),
            queries: self
                .queries
                .iter()
                .map(|q| QueryPairs {
                    query_id: q.query_id.clone(),
                    relevant: q.relevant.iter().map(scale).collect(),
                    irrelevant: q.irrelevant.iter().map(scale).collect(),
                })
                .collect(),
        }
    }
}

fn raw_vector(
    models: &SimilarityModels,
    kinds: &[FeatureKind],
    query_id: &str,
    q: &DocRepr,
    corpus: &IndexedCorpus,
    pos: usize,
) -> Result<FeatureVector> {
    Ok(FeatureVector {
        query_id: query_id.to_string(),
        unit_id: corpus.units[pos].id.clone(),
        values: models.values(q, &corpus.reprs[pos], kinds)?,
        scaled: false,
    })
}

/// FNV-1a, so per-query sampling streams do not depend on query order.
fn stable_hash(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// The hardest non-gold units by tf-idf cosine, then a uniform sample of
/// the remaining non-gold units. Seeded per query id.
pub fn select_negatives(
    query_id: &str,
    q: &DocRepr,
    gold: &BTreeSet<usize>,
    corpus: &IndexedCorpus,
    sampler: &SamplerConfig,
) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed ^ stable_hash(query_id));
    let mut candidates: Vec<(usize, f64)> = (0..corpus.len())
        .filter(|p| !gold.contains(p))
        .map(|p| (p, cosine_sparse(&q.tfidf, &corpus.reprs[p].tfidf)))
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let split = sampler.hard_negatives.min(candidates.len());
    let mut negatives: Vec<usize> = candidates[..split].iter().map(|c| c.0).collect();
    let mut rest: Vec<usize> = candidates[split..].iter().map(|c| c.0).collect();
    rest.sort_unstable();
    rest.shuffle(&mut rng);
    negatives.extend(rest.into_iter().take(sampler.random_negatives));
    negatives
}

/// Builds unscaled training pairs from every gold unit against the
/// sampled negatives. Queries without a gold unit in the corpus are
/// skipped with a warning.
pub fn build_pairs(
    cases: &[QueryCase],
    corpus: &IndexedCorpus,
    models: &SimilarityModels,
    normalizer: &NormalizerConfig,
    kinds: &[FeatureKind],
    sampler: &SamplerConfig,
) -> Result<PairwiseSet> {
    models.check_kinds(kinds)?;
    let mut set = PairwiseSet {
        kinds: kinds.to_vec(),
        queries: Vec::new(),
    };
    for case in cases {
        let gold = corpus.index.gold_units(case);
        if gold.is_empty() {
            warn!("query {}: no gold unit in the corpus, skipped", case.id);
            continue;
        }
        let q = models.represent(&preprocess(&case.question, normalizer));
        let negatives = select_negatives(&case.id, &q, &gold, corpus, sampler);
        let relevant = gold
            .iter()
            .map(|&p| raw_vector(models, kinds, &case.id, &q, corpus, p))
            .collect::<Result<Vec<_>>>()?;
        let irrelevant = negatives
            .iter()
            .map(|&p| raw_vector(models, kinds, &case.id, &q, corpus, p))
            .collect::<Result<Vec<_>>>()?;
        set.queries.push(QueryPairs {
            query_id: case.id.clone(),
            relevant,
            irrelevant,
        });
    }
    Ok(set)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Trade-off between the margin term and the summed hinge losses.
    pub c: f64,
    pub epochs: usize,
    /// Initial step size; the schedule is `eta0 / (1 + eta0 * lambda * t)`
    /// with `lambda = 1 / (C * n_pairs)`.
    pub eta0: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 600.0,
            epochs: 200,
            eta0: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankModel {
    pub kinds: Vec<FeatureKind>,
    pub w: Vec<f64>,
    pub c: f64,
    pub scaler: Option<Scaler>,
    pub train: TrainConfig,
    /// Objective of the returned weights.
    pub training_objective: f64,
    /// Lowest objective observed at any epoch boundary, over both the
    /// running and the averaged weights.
    pub best_objective: f64,
}

/// `0.5 * |w|^2 + C * sum(max(0, 1 - w.d))` over difference vectors.
pub fn objective(w: &[f64], diffs: &[f64], c: f64) -> f64 {
    let dim = w.len();
    let hinge: f64 = diffs
        .chunks_exact(dim)
        .map(|d| (1.0 - dot(w, d)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c * hinge
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn difference_vectors(pairs: &PairwiseSet) -> Result<Vec<f64>> {
    let dim = pairs.kinds.len();
    let mut diffs = Vec::with_capacity(pairs.pair_count() * dim);
    for (u, v) in pairs.pairs() {
        if u.values.len() != dim || v.values.len() != dim {
            return Err(Error::Shape(format!(
                "pair ({}, {}) has {} / {} values, expected {dim}",
                u.unit_id,
                v.unit_id,
                u.values.len(),
                v.values.len()
            )));
        }
        for (a, b) in u.values.iter().zip(&v.values) {
            let d = a - b;
            if !d.is_finite() {
                return Err(Error::NonFinite(format!("{}: {} vs {}", u.query_id, u.unit_id, v.unit_id)));
            }
            diffs.push(d);
        }
    }
    Ok(diffs)
}

/// Seeded averaged stochastic subgradient descent on the pairwise hinge
/// objective. Pairs are visited in a fresh shuffled order each epoch and
/// the returned weights are the running average from the second epoch on.
pub fn train(pairs: &PairwiseSet, config: &TrainConfig) -> Result<RankModel> {
    if !(config.c > 0.0) {
        return Err(Error::InvalidParam(format!("C must be positive, got {}", config.c)));
    }
    if config.epochs == 0 {
        return Err(Error::InvalidParam("epochs must be at least 1".into()));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidParam("no training pairs".into()));
    }
    let dim = pairs.kinds.len();
    let diffs = difference_vectors(pairs)?;
    let n = diffs.len() / dim;
    let lambda = 1.0 / (config.c * n as f64);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = vec![0.0; dim];
    let mut avg = vec![0.0; dim];
    let mut averaged = 0u64;
    let mut t = 0u64;
    let mut best = objective(&w, &diffs, config.c);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let d = &diffs[i * dim..(i + 1) * dim];
            let eta = config.eta0 / (1.0 + config.eta0 * lambda * t as f64);
            let violated = dot(&w, d) < 1.0;
            for j in 0..dim {
                let g = lambda * w[j] - if violated { d[j] } else { 0.0 };
                w[j] -= eta * g;
            }
            t += 1;
            if epoch > 0 || config.epochs == 1 {
                averaged += 1;
                let rate = 1.0 / averaged as f64;
                for j in 0..dim {
                    avg[j] += (w[j] - avg[j]) * rate;
                }
            }
        }
        best = best
            .min(objective(&w, &diffs, config.c))
            .min(objective(&avg, &diffs, config.c));
    }

    let training_objective = objective(&avg, &diffs, config.c);
    Ok(RankModel {
        kinds: pairs.kinds.clone(),
        w: avg,
        c: config.c,
        scaler: None,
        train: config.clone(),
        training_objective,
        best_objective: best,
    })
}

/// Pairs whose relevant member does not outscore the irrelevant one.
pub fn count_violations(model: &RankModel, pairs: &PairwiseSet) -> usize {
    pairs
        .pairs()
        .filter(|(u, v)| dot(&model.w, &u.values) <= dot(&model.w, &v.values))
        .count()
}

impl RankModel {
    pub fn score(&self, fv: &FeatureVector) -> Result<f64> {
        if fv.values.len() != self.w.len() {
            return Err(Error::Shape(format!(
                "feature vector has {} values, model expects {} ({})",
                fv.values.len(),
                self.w.len(),
                self.kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(",")
            )));
        }
        Ok(dot(&self.w, &fv.values))
    }

    /// Scales raw values with the stored statistics and scores them.
    pub fn score_raw(&self, mut values: Vec<f64>) -> f64 {
        if let Some(s) = &self.scaler {
            s.apply(&mut values);
        }
        dot(&self.w, &values)
    }

    pub fn score_corpus(&self, q: &DocRepr, corpus: &IndexedCorpus, models: &SimilarityModels) -> Result<Vec<(String, f64)>> {
        corpus
            .reprs
            .iter()
            .zip(&corpus.units)
            .map(|(r, u)| Ok((u.id.clone(), self.score_raw(models.values(q, r, &self.kinds)?))))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<(String, f64)>,
}

/// Sorts by score descending, ties by unit id ascending.
pub fn rank(mut scored: Vec<(String, f64)>) -> Vec<(String, f64)> {
    scored.sort_by(|a, b| match b.1.total_cmp(&a.1) {
        Ordering::Equal => a.0.cmp(&b.0),
        o => o,
    });
    scored
}

/// Keeps the top `k` when given, else every entry whose score is at least
/// `ratio` times the best. A non-positive best score keeps only the best.
/// `ranked` must already be sorted.
pub fn cutoff(ranked: Vec<(String, f64)>, ratio: f64, top_k: Option<usize>) -> Vec<(String, f64)> {
    if let Some(k) = top_k {
        return ranked.into_iter().take(k).collect();
    }
    let Some(best) = ranked.first().map(|e| e.1) else {
        return ranked;
    };
    if best <= 0.0 {
        return ranked.into_iter().take(1).collect();
    }
    ranked.into_iter().filter(|e| e.1 / best >= ratio).collect()
}

pub fn retrieve(
    model: &RankModel,
    query_id: &str,
    question: &str,
    corpus: &IndexedCorpus,
    models: &SimilarityModels,
    normalizer: &NormalizerConfig,
    ratio: f64,
    top_k: Option<usize>,
) -> Result<RankedList> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let q = models.represent(&preprocess(question, normalizer));
    let ranked = rank(model.score_corpus(&q, corpus, models)?);
    Ok(RankedList {
        query_id: query_id.to_string(),
        entries: cutoff(ranked, ratio, top_k),
    })
}

/// Builds, scales and trains in one go; the scaler is stored in the model.
pub fn train_ranker(
    cases: &[QueryCase],
    corpus: &IndexedCorpus,
    models: &SimilarityModels,
    normalizer: &NormalizerConfig,
    kinds: &[FeatureKind],
    sampler: &SamplerConfig,
    config: &TrainConfig,
) -> Result<RankModel> {
    let raw = build_pairs(cases, corpus, models, normalizer, kinds, sampler)?;
    let scaler = raw
        .fit_scaler()
        .ok_or_else(|| Error::InvalidParam("no training pairs".into()))?;
    let mut model = train(&raw.scaled(&scaler), config)?;
    model.scaler = Some(scaler);
    Ok(model)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CSweep {
    pub rows: Vec<(f64, f64)>,
    pub best_c: f64,
    pub best_f1: f64,
}

/// Evaluates every C on the grid; the argmax prefers the smallest C on ties.
pub fn sweep_c(grid: &[f64], mut evaluate: impl FnMut(f64) -> Result<f64>) -> Result<CSweep> {
    if grid.is_empty() {
        return Err(Error::InvalidParam("empty C grid".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &c in grid {
        rows.push((c, evaluate(c)?));
    }
    let (best_c, best_f1) = rows
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, r| if r.1 > best.1 { r } else { best });
    Ok(CSweep { rows, best_c, best_f1 })
}

/// `from, from + step, ..., to` inclusive.
pub fn c_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || to < from {
        return Err(Error::InvalidParam(format!("bad C grid {from}..{to} step {step}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| from + step * i as f64).collect())
}

/// Ids of every unit generated from a gold article.
pub fn gold_unit_ids(case: &QueryCase, corpus: &IndexedCorpus) -> BTreeSet<String> {
    corpus
        .index
        .gold_units(case)
        .into_iter()
        .map(|p| corpus.units[p].id.clone())
        .collect()
}
