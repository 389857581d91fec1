//! End-to-end answering, evaluation, and the ablation harness.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, ParagraphUnit, QueryCase};
use crate::entailment::{select_article_sentence, AuxConfig, EmbeddingTable, EntailmentNet, QaEncoder, QaExample};
use crate::error::{Error, Result};
use crate::ranker::{
    cutoff, rank, retrieve, select_negatives, sweep_c, train, CSweep, IndexedCorpus, PairwiseSet, QueryPairs,
    RankModel, RankedList, SamplerConfig, TrainConfig,
};
use crate::simfeatures::{cosine_sparse, kinds_label, FeatureKind, FeatureVector, SimilarityModels};
use crate::textpipe::{preprocess, NormalizerConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VotingScenario {
    #[serde(rename = "NO_VOTING")]
    NoVoting,
    #[default]
    #[serde(rename = "MAJORITY")]
    Majority,
    #[serde(rename = "RATIO")]
    Ratio,
}

impl VotingScenario {
    pub const ALL: [VotingScenario; 3] = [VotingScenario::NoVoting, VotingScenario::Majority, VotingScenario::Ratio];

    pub fn name(self) -> &'static str {
        match self {
            VotingScenario::NoVoting => "NO_VOTING",
            VotingScenario::Majority => "MAJORITY",
            VotingScenario::Ratio => "RATIO",
        }
    }
}

impl fmt::Display for VotingScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VotingScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "NO_VOTING" | "NONE" => Ok(VotingScenario::NoVoting),
            "MAJORITY" => Ok(VotingScenario::Majority),
            "RATIO" => Ok(VotingScenario::Ratio),
            _ => Err(Error::InvalidParam(format!(
                "unknown voting scenario `{s}` (expected NO_VOTING, MAJORITY or RATIO)"
            ))),
        }
    }
}

/// One classified (question, unit) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub unit_id: String,
    pub score: f64,
    pub yes: bool,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub yes: f64,
    pub no: f64,
    pub answer: bool,
    /// The tie rule decided the answer.
    pub tie: bool,
}

/// Combines rank-ordered votes. Ties defer to the first vote.
pub fn vote(votes: &[Vote], scenario: VotingScenario) -> Result<Tally> {
    let first = votes
        .first()
        .ok_or_else(|| Error::InvalidParam("no votes to combine".into()))?;
    let weight = |v: &Vote| match scenario {
        VotingScenario::NoVoting | VotingScenario::Majority => 1.0,
        VotingScenario::Ratio => v.score.max(0.0),
    };
    let counted = match scenario {
        VotingScenario::NoVoting => &votes[..1],
        _ => votes,
    };
    let (mut yes, mut no) = (0.0, 0.0);
    for v in counted {
        if v.yes {
            yes += weight(v);
        } else {
            no += weight(v);
        }
    }
    let tie = yes == no;
    let answer = if tie { first.yes } else { yes > no };
    Ok(Tally { yes, no, answer, tie })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnswerTrace {
    pub case_id: String,
    pub scenario: VotingScenario,
    /// Retrieved units with their ranker scores, best first.
    pub retrieved: Vec<(String, f64)>,
    pub votes: Vec<Vote>,
    pub tally: Tally,
    pub answer: Label,
}

/// Everything needed to answer a question from raw text.
pub struct Answerer<'a> {
    pub corpus: &'a IndexedCorpus,
    pub models: &'a SimilarityModels,
    pub normalizer: &'a NormalizerConfig,
    pub ranker: &'a RankModel,
    pub net: &'a EntailmentNet,
    pub table: &'a EmbeddingTable,
    pub aux: &'a AuxConfig,
}

impl Answerer<'_> {
    fn encoder(&self) -> QaEncoder<'_> {
        QaEncoder {
            table: self.table,
            models: Some(self.models),
            normalizer: self.normalizer,
            aux: self.aux,
        }
    }

    /// Retrieves the top `k` units and classifies (question, best sentence)
    /// for each unit the scenario needs.
    pub fn answer(&self, case_id: &str, question: &str, scenario: VotingScenario, k: usize) -> Result<AnswerTrace> {
        let ranked = retrieve(self.ranker, case_id, question, self.corpus, self.models, self.normalizer, 1.0, Some(k))?;
        if ranked.entries.is_empty() {
            return Err(Error::Data(format!("query {case_id}: nothing retrieved")));
        }
        let q_terms = preprocess(question, self.normalizer);
        let encoder = self.encoder();
        let needed = match scenario {
            VotingScenario::NoVoting => 1,
            _ => ranked.entries.len(),
        };
        let mut votes = Vec::with_capacity(needed);
        for (unit_id, score) in &ranked.entries[..needed] {
            let pos = self
                .corpus
                .index
                .position(unit_id)
                .ok_or_else(|| Error::Data(format!("unit {unit_id} missing from the corpus")))?;
            let sentence = select_article_sentence(&self.corpus.units[pos].text, &q_terms, self.models, self.normalizer);
            let (input, aux) = encoder.encode_text(question, &sentence)?;
            let p = self.net.forward(&input, &aux)?;
            votes.push(Vote {
                unit_id: unit_id.clone(),
                score: *score,
                yes: p >= 0.5,
                probability: p,
            });
        }
        let tally = vote(&votes, scenario)?;
        Ok(AnswerTrace {
            case_id: case_id.to_string(),
            scenario,
            retrieved: ranked.entries,
            votes,
            answer: Label::from_bool(tally.answer),
            tally,
        })
    }
}

/// One training example per case: the question and the best sentence of
/// its most similar gold unit. Cases without a gold unit are skipped.
pub fn qa_examples(
    cases: &[QueryCase],
    corpus: &IndexedCorpus,
    models: &SimilarityModels,
    normalizer: &NormalizerConfig,
) -> Vec<QaExample> {
    let mut out = Vec::with_capacity(cases.len());
    for case in cases {
        let q_terms = preprocess(&case.question, normalizer);
        let q = models.vocab.tfidf_vector(&q_terms);
        let best = corpus
            .index
            .gold_units(case)
            .into_iter()
            .map(|p| (p, cosine_sparse(&q, &corpus.reprs[p].tfidf)))
            .fold(None, |best: Option<(usize, f64)>, c| match best {
                Some(b) if b.1 >= c.1 => Some(b),
                _ => Some(c),
            });
        let Some((pos, _)) = best else {
            warn!("query {}: no gold unit in the corpus, no QA example", case.id);
            continue;
        };
        out.push(QaExample {
            id: case.id.clone(),
            question: case.question.clone(),
            sentence: select_article_sentence(&corpus.units[pos].text, &q_terms, models, normalizer),
            label: case.label.is_yes(),
        });
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Averaging {
    /// Pooled TP/FP/FN over all queries.
    #[default]
    Micro,
    /// Mean of per-query precision, recall and F1.
    Macro,
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "micro" => Ok(Averaging::Micro),
            "macro" => Ok(Averaging::Macro),
            _ => Err(Error::InvalidParam(format!("unknown averaging `{s}` (expected micro or macro)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryIr {
    pub query_id: String,
    pub retrieved_articles: Vec<String>,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub averaging: Averaging,
    pub per_query: Vec<QueryIr>,
}

/// Precision, recall and F1 from counts; empty denominators give 0.
pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    (p, r, f1(p, r))
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Unit id to parent article id.
pub fn parent_map(units: &[ParagraphUnit]) -> HashMap<String, String> {
    units.iter().map(|u| (u.id.clone(), u.parent_id.clone())).collect()
}

/// Scores retrieval at article level: retrieved units are mapped to their
/// parent article (ids missing from `parents` stand for themselves) and
/// deduplicated before counting.
pub fn evaluate_ir(
    ranked: &[RankedList],
    gold: &BTreeMap<String, BTreeSet<String>>,
    parents: &HashMap<String, String>,
    averaging: Averaging,
) -> Result<IrMetrics> {
    let mut per_query = Vec::with_capacity(ranked.len());
    for list in ranked {
        let gold_ids = gold
            .get(&list.query_id)
            .ok_or_else(|| Error::Data(format!("query {} has no gold entry", list.query_id)))?;
        let mut articles: Vec<String> = Vec::new();
        for (unit, _) in &list.entries {
            let parent = parents.get(unit).unwrap_or(unit);
            if !articles.contains(parent) {
                articles.push(parent.clone());
            }
        }
        let tp = articles.iter().filter(|a| gold_ids.contains(*a)).count();
        let fp = articles.len() - tp;
        let fn_ = gold_ids.len() - tp;
        let (precision, recall, f1) = prf(tp, fp, fn_);
        per_query.push(QueryIr {
            query_id: list.query_id.clone(),
            retrieved_articles: articles,
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        });
    }
    let (precision, recall, f1) = match averaging {
        Averaging::Micro => {
            let sum = |f: fn(&QueryIr) -> usize| per_query.iter().map(f).sum::<usize>();
            prf(sum(|q| q.tp), sum(|q| q.fp), sum(|q| q.fn_))
        }
        Averaging::Macro => {
            let n = per_query.len().max(1) as f64;
            let mean = |f: fn(&QueryIr) -> f64| per_query.iter().map(f).sum::<f64>() / n;
            (mean(|q| q.precision), mean(|q| q.recall), mean(|q| q.f1))
        }
    };
    Ok(IrMetrics {
        precision,
        recall,
        f1,
        averaging,
        per_query,
    })
}

/// Fraction of matching labels. Both sides must cover the same case ids.
pub fn evaluate_qa(predictions: &BTreeMap<String, Label>, gold: &BTreeMap<String, Label>) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::Data("no predictions to evaluate".into()));
    }
    if let Some(id) = predictions.keys().find(|k| !gold.contains_key(*k)) {
        return Err(Error::Data(format!("prediction for {id} has no gold label")));
    }
    if let Some(id) = gold.keys().find(|k| !predictions.contains_key(*k)) {
        return Err(Error::Data(format!("gold case {id} has no prediction")));
    }
    let hits = predictions.iter().filter(|(id, l)| gold[*id] == **l).count();
    Ok(hits as f64 / predictions.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded holdout split over case ids. The shuffle starts from id order so
/// the split does not depend on input order. Returned indices are sorted.
pub fn holdout_split(ids: &[String], test_fraction: f64, seed: u64) -> Result<Split> {
    if ids.len() < 2 {
        return Err(Error::Data(format!("need at least 2 cases to split, have {}", ids.len())));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParam(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]).then(a.cmp(&b)));
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((ids.len() as f64 * test_fraction).round() as usize).clamp(1, ids.len() - 1);
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok(Split { train, test })
}

/// Raw feature values of one case against every unit, plus the
/// negatives its training pairs use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableCase {
    pub id: String,
    pub gold_articles: BTreeSet<String>,
    pub gold_units: BTreeSet<usize>,
    pub negatives: Vec<usize>,
    /// `values[unit][kind]`, kinds in table order.
    pub values: Vec<Vec<f64>>,
}

/// Precomputed features, so experiments over feature subsets, C values
/// and splits only select columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub kinds: Vec<FeatureKind>,
    pub unit_ids: Vec<String>,
    pub unit_parents: Vec<String>,
    pub cases: Vec<TableCase>,
}

impl FeatureTable {
    pub fn build(
        cases: &[QueryCase],
        corpus: &IndexedCorpus,
        models: &SimilarityModels,
        normalizer: &NormalizerConfig,
        kinds: &[FeatureKind],
        sampler: &SamplerConfig,
    ) -> Result<Self> {
        models.check_kinds(kinds)?;
        let mut out = Vec::with_capacity(cases.len());
        for case in cases {
            let q = models.represent(&preprocess(&case.question, normalizer));
            let gold_units = corpus.index.gold_units(case);
            let negatives = if gold_units.is_empty() {
                Vec::new()
            } else {
                select_negatives(&case.id, &q, &gold_units, corpus, sampler)
            };
            let values = corpus
                .reprs
                .iter()
                .map(|r| models.values(&q, r, kinds))
                .collect::<Result<Vec<_>>>()?;
            out.push(TableCase {
                id: case.id.clone(),
                gold_articles: case.relevant_ids.clone(),
                gold_units,
                negatives,
                values,
            });
        }
        Ok(FeatureTable {
            kinds: kinds.to_vec(),
            unit_ids: corpus.units.iter().map(|u| u.id.clone()).collect(),
            unit_parents: corpus.units.iter().map(|u| u.parent_id.clone()).collect(),
            cases: out,
        })
    }

    pub fn case_ids(&self) -> Vec<String> {
        self.cases.iter().map(|c| c.id.clone()).collect()
    }

    fn columns(&self, kinds: &[FeatureKind]) -> Result<Vec<usize>> {
        if kinds.is_empty() {
            return Err(Error::InvalidParam("empty feature set".into()));
        }
        kinds
            .iter()
            .map(|k| {
                self.kinds
                    .iter()
                    .position(|t| t == k)
                    .ok_or_else(|| Error::InvalidParam(format!("feature {} was not computed", k.name())))
            })
            .collect()
    }

    fn vector(&self, case: &TableCase, unit: usize, cols: &[usize]) -> FeatureVector {
        FeatureVector {
            query_id: case.id.clone(),
            unit_id: self.unit_ids[unit].clone(),
            values: cols.iter().map(|&c| case.values[unit][c]).collect(),
            scaled: false,
        }
    }

    /// Unscaled training pairs for the given cases; cases without gold
    /// units are skipped.
    pub fn pairs(&self, case_indices: &[usize], kinds: &[FeatureKind]) -> Result<PairwiseSet> {
        let cols = self.columns(kinds)?;
        let queries = case_indices
            .iter()
            .map(|&i| &self.cases[i])
            .filter(|c| !c.gold_units.is_empty())
            .map(|c| QueryPairs {
                query_id: c.id.clone(),
                relevant: c.gold_units.iter().map(|&u| self.vector(c, u, &cols)).collect(),
                irrelevant: c.negatives.iter().map(|&u| self.vector(c, u, &cols)).collect(),
            })
            .collect();
        Ok(PairwiseSet {
            kinds: kinds.to_vec(),
            queries,
        })
    }

    /// Ranks every unit for one case with the same tie and cutoff rules as
    /// live retrieval.
    pub fn retrieve(&self, case_index: usize, model: &RankModel, ratio: f64, top_k: Option<usize>) -> Result<RankedList> {
        let cols = self.columns(&model.kinds)?;
        let case = &self.cases[case_index];
        let scored = (0..self.unit_ids.len())
            .map(|u| {
                let values = cols.iter().map(|&c| case.values[u][c]).collect();
                (self.unit_ids[u].clone(), model.score_raw(values))
            })
            .collect();
        Ok(RankedList {
            query_id: case.id.clone(),
            entries: cutoff(rank(scored), ratio, top_k),
        })
    }

    pub fn parents(&self) -> HashMap<String, String> {
        self.unit_ids.iter().cloned().zip(self.unit_parents.iter().cloned()).collect()
    }
}

/// How one held-out IR measurement is taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrProtocol {
    pub train: TrainConfig,
    pub ratio: f64,
    pub top_k: Option<usize>,
    pub averaging: Averaging,
    pub test_fraction: f64,
    /// One holdout split per seed.
    pub split_seeds: Vec<u64>,
}

impl Default for IrProtocol {
    fn default() -> Self {
        IrProtocol {
            train: TrainConfig::default(),
            ratio: 0.85,
            top_k: None,
            averaging: Averaging::Micro,
            test_fraction: 0.2,
            split_seeds: (0..5).collect(),
        }
    }
}

/// Trains on the training side of one split and scores the test side.
pub fn evaluate_split(
    table: &FeatureTable,
    kinds: &[FeatureKind],
    c: f64,
    split: &Split,
    protocol: &IrProtocol,
) -> Result<IrMetrics> {
    let raw = table.pairs(&split.train, kinds)?;
    let scaler = raw
        .fit_scaler()
        .ok_or_else(|| Error::Data("training side of the split has no pairs".into()))?;
    let config = TrainConfig { c, ..protocol.train.clone() };
    let mut model = train(&raw.scaled(&scaler), &config)?;
    model.scaler = Some(scaler);
    let ranked = split
        .test
        .iter()
        .map(|&i| table.retrieve(i, &model, protocol.ratio, protocol.top_k))
        .collect::<Result<Vec<_>>>()?;
    let gold = split
        .test
        .iter()
        .map(|&i| (table.cases[i].id.clone(), table.cases[i].gold_articles.clone()))
        .collect();
    evaluate_ir(&ranked, &gold, &table.parents(), protocol.averaging)
}

/// Held-out F1 for each split seed.
pub fn repeated_f1(table: &FeatureTable, kinds: &[FeatureKind], c: f64, protocol: &IrProtocol) -> Result<Vec<f64>> {
    if protocol.split_seeds.is_empty() {
        return Err(Error::InvalidParam("no split seeds".into()));
    }
    let ids = table.case_ids();
    protocol
        .split_seeds
        .iter()
        .map(|&seed| {
            let split = holdout_split(&ids, protocol.test_fraction, seed)?;
            Ok(evaluate_split(table, kinds, c, &split, protocol)?.f1)
        })
        .collect()
}

/// Mean and sample standard deviation; a single value has deviation 0.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub kinds: Vec<FeatureKind>,
    pub f1s: Vec<f64>,
    pub mean: f64,
    pub deviation: f64,
}

impl AblationRow {
    fn new(label: String, kinds: Vec<FeatureKind>, f1s: Vec<f64>) -> Self {
        let (mean, deviation) = mean_std(&f1s);
        AblationRow {
            label,
            kinds,
            f1s,
            mean,
            deviation,
        }
    }

    /// `0.603 ± 0.005`
    pub fn summary(&self) -> String {
        format!("{:.3} ± {:.3}", self.mean, self.deviation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    /// Header plus one line per row: label, kinds, mean, deviation,
    /// `mean ± deviation`, per-seed F1 values.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("features\tkinds\tf1_mean\tf1_dev\tf1\tper_seed\n");
        for r in &self.rows {
            let per_seed: Vec<String> = r.f1s.iter().map(|f| format!("{f:.4}")).collect();
            let kinds: Vec<&str> = r.kinds.iter().map(|k| k.name()).collect();
            out.push_str(&format!(
                "{}\t{}\t{:.4}\t{:.4}\t{}\t{}\n",
                r.label,
                kinds.join(","),
                r.mean,
                r.deviation,
                r.summary(),
                per_seed.join(",")
            ));
        }
        out
    }
}

/// The full feature set of the table, then the set minus each feature.
pub fn ablate_leave_one_out(table: &FeatureTable, c: f64, protocol: &IrProtocol) -> Result<AblationReport> {
    let all = table.kinds.clone();
    let mut rows = vec![AblationRow::new("All".into(), all.clone(), repeated_f1(table, &all, c, protocol)?)];
    for &k in &all {
        let rest: Vec<FeatureKind> = all.iter().copied().filter(|&x| x != k).collect();
        let f1s = repeated_f1(table, &rest, c, protocol)?;
        rows.push(AblationRow::new(format!("All \\ {{{}}}", k.label()), rest, f1s));
    }
    Ok(AblationReport { rows })
}

/// One row per requested group, in request order.
pub fn ablate_triples(table: &FeatureTable, groups: &[Vec<FeatureKind>], c: f64, protocol: &IrProtocol) -> Result<AblationReport> {
    let rows = groups
        .iter()
        .map(|g| Ok(AblationRow::new(kinds_label(g), g.clone(), repeated_f1(table, g, c, protocol)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationReport { rows })
}

/// The four feature groups compared as candidates for the final ranker.
pub fn default_triples() -> Vec<Vec<FeatureKind>> {
    use FeatureKind::*;
    vec![
        vec![TfidfCosine, ManhattanTf, JaccardTfidf],
        vec![TfidfCosine, EuclideanTf, JaccardTfidf],
        vec![LdaCosine, ManhattanTf, JaccardTfidf],
        vec![LsiCosine, ManhattanTf, JaccardTfidf],
    ]
}

/// Mean held-out F1 for every C on the grid.
pub fn c_sweep(table: &FeatureTable, kinds: &[FeatureKind], grid: &[f64], protocol: &IrProtocol) -> Result<CSweep> {
    sweep_c(grid, |c| Ok(mean_std(&repeated_f1(table, kinds, c, protocol)?).0))
}

pub fn c_sweep_tsv(sweep: &CSweep) -> String {
    let mut out = String::from("c\tf1\n");
    for (c, f) in &sweep.rows {
        out.push_str(&format!("{c}\t{f:.4}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn votes(pattern: &[(bool, f64)]) -> Vec<Vote> {
        pattern
            .iter()
            .enumerate()
            .map(|(i, &(yes, score))| Vote {
                unit_id: format!("u{i}"),
                score,
                yes,
                probability: if yes { 0.9 } else { 0.1 },
            })
            .collect()
    }

    #[test]
    fn majority_and_ratio() {
        let v = votes(&[(true, 1.0), (true, 1.0), (false, 1.0), (false, 1.0), (false, 1.0)]);
        assert!(!vote(&v, VotingScenario::Majority).unwrap().answer);
        assert!(vote(&v, VotingScenario::NoVoting).unwrap().answer);

        let v = votes(&[(true, 2.6), (false, 1.0), (false, 1.0)]);
        assert!(vote(&v, VotingScenario::Ratio).unwrap().answer);
        assert!(!vote(&v, VotingScenario::Majority).unwrap().answer);

        // negative scores cast no weight
        let v = votes(&[(false, 0.5), (true, -3.0)]);
        let t = vote(&v, VotingScenario::Ratio).unwrap();
        assert_eq!((t.yes, t.no), (0.0, 0.5));

        let v = votes(&[(false, 1.0), (true, 1.0)]);
        let t = vote(&v, VotingScenario::Majority).unwrap();
        assert!(t.tie && !t.answer);
        assert!(vote(&[], VotingScenario::Majority).is_err());
    }

    #[test]
    fn scenario_names() {
        for s in VotingScenario::ALL {
            assert_eq!(s.name().parse::<VotingScenario>().unwrap(), s);
        }
        assert_eq!("no-voting".parse::<VotingScenario>().unwrap(), VotingScenario::NoVoting);
        assert!("vote".parse::<VotingScenario>().is_err());
    }

    fn list(q: &str, units: &[&str]) -> RankedList {
        RankedList {
            query_id: q.into(),
            entries: units.iter().map(|u| (u.to_string(), 1.0)).collect(),
        }
    }

    fn gold(entries: &[(&str, &[&str])]) -> BTreeMap<String, BTreeSet<String>> {
        entries
            .iter()
            .map(|(q, g)| (q.to_string(), g.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    #[test]
    fn ir_counts() {
        let none = HashMap::new();
        let m = evaluate_ir(&[list("q", &["a", "b"])], &gold(&[("q", &["a"])]), &none, Averaging::Micro).unwrap();
        assert_eq!((m.precision, m.recall), (0.5, 1.0));
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);

        let m = evaluate_ir(&[list("q", &["a"])], &gold(&[("q", &["a"])]), &none, Averaging::Micro).unwrap();
        assert_eq!(m.f1, 1.0);

        let m = evaluate_ir(&[list("q", &[])], &gold(&[("q", &["a"])]), &none, Averaging::Micro).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));

        assert!(evaluate_ir(&[list("x", &["a"])], &gold(&[("q", &["a"])]), &none, Averaging::Micro).is_err());
    }

    #[test]
    fn ir_article_credit() {
        let parents: HashMap<String, String> = [("648(1)", "648"), ("648(2)", "648"), ("624(2)", "624")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let m = evaluate_ir(
            &[list("H20-26-3", &["648(2)", "648(1)"])],
            &gold(&[("H20-26-3", &["648"])]),
            &parents,
            Averaging::Micro,
        )
        .unwrap();
        assert_eq!(m.f1, 1.0);
        assert_eq!(m.per_query[0].retrieved_articles, ["648"]);

        let m = evaluate_ir(
            &[list("H20-26-3", &["624(2)"])],
            &gold(&[("H20-26-3", &["648"])]),
            &parents,
            Averaging::Micro,
        )
        .unwrap();
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn micro_and_macro_differ() {
        let none = HashMap::new();
        let ranked = [list("q1", &["a"]), list("q2", &["x", "y", "z"])];
        let g = gold(&[("q1", &["a"]), ("q2", &["x"])]);
        let micro = evaluate_ir(&ranked, &g, &none, Averaging::Micro).unwrap();
        let macro_ = evaluate_ir(&ranked, &g, &none, Averaging::Macro).unwrap();
        // micro: tp 2, fp 2, fn 0
        assert_eq!((micro.precision, micro.recall), (0.5, 1.0));
        assert!((macro_.precision - (1.0 + 1.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((macro_.f1 - (1.0 + 0.5) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn qa_accuracy() {
        let labels = |v: &[(&str, Label)]| -> BTreeMap<String, Label> { v.iter().map(|(k, l)| (k.to_string(), *l)).collect() };
        let g = labels(&[("a", Label::Yes), ("b", Label::No)]);
        assert_eq!(evaluate_qa(&g, &g).unwrap(), 1.0);
        assert_eq!(evaluate_qa(&labels(&[("a", Label::Yes), ("b", Label::Yes)]), &g).unwrap(), 0.5);
        assert!(evaluate_qa(&BTreeMap::new(), &g).is_err());
        assert!(evaluate_qa(&labels(&[("a", Label::Yes)]), &g).is_err());
        assert!(evaluate_qa(&labels(&[("a", Label::Yes), ("c", Label::No)]), &g).is_err());

        let pred: BTreeMap<String, Label> = (0..79).map(|i| (format!("q{i}"), Label::from_bool(i < 39))).collect();
        let gold: BTreeMap<String, Label> = (0..79).map(|i| (format!("q{i}"), Label::Yes)).collect();
        let acc = evaluate_qa(&pred, &gold).unwrap();
        assert_eq!(format!("{:.1}%", acc * 100.0), "49.4%");
    }

    #[test]
    fn splits() {
        let ids: Vec<String> = (0..10).map(|i| format!("H{i:02}")).collect();
        let s = holdout_split(&ids, 0.2, 7).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(holdout_split(&ids, 0.2, 7).unwrap(), s);

        // input order does not matter
        let rev: Vec<String> = ids.iter().rev().cloned().collect();
        let r = holdout_split(&rev, 0.2, 7).unwrap();
        let names = |idx: &[usize], v: &[String]| -> BTreeSet<String> { idx.iter().map(|&i| v[i].clone()).collect() };
        assert_eq!(names(&r.test, &rev), names(&s.test, &ids));

        assert_eq!(holdout_split(&ids[..2], 0.01, 0).unwrap().test.len(), 1);
        assert!(holdout_split(&ids[..1], 0.2, 0).is_err());
    }

    #[test]
    fn deviation() {
        assert_eq!(mean_std(&[0.4]), (0.4, 0.0));
        let (m, d) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let row = AblationRow::new("x".into(), vec![], vec![0.6, 0.606]);
        assert_eq!(row.summary(), "0.603 ± 0.004");
    }
}
