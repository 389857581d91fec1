use std::collections::BTreeMap;
use std::path::PathBuf;

use jurisqa_core::config::RunConfig;
use jurisqa_core::corpus::{parse_civil_code, split_articles, whole_articles, Label, UnitIndex};
use jurisqa_core::pipeline::{evaluate_qa, Answerer, VotingScenario};
use jurisqa_core::ranker::retrieve;
use jurisqa_core::textpipe::preprocess;
use jurisqa_core::workflow;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn code() -> String {
    std::fs::read_to_string(fixtures().join("civil_code.txt")).unwrap()
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.civil_code = Some(fixtures().join("civil_code.txt"));
    cfg.queries = Some(fixtures().join("queries"));
    cfg.embeddings = Some(fixtures().join("embeddings.txt"));
    cfg.lsi_dim = 20;
    cfg.lda_dim = 10;
    cfg.lda_iterations = 100;
    cfg.hidden1 = 20;
    cfg.hidden2 = 20;
    cfg.restarts = 2;
    cfg.qa_epochs = 50;
    cfg.pool = 8;
    cfg
}

#[test]
fn hand_counted_structure() {
    let arts = parse_civil_code(&code()).unwrap();
    assert_eq!(arts.len(), 39);
    let empty: Vec<&str> = arts.iter().filter(|a| a.is_empty()).map(|a| a.id.as_str()).collect();
    assert_eq!(empty, ["10", "208"]);
    assert_eq!(arts.iter().filter(|a| a.paragraphs.len() == 1).count(), 21);

    let split = split_articles(&arts);
    assert_eq!(split.units.len(), 57);
    assert_eq!(split.skipped, ["10", "208"]);
    let total: usize = arts.iter().map(|a| a.paragraphs.len()).sum();
    assert_eq!(split.units.len(), total);

    let counts: BTreeMap<&str, usize> = arts.iter().map(|a| (a.id.as_str(), a.paragraphs.len())).collect();
    assert_eq!(counts["648"], 3);
    assert_eq!(counts["653"], 1);
    assert_eq!(counts["5"], 3);
    assert_eq!(whole_articles(&arts).units.len(), 37);

    let idx = UnitIndex::new(&split.units);
    for u in &split.units {
        let parent = arts.iter().find(|a| a.id == u.parent_id).unwrap();
        let want = &parent.paragraphs[u.index.max(1) - 1];
        assert_eq!(&idx.lookup(&split.units, &u.parent_id, u.index).unwrap().text, want);
    }
}

#[test]
fn queries_and_gold() {
    let cases = workflow::read_queries(&fixtures().join("queries")).unwrap();
    assert_eq!(cases.len(), 31);
    let yes = cases.iter().filter(|c| c.label == Label::Yes).count();
    assert_eq!(yes, 16);
    let two = cases.iter().find(|c| c.id == "H18-8-1").unwrap();
    assert_eq!(two.relevant_ids.len(), 2);
    let first = cases.iter().find(|c| c.id == "H18-1-1").unwrap();
    assert_eq!(first.relevant_ids.iter().collect::<Vec<_>>(), ["233"]);
    // 648's text cites 624, which must not become gold
    let mandate = cases.iter().find(|c| c.id == "H19-1-1").unwrap();
    assert_eq!(mandate.relevant_ids.iter().collect::<Vec<_>>(), ["648"]);
}

#[test]
fn preprocess_fixture_properties() {
    let cfg = jurisqa_core::textpipe::NormalizerConfig::default();
    let arts = parse_civil_code(&code()).unwrap();
    for u in split_articles(&arts).units {
        let once = preprocess(&u.text, &cfg);
        assert!(once.terms.iter().all(|t| !cfg.stopwords.contains(t)), "{}", u.id);
        assert_eq!(preprocess(&once.join(), &cfg), once, "{}", u.id);
    }
    let root = preprocess(&split_articles(&arts).units.iter().find(|u| u.id == "233(2)").unwrap().text, &cfg);
    for t in ["tree", "bamboo", "root", "sever"] {
        assert!(root.terms.iter().any(|x| x == t), "{t} missing from {:?}", root.terms);
    }
}

#[test]
fn end_to_end() {
    let cfg = small_config();
    let corpus = workflow::ingest_files(&cfg).unwrap();
    let index = workflow::build_index(&corpus, workflow::normalizer(&cfg).unwrap(), &cfg).unwrap();
    let ranker = workflow::train_rank_model(&corpus, &index, &cfg).unwrap();
    let units = workflow::indexed(&corpus, &index);

    let case = corpus.cases.iter().find(|c| c.id == "H18-1-1").unwrap();
    let top5 = retrieve(&ranker, &case.id, &case.question, &units, &index.models, &index.normalizer, 0.85, Some(5)).unwrap();
    assert_eq!(top5.entries.len(), 5);
    assert!(top5.entries.windows(2).all(|w| w[0].1 >= w[1].1));

    let table = workflow::embeddings(&cfg).unwrap();
    let report = workflow::train_entailment(&corpus.cases, &corpus, &index, &table, &cfg).unwrap();
    assert_eq!(report.restarts.len(), 2);

    let aux = cfg.aux();
    let answerer = Answerer {
        corpus: &units,
        models: &index.models,
        normalizer: &index.normalizer,
        ranker: &ranker,
        net: &report.net,
        table: &table,
        aux: &aux,
    };
    let mut predictions = BTreeMap::new();
    let mut gold = BTreeMap::new();
    for c in &corpus.cases {
        let trace = answerer.answer(&c.id, &c.question, VotingScenario::Majority, 5).unwrap();
        assert_eq!(trace.votes.len(), 5);
        // trace scores are the ranker's retrieval scores
        let live = retrieve(&ranker, &c.id, &c.question, &units, &index.models, &index.normalizer, 1.0, Some(5)).unwrap();
        assert_eq!(trace.retrieved, live.entries);
        predictions.insert(c.id.clone(), trace.answer);
        gold.insert(c.id.clone(), c.label);
    }
    let acc = evaluate_qa(&predictions, &gold).unwrap();
    assert!((0.0..=1.0).contains(&acc));

    let single = answerer.answer("x", &corpus.cases[0].question, VotingScenario::NoVoting, 5).unwrap();
    assert_eq!(single.votes.len(), 1);
    assert_eq!(single.retrieved.len(), 5);
}
