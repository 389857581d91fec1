use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde_json::json;

use jurisqa_core::config::RunConfig;
use jurisqa_core::corpus::{Label, QueryCase};
use jurisqa_core::entailment::EmbeddingTable;
use jurisqa_core::pipeline::{
    ablate_leave_one_out, ablate_triples, c_sweep, c_sweep_tsv, default_triples, evaluate_qa, evaluate_split,
    holdout_split, mean_std, Answerer, VotingScenario,
};
use jurisqa_core::ranker::{c_grid, retrieve, train_ranker, RankModel};
use jurisqa_core::simfeatures::parse_kinds;
use jurisqa_core::store::{self, ArtifactKind, CorpusStore, IndexStore, QaStore};
use jurisqa_core::{workflow, Error};

use crate::{AblateArgs, AnswerArgs, Cli, Command, EvaluateArgs, Mode, QueryArgs, RetrieveArgs, Task};

/// An error with the process exit status it maps to: 1 for usage, 2 for
/// data and artifact problems.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: 2, error: e.into() }
    }
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: error.into(),
    }
}

type Outcome = Result<(), Failure>;

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let g = &cli.global;
    let mut cfg = RunConfig::default();
    if let Some(path) = &g.config {
        cfg.apply_file(path)
            .with_context(|| format!("config file {}", path.display()))
            .map_err(usage)?;
    }
    for item in &g.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| usage(anyhow!("--set expects KEY=VALUE, got `{item}`")))?;
        cfg.set(k, v).map_err(usage)?;
    }
    if let Some(dir) = &g.model_dir {
        cfg.model_dir = dir.clone();
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    for (k, v) in cli.command.overrides() {
        cfg.set(k, &v).with_context(|| format!("--{}", k.replace('_', "-"))).map_err(usage)?;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

pub fn run(cli: Cli) -> Outcome {
    let cfg = resolve(&cli)?;
    match &cli.command {
        Command::Ingest(_) => ingest(&cfg),
        Command::BuildIndex(_) => build_index(&cfg),
        Command::TrainRanker(_) => train(&cfg),
        Command::Retrieve(a) => retrieve_cmd(&cfg, a),
        Command::TrainQa(_) => train_qa(&cfg),
        Command::Answer(a) => answer(&cfg, a),
        Command::Evaluate(a) => evaluate(&cfg, a),
        Command::Ablate(a) => ablate(&cfg, a),
    }
}

fn load<T: ArtifactKind>(cfg: &RunConfig) -> Result<T, Failure> {
    Ok(store::load::<T>(&workflow::artifact_path::<T>(cfg))?.payload)
}

fn save<T: ArtifactKind>(cfg: &RunConfig, payload: &T) -> Outcome {
    let path = workflow::artifact_path::<T>(cfg);
    store::save(&path, payload, &cfg.echo())?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn emit(text: &str) -> Outcome {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn report_dir(cfg: &RunConfig, out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| cfg.model_dir.join("reports"))
}

fn write_report(dir: &Path, name: &str, text: &str) -> Outcome {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_summary(dir: &Path, name: &str, cfg: &RunConfig, mut body: serde_json::Value) -> Outcome {
    body["config"] = json!(cfg.echo());
    let mut text = serde_json::to_string_pretty(&body)?;
    text.push('\n');
    write_report(dir, name, &text)
}

fn ingest(cfg: &RunConfig) -> Outcome {
    if cfg.civil_code.is_none() {
        return Err(usage(anyhow!("ingest needs --civil-code")));
    }
    let corpus = workflow::ingest_files(cfg)?;
    save(cfg, &corpus)?;
    emit(&format!(
        "articles\t{}\nunits\t{}\nskipped\t{}\ncases\t{}\n",
        corpus.articles.len(),
        corpus.units.len(),
        corpus.skipped.len(),
        corpus.cases.len()
    ))
}

fn build_index(cfg: &RunConfig) -> Outcome {
    let corpus: CorpusStore = load(cfg)?;
    let index = workflow::build_index(&corpus, workflow::normalizer(cfg)?, cfg)?;
    save(cfg, &index)?;
    let m = &index.models;
    emit(&format!(
        "terms\t{}\nlsi_dim\t{}\nlda_dim\t{}\n",
        m.vocab.len(),
        m.lsi.as_ref().map_or(0, |l| l.k),
        m.lda.as_ref().map_or(0, |l| l.k)
    ))
}

fn train(cfg: &RunConfig) -> Outcome {
    let corpus: CorpusStore = load(cfg)?;
    let index: IndexStore = load(cfg)?;
    let model = workflow::train_rank_model(&corpus, &index, cfg)?;
    save(cfg, &model)?;
    let mut out = String::from("feature\tweight\n");
    for (k, w) in model.kinds.iter().zip(&model.w) {
        out.push_str(&format!("{}\t{w:.6}\n", k.name()));
    }
    emit(&out)
}

/// Either one free-text question or stored cases, optionally one by id.
fn questions(corpus: &CorpusStore, q: &QueryArgs) -> Result<Vec<(String, String, Option<Label>)>, Failure> {
    if let Some(text) = &q.question {
        let id = q.query_id.clone().unwrap_or_else(|| "query".into());
        return Ok(vec![(id, text.clone(), None)]);
    }
    let pick = |c: &QueryCase| (c.id.clone(), c.question.clone(), Some(c.label));
    match &q.query_id {
        Some(id) => {
            let case = corpus
                .cases
                .iter()
                .find(|c| &c.id == id)
                .ok_or_else(|| anyhow!("no query case with id {id}"))?;
            Ok(vec![pick(case)])
        }
        None if corpus.cases.is_empty() => Err(anyhow!("the corpus store holds no query cases").into()),
        None => Ok(corpus.cases.iter().map(pick).collect()),
    }
}

fn retrieve_cmd(cfg: &RunConfig, a: &RetrieveArgs) -> Outcome {
    let corpus: CorpusStore = load(cfg)?;
    let index: IndexStore = load(cfg)?;
    let model: RankModel = load(cfg)?;
    let units = workflow::indexed(&corpus, &index);
    let mut out = String::from("query_id\trank\tunit_id\tscore\n");
    for (id, text, _) in questions(&corpus, &a.query)? {
        let list = retrieve(&model, &id, &text, &units, &index.models, &index.normalizer, cfg.ratio, cfg.top_k)?;
        for (rank, (unit, score)) in list.entries.iter().enumerate() {
            out.push_str(&format!("{id}\t{}\t{unit}\t{score:.6}\n", rank + 1));
        }
    }
    emit(&out)
}

fn embeddings_for(cfg: &RunConfig, qa: Option<&QaStore>) -> Result<EmbeddingTable, Failure> {
    let mut cfg = cfg.clone();
    if cfg.embeddings.is_none() {
        cfg.embeddings = qa.map(|q| PathBuf::from(&q.embeddings));
    }
    if cfg.embeddings.is_none() {
        return Err(usage(anyhow!("no embedding file given (--embeddings)")));
    }
    Ok(workflow::embeddings(&cfg)?)
}

fn train_qa(cfg: &RunConfig) -> Outcome {
    let corpus: CorpusStore = load(cfg)?;
    let index: IndexStore = load(cfg)?;
    let table = embeddings_for(cfg, None)?;
    let report = workflow::train_entailment(&corpus.cases, &corpus, &index, &table, cfg)?;
    let mut out = String::from("seed\tvalidation_accuracy\tvalidation_loss\ttraining_accuracy\tepochs\tchosen\n");
    for (i, r) in report.restarts.iter().enumerate() {
        out.push_str(&format!(
            "{}\t{:.4}\t{:.6}\t{:.4}\t{}\t{}\n",
            r.seed,
            r.validation_accuracy,
            r.validation_loss,
            r.training_accuracy,
            r.epochs_run,
            i == report.chosen
        ));
    }
    let qa = QaStore {
        report,
        aux: cfg.aux(),
        embeddings: cfg.embeddings.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
    };
    save(cfg, &qa)?;
    emit(&out)
}

fn answer(cfg: &RunConfig, a: &AnswerArgs) -> Outcome {
    let corpus: CorpusStore = load(cfg)?;
    let index: IndexStore = load(cfg)?;
    let ranker: RankModel = load(cfg)?;
    let qa: QaStore = load(cfg)?;
    let table = embeddings_for(cfg, Some(&qa))?;
    let units = workflow::indexed(&corpus, &index);
    let answerer = Answerer {
        corpus: &units,
        models: &index.models,
        normalizer: &index.normalizer,
        ranker: &ranker,
        net: qa.net(),
        table: &table,
        aux: &qa.aux,
    };
    let mut out = String::from("query_id\tscenario\tanswer\tgold\tyes\tno\ttie\tvotes\n");
    let (mut predictions, mut gold) = (BTreeMap::new(), BTreeMap::new());
    for (id, text, label) in questions(&corpus, &a.query)? {
        let t = answerer.answer(&id, &text, cfg.scenario, cfg.vote_k)?;
        let votes: Vec<String> = t
            .votes
            .iter()
            .map(|v| format!("{}:{}:{:.4}", v.unit_id, Label::from_bool(v.yes), v.score))
            .collect();
        out.push_str(&format!(
            "{id}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{}\t{}\n",
            t.scenario,
            t.answer,
            label.map_or("-".to_string(), |l| l.to_string()),
            t.tally.yes,
            t.tally.no,
            t.tally.tie,
            votes.join(",")
        ));
        if let Some(l) = label {
            predictions.insert(id.clone(), t.answer);
            gold.insert(id, l);
        }
    }
    emit(&out)?;
    if !gold.is_empty() {
        eprintln!("accuracy {:.4} over {} cases", evaluate_qa(&predictions, &gold)?, gold.len());
    }
    Ok(())
}

fn evaluate(cfg: &RunConfig, a: &EvaluateArgs) -> Outcome {
    let corpus: CorpusStore = load(cfg)?;
    let index: IndexStore = load(cfg)?;
    let dir = report_dir(cfg, &a.protocol.out);
    match a.task {
        Task::Ir => evaluate_ir(cfg, &corpus, &index, &dir),
        Task::Qa => evaluate_qa_task(cfg, &corpus, &index, &dir),
    }
}

fn evaluate_ir(cfg: &RunConfig, corpus: &CorpusStore, index: &IndexStore, dir: &Path) -> Outcome {
    let table = workflow::feature_table(corpus, index, cfg, false)?;
    let protocol = cfg.ir_protocol();
    let ids = table.case_ids();
    let mut per_query = String::from("seed\tquery_id\tretrieved\ttp\tfp\tfn\tprecision\trecall\tf1\n");
    let mut out = String::from("seed\tprecision\trecall\tf1\n");
    let mut f1s = Vec::new();
    let mut seeds = Vec::new();
    for &seed in &protocol.split_seeds {
        let split = holdout_split(&ids, protocol.test_fraction, seed)?;
        let m = evaluate_split(&table, &cfg.kinds, cfg.c, &split, &protocol)?;
        for q in &m.per_query {
            per_query.push_str(&format!(
                "{seed}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\n",
                q.query_id,
                q.retrieved_articles.join(","),
                q.tp,
                q.fp,
                q.fn_,
                q.precision,
                q.recall,
                q.f1
            ));
        }
        out.push_str(&format!("{seed}\t{:.4}\t{:.4}\t{:.4}\n", m.precision, m.recall, m.f1));
        seeds.push(json!({"seed": seed, "precision": m.precision, "recall": m.recall, "f1": m.f1}));
        f1s.push(m.f1);
    }
    let (mean, dev) = mean_std(&f1s);
    out.push_str(&format!("mean\t\t\t{mean:.4}\nsd\t\t\t{dev:.4}\n"));
    write_report(dir, "ir_per_query.tsv", &per_query)?;
    write_report(dir, "ir_splits.tsv", &out)?;
    write_summary(
        dir,
        "ir_summary.json",
        cfg,
        json!({"task": "ir", "splits": seeds, "f1_mean": mean, "f1_dev": dev}),
    )?;
    emit(&out)
}

fn evaluate_qa_task(cfg: &RunConfig, corpus: &CorpusStore, index: &IndexStore, dir: &Path) -> Outcome {
    let table = embeddings_for(cfg, None)?;
    let ids: Vec<String> = corpus.cases.iter().map(|c| c.id.clone()).collect();
    let split = holdout_split(&ids, cfg.test_fraction, cfg.seed)?;
    let subset = |idx: &[usize]| -> Vec<QueryCase> { idx.iter().map(|&i| corpus.cases[i].clone()).collect() };
    let (train_cases, test_cases) = (subset(&split.train), subset(&split.test));
    let units = workflow::indexed(corpus, index);
    let ranker = train_ranker(
        &train_cases,
        &units,
        &index.models,
        &index.normalizer,
        &cfg.kinds,
        &cfg.sampler(),
        &cfg.ranker_train(),
    )?;
    let report = workflow::train_entailment(&train_cases, corpus, index, &table, cfg)?;
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
    let gold: BTreeMap<String, Label> = test_cases.iter().map(|c| (c.id.clone(), c.label)).collect();
    let mut out = String::from("scenario\taccuracy\tcorrect\ttotal\n");
    let mut predictions_tsv = String::from("scenario\tquery_id\tanswer\tgold\n");
    let mut scores = Vec::new();
    for scenario in VotingScenario::ALL {
        let mut predictions = BTreeMap::new();
        for c in &test_cases {
            let t = answerer.answer(&c.id, &c.question, scenario, cfg.vote_k)?;
            predictions_tsv.push_str(&format!("{scenario}\t{}\t{}\t{}\n", c.id, t.answer, c.label));
            predictions.insert(c.id.clone(), t.answer);
        }
        let acc = evaluate_qa(&predictions, &gold)?;
        let correct = predictions.iter().filter(|(id, l)| gold[*id] == **l).count();
        out.push_str(&format!("{scenario}\t{acc:.4}\t{correct}\t{}\n", gold.len()));
        scores.push(json!({"scenario": scenario.name(), "accuracy": acc, "correct": correct, "total": gold.len()}));
    }
    write_report(dir, "qa_predictions.tsv", &predictions_tsv)?;
    write_report(dir, "qa_scenarios.tsv", &out)?;
    write_summary(
        dir,
        "qa_summary.json",
        cfg,
        json!({
            "task": "qa",
            "split_seed": cfg.seed,
            "train_cases": split.train.len(),
            "test_cases": split.test.len(),
            "chosen_restart": report.chosen_score(),
            "scenarios": scores,
        }),
    )?;
    emit(&out)
}

fn ablate(cfg: &RunConfig, a: &AblateArgs) -> Outcome {
    let grid = match a.mode {
        Mode::CSweep => Some(c_grid(a.from.unwrap_or(100.0), a.to.unwrap_or(2000.0), a.step.unwrap_or(100.0)).map_err(usage)?),
        _ => None,
    };
    let groups = if a.triples.is_empty() {
        default_triples()
    } else {
        a.triples
            .iter()
            .map(|t| parse_kinds(t))
            .collect::<Result<Vec<_>, Error>>()
            .context("--triple")
            .map_err(usage)?
    };
    let corpus: CorpusStore = load(cfg)?;
    let index: IndexStore = load(cfg)?;
    let protocol = cfg.ir_protocol();
    let dir = report_dir(cfg, &a.protocol.out);
    let (name, tsv, body) = match a.mode {
        Mode::LeaveOneOut | Mode::Triples => {
            let table = workflow::feature_table(&corpus, &index, cfg, true)?;
            let (name, report) = if matches!(a.mode, Mode::LeaveOneOut) {
                ("leave_one_out", ablate_leave_one_out(&table, cfg.c, &protocol)?)
            } else {
                if let Some(k) = groups.iter().flatten().find(|k| !table.kinds.contains(k)) {
                    return Err(anyhow!("feature {} needs a latent model the index does not have", k.name()).into());
                }
                ("triples", ablate_triples(&table, &groups, cfg.c, &protocol)?)
            };
            (name, report.to_tsv(), json!({"mode": name, "rows": report.rows}))
        }
        Mode::CSweep => {
            let table = workflow::feature_table(&corpus, &index, cfg, false)?;
            let sweep = c_sweep(&table, &cfg.kinds, grid.as_deref().unwrap_or_default(), &protocol)?;
            (
                "c_sweep",
                c_sweep_tsv(&sweep),
                json!({"mode": "c_sweep", "rows": sweep.rows, "best_c": sweep.best_c, "best_f1": sweep.best_f1}),
            )
        }
    };
    write_report(&dir, &format!("ablation_{name}.tsv"), &tsv)?;
    write_summary(&dir, &format!("ablation_{name}.json"), cfg, body)?;
    emit(&tsv)
}
