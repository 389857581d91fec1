use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

use commands::Failure;

/// Statute retrieval and yes/no question answering over a civil code.
///
/// Settings are resolved in order: built-in defaults, then `--config`, then
/// `--set`, then dedicated flags. Every artifact and report records the
/// resolved settings. Defaults marked "published" follow the published
/// system; "design" marks a choice made by this implementation.
#[derive(Parser, Debug)]
#[command(name = "jurisqa", version, max_term_width = 100)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Flat `key = value` settings file [default: none]
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set lsi_dim=100`; repeatable [default: none]
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory holding the artifacts [default: model; design]
    #[arg(long, global = true, value_name = "DIR")]
    model_dir: Option<PathBuf>,
    /// Seed for every random choice [default: 0; design]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log progress to stderr; repeat for more detail
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse the civil code and queries and write corpus.json
    Ingest(IngestArgs),
    /// Fit vocabulary, TF-IDF, LSI and LDA and write index.json
    BuildIndex(IndexArgs),
    /// Train the pairwise ranking model and write ranker.json
    TrainRanker(RankerArgs),
    /// Print ranked units as `query_id rank unit_id score` rows
    Retrieve(RetrieveArgs),
    /// Train the entailment network and write entailment.json
    TrainQa(QaArgs),
    /// Answer queries under a voting scenario
    Answer(AnswerArgs),
    /// Held-out IR F1 or QA accuracy, written as TSV and JSON reports
    Evaluate(EvaluateArgs),
    /// Feature ablations and the C sweep over repeated held-out splits
    Ablate(AblateArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Civil code text file [required unless set in --config]
    #[arg(long, value_name = "FILE")]
    civil_code: Option<PathBuf>,
    /// Query XML file or directory of them [default: none]
    #[arg(long, value_name = "PATH")]
    queries: Option<PathBuf>,
    /// Split multi-paragraph articles into paragraph units [default: on; published]
    #[arg(long, overrides_with = "no_split")]
    split: bool,
    /// Keep whole articles as retrieval units [default: off]
    #[arg(long)]
    no_split: bool,
    /// Append the text of referenced articles to each unit [default: off; published]
    #[arg(long)]
    expand_references: bool,
}

#[derive(Args, Debug)]
struct IndexArgs {
    /// LSI dimensions, 0 to skip [default: 300; published]
    #[arg(long)]
    lsi_dim: Option<usize>,
    /// LDA topics, 0 to skip [default: 300; published]
    #[arg(long)]
    lda_dim: Option<usize>,
    /// Gibbs sampling sweeps for LDA [default: 500; design]
    #[arg(long)]
    lda_iterations: Option<usize>,
    /// Topic vector comparison: cosine or hellinger [default: cosine; design]
    #[arg(long)]
    topic_similarity: Option<String>,
    /// Two-column `word lemma` file replacing the built-in lemmas [default: built-in]
    #[arg(long, value_name = "FILE")]
    lemmas: Option<PathBuf>,
    /// One-word-per-line stopword file replacing the built-in list [default: built-in]
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RankerArgs {
    /// Comma-separated feature kinds [default: LSI,MANHATTAN_TF,JACCARD_TFIDF; published]
    #[arg(long)]
    features: Option<String>,
    /// Ranking SVM regularization constant C [default: 600; published]
    #[arg(long = "c", value_name = "C")]
    c: Option<f64>,
    /// Passes over the training pairs [default: 200; design]
    #[arg(long)]
    ranker_epochs: Option<usize>,
    /// Initial step size of averaged SGD [default: 0.1; design]
    #[arg(long)]
    eta0: Option<f64>,
    /// Highest-scoring TF-IDF non-gold units per query [default: 50; design]
    #[arg(long)]
    hard_negatives: Option<usize>,
    /// Additional random non-gold units per query [default: 50; design]
    #[arg(long)]
    random_negatives: Option<usize>,
}

#[derive(Args, Debug)]
struct QueryArgs {
    /// Only this query case, or the id to print for --question [default: all cases]
    #[arg(long)]
    query_id: Option<String>,
    /// Free-text question instead of the stored query cases [default: none]
    #[arg(long)]
    question: Option<String>,
}

#[derive(Args, Debug)]
struct RetrieveArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// Return exactly this many units, ignoring the ratio [default: none]
    #[arg(long)]
    top_k: Option<usize>,
    /// Keep units scoring at least this fraction of the best score [default: 0.85; published]
    #[arg(long)]
    ratio: Option<f64>,
}

#[derive(Args, Debug)]
struct QaArgs {
    /// Word vectors in word2vec text format [required unless set in --config]
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    /// Convolution filters [default: 10; published]
    #[arg(long)]
    filters: Option<usize>,
    /// Filter width [default: 2; published]
    #[arg(long)]
    filter_len: Option<usize>,
    /// Average pooling window [default: 100; published]
    #[arg(long)]
    pool: Option<usize>,
    /// First hidden layer width [default: 200; published]
    #[arg(long)]
    hidden1: Option<usize>,
    /// Second hidden layer width [default: 200; published]
    #[arg(long)]
    hidden2: Option<usize>,
    /// Random restarts; the best validation accuracy wins [default: 10; published]
    #[arg(long)]
    restarts: Option<usize>,
    /// Training epochs per restart [default: 200; design]
    #[arg(long)]
    qa_epochs: Option<usize>,
    /// SGD learning rate [default: 0.01; design]
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Minibatch size [default: 16; design]
    #[arg(long)]
    batch_size: Option<usize>,
    /// Early stopping patience in epochs, 0 disables [default: 20; design]
    #[arg(long)]
    patience: Option<usize>,
    /// LSI side features: none, scalar or vector [default: vector; published]
    #[arg(long)]
    aux_lsi: Option<String>,
    /// TF-IDF side features: none, scalar or vector [default: vector; published]
    #[arg(long)]
    aux_tfidf: Option<String>,
    /// Which texts feed the side vectors: both, question or article [default: both; design]
    #[arg(long)]
    aux_sides: Option<String>,
}

#[derive(Args, Debug)]
struct AnswerArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// NO_VOTING, MAJORITY or RATIO [default: MAJORITY; published]
    #[arg(long)]
    scenario: Option<String>,
    /// Units retrieved and classified per question [default: 5; published]
    #[arg(long)]
    vote_k: Option<usize>,
    /// Embedding file [default: the file recorded in entailment.json]
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProtocolArgs {
    /// Comma-separated seeds, one held-out split each [default: 0,1,2,3,4; design]
    #[arg(long)]
    split_seeds: Option<String>,
    /// Fraction of cases held out for testing [default: 0.2; design]
    #[arg(long)]
    test_fraction: Option<f64>,
    /// micro or macro averaged F1 [default: micro; design]
    #[arg(long)]
    averaging: Option<String>,
    /// Directory for TSV and JSON reports [default: <model-dir>/reports]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Task {
    /// Article-level F1 over repeated held-out splits
    Ir,
    /// Answer accuracy of every scenario on one held-out split
    Qa,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// What to measure; design
    #[arg(long, value_enum, default_value = "ir")]
    task: Task,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    ranker: RankerArgs,
    /// Cutoff ratio for retrieval [default: 0.85; published]
    #[arg(long)]
    ratio: Option<f64>,
    /// Fixed retrieval depth instead of the ratio [default: none]
    #[arg(long)]
    top_k: Option<usize>,
    /// Units classified per question for the qa task [default: 5; published]
    #[arg(long)]
    vote_k: Option<usize>,
    /// Embedding file for the qa task [default: none]
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    /// All computable features, then all minus each one
    LeaveOneOut,
    /// Fixed three-feature groups
    Triples,
    /// Mean F1 for each C on a grid
    CSweep,
}

#[derive(Args, Debug)]
struct AblateArgs {
    /// Which ablation to run [required]
    #[arg(long, value_enum)]
    mode: Mode,
    /// First C of the sweep [default: 100; published]
    #[arg(long)]
    from: Option<f64>,
    /// Last C of the sweep [default: 2000; published]
    #[arg(long)]
    to: Option<f64>,
    /// C step [default: 100; published]
    #[arg(long)]
    step: Option<f64>,
    /// A comma-separated feature group for triples mode; repeatable [default: the four published groups]
    #[arg(long = "triple", value_name = "KINDS")]
    triples: Vec<String>,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    ranker: RankerArgs,
    /// Cutoff ratio for retrieval [default: 0.85; published]
    #[arg(long)]
    ratio: Option<f64>,
}

type Pairs = Vec<(&'static str, String)>;

fn push<T: ToString>(out: &mut Pairs, key: &'static str, v: &Option<T>) {
    if let Some(v) = v {
        out.push((key, v.to_string()));
    }
}

fn path(out: &mut Pairs, key: &'static str, v: &Option<PathBuf>) {
    if let Some(p) = v {
        out.push((key, p.display().to_string()));
    }
}

impl RankerArgs {
    fn pairs(&self, out: &mut Pairs) {
        push(out, "kinds", &self.features);
        push(out, "c", &self.c);
        push(out, "ranker_epochs", &self.ranker_epochs);
        push(out, "eta0", &self.eta0);
        push(out, "hard_negatives", &self.hard_negatives);
        push(out, "random_negatives", &self.random_negatives);
    }
}

impl ProtocolArgs {
    fn pairs(&self, out: &mut Pairs) {
        push(out, "split_seeds", &self.split_seeds);
        push(out, "test_fraction", &self.test_fraction);
        push(out, "averaging", &self.averaging);
    }
}

impl Command {
    /// Flag values as config keys, applied after the config file.
    fn overrides(&self) -> Pairs {
        let mut out = Vec::new();
        match self {
            Command::Ingest(a) => {
                path(&mut out, "civil_code", &a.civil_code);
                path(&mut out, "queries", &a.queries);
                if a.split || a.no_split {
                    out.push(("split", (!a.no_split).to_string()));
                }
                if a.expand_references {
                    out.push(("expand_references", "true".into()));
                }
            }
            Command::BuildIndex(a) => {
                push(&mut out, "lsi_dim", &a.lsi_dim);
                push(&mut out, "lda_dim", &a.lda_dim);
                push(&mut out, "lda_iterations", &a.lda_iterations);
                push(&mut out, "topic_similarity", &a.topic_similarity);
                path(&mut out, "lemmas", &a.lemmas);
                path(&mut out, "stopwords", &a.stopwords);
            }
            Command::TrainRanker(a) => a.pairs(&mut out),
            Command::Retrieve(a) => {
                push(&mut out, "top_k", &a.top_k);
                push(&mut out, "ratio", &a.ratio);
            }
            Command::TrainQa(a) => {
                path(&mut out, "embeddings", &a.embeddings);
                push(&mut out, "filters", &a.filters);
                push(&mut out, "filter_len", &a.filter_len);
                push(&mut out, "pool", &a.pool);
                push(&mut out, "hidden1", &a.hidden1);
                push(&mut out, "hidden2", &a.hidden2);
                push(&mut out, "restarts", &a.restarts);
                push(&mut out, "qa_epochs", &a.qa_epochs);
                push(&mut out, "learning_rate", &a.learning_rate);
                push(&mut out, "batch_size", &a.batch_size);
                push(&mut out, "patience", &a.patience);
                push(&mut out, "aux_lsi", &a.aux_lsi);
                push(&mut out, "aux_tfidf", &a.aux_tfidf);
                push(&mut out, "aux_sides", &a.aux_sides);
            }
            Command::Answer(a) => {
                push(&mut out, "scenario", &a.scenario);
                push(&mut out, "vote_k", &a.vote_k);
                path(&mut out, "embeddings", &a.embeddings);
            }
            Command::Evaluate(a) => {
                a.protocol.pairs(&mut out);
                a.ranker.pairs(&mut out);
                push(&mut out, "ratio", &a.ratio);
                push(&mut out, "top_k", &a.top_k);
                push(&mut out, "vote_k", &a.vote_k);
                path(&mut out, "embeddings", &a.embeddings);
            }
            Command::Ablate(a) => {
                a.protocol.pairs(&mut out);
                a.ranker.pairs(&mut out);
                push(&mut out, "ratio", &a.ratio);
            }
        }
        out
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.global.verbose);
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
