use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn jurisqa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jurisqa"))
        .args(args)
        .arg("--model-dir")
        .arg(dir)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data_rows(stdout: &str) -> Vec<&str> {
    stdout.lines().skip(1).collect()
}

fn ingest(dir: &Path) -> String {
    let f = fixtures();
    ok(&jurisqa(
        dir,
        &[
            "ingest",
            "--civil-code",
            f.join("civil_code.txt").to_str().unwrap(),
            "--queries",
            f.join("queries").to_str().unwrap(),
            "--split",
        ],
    ))
}

/// Corpus, a small index and a ranker.
fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path());
    ok(&jurisqa(dir.path(), &["build-index", "--lsi-dim", "20", "--lda-dim", "10", "--lda-iterations", "100"]));
    ok(&jurisqa(dir.path(), &["train-ranker"]));
    dir
}

#[test]
fn ingest_counts_fixture_paragraphs() {
    let dir = tempfile::tempdir().unwrap();
    let out = ingest(dir.path());
    assert_eq!(out, "articles\t39\nunits\t57\nskipped\t2\ncases\t31\n");
    let first = std::fs::read(dir.path().join("corpus.json")).unwrap();
    ingest(dir.path());
    assert_eq!(std::fs::read(dir.path().join("corpus.json")).unwrap(), first);

    let f = fixtures();
    let whole = ok(&jurisqa(
        dir.path(),
        &["ingest", "--civil-code", f.join("civil_code.txt").to_str().unwrap(), "--no-split"],
    ));
    assert!(whole.contains("units\t37\n"), "{whole}");
}

#[test]
fn retrieve_top_five() {
    let dir = prepared();
    let out = ok(&jurisqa(dir.path(), &["retrieve", "--query-id", "H18-1-1", "--top-k", "5"]));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 5, "{out}");
    assert!(out.starts_with("query_id\trank\tunit_id\tscore\n"));
    for (i, r) in rows.iter().enumerate() {
        let cols: Vec<&str> = r.split('\t').collect();
        assert_eq!(cols[0], "H18-1-1");
        assert_eq!(cols[1], (i + 1).to_string());
    }
    assert!(rows[0].split('\t').nth(2).unwrap().starts_with("233"));

    let again = ok(&jurisqa(dir.path(), &["retrieve", "--query-id", "H18-1-1", "--top-k", "5"]));
    assert_eq!(again, out);

    // the ratio cutoff keeps at least the best unit, each at or above 0.85 of it
    let cut = ok(&jurisqa(dir.path(), &["retrieve", "--query-id", "H18-1-1"]));
    let scores: Vec<f64> = data_rows(&cut).iter().map(|r| r.split('\t').nth(3).unwrap().parse().unwrap()).collect();
    assert!(!scores.is_empty());
    assert!(scores.iter().all(|s| *s >= 0.85 * scores[0] - 1e-6));
}

#[test]
fn artifacts_are_reproducible() {
    let a = prepared();
    let b = prepared();
    for name in ["corpus.json", "index.json", "ranker.json"] {
        let x = std::fs::read_to_string(a.path().join(name)).unwrap();
        let y = std::fs::read_to_string(b.path().join(name)).unwrap();
        let strip = |s: &str| s.replace(a.path().to_str().unwrap(), "").replace(b.path().to_str().unwrap(), "");
        assert_eq!(strip(&x), strip(&y), "{name}");
    }
}

#[test]
fn c_sweep_has_twenty_rows() {
    let dir = prepared();
    let out = ok(&jurisqa(
        dir.path(),
        &["ablate", "--mode", "c-sweep", "--from", "100", "--to", "2000", "--step", "100", "--ranker-epochs", "50"],
    ));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 20, "{out}");
    assert!(rows[0].starts_with("100\t") && rows[19].starts_with("2000\t"));
    let reports = dir.path().join("reports");
    assert_eq!(std::fs::read_to_string(reports.join("ablation_c_sweep.tsv")).unwrap(), out);
    let summary: String = std::fs::read_to_string(reports.join("ablation_c_sweep.json")).unwrap();
    assert!(summary.contains("\"ranker_epochs\": \"50\""), "{summary}");
}

#[test]
fn evaluate_writes_reports() {
    let dir = prepared();
    let reports = dir.path().join("ir");
    let out = ok(&jurisqa(
        dir.path(),
        &["evaluate", "--task", "ir", "--split-seeds", "0,1", "--out", reports.to_str().unwrap()],
    ));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 4, "{out}");
    assert!(rows[2].starts_with("mean\t"));
    assert_eq!(std::fs::read_to_string(reports.join("ir_splits.tsv")).unwrap(), out);
    let summary = std::fs::read_to_string(reports.join("ir_summary.json")).unwrap();
    assert!(summary.contains("\"split_seeds\": \"0,1\""), "{summary}");
    let per_query = std::fs::read_to_string(reports.join("ir_per_query.tsv")).unwrap();
    assert!(per_query.lines().count() > 2);
}

#[test]
fn qa_train_and_answer() {
    let dir = prepared();
    let emb = fixtures().join("embeddings.txt");
    let small = [
        "--embeddings",
        emb.to_str().unwrap(),
        "--hidden1",
        "20",
        "--hidden2",
        "20",
        "--restarts",
        "2",
        "--qa-epochs",
        "30",
        "--pool",
        "8",
    ];
    let out = ok(&jurisqa(dir.path(), &[&["train-qa"][..], &small].concat()));
    assert_eq!(data_rows(&out).len(), 2);
    assert_eq!(data_rows(&out).iter().filter(|r| r.ends_with("\ttrue")).count(), 1);

    let out = ok(&jurisqa(dir.path(), &["answer", "--scenario", "NO_VOTING", "--query-id", "H18-1-1"]));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 1);
    let cols: Vec<&str> = rows[0].split('\t').collect();
    assert_eq!(cols[1], "NO_VOTING");
    assert!(cols[2] == "YES" || cols[2] == "NO");
    assert_eq!(cols[7].split(',').count(), 1);

    let out = ok(&jurisqa(dir.path(), &["answer", "--scenario", "majority", "--vote-k", "3"]));
    assert_eq!(data_rows(&out).len(), 31);
    assert!(data_rows(&out).iter().all(|r| r.split('\t').nth(7).unwrap().split(',').count() == 3));
}

#[test]
fn missing_artifact_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = jurisqa(dir.path(), &["retrieve", "--top-k", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("corpus.json"), "{err}");

    ingest(dir.path());
    let out = jurisqa(dir.path(), &["train-ranker"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("index.json"));
}

#[test]
fn version_mismatch_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path());
    let path = dir.path().join("corpus.json");
    let text = std::fs::read_to_string(&path).unwrap().replace("jurisqa-corpus/1", "jurisqa-corpus/9");
    std::fs::write(&path, text).unwrap();
    let out = jurisqa(dir.path(), &["build-index"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("jurisqa-corpus/9") && err.contains("jurisqa-corpus/1"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["retrieve", "--bogus"][..],
        &["frobnicate"],
        &["retrieve", "--ratio", "2"],
        &["retrieve", "--top-k", "many"],
        &["train-ranker", "--features", "LSI,NOPE"],
        &["answer", "--scenario", "unanimous"],
        &["ablate", "--mode", "c-sweep", "--from", "500", "--to", "100"],
        &["build-index", "--set", "lsi_dim"],
        &["ingest"],
        &[],
    ] {
        let out = jurisqa(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn help_documents_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&jurisqa(dir.path(), &["--help"]));
    for cmd in ["ingest", "build-index", "train-ranker", "retrieve", "train-qa", "answer", "evaluate", "ablate"] {
        assert!(out.contains(cmd), "{cmd} missing from help");
        let help = ok(&jurisqa(dir.path(), &[cmd, "--help"]));
        // every option except help, verbose and version states its default
        let mut blocks: Vec<String> = Vec::new();
        for line in help.lines().skip_while(|l| !l.starts_with("Options:")).skip(1) {
            let t = line.trim();
            // `- value: doc` lines list possible values, not options
            if t.starts_with("--") || (t.starts_with('-') && t.chars().nth(1).is_some_and(|c| c.is_ascii_alphabetic())) {
                blocks.push(t.to_string());
            } else if let Some(b) = blocks.last_mut() {
                b.push(' ');
                b.push_str(t);
            }
        }
        assert!(blocks.len() >= 5, "{cmd}: {help}");
        for b in blocks {
            if ["-h, --help", "-v, --verbose", "-V, --version"].iter().any(|p| b.starts_with(p)) {
                continue;
            }
            assert!(b.contains("[default") || b.contains("[required"), "{cmd}: {b}");
        }
    }
    let ranker = ok(&jurisqa(dir.path(), &["train-ranker", "--help"]));
    assert!(ranker.contains("default: 600; published"), "{ranker}");
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path());
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nlsi_dim = 7\nlda_dim = 0\n").unwrap();
    let out = ok(&jurisqa(dir.path(), &["build-index", "--config", cfg.to_str().unwrap()]));
    assert!(out.contains("lsi_dim\t7\n") && out.contains("lda_dim\t0\n"), "{out}");
    let out = ok(&jurisqa(dir.path(), &["build-index", "--config", cfg.to_str().unwrap(), "--lsi-dim", "5"]));
    assert!(out.contains("lsi_dim\t5\n"), "{out}");
    let stored = std::fs::read_to_string(dir.path().join("index.json")).unwrap();
    assert!(stored.contains("\"lsi_dim\": \"5\""));

    std::fs::write(&cfg, "lsi_dim = seven\n").unwrap();
    let out = jurisqa(dir.path(), &["build-index", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}
