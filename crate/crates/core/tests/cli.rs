use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_superdiversity");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small synthetic dataset written by `synth-gen`.
fn synth(dir: &Path) -> PathBuf {
    let out = dir.join("synth");
    let o = run(&[
        "synth-gen",
        "--output_dir",
        p(&out),
        "--synth_regions",
        "A:600:0.0,B:600:0.4,C:600:0.8",
        "--vocabulary_size",
        "200",
        "--seed",
        "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

#[test]
fn missing_gazetteer_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path());
    let out = dir.path().join("si");
    let o = run(&[
        "si",
        "--corpus",
        p(&s.join("corpus.jsonl")),
        "--lexicon",
        p(&s.join("lexicon.csv")),
        "--gazetteer",
        p(&dir.path().join("nope.csv")),
        "--output_dir",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let o = run(&["si", "--corpus", p(&s.join("corpus.jsonl")), "--lexicon", p(&s.join("lexicon.csv")), "--output_dir", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn si_writes_per_region_csv_with_ten_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path());
    let out = dir.path().join("si");
    let o = run(&[
        "si",
        "--level",
        "nuts2",
        "--iterations",
        "10",
        "--corpus",
        p(&s.join("corpus.jsonl")),
        "--lexicon",
        p(&s.join("lexicon.csv")),
        "--gazetteer",
        p(&s.join("gazetteer.csv")),
        "--ground_truth",
        p(&s.join("ground_truth.csv")),
        "--output_dir",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("si.csv"));
    assert_eq!(rows[0], ["region", "si", "mean_r", "n_iterations_used"]);
    let regions: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(regions, ["A", "B", "C"]);
    for row in &rows[1..] {
        assert_eq!(row[3], "10");
        let si: f64 = row[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&si));
    }
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "si");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn si_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path());
    let go = |name: &str| {
        let out = dir.path().join(name);
        let o = run(&[
            "si",
            "--corpus",
            p(&s.join("corpus.jsonl")),
            "--lexicon",
            p(&s.join("lexicon.csv")),
            "--gazetteer",
            p(&s.join("gazetteer.csv")),
            "--seed",
            "11",
            "--output_dir",
            p(&out),
        ]);
        assert!(o.status.success());
        std::fs::read(out.join("si.csv")).unwrap()
    };
    assert_eq!(go("a"), go("b"));
}

#[test]
fn sweep_has_one_row_per_grid_pair() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path());
    let out = dir.path().join("sweep");
    let o = run(&[
        "sweep-params",
        "--range_grid",
        "1,2,3,4,5",
        "--entropy_grid",
        "0.5,1.09,2.3",
        "--iterations",
        "3",
        "--corpus",
        p(&s.join("corpus.jsonl")),
        "--lexicon",
        p(&s.join("lexicon.csv")),
        "--output_dir",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("sweep.csv"));
    assert_eq!(rows[0], ["range_threshold", "entropy_threshold", "mean_r", "n_iterations_used"]);
    assert_eq!(rows.len() - 1, 5 * 3);
}

#[test]
fn spread_and_baselines_and_null_model_run() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path());
    let corpus = s.join("corpus.jsonl");
    let lexicon = s.join("lexicon.csv");
    let gaz = s.join("gazetteer.csv");

    let out = dir.path().join("spread");
    let o = run(&["spread", "--corpus", p(&corpus), "--lexicon", p(&lexicon), "--output_dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lex = read_csv(&out.join("cd_lexicon.csv"));
    assert_eq!(lex[0], ["term", "valence"]);
    let log = read_csv(&out.join("round_log.csv"));
    assert_eq!(log[0], ["round", "node", "valence"]);
    assert_eq!(log.len(), lex.len());

    let out = dir.path().join("null");
    let o = run(&["null-model", "--corpus", p(&corpus), "--lexicon", p(&lexicon), "--gazetteer", p(&gaz), "--output_dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_csv(&out.join("null_si.csv")).len(), 4);

    let out = dir.path().join("base");
    let o = run(&["baselines", "--corpus", p(&corpus), "--gazetteer", p(&gaz), "--output_dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("baselines.csv"));
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1][2], "");
}

#[test]
fn classify_eval_reports_per_lexicon() {
    let dir = tempfile::tempdir().unwrap();
    let lexicon = dir.path().join("lex.csv");
    std::fs::write(&lexicon, "term,valence\nbad,1.0\nawful,1.5\nsad,2.0\nok,5.0\nfine,5.5\ntable,5.0\ngood,8.0\ngreat,8.5\nhappy,9.0\n").unwrap();
    let words = [["bad", "awful", "sad"], ["ok", "fine", "table"], ["good", "great", "happy"]];
    let labels = ["negative", "neutral", "positive"];
    let mut data = String::new();
    for i in 0..90 {
        let c = i % 3;
        let w = &words[c];
        data.push_str(&format!(
            "{{\"id\":\"{i}\",\"lang\":\"en\",\"text\":\"{} {} {} {}\",\"label\":\"{}\"}}\n",
            w[i % 3],
            w[(i + 1) % 3],
            w[(i + 2) % 3],
            words[(c + 1) % 3][i % 3],
            labels[c]
        ));
    }
    let labeled = dir.path().join("labeled.jsonl");
    std::fs::write(&labeled, data).unwrap();
    let out = dir.path().join("cls");
    let o = run(&["classify-eval", "--labeled", p(&labeled), "--lexicon", p(&lexicon), "--repeats", "3", "--output_dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("classify_report.csv"));
    assert!(rows.len() > 1);
    assert!(rows[1..].iter().all(|r| r[0] == "standard"));

    let o = run(&["classify-eval", "--labeled", p(&labeled), "--lexicon", p(&lexicon), "--learner", "forest", "--output_dir", p(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path());
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "[paths]\ncorpus = \"{}\"\noutput_dir = \"{}\"\n\n[spreading]\nrange_threshold = 2\n",
            p(&s.join("corpus.jsonl")),
            p(&dir.path().join("net"))
        ),
    )
    .unwrap();
    let o = run(&["build-network", "--config", p(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("net/network.tsv").exists());

    std::fs::write(&cfg, "[spreading]\nrange_thresold = 2\n").unwrap();
    assert_eq!(run(&["build-network", "--config", p(&cfg)]).status.code(), Some(2));
    assert_eq!(run(&["build-network", "--corpus", p(&s.join("corpus.jsonl")), "--range_threshold", "-1"]).status.code(), Some(2));
}

#[test]
fn malformed_lexicon_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path());
    let lexicon = dir.path().join("bad.csv");
    std::fs::write(&lexicon, "term,valence\nfoo,11\n").unwrap();
    let o = run(&["spread", "--corpus", p(&s.join("corpus.jsonl")), "--lexicon", p(&lexicon), "--output_dir", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(3));
}
