use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const POSITIVE: [&str; 6] = ["good", "great", "lovely", "superb", "pleasant", "charming"];
const NEGATIVE: [&str; 6] = ["bad", "awful", "poor", "dreadful", "boring", "dull"];
const FILLER: [&str; 12] = ["the", "a", "film", "was", "is", "quite", "very", "plot", "story", "and", "but", "it"];

struct Lcg(u64);

impl Lcg {
    fn next(&mut self, n: usize) -> usize {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 33) % n as u64) as usize
    }
}

fn sentence(rng: &mut Lcg, label: usize) -> String {
    let n = 4 + rng.next(20);
    let cue = if label == 1 { &POSITIVE } else { &NEGATIVE };
    let mut words: Vec<&str> = (0..n).map(|_| FILLER[rng.next(FILLER.len())]).collect();
    for _ in 0..1 + rng.next(3) {
        let at = rng.next(words.len() + 1);
        words.insert(at, cue[rng.next(cue.len())]);
    }
    words.join(" ") + "."
}

fn write_dataset(dir: &Path, pair: bool) -> PathBuf {
    let mut rng = Lcg(42);
    let mut lines = Vec::new();
    for i in 0..240 {
        let label = i % 2;
        let split = match i {
            0..=159 => "train",
            160..=199 => "validation",
            _ => "test",
        };
        let text = sentence(&mut rng, label);
        let line = if pair {
            let hyp = sentence(&mut rng, label);
            format!(r#"{{"id":"s{i:03}","text":"{text}","text_pair":"{hyp}","label":{label},"split":"{split}"}}"#)
        } else {
            format!(r#"{{"id":"s{i:03}","text":"{text}","label":{label},"split":"{split}"}}"#)
        };
        lines.push(line);
    }
    let path = dir.join(if pair { "pairs.jsonl" } else { "d.jsonl" });
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curricula"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> TempDir {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), false);
    fs::write(tmp.path().join("freq.txt"), FILLER.join("\n")).unwrap();
    ok(tmp.path(), &["extract", "--dataset", "d.jsonl", "--freq", "freq.txt", "--freq-cutoff", "12"]);
    tmp
}

const TRAIN: [&str; 8] = ["train", "--dataset", "d.jsonl", "--indices", "indices.csv", "--epochs", "3", "--trace-all-splits"];

#[test]
fn extract_writes_native_columns() {
    let tmp = setup();
    let csv = fs::read_to_string(tmp.path().join("indices.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 12);
    assert_eq!(header[0], "sample_id");
    assert!(header.contains(&"lexical_sophistication_total"));
    assert_eq!(csv.lines().count(), 241);
}

#[test]
fn pair_extraction_doubles_columns() {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), true);
    ok(tmp.path(), &["extract", "--dataset", "pairs.jsonl"]);
    let csv = fs::read_to_string(tmp.path().join("indices.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 2 * 7);
    assert!(header.contains(&"ttr (P)") && header.contains(&"ttr (H)"));
}

#[test]
fn sophistication_without_frequency_list_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), false);
    let out = run(tmp.path(), &["extract", "--dataset", "d.jsonl", "--sophistication"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--freq"));
}

#[test]
fn full_pipeline() {
    let tmp = setup();
    let dir = tmp.path();
    let summary = ok(dir, &TRAIN);
    assert!(summary.contains("test accuracy"));
    for f in ["checkpoint.json", "rho_trajectory.csv", "loss_traces.csv", "metrics.csv"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    // 3 epochs x 2 validation points
    assert_eq!(fs::read_to_string(dir.join("metrics.csv")).unwrap().lines().count(), 7);

    let eval = ["eval", "--dataset", "d.jsonl", "--indices", "indices.csv"];
    ok(dir, &[&eval[..], &["--by-index", "ttr"]].concat());
    let report = fs::read_to_string(dir.join("eval_test_ttr.csv")).unwrap();
    assert!(report.starts_with("bin_lo,bin_hi,count,accuracy\n"));
    assert!(report.contains("# plain_accuracy="));
    ok(dir, &[&eval[..], &["--by", "loss"]].concat());
    ok(dir, &[&eval[..], &["--by", "aggregate"]].concat());
    assert!(dir.join("eval_test_loss.csv").exists());
    assert!(dir.join("eval_test_aggregate_max.csv").exists());

    let single = ok(dir, &[&eval[..], &["--by-index", "msttr", "--bins", "1"]].concat());
    let field = |name: &str| -> String {
        let at = single.find(name).unwrap() + name.len() + 1;
        single[at..].split_whitespace().next().unwrap().to_owned()
    };
    assert_eq!(field("plain accuracy"), field("balanced accuracy"));

    ok(dir, &["filter", "--method", "trend", "--dataset", "d.jsonl", "--indices", "indices.csv"]);
    let kept = fs::read_to_string(dir.join("filter_trend.txt")).unwrap();
    assert_eq!(kept.lines().count(), 4); // 0.3 of 11, rounded up
    ok(dir, &["filter", "--method", "cluster", "--dataset", "d.jsonl", "--indices", "indices.csv"]);
    let reps = fs::read_to_string(dir.join("filter_cluster.txt")).unwrap();
    assert!(reps.lines().count() >= 1);

    ok(dir, &["train", "--dataset", "d.jsonl", "--indices", "indices.csv", "--keep-indices", "filter_trend.txt", "--epochs", "1", "--out-dir", "kept"]);
    let ck = fs::read_to_string(dir.join("kept/checkpoint.json")).unwrap();
    for name in kept.lines() {
        assert!(ck.contains(name));
    }

    ok(dir, &["analyze"]);
    let stages = fs::read_to_string(dir.join("stages.tsv")).unwrap();
    assert!(stages.starts_with("stage\trank\tindex\tmean_rho\n"));
    assert_eq!(stages.lines().count(), 1 + 3 * 3);
    let changes = fs::read_to_string(dir.join("changes.tsv")).unwrap();
    assert!(changes.starts_with("index\tstage_pair\tchange\trelative_change\n"));
    assert!(dir.join("rho_clusters.tsv").exists());
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let tmp = setup();
    let dir = tmp.path();
    for out in ["a", "b"] {
        ok(dir, &[&TRAIN[..], &["--curriculum", "gaussian", "--seed", "9", "--out-dir", out]].concat());
    }
    for f in ["checkpoint.json", "rho_trajectory.csv", "loss_traces.csv", "metrics.csv"] {
        assert_eq!(fs::read(dir.join("a").join(f)).unwrap(), fs::read(dir.join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn every_curriculum_runs() {
    let tmp = setup();
    for kind in ["none", "sigmoid", "neg-sigmoid", "gaussian", "sampling", "competence", "data-selection"] {
        ok(tmp.path(), &["train", "--dataset", "d.jsonl", "--indices", "indices.csv", "--epochs", "2", "--curriculum", kind, "--out-dir", kind]);
    }
    ok(tmp.path(), &["train", "--dataset", "d.jsonl", "--indices", "indices.csv", "--epochs", "2", "--concat-indices", "--out-dir", "concat"]);
    ok(tmp.path(), &["train", "--dataset", "d.jsonl", "--indices", "indices.csv", "--epochs", "2", "--out-dir", "loss_cl", "--curriculum", "sampling", "--difficulty-from-loss", "none/loss_traces.csv"]);
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let tmp = setup();
    let dir = tmp.path();
    fs::write(dir.join("c.toml"), "seed = 4\nepochs = 1\n[train]\nbatch-size = 32\ncurriculum = \"gaussian\"\n").unwrap();
    ok(dir, &["--config", "c.toml", "train", "--dataset", "d.jsonl", "--indices", "indices.csv", "--epochs", "2"]);
    let ck = fs::read_to_string(dir.join("checkpoint.json")).unwrap();
    assert!(ck.contains("\"epochs\": 2"));
    assert!(ck.contains("\"seed\": 4"));
    assert!(ck.contains("\"batch_size\": 32"));
    assert!(ck.contains("\"kind\": \"gaussian\""));
    assert!(ck.contains("\"learning_rate\": 0.1"));

    fs::write(dir.join("bad.toml"), "no_such_flag = 1\n").unwrap();
    let out = run(dir, &["--config", "bad.toml", "analyze"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exit_codes_and_actionable_errors() {
    let tmp = setup();
    let dir = tmp.path();

    let out = run(dir, &["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(dir, &["train", "--dataset", "d.jsonl", "--indices", "indices.csv", "--batch-size", "0"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(dir, &["analyze"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("curricula train"));

    let out = run(dir, &["train", "--dataset", "d.jsonl", "--indices", "missing.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("curricula extract"));

    ok(dir, &["train", "--dataset", "d.jsonl", "--indices", "indices.csv", "--epochs", "1", "--curriculum", "sigmoid"]);
    let out = run(dir, &["filter", "--method", "trend", "--dataset", "d.jsonl", "--indices", "indices.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--curriculum none"));

    let out = run(dir, &["eval", "--dataset", "d.jsonl", "--indices", "indices.csv", "--by-index", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("available: ttr"));

    // traces recorded for the training split only
    let out = run(dir, &["eval", "--dataset", "d.jsonl", "--indices", "indices.csv", "--by", "loss"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--trace-all-splits"));

    fs::write(dir.join("broken.jsonl"), "{\"id\": \"x\"\n").unwrap();
    let out = run(dir, &["extract", "--dataset", "broken.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_lists_defaults() {
    let tmp = TempDir::new().unwrap();
    let help = ok(tmp.path(), &["train", "--help"]);
    for needle in ["--curriculum", "[default: none]", "--epochs", "[default: 5]", "--lambda", "[default: 0.01]", "--seed"] {
        assert!(help.contains(needle), "{needle} missing from help");
    }
    let help = ok(tmp.path(), &["eval", "--help"]);
    assert!(help.contains("[default: 10]"));
    let help = ok(tmp.path(), &["filter", "--help"]);
    assert!(help.contains("[default: 0.3]"));
}
