use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use didactic_cli::stage::StageManifest;

const BIN: &str = env!("CARGO_BIN_EXE_didactic");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
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

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

const SMALL: &[&str] = &["synth", "--seed", "7", "--lectures", "12", "--events", "60", "--visual-events", "12", "--dim", "16"];

fn small_corpus(dir: &Path) {
    ok(dir, SMALL);
    ok(dir, &["ingest", "--manifest", "out/synth/manifest.json"]);
    ok(dir, &["label"]);
    ok(dir, &["split", "--seed", "2"]);
}

#[test]
fn help_lists_flags_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let expect: &[(&str, &[&str])] = &[
        ("ingest", &["--manifest", "--out"]),
        ("synth", &["--seed", "--lectures", "--events", "--visual-events", "--dim", "--amplitude", "--noise", "--out"]),
        ("label", &["--policy", "--out"]),
        ("split", &["--seed", "--group-by", "--out"]),
        ("stats", &["--out"]),
        ("train-text", &["--model", "--task", "--loss", "--seed", "--tune-thresholds", "--out"]),
        ("train-mtl", &["--seed", "--repeats", "--loss", "--encoder-dims", "--classifier-hidden", "--epochs", "--learning-rate"]),
        ("eval", &["--model", "--task", "--out"]),
        ("curve", &["--model", "--task", "--loss", "--fractions", "--seed"]),
        ("report", &["--out"]),
    ];
    for (cmd, flags) in expect {
        let help = ok(dir.path(), &[cmd, "--help"]);
        for f in *flags {
            assert!(help.contains(f), "{cmd} --help lacks {f}");
        }
        // a flag's entry runs until the next flag line
        let mut entries: Vec<String> = Vec::new();
        for line in help.lines() {
            let t = line.trim_start();
            if t.starts_with("--") || t.starts_with("-h,") || t.starts_with("-V,") {
                entries.push(t.to_owned());
            } else if let Some(e) = entries.last_mut() {
                e.push(' ');
                e.push_str(t);
            }
        }
        for e in entries {
            let exempt = ["--manifest", "--help", "--tune-thresholds"].iter().any(|f| e.contains(f));
            assert!(exempt || e.contains("[default:"), "{cmd}: no default shown in `{e}`");
        }
    }
}

#[test]
fn label_before_ingest_is_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["label"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[MissingInput]: "), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["label", "--policy", "sometimes"][..], &["frobnicate"], &["curve", "--fractions", "0..2"]] {
        let out = run(dir.path(), args);
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.starts_with("error[Usage]: ") && err.lines().count() == 1, "{err}");
    }
    let out = run(dir.path(), &["ingest", "--manifest", "nope.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error[MissingInput]"));
}

#[test]
fn synth_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(a.path(), SMALL);
    ok(b.path(), SMALL);
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert!(ta.len() >= 6);
    assert_eq!(ta, tb);
}

#[test]
fn stage_hashes_match_disk_and_tampering_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    ok(d, &["stats"]);
    for stage in ["synth", "ingest", "label", "split", "stats"] {
        let sd = d.join("out").join(stage);
        let m = StageManifest::load(&sd).unwrap();
        assert_eq!(m.stage, stage);
        assert!(!m.outputs.is_empty());
        m.verify(&sd).unwrap();
    }
    let label = StageManifest::load(&d.join("out/label")).unwrap();
    assert!(label.inputs.contains_key("ingest/transcripts.jsonl"));

    let p = d.join("out/ingest/transcripts.jsonl");
    let mut bytes = fs::read(&p).unwrap();
    bytes[20] ^= 1;
    fs::write(&p, bytes).unwrap();
    let out = run(d, &["label"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error[Tampered]"));
}

#[test]
fn text_and_frame_stages_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    ok(d, &["train-text", "--model", "bandit"]);
    let table = ok(d, &["eval", "--model", "bandit"]);
    assert!(table.contains("AQ|GQ"));
    ok(d, &["train-text", "--model", "tfidf", "--task", "full", "--loss", "plain"]);
    ok(d, &["eval", "--model", "tfidf", "--task", "full"]);
    assert!(d.join("out/eval/tfidf-full/timeline.jsonl").is_file());
    ok(d, &["curve", "--model", "bandit", "--fractions", "0.5,1"]);
    ok(
        d,
        &["train-mtl", "--encoder-dims", "8", "--classifier-hidden", "0", "--epochs", "2", "--execution", "sequential"],
    );
    let out = run(d, &["train-mtl", "--repeats", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error[Train]"));

    let summary = ok(d, &["report"]);
    assert!(summary.contains("questions task") && summary.contains("full task"));
    assert!(summary.contains("learning curve bandit-questions"));
    assert!(summary.contains("two-view frame classifier"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d.join("out/report/report.json")).unwrap()).unwrap();
    assert_eq!(report["reports"].as_array().unwrap().len(), 2);
    assert!(report["reports"][0]["meta"]["split_hash"].is_string());
}

#[test]
fn report_without_evaluations_is_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["report"]);
    assert_eq!(out.status.code(), Some(2));
}
