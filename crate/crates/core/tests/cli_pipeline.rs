use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

use cfpairs::cli::report::RunReport;
use cfpairs::fixtures::write_synthetic_corpus;

fn cfpairs(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cfpairs"));
    cmd.args(args);
    cmd
}

fn ok(args: &[&str]) {
    let out = cfpairs(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn report(path: &Path) -> RunReport {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Pipeline {
    _tmp: tempfile::TempDir,
    root: PathBuf,
    corpus: PathBuf,
}

fn pipeline(n: usize) -> Pipeline {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    let corpus = write_synthetic_corpus(&root.join("corpus"), n, 1).unwrap();
    ok(&["gen-captions", "--in", s(&corpus), "--out", s(&root.join("pairs.jsonl"))]);
    ok(&["gen-images", "--in", s(&root.join("pairs.jsonl")), "--out", s(&root.join("records.jsonl"))]);
    ok(&[
        "build-dataset",
        "--in",
        s(&root.join("records.jsonl")),
        "--corpus",
        s(&corpus),
        "--out",
        s(&root.join("ds")),
    ]);
    Pipeline { _tmp: tmp, root, corpus }
}

#[test]
fn gen_captions_counts_every_caption() {
    let p = pipeline(10);
    let rep = report(&p.root.join("pairs.report.json"));
    assert_eq!(rep.counts.processed, 10);
    assert!(rep.counts.is_closed());
    assert_eq!(rep.inputs[0].path, "corpus/corpus.jsonl");
    assert!(p.corpus.exists());
}

#[test]
fn every_command_closes_its_counts() {
    let p = pipeline(12);
    let r = |name: &str| p.root.join(name);
    ok(&["build-mix", "--in", s(&r("ds")), "--out", s(&r("mix/medium.jsonl")), "--mix", "medium"]);
    ok(&["split", "--in", s(&r("mix/medium.jsonl")), "--out", s(&r("split"))]);
    ok(&["eval-retrieval", "--in", s(&r("ds/coco.jsonl")), "--out", s(&r("retrieval.json"))]);
    ok(&["eval-itm", "--in", s(&r("ds")), "--out", s(&r("itm.json"))]);

    // three raters per counterfactual-pair image
    let cfs: Vec<Value> = std::fs::read_to_string(r("ds/cfs.jsonl"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let mut lines = Vec::new();
    for (i, sample) in cfs.iter().enumerate() {
        let (origin, right, wrong) = if sample["role"] == "original" {
            ("from_original_caption", "original", "counterfactual")
        } else {
            ("from_counterfactual_caption", "counterfactual", "original")
        };
        for a in 0..3 {
            let label = if (i + a) % 4 == 0 { wrong } else { right };
            lines.push(
                json!({ "image_id": sample["id"], "label": label, "annotator_id": format!("a{a}"), "image_origin": origin })
                    .to_string(),
            );
        }
    }
    std::fs::write(r("ann.jsonl"), lines.join("\n") + "\n").unwrap();
    std::fs::write(
        r("labels.json"),
        json!([
            { "name": "animals", "labels": ["cat", "dog", "horse"], "improvements": [0.5, 0.7] },
            { "name": "people", "labels": ["man", "woman"], "improvements": [0.1, 0.2] },
            { "name": "vehicles", "labels": ["bus", "car"], "improvements": [-0.3, 0.0] },
        ])
        .to_string(),
    )
    .unwrap();
    ok(&["ingest-annotations", "--in", s(&r("ann.jsonl")), "--cfs", s(&r("ds/cfs.jsonl")), "--out", s(&r("hc/summary.json"))]);
    ok(&["eval-agreement", "--in", s(&r("ann.jsonl")), "--out", s(&r("agreement.json"))]);
    ok(&[
        "analyze-labels",
        "--in",
        s(&r("ds/cfs.jsonl")),
        "--labels",
        s(&r("labels.json")),
        "--annotations",
        s(&r("ann.jsonl")),
        "--out",
        s(&r("labels_out.json")),
    ]);
    ok(&["report", "--in", s(&r("itm.json")), "--out", s(&r("plots"))]);

    let reports = [
        "pairs.report.json",
        "records.report.json",
        "ds/run_report.json",
        "mix/medium.report.json",
        "split/run_report.json",
        "retrieval.report.json",
        "itm.report.json",
        "hc/summary.report.json",
        "agreement.report.json",
        "labels_out.report.json",
        "plots/run_report.json",
    ];
    for name in reports {
        let rep = report(&r(name));
        assert!(rep.counts.is_closed(), "{name}: {:?}", rep.counts);
        for o in &rep.outputs {
            let dir = r(name).parent().unwrap().to_path_buf();
            assert!(dir.join(o).exists(), "{name}: missing output {o}");
        }
    }
    // human-filtered samples point at images that exist
    let hc = std::fs::read_to_string(r("hc/human_correct.jsonl")).unwrap();
    for line in hc.lines().skip(1) {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(r("hc").join(v["image_path"].as_str().unwrap()).exists());
    }
}

#[test]
fn report_emits_two_overlays_per_itm_report() {
    let p = pipeline(8);
    let r = |name: &str| p.root.join(name);
    ok(&["eval-itm", "--in", s(&r("ds")), "--out", s(&r("itm.json"))]);
    ok(&["report", "--in", s(&r("itm.json")), "--out", s(&r("plots")), "--bins", "10"]);
    let mut files: Vec<String> = std::fs::read_dir(r("plots"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(files, ["itm.ir.csv", "itm.ir.png", "itm.tr.csv", "itm.tr.png", "run_report.json"]);
    let csv = std::fs::read_to_string(r("plots/itm.ir.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 10);
}

#[test]
fn significance_from_paired_score_files() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("scores.json");
    std::fs::write(&input, json!({ "baseline": [1.0, 1.2, 0.9, 1.1], "treatment": [1.5, 1.7, 1.4, 1.6] }).to_string())
        .unwrap();
    ok(&["report", "--in", s(&input), "--out", s(&tmp.path().join("out"))]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/scores.significance.json")).unwrap()).unwrap();
    assert_eq!(v["kind"], "welch");
    assert!(v["p_value"].as_f64().unwrap() < 0.01);
}

#[test]
fn environment_overrides_file_and_flags_override_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_synthetic_corpus(&tmp.path().join("c"), 4, 2).unwrap();
    let cfg = tmp.path().join("cfg.toml");
    std::fs::write(&cfg, "seed = 5\n[capgen]\ntop_k = 7\n").unwrap();
    let out = tmp.path().join("p.jsonl");
    let run = |extra: &[&str], env: &[(&str, &str)]| {
        let mut args = vec!["gen-captions", "--in", s(&corpus), "--out", s(&out), "--config", s(&cfg)];
        args.extend(extra);
        let mut cmd = cfpairs(&args);
        cmd.envs(env.iter().copied());
        assert!(cmd.status().unwrap().success());
        report(&tmp.path().join("p.report.json")).config
    };
    let file_only = run(&[], &[]);
    assert_eq!(file_only["seed"], "5");
    assert_eq!(file_only["capgen.top_k"], "7");
    let env = run(&[], &[("CFPAIRS_SEED", "9"), ("CFPAIRS_CAPGEN_TOP_K", "3")]);
    assert_eq!(env["seed"], "9");
    assert_eq!(env["capgen.top_k"], "3");
    let flag = run(&["--seed", "12"], &[("CFPAIRS_SEED", "9")]);
    assert_eq!(flag["seed"], "12");
}

#[test]
fn exit_codes_distinguish_usage_and_data_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(cfpairs(&["gen-captions", "--bogus"]).status().unwrap().code(), Some(2));
    assert_eq!(cfpairs(&["--help"]).status().unwrap().code(), Some(0));
    let missing = tmp.path().join("none.jsonl");
    let out = tmp.path().join("o.jsonl");
    assert_eq!(cfpairs(&["gen-captions", "--in", s(&missing), "--out", s(&out)]).status().unwrap().code(), Some(2));
    let bad = tmp.path().join("bad.jsonl");
    std::fs::write(&bad, "not json\n").unwrap();
    assert_eq!(cfpairs(&["gen-captions", "--in", s(&bad), "--out", s(&out)]).status().unwrap().code(), Some(3));
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let corpus = write_synthetic_corpus(&tmp.path().join("c"), 2, 0).unwrap();
    let code = cfpairs(&["gen-captions", "--in", s(&corpus), "--out", s(&out), "--config", s(&cfg)]).status().unwrap().code();
    assert_eq!(code, Some(2));
}
