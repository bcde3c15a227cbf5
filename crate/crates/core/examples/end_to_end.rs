// The whole pipeline through the command-line entry point, on a synthetic
// corpus in a temporary directory.

use cfpairs::cli::{mock_backend, run};
use cfpairs::fixtures::write_synthetic_corpus;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let root = tmp.path();
    let corpus = write_synthetic_corpus(&root.join("corpus"), 12, 4)?;
    let backend = mock_backend(16, 1);
    let p = |rel: &str| root.join(rel).display().to_string();
    let corpus = corpus.display().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["gen-captions".into(), "--in".into(), corpus.clone(), "--out".into(), p("run/pairs.jsonl")],
        vec!["gen-images".into(), "--in".into(), p("run/pairs.jsonl"), "--out".into(), p("run/records.jsonl")],
        vec!["build-dataset".into(), "--in".into(), p("run/records.jsonl"), "--corpus".into(), corpus, "--out".into(), p("run/ds")],
        vec!["build-mix".into(), "--in".into(), p("run/ds"), "--mix".into(), "all".into(), "--out".into(), p("run/all.jsonl")],
        vec!["split".into(), "--in".into(), p("run/all.jsonl"), "--out".into(), p("run/split")],
        vec!["eval-itm".into(), "--in".into(), p("run/ds"), "--out".into(), p("run/itm.json")],
        vec!["report".into(), "--in".into(), p("run/itm.json"), "--out".into(), p("run/plots")],
    ];
    for step in steps {
        let mut argv = vec!["cfpairs".to_string()];
        argv.extend(step.iter().cloned());
        argv.extend(["--backend".into(), backend.clone(), "--seed".into(), "7".into()]);
        let code = run(argv);
        if code != 0 {
            return Err(format!("`{}` exited with {code}", step[0]).into());
        }
    }
    let itm = std::fs::read_to_string(root.join("run/itm.json"))?;
    let v: serde_json::Value = serde_json::from_str(&itm)?;
    println!("{}", serde_json::to_string_pretty(&v["summary"])?);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
