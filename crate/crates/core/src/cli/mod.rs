//! The `cfpairs` command line: one subcommand per pipeline stage.
//!
//! Every command writes its outputs plus a run report (`*.report.json` next
//! to a file output, `run_report.json` inside a directory output). Exit
//! codes: 0 success, 2 usage, 3 data, 4 backend.

pub mod config;
pub mod plots;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

pub use config::Config;
pub use plots::emit_plots;
pub use report::{Counts, RunReport};

use crate::backends::{BackendSuite, Embedding, ImageRef, ImageSource, MockDescriptor};
use crate::capgen::{make_counterfactual, CaptionGenConfig, CaptionPairRecord};
use crate::dataset::annotations::{filter_human_correct, ingest_annotations, summarize_annotations};
use crate::dataset::manifest::{assemble_samples, check_images_exist, read_corpus, Manifest, Sample};
use crate::dataset::mix::{build_mix, MixName, MixSpec};
use crate::dataset::split::{split_train_val, SplitSizes};
use crate::error::{Error, ErrorClass, Result};
use crate::eval::{
    build_itm_tuples, fleiss_kappa_labeled, itm_diffs, label_frequency, one_tailed_t_test_with, pearson_with_p,
    ratings_from_annotations, retrieval_recall, retrieval_recall_itm, taxonomy_error_rate, Direction, TTestKind,
    DEFAULT_KS,
};
use crate::imgen::{generate_record, write_record, CounterfactualRow, GenerationConfig};
use report::{relative_to, ReportBuilder};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_BACKEND: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Usage => EXIT_USAGE,
        ErrorClass::Data => EXIT_DATA,
        ErrorClass::Backend => EXIT_BACKEND,
    }
}

#[derive(Debug, Parser)]
#[command(name = "cfpairs", version, about = "Counterfactual image-text pair generation and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Input file or directory (repeatable for `report`).
    #[arg(long = "in", value_name = "PATH")]
    pub input: Vec<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Backend descriptor applied to every role, e.g. `mock:16:1`.
    #[arg(long, value_name = "DESC")]
    pub backend: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Flat TOML config file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Caption corpus -> caption pairs.
    GenCaptions(#[command(flatten)] Common),
    /// Caption pairs -> counterfactual records with images.
    GenImages {
        #[command(flatten)]
        common: Common,
        /// Image directory, relative to the output manifest.
        #[arg(long)]
        images_dir: Option<String>,
    },
    /// Counterfactual records + corpus -> `coco.jsonl` and `cfs.jsonl`.
    BuildDataset {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "PATH")]
        corpus: PathBuf,
    },
    /// Dataset directory -> one training mix.
    BuildMix {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["base", "medium", "all"])]
        mix: Option<String>,
    },
    /// Sample manifest -> `train.jsonl` and `val.jsonl`.
    Split {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train_fraction: Option<f64>,
    },
    /// Human labels (.csv or .jsonl) -> validated annotation manifest.
    IngestAnnotations {
        #[command(flatten)]
        common: Common,
        /// Counterfactual sample manifest to filter to correctly matched images.
        #[arg(long, value_name = "PATH")]
        cfs: Option<PathBuf>,
    },
    /// Sample manifest -> recall@{1,5,10} in both directions.
    EvalRetrieval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["cosine", "itm"])]
        ranking: Option<String>,
    },
    /// Dataset directory -> ITM difference samples.
    EvalItm(#[command(flatten)] Common),
    /// Annotations -> Fleiss' kappa and per-origin label summary.
    EvalAgreement {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        raters: Option<usize>,
    },
    /// Label overlap vs. improvements (Pearson), and taxonomy error rates.
    AnalyzeLabels {
        #[command(flatten)]
        common: Common,
        /// JSON list of `{name, labels, improvements}`.
        #[arg(long, value_name = "PATH")]
        labels: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        annotations: Option<PathBuf>,
    },
    /// ITM reports -> overlay plots; score files -> one-tailed t-tests.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bins: Option<usize>,
    },
}

/// Parse `argv` (program name first), run one command, and return the exit
/// code. Messages go to stdout/stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(report) => {
            println!(
                "{}: processed {}, succeeded {}",
                report.command, report.counts.processed, report.counts.succeeded
            );
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn resolve(common: &Common) -> Result<Config> {
    let mut cfg = Config::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.set("seed", s.to_string())?;
    }
    if let Some(w) = common.workers {
        cfg.set("workers", w.to_string())?;
    }
    if let Some(b) = &common.backend {
        for role in crate::backends::ROLES {
            cfg.set(&format!("backends.{role}"), b.clone())?;
        }
    }
    Ok(cfg)
}

fn one_input(common: &Common) -> Result<&Path> {
    match common.input.as_slice() {
        [p] => Ok(p),
        [] => Err(Error::Config("missing --in".into())),
        _ => Err(Error::Config("this command takes a single --in".into())),
    }
}

fn out_path(common: &Common) -> Result<&Path> {
    common.out.as_deref().ok_or_else(|| Error::Config("missing --out".into()))
}

fn require_exists(p: &Path) -> Result<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!("input `{}` does not exist", p.display())))
    }
}

/// `foo.jsonl` -> `foo.report.json`.
pub fn file_report_path(out: &Path) -> PathBuf {
    out.with_extension("report.json")
}

pub fn dir_report_path(out: &Path) -> PathBuf {
    out.join("run_report.json")
}

fn parent_dir(p: &Path) -> &Path {
    p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn create_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(format!("creating {}", p.display()), e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    create_dir(parent_dir(path))?;
    let mut text = serde_json::to_string_pretty(value).expect("report values serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Re-express sample image paths (relative to `from_dir`) relative to
/// `to_dir`.
pub fn rebase_samples(samples: &mut [Sample], from_dir: &Path, to_dir: &Path) {
    let prefix = relative_to(from_dir, to_dir);
    if prefix == "." {
        return;
    }
    for s in samples {
        s.image_path = normalize(&format!("{prefix}/{}", s.image_path));
    }
}

/// Drop `.` segments and fold `dir/..` pairs without touching the file
/// system.
pub fn normalize(path: &str) -> String {
    let mut parts: Vec<&str> = Vec::new();
    for seg in path.split('/') {
        match seg {
            "" | "." => {}
            ".." if parts.last().is_some_and(|p| *p != "..") => {
                parts.pop();
            }
            other => parts.push(other),
        }
    }
    let joined = parts.join("/");
    if path.starts_with('/') {
        format!("/{joined}")
    } else if joined.is_empty() {
        ".".into()
    } else {
        joined
    }
}

fn suite(cfg: &Config) -> Result<BackendSuite> {
    BackendSuite::from_descriptors(&cfg.backend_descriptors())
}

/// Run `f` over `items` on up to `workers` threads; results keep item order.
fn par_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync + Send) -> Result<Vec<R>> {
    if workers <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

fn caption_config(cfg: &Config) -> Result<CaptionGenConfig> {
    let c = CaptionGenConfig {
        top_k: cfg.parse("capgen.top_k")?,
        sim_low: cfg.parse("capgen.sim_low")?,
        sim_high: cfg.parse("capgen.sim_high")?,
        mask_placeholder: cfg.get("capgen.mask_placeholder").to_string(),
        inclusive_bounds: cfg.parse("capgen.inclusive_bounds")?,
    };
    c.validate()?;
    Ok(c)
}

fn generation_config(cfg: &Config) -> Result<GenerationConfig> {
    let c = GenerationConfig {
        n_candidates: cfg.parse("imgen.n_candidates")?,
        p_low: cfg.parse("imgen.p_low")?,
        p_high: cfg.parse("imgen.p_high")?,
        min_caption_image_sim: cfg.parse("imgen.min_caption_image_sim")?,
        min_image_image_sim: cfg.parse("imgen.min_image_image_sim")?,
        seed: cfg.parse("seed")?,
    };
    c.validate()?;
    Ok(c)
}

fn reason_name(value: &impl Serialize) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_else(|| "unknown".into())
}

fn error_reason(e: &Error) -> String {
    match e.class() {
        ErrorClass::Backend => "backend_error".into(),
        _ => "data_error".into(),
    }
}

pub fn execute(command: Command) -> Result<RunReport> {
    match command {
        Command::GenCaptions(common) => gen_captions(&common),
        Command::GenImages { common, images_dir } => gen_images(&common, images_dir),
        Command::BuildDataset { common, corpus } => build_dataset(&common, &corpus),
        Command::BuildMix { common, mix } => build_mix_cmd(&common, mix),
        Command::Split { common, train_fraction } => split_cmd(&common, train_fraction),
        Command::IngestAnnotations { common, cfs } => ingest_cmd(&common, cfs.as_deref()),
        Command::EvalRetrieval { common, ranking } => eval_retrieval(&common, ranking),
        Command::EvalItm(common) => eval_itm(&common),
        Command::EvalAgreement { common, raters } => eval_agreement(&common, raters),
        Command::AnalyzeLabels {
            common,
            labels,
            annotations,
        } => analyze_labels(&common, labels.as_deref(), annotations.as_deref()),
        Command::Report { common, bins } => report_cmd(&common, bins),
    }
}

fn gen_captions(common: &Common) -> Result<RunReport> {
    let cfg = resolve(common)?;
    let (input, out) = (one_input(common)?, out_path(common)?);
    require_exists(input)?;
    let suite = suite(&cfg)?;
    let cap_cfg = caption_config(&cfg)?;
    let corpus = read_corpus(input)?;
    let workers = suite.max_workers(cfg.parse("workers")?);
    let outcomes = par_map(&corpus, workers, |c| make_counterfactual(&c.id, &c.caption, &cap_cfg, &suite))?;

    let mut rep = ReportBuilder::new("gen-captions", &cfg);
    rep.input(input);
    let mut records: Vec<CaptionPairRecord> = Vec::new();
    for outcome in outcomes {
        rep.counts.processed += 1;
        match outcome {
            Ok(o) => match (o.record, o.rejection) {
                (Some(r), _) => {
                    rep.counts.succeeded += 1;
                    records.push(r);
                }
                (None, reason) => rep.counts.reject(reason.map_or("unknown".into(), |r| reason_name(&r))),
            },
            Err(e) => rep.counts.reject(error_reason(&e)),
        }
    }
    records.sort_by(|a, b| a.pair.source_id.cmp(&b.pair.source_id));
    Manifest::new(suite.descriptor(), records)?.write(out)?;
    rep.output(out);
    rep.finish(&file_report_path(out))
}

fn gen_images(common: &Common, images_dir: Option<String>) -> Result<RunReport> {
    let mut cfg = resolve(common)?;
    if let Some(d) = images_dir {
        cfg.set("imgen.images_dir", d)?;
    }
    let (input, out) = (one_input(common)?, out_path(common)?);
    require_exists(input)?;
    let suite = suite(&cfg)?;
    let gen_cfg = generation_config(&cfg)?;
    let pairs: Manifest<CaptionPairRecord> = Manifest::read(input)?;
    let base = parent_dir(out).to_path_buf();
    create_dir(&base)?;
    let subdir = cfg.get("imgen.images_dir").to_string();
    let workers = suite.max_workers(cfg.parse("workers")?);
    let results = par_map(&pairs.records, workers, |r| -> Result<Option<CounterfactualRow>> {
        match generate_record(&r.pair, &gen_cfg, &suite)? {
            (Some(rec), _) => Ok(Some(write_record(&rec, &base, &subdir)?)),
            (None, _) => Ok(None),
        }
    })?;

    let mut rep = ReportBuilder::new("gen-images", &cfg);
    rep.input(input);
    let mut rows = Vec::new();
    for r in results {
        rep.counts.processed += 1;
        match r {
            Ok(Some(row)) => {
                rep.counts.succeeded += 1;
                rows.push(row);
            }
            Ok(None) => rep.counts.reject("no_pair_passed_filters"),
            Err(Error::PairGenerationFailed { .. }) => rep.counts.reject("generation_failed"),
            Err(e) if e.class() == ErrorClass::Backend => rep.counts.reject("backend_error"),
            Err(e) => return Err(e),
        }
    }
    rows.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    Manifest::new(suite.descriptor(), rows)?.write(out)?;
    rep.output(out);
    rep.finish(&file_report_path(out))
}

fn build_dataset(common: &Common, corpus_path: &Path) -> Result<RunReport> {
    let cfg = resolve(common)?;
    let (input, out) = (one_input(common)?, out_path(common)?);
    require_exists(input)?;
    require_exists(corpus_path)?;
    create_dir(out)?;
    let rows: Manifest<CounterfactualRow> = Manifest::read(input)?;
    let corpus = read_corpus(corpus_path)?;
    let (coco, cfs) = assemble_samples(
        &rows.records,
        &corpus,
        &relative_to(parent_dir(input), out),
        &relative_to(parent_dir(corpus_path), out),
    )?;
    let coco = Manifest::new(format!("coco|{}", rows.source_descriptor), coco)?;
    let cfs = Manifest::new(format!("cfs|{}", rows.source_descriptor), cfs)?;
    check_images_exist(&coco, out)?;
    check_images_exist(&cfs, out)?;

    let mut rep = ReportBuilder::new("build-dataset", &cfg);
    rep.input(input);
    rep.input(corpus_path);
    rep.counts.processed = rows.len();
    rep.counts.succeeded = rows.len();
    for (name, m) in [("coco.jsonl", &coco), ("cfs.jsonl", &cfs)] {
        let p = out.join(name);
        m.write(&p)?;
        rep.output(&p);
    }
    rep.results = Some(json!({ "coco_samples": coco.len(), "cf_samples": cfs.len() }));
    rep.finish(&dir_report_path(out))
}

fn read_dataset_dir(dir: &Path) -> Result<(Manifest<Sample>, Manifest<Sample>)> {
    require_exists(dir)?;
    Ok((Manifest::read(&dir.join("coco.jsonl"))?, Manifest::read(&dir.join("cfs.jsonl"))?))
}

fn build_mix_cmd(common: &Common, mix: Option<String>) -> Result<RunReport> {
    let mut cfg = resolve(common)?;
    if let Some(m) = mix {
        cfg.set("mix.name", m)?;
    }
    let (input, out) = (one_input(common)?, out_path(common)?);
    let (coco, cfs) = read_dataset_dir(input)?;
    let spec = MixSpec::preset(cfg.parse::<MixName>("mix.name")?, cfg.parse("seed")?)?;
    let mut mix = build_mix(&spec, &coco, &cfs)?;
    create_dir(parent_dir(out))?;
    rebase_samples(&mut mix.records, input, parent_dir(out));
    mix.write(out)?;

    let mut rep = ReportBuilder::new("build-mix", &cfg);
    rep.input(&input.join("coco.jsonl"));
    rep.input(&input.join("cfs.jsonl"));
    rep.counts.processed = coco.len() + cfs.len();
    rep.counts.succeeded = mix.len();
    if rep.counts.processed > mix.len() {
        rep.counts.rejected.insert("not_sampled".into(), rep.counts.processed - mix.len());
    }
    rep.output(out);
    rep.results = Some(json!({ "spec": spec, "total": mix.len() }));
    rep.finish(&file_report_path(out))
}

fn split_cmd(common: &Common, train_fraction: Option<f64>) -> Result<RunReport> {
    let mut cfg = resolve(common)?;
    if let Some(f) = train_fraction {
        cfg.set("split.train_fraction", f.to_string())?;
    }
    let (input, out) = (one_input(common)?, out_path(common)?);
    require_exists(input)?;
    let m: Manifest<Sample> = Manifest::read(input)?;
    let (mut train, mut val) = split_train_val(&m, cfg.parse("split.train_fraction")?, cfg.parse("seed")?)?;
    create_dir(out)?;
    let mut rep = ReportBuilder::new("split", &cfg);
    rep.input(input);
    for (name, side) in [("train.jsonl", &mut train), ("val.jsonl", &mut val)] {
        rebase_samples(&mut side.records, parent_dir(input), out);
        let p = out.join(name);
        side.write(&p)?;
        rep.output(&p);
    }
    rep.counts.processed = m.len();
    rep.counts.succeeded = m.len();
    rep.results = Some(json!(SplitSizes {
        train: train.len(),
        validation: val.len()
    }));
    rep.finish(&dir_report_path(out))
}

fn ingest_cmd(common: &Common, cfs_path: Option<&Path>) -> Result<RunReport> {
    let cfg = resolve(common)?;
    let (input, out) = (one_input(common)?, out_path(common)?);
    require_exists(input)?;
    let records = ingest_annotations(input)?;
    let summary = summarize_annotations(&records)?;
    let mut rep = ReportBuilder::new("ingest-annotations", &cfg);
    rep.input(input);
    rep.counts.processed = records.len();
    rep.counts.succeeded = records.len();
    let mut results = json!({ "summary": summary });
    if let Some(cfs_path) = cfs_path {
        require_exists(cfs_path)?;
        let cfs: Manifest<Sample> = Manifest::read(cfs_path)?;
        let mut filtered = filter_human_correct(&cfs, &records)?;
        let p = parent_dir(out).join("human_correct.jsonl");
        create_dir(parent_dir(out))?;
        rebase_samples(&mut filtered.manifest.records, parent_dir(cfs_path), parent_dir(out));
        filtered.manifest.write(&p)?;
        rep.input(cfs_path);
        rep.output(&p);
        results["human_correct"] = json!(filtered.manifest.len());
        results["ignored_annotations"] = json!(filtered.ignored_annotations);
    }
    Manifest::new(input.display().to_string(), records)?.write(out)?;
    rep.output(out);
    rep.results = Some(results);
    rep.finish(&file_report_path(out))
}

fn eval_retrieval(common: &Common, ranking: Option<String>) -> Result<RunReport> {
    let mut cfg = resolve(common)?;
    if let Some(r) = ranking {
        cfg.set("eval.ranking", r)?;
    }
    let (input, out) = (one_input(common)?, out_path(common)?);
    require_exists(input)?;
    let suite = suite(&cfg)?;
    let m: Manifest<Sample> = Manifest::read(input)?;
    let base = parent_dir(input);
    let captions: Vec<String> = m.records.iter().map(|s| s.caption.clone()).collect();
    let images: Vec<ImageRef> = m
        .records
        .iter()
        .map(|s| ImageRef::from_path(s.id.clone(), base.join(&s.image_path), ImageSource::Original))
        .collect();
    let reports = match cfg.get("eval.ranking") {
        "cosine" => {
            let text: Vec<Embedding> = captions.iter().map(|c| suite.text_encoder.encode_text(c)).collect::<Result<_>>()?;
            let img: Vec<Embedding> = images.iter().map(|i| suite.image_encoder.encode_image(i)).collect::<Result<_>>()?;
            let gold: Vec<usize> = (0..m.len()).collect();
            [
                retrieval_recall(&img, &text, &gold, &DEFAULT_KS, Direction::TextRetrieval)?,
                retrieval_recall(&text, &img, &gold, &DEFAULT_KS, Direction::ImageRetrieval)?,
            ]
        }
        "itm" => [Direction::TextRetrieval, Direction::ImageRetrieval]
            .map(|d| retrieval_recall_itm(&captions, &images, suite.itm_scorer.as_ref(), &DEFAULT_KS, d))
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .try_into()
            .expect("two directions"),
        other => return Err(Error::Config(format!("unknown ranking `{other}` (cosine|itm)"))),
    };
    let [text_retrieval, image_retrieval] = reports;
    write_json(out, &json!({ "text_retrieval": text_retrieval, "image_retrieval": image_retrieval }))?;
    let mut rep = ReportBuilder::new("eval-retrieval", &cfg);
    rep.input(input);
    rep.output(out);
    rep.counts.processed = m.len();
    rep.counts.succeeded = m.len();
    rep.finish(&file_report_path(out))
}

fn eval_itm(common: &Common) -> Result<RunReport> {
    let cfg = resolve(common)?;
    let (input, out) = (one_input(common)?, out_path(common)?);
    let (coco, cfs) = read_dataset_dir(input)?;
    let suite = suite(&cfg)?;
    let tuples = build_itm_tuples(&coco.records, &cfs.records, input, cfg.parse("seed")?)?;
    let samples = itm_diffs(&tuples, suite.itm_scorer.as_ref())?;
    let below = |v: &[f64]| v.iter().filter(|&&x| x < 0.0).count() as f64 / v.len().max(1) as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let summary: serde_json::Map<String, serde_json::Value> = crate::eval::ItmDiffSamples::METRICS
        .iter()
        .map(|&name| {
            let v = samples.metric(name).unwrap_or_default();
            (name.to_string(), json!({ "mean": mean(v), "fraction_below_zero": below(v) }))
        })
        .collect();
    write_json(out, &json!({ "n_tuples": tuples.len(), "summary": summary, "samples": samples }))?;
    let mut rep = ReportBuilder::new("eval-itm", &cfg);
    rep.input(&input.join("coco.jsonl"));
    rep.input(&input.join("cfs.jsonl"));
    rep.output(out);
    rep.counts.processed = tuples.len();
    rep.counts.succeeded = samples.len();
    if !samples.skipped.is_empty() {
        rep.counts.rejected.insert("backend_error".into(), samples.skipped.len());
    }
    rep.finish(&file_report_path(out))
}

fn eval_agreement(common: &Common, raters: Option<usize>) -> Result<RunReport> {
    let mut cfg = resolve(common)?;
    if let Some(r) = raters {
        cfg.set("eval.raters", r.to_string())?;
    }
    let (input, out) = (one_input(common)?, out_path(common)?);
    require_exists(input)?;
    let records = ingest_annotations(input)?;
    let n_raters: usize = cfg.parse("eval.raters")?;
    let (names, rows) = ratings_from_annotations(&records, n_raters);
    let agreement = fleiss_kappa_labeled(&rows, &names)?;
    let summary = summarize_annotations(&records)?;
    write_json(out, &json!({ "agreement": agreement, "summary": summary }))?;
    let mut rep = ReportBuilder::new("eval-agreement", &cfg);
    rep.input(input);
    rep.output(out);
    rep.counts.processed = records.len();
    rep.counts.succeeded = rows.len() * n_raters;
    let other = records.len() - rep.counts.succeeded;
    if other > 0 {
        rep.counts.rejected.insert("not_multiply_annotated".into(), other);
    }
    rep.finish(&file_report_path(out))
}

#[derive(Debug, serde::Deserialize)]
struct LabelSet {
    name: String,
    labels: Vec<String>,
    #[serde(default)]
    improvements: Vec<f64>,
}

fn analyze_labels(common: &Common, labels: Option<&Path>, annotations: Option<&Path>) -> Result<RunReport> {
    let cfg = resolve(common)?;
    let (input, out) = (one_input(common)?, out_path(common)?);
    require_exists(input)?;
    let cfs: Manifest<Sample> = Manifest::read(input)?;
    let mut rep = ReportBuilder::new("analyze-labels", &cfg);
    rep.input(input);
    let mut results = json!({});
    if let Some(lp) = labels {
        require_exists(lp)?;
        rep.input(lp);
        let text = std::fs::read_to_string(lp).map_err(|e| Error::io(format!("reading {}", lp.display()), e))?;
        let sets: Vec<LabelSet> = serde_json::from_str(&text).map_err(|e| Error::schema(e.line(), e.to_string()))?;
        let (mut x, mut y) = (Vec::new(), Vec::new());
        let mut per_set = Vec::new();
        for s in &sets {
            let freq = label_frequency(&cfs, s.labels.iter().map(String::as_str));
            per_set.push(json!({ "name": s.name, "label_frequency": freq }));
            for &imp in &s.improvements {
                x.push(freq as f64);
                y.push(imp);
            }
        }
        results["datasets"] = json!(per_set);
        if !x.is_empty() {
            let (r, p) = pearson_with_p(&x, &y)?;
            results["pearson"] = json!({ "r": r, "p_value": p, "n": x.len() });
        }
        rep.counts.processed += sets.len();
        rep.counts.succeeded += sets.len();
    }
    if let Some(ap) = annotations {
        require_exists(ap)?;
        rep.input(ap);
        let ann = ingest_annotations(ap)?;
        let words = cfg.list("taxonomy.words");
        let t = taxonomy_error_rate(&ann, &cfs, words.iter().map(String::as_str))?;
        let rate = t.rate().ok();
        results["taxonomy"] = json!({
            "words": words,
            "matched_count": t.matched_count,
            "error_count": t.error_count,
            "rate": rate,
            "display": rate.map(|r| crate::eval::format_percent(r, 1)),
        });
        rep.counts.processed += t.matched_count;
        rep.counts.succeeded += t.matched_count;
    }
    if labels.is_none() && annotations.is_none() {
        return Err(Error::Config("analyze-labels needs --labels and/or --annotations".into()));
    }
    write_json(out, &results)?;
    rep.output(out);
    rep.results = Some(results);
    rep.finish(&file_report_path(out))
}

fn report_cmd(common: &Common, bins: Option<usize>) -> Result<RunReport> {
    let mut cfg = resolve(common)?;
    if let Some(b) = bins {
        cfg.set("eval.bins", b.to_string())?;
    }
    if common.input.is_empty() {
        return Err(Error::Config("missing --in".into()));
    }
    let out = out_path(common)?;
    let bins: usize = cfg.parse("eval.bins")?;
    let kind: TTestKind = cfg.get("eval.ttest").parse()?;
    let mut itm_reports = Vec::new();
    let mut tests = Vec::new();
    for p in &common.input {
        require_exists(p)?;
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(format!("reading {}", p.display()), e))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::schema(e.line(), e.to_string()))?;
        if v.get("samples").is_some() {
            itm_reports.push(p.clone());
        } else if let (Some(a), Some(b)) = (v.get("baseline"), v.get("treatment")) {
            let parse = |x: &serde_json::Value| -> Result<Vec<f64>> {
                serde_json::from_value(x.clone()).map_err(|e| Error::schema(1, e.to_string()))
            };
            tests.push((p.clone(), one_tailed_t_test_with(&parse(a)?, &parse(b)?, kind)?));
        } else {
            return Err(Error::schema(1, format!("`{}` is neither an ITM report nor a score file", p.display())));
        }
    }
    let mut rep = ReportBuilder::new("report", &cfg);
    for p in &common.input {
        rep.input(p);
    }
    let mut written = emit_plots(&itm_reports, out, bins)?;
    create_dir(out)?;
    for (p, result) in &tests {
        let stem = p.file_stem().map_or("scores".into(), |s| s.to_string_lossy().into_owned());
        let path = out.join(format!("{stem}.significance.json"));
        write_json(&path, result)?;
        written.push(path);
    }
    for p in &written {
        rep.output(p);
    }
    rep.counts.processed = common.input.len();
    rep.counts.succeeded = common.input.len();
    rep.finish(&dir_report_path(out))
}

/// Descriptor used by examples and tests: every role mocked.
pub fn mock_backend(dim: usize, seed: u64) -> String {
    MockDescriptor { dim, seed }.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_paths() {
        assert_eq!(normalize("../mix/../ds/../../src/p.png"), "../../src/p.png");
        assert_eq!(normalize("./a/./b"), "a/b");
        assert_eq!(normalize("a/.."), ".");
        assert_eq!(normalize("/x/../y"), "/y");
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["cfpairs", "gen-captions", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["cfpairs", "frobnicate"]), EXIT_USAGE);
    }

    #[test]
    fn missing_input_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o.jsonl");
        let code = run([
            "cfpairs".as_ref(),
            "gen-captions".as_ref(),
            "--in".as_ref(),
            dir.path().join("nope.jsonl").as_os_str(),
            "--out".as_ref(),
            out.as_os_str(),
        ] as [&std::ffi::OsStr; 6]);
        assert_eq!(code, EXIT_USAGE);
    }
}
