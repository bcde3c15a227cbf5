//! Human caption-choice labels: ingestion, Table-style summaries, and the
//! per-image verdicts used to filter a manifest down to correctly matched
//! images.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::{Manifest, Sample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationLabel {
    Original,
    Counterfactual,
    Both,
    Neither,
}

impl std::str::FromStr for AnnotationLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "original" => Ok(Self::Original),
            "counterfactual" => Ok(Self::Counterfactual),
            "both" => Ok(Self::Both),
            "neither" => Ok(Self::Neither),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

/// Which caption the annotated image was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageOrigin {
    FromOriginalCaption,
    FromCounterfactualCaption,
}

impl std::str::FromStr for ImageOrigin {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "from_original_caption" => Ok(Self::FromOriginalCaption),
            "from_counterfactual_caption" => Ok(Self::FromCounterfactualCaption),
            other => Err(format!("unknown image_origin `{other}`")),
        }
    }
}

/// Outcome buckets of one annotation relative to the image's true caption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Judgement {
    Correct,
    Incorrect,
    Neither,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub label: AnnotationLabel,
    pub annotator_id: String,
    pub image_origin: ImageOrigin,
}

impl AnnotationRecord {
    pub fn judgement(&self) -> Judgement {
        match (self.label, self.image_origin) {
            (AnnotationLabel::Both, _) => Judgement::Both,
            (AnnotationLabel::Neither, _) => Judgement::Neither,
            (AnnotationLabel::Original, ImageOrigin::FromOriginalCaption)
            | (AnnotationLabel::Counterfactual, ImageOrigin::FromCounterfactualCaption) => Judgement::Correct,
            _ => Judgement::Incorrect,
        }
    }
}

impl super::manifest::ManifestRecord for AnnotationRecord {
    const KIND: &'static str = "annotation";
    fn record_id(&self) -> String {
        format!("{}\u{1f}{}", self.image_id, self.annotator_id)
    }
}

#[derive(Debug, Deserialize)]
struct RawRow {
    image_id: String,
    label: String,
    annotator_id: String,
    image_origin: String,
}

fn validate(row: RawRow, line: usize) -> Result<AnnotationRecord> {
    let label = row.label.parse().map_err(|e: String| Error::schema(line, e))?;
    let image_origin = row.image_origin.parse().map_err(|e: String| Error::schema(line, e))?;
    if row.image_id.trim().is_empty() || row.annotator_id.trim().is_empty() {
        return Err(Error::schema(line, "empty image_id or annotator_id"));
    }
    Ok(AnnotationRecord {
        image_id: row.image_id,
        label,
        annotator_id: row.annotator_id,
        image_origin,
    })
}

/// Parse and validate a label file. `.csv` files need a header row with
/// `image_id,label,annotator_id,image_origin`; anything else is read as JSON
/// Lines. Line numbers in errors are 1-based file lines.
pub fn ingest_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_csv(&text)
    } else {
        parse_jsonl(&text)
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<AnnotationRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.deserialize::<RawRow>() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::schema(line, e.to_string())
        })?;
        // header is line 1
        out.push(validate(row, out.len() + 2)?);
    }
    check_duplicates(&out, 2)?;
    Ok(out)
}

pub fn parse_jsonl(text: &str) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    let mut lines_of = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.contains("\"schema_version\"") {
            continue;
        }
        let raw: RawRow = serde_json::from_str(line).map_err(|e| Error::schema(i + 1, e.to_string()))?;
        out.push(validate(raw, i + 1)?);
        lines_of.push(i + 1);
    }
    if let Some(dup) = find_duplicate(&out) {
        return Err(Error::schema(lines_of[dup], duplicate_message(&out[dup])));
    }
    Ok(out)
}

fn find_duplicate(records: &[AnnotationRecord]) -> Option<usize> {
    let mut seen = HashSet::new();
    records
        .iter()
        .position(|r| !seen.insert((r.image_id.as_str(), r.annotator_id.as_str())))
}

fn duplicate_message(r: &AnnotationRecord) -> String {
    format!("duplicate annotation for image `{}` by annotator `{}`", r.image_id, r.annotator_id)
}

fn check_duplicates(records: &[AnnotationRecord], first_line: usize) -> Result<()> {
    match find_duplicate(records) {
        Some(i) => Err(Error::schema(i + first_line, duplicate_message(&records[i]))),
        None => Ok(()),
    }
}

/// One row of percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub correct_pct: f64,
    pub incorrect_pct: f64,
    pub neither_pct: f64,
    pub both_pct: f64,
    pub n: usize,
}

impl SummaryRow {
    fn from_counts(counts: &BTreeMap<Judgement, usize>) -> Option<Self> {
        let n: usize = counts.values().sum();
        if n == 0 {
            return None;
        }
        let pct = |j| 100.0 * *counts.get(&j).unwrap_or(&0) as f64 / n as f64;
        Some(Self {
            correct_pct: pct(Judgement::Correct),
            incorrect_pct: pct(Judgement::Incorrect),
            neither_pct: pct(Judgement::Neither),
            both_pct: pct(Judgement::Both),
            n,
        })
    }

    pub fn total_pct(&self) -> f64 {
        self.correct_pct + self.incorrect_pct + self.neither_pct + self.both_pct
    }
}

/// Percentages per image origin and overall, over individual annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSummary {
    pub from_original_caption: Option<SummaryRow>,
    pub from_counterfactual_caption: Option<SummaryRow>,
    pub overall: SummaryRow,
}

pub fn summarize_annotations(records: &[AnnotationRecord]) -> Result<AnnotationSummary> {
    if records.is_empty() {
        return Err(Error::EmptyInput("annotations"));
    }
    let mut by_origin: HashMap<ImageOrigin, BTreeMap<Judgement, usize>> = HashMap::new();
    let mut overall = BTreeMap::new();
    for r in records {
        let j = r.judgement();
        *by_origin.entry(r.image_origin).or_default().entry(j).or_default() += 1;
        *overall.entry(j).or_default() += 1;
    }
    let row = |o| by_origin.get(&o).and_then(SummaryRow::from_counts);
    Ok(AnnotationSummary {
        from_original_caption: row(ImageOrigin::FromOriginalCaption),
        from_counterfactual_caption: row(ImageOrigin::FromCounterfactualCaption),
        overall: SummaryRow::from_counts(&overall).expect("non-empty"),
    })
}

/// Whether each annotated image counts as correctly matched: a strict
/// majority of its annotations must be correct.
pub fn image_verdicts(records: &[AnnotationRecord]) -> HashMap<&str, bool> {
    let mut tally: HashMap<&str, (usize, usize)> = HashMap::new();
    for r in records {
        let t = tally.entry(r.image_id.as_str()).or_default();
        t.1 += 1;
        if r.judgement() == Judgement::Correct {
            t.0 += 1;
        }
    }
    tally.into_iter().map(|(id, (ok, n))| (id, 2 * ok > n)).collect()
}

/// Result of [`filter_human_correct`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanFiltered {
    pub manifest: Manifest<Sample>,
    /// Annotations whose image is not in the manifest.
    pub ignored_annotations: usize,
}

pub fn filter_human_correct(cfs: &Manifest<Sample>, records: &[AnnotationRecord]) -> Result<HumanFiltered> {
    let verdicts = image_verdicts(records);
    let missing: Vec<&Sample> = cfs.records.iter().filter(|s| !verdicts.contains_key(s.id.as_str())).collect();
    if let Some(first) = missing.first() {
        return Err(Error::Coverage {
            missing: missing.len(),
            first: first.id.clone(),
        });
    }
    let ids: HashSet<&str> = cfs.records.iter().map(|s| s.id.as_str()).collect();
    let ignored_annotations = records.iter().filter(|r| !ids.contains(r.image_id.as_str())).count();
    let kept = cfs.records.iter().filter(|s| verdicts[s.id.as_str()]).cloned().collect();
    Ok(HumanFiltered {
        manifest: Manifest::new(format!("{}|human_correct", cfs.source_descriptor), kept)?,
        ignored_annotations,
    })
}
