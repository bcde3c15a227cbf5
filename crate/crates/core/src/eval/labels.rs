//! Label-overlap counts and taxonomy error rates over counterfactual samples.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::annotations::{image_verdicts, AnnotationRecord};
use crate::dataset::manifest::{Manifest, Sample};
use crate::error::{Error, Result};

/// The human-related subjects examined in the taxonomy error analysis.
pub const HUMAN_WORDS: [&str; 14] = [
    "girl", "boy", "man", "men", "woman", "guy", "kid", "person", "people", "child", "children", "couple",
    "group", "lady",
];

fn folded<'a>(labels: impl IntoIterator<Item = &'a str>) -> HashSet<String> {
    labels.into_iter().map(str::to_lowercase).collect()
}

/// Number of counterfactual pairs whose altered subject, on either side,
/// equals one of `labels` ignoring case. Each pair counts once.
pub fn label_frequency<'a>(cfs: &Manifest<Sample>, labels: impl IntoIterator<Item = &'a str>) -> usize {
    let labels = folded(labels);
    if labels.is_empty() {
        return 0;
    }
    let mut pairs = HashSet::new();
    for s in &cfs.records {
        let hit = [&s.altered_from, &s.altered_to]
            .into_iter()
            .flatten()
            .any(|w| labels.contains(&w.to_lowercase()));
        if hit {
            pairs.insert(s.pair_id.as_deref().unwrap_or(&s.id));
        }
    }
    pairs.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyResult {
    pub matched_count: usize,
    pub error_count: usize,
}

impl TaxonomyResult {
    pub fn rate(&self) -> Result<f64> {
        error_rate(self.matched_count, self.error_count)
    }
}

pub fn error_rate(matched: usize, errors: usize) -> Result<f64> {
    if matched == 0 {
        return Err(Error::Degenerate("no matched records; error rate is undefined"));
    }
    if errors > matched {
        return Err(Error::Precondition(format!("{errors} errors among {matched} records")));
    }
    Ok(errors as f64 / matched as f64)
}

/// `rate` as a percentage string with `decimals` places.
pub fn format_percent(rate: f64, decimals: usize) -> String {
    format!("{:.*}%", decimals, rate * 100.0)
}

/// Counterfactual samples whose own altered subject is in `words`, and how
/// many of them annotators did not match to the right caption.
pub fn taxonomy_error_rate<'a>(
    annotations: &[AnnotationRecord],
    cfs: &Manifest<Sample>,
    words: impl IntoIterator<Item = &'a str>,
) -> Result<TaxonomyResult> {
    let words = folded(words);
    let verdicts = image_verdicts(annotations);
    let matched: Vec<&Sample> = cfs
        .records
        .iter()
        .filter(|s| s.altered_subject().is_some_and(|w| words.contains(&w.to_lowercase())))
        .collect();
    let missing: Vec<&&Sample> = matched.iter().filter(|s| !verdicts.contains_key(s.id.as_str())).collect();
    if let Some(first) = missing.first() {
        return Err(Error::Coverage {
            missing: missing.len(),
            first: first.id.clone(),
        });
    }
    Ok(TaxonomyResult {
        matched_count: matched.len(),
        error_count: matched.iter().filter(|s| !verdicts[s.id.as_str()]).count(),
    })
}

/// Per-word breakdown of [`taxonomy_error_rate`].
pub fn taxonomy_by_word<'a>(
    annotations: &[AnnotationRecord],
    cfs: &Manifest<Sample>,
    words: impl IntoIterator<Item = &'a str>,
) -> Result<BTreeMap<String, TaxonomyResult>> {
    folded(words)
        .into_iter()
        .map(|w| Ok((w.clone(), taxonomy_error_rate(annotations, cfs, [w.as_str()])?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::annotations::{AnnotationLabel, ImageOrigin};
    use crate::dataset::manifest::{PairRole, SampleOrigin};

    fn pair(pid: &str, from: &str, to: &str) -> [Sample; 2] {
        [PairRole::Original, PairRole::Counterfactual].map(|role| Sample {
            id: format!("{pid}:{role:?}"),
            caption: String::new(),
            image_path: String::new(),
            origin: SampleOrigin::Counterfactual,
            pair_id: Some(pid.into()),
            role: Some(role),
            altered_from: Some(from.into()),
            altered_to: Some(to.into()),
        })
    }

    fn manifest() -> Manifest<Sample> {
        let recs = [pair("1", "cat", "dog"), pair("2", "man", "boy")].concat();
        Manifest::new("t", recs).unwrap()
    }

    #[test]
    fn frequency() {
        let m = manifest();
        assert_eq!(label_frequency(&m, ["cat"]), 1);
        assert_eq!(label_frequency(&m, []), 0);
        assert_eq!(label_frequency(&m, ["Dog"]), 1);
        assert_eq!(label_frequency(&m, ["dogs"]), 0);
        assert_eq!(label_frequency(&m, ["cat", "dog", "boy"]), 2);
    }

    #[test]
    fn reference_counts() {
        let r = TaxonomyResult {
            matched_count: 4117,
            error_count: 1864,
        };
        assert!((r.rate().unwrap() - 0.4528).abs() < 5e-5);
        assert_eq!(format_percent(r.rate().unwrap(), 1), "45.3%");
    }

    #[test]
    fn taxonomy() {
        let m = manifest();
        let ann: Vec<AnnotationRecord> = m
            .records
            .iter()
            .map(|s| AnnotationRecord {
                image_id: s.id.clone(),
                label: AnnotationLabel::Original,
                annotator_id: "a".into(),
                image_origin: match s.role.unwrap() {
                    PairRole::Original => ImageOrigin::FromOriginalCaption,
                    PairRole::Counterfactual => ImageOrigin::FromCounterfactualCaption,
                },
            })
            .collect();
        let r = taxonomy_error_rate(&ann, &m, HUMAN_WORDS).unwrap();
        assert_eq!((r.matched_count, r.error_count), (2, 1));
        let empty = taxonomy_error_rate(&ann, &m, []).unwrap();
        assert_eq!((empty.matched_count, empty.error_count), (0, 0));
        assert!(empty.rate().is_err());
        let right: Vec<_> = ann.iter().filter(|a| a.image_origin == ImageOrigin::FromOriginalCaption).cloned().collect();
        assert!(matches!(taxonomy_error_rate(&right, &m, HUMAN_WORDS), Err(Error::Coverage { .. })));
        let ok = taxonomy_error_rate(&ann, &m, ["man"]).unwrap();
        assert_eq!(ok.rate().unwrap(), 0.0);
    }
}
