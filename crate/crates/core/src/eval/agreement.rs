//! Fleiss' kappa over items × categories count tables.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dataset::annotations::{AnnotationLabel, AnnotationRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub kappa: f64,
    pub n_items: usize,
    pub n_raters: u64,
    pub category_counts: BTreeMap<String, u64>,
    pub p_bar: f64,
    pub p_e: f64,
}

/// Fleiss' kappa with categories named `0..k`.
pub fn fleiss_kappa(ratings: &[Vec<u64>]) -> Result<AgreementReport> {
    let k = ratings.first().map_or(0, Vec::len);
    let names: Vec<String> = (0..k).map(|c| c.to_string()).collect();
    fleiss_kappa_labeled(ratings, &names)
}

/// Fleiss' kappa; `categories` names the table's columns.
pub fn fleiss_kappa_labeled(ratings: &[Vec<u64>], categories: &[String]) -> Result<AgreementReport> {
    if ratings.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: ratings.len(),
        });
    }
    let k = categories.len();
    let n: u64 = ratings[0].iter().sum();
    for (row, r) in ratings.iter().enumerate() {
        if r.len() != k {
            return Err(Error::LengthMismatch { left: k, right: r.len() });
        }
        let found: u64 = r.iter().sum();
        if found != n {
            return Err(Error::UnevenRaters { row, found, expected: n });
        }
    }
    if n < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: n as usize,
        });
    }
    let items = ratings.len() as f64;
    let nf = n as f64;
    let mut totals = vec![0u64; k];
    let mut p_sum = 0.0;
    for r in ratings {
        let agree: u64 = r.iter().map(|&c| c * c.saturating_sub(1)).sum();
        p_sum += agree as f64 / (nf * (nf - 1.0));
        for (t, &c) in totals.iter_mut().zip(r) {
            *t += c;
        }
    }
    let p_bar = p_sum / items;
    let p_e: f64 = totals
        .iter()
        .map(|&t| {
            let p = t as f64 / (items * nf);
            p * p
        })
        .sum();
    if totals.iter().filter(|&&t| t > 0).count() <= 1 {
        return Err(Error::Degenerate("all ratings fall in one category; kappa is undefined"));
    }
    Ok(AgreementReport {
        kappa: (p_bar - p_e) / (1.0 - p_e),
        n_items: ratings.len(),
        n_raters: n,
        category_counts: categories.iter().cloned().zip(totals).collect(),
        p_bar,
        p_e,
    })
}

/// Count table over the images that carry exactly `n_raters` annotations;
/// other images are left out. Columns follow [`LABELS`].
pub fn ratings_from_annotations(records: &[AnnotationRecord], n_raters: usize) -> (Vec<String>, Vec<Vec<u64>>) {
    let mut by_image: BTreeMap<&str, Vec<AnnotationLabel>> = BTreeMap::new();
    for r in records {
        by_image.entry(&r.image_id).or_default().push(r.label);
    }
    let col: HashMap<AnnotationLabel, usize> = LABELS.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let rows = by_image
        .into_values()
        .filter(|labels| labels.len() == n_raters)
        .map(|labels| {
            let mut row = vec![0u64; LABELS.len()];
            for l in labels {
                row[col[&l]] += 1;
            }
            row
        })
        .collect();
    let names = LABELS
        .iter()
        .map(|l| serde_json::to_value(l).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default())
        .collect();
    (names, rows)
}

pub const LABELS: [AnnotationLabel; 4] = [
    AnnotationLabel::Original,
    AnnotationLabel::Counterfactual,
    AnnotationLabel::Both,
    AnnotationLabel::Neither,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_agreement() {
        let r = fleiss_kappa(&[vec![3, 0], vec![0, 3], vec![3, 0]]).unwrap();
        assert_eq!(r.kappa, 1.0);
    }

    #[test]
    fn fleiss_1971_table() {
        let table = vec![
            vec![0, 0, 0, 0, 14],
            vec![0, 2, 6, 4, 2],
            vec![0, 0, 3, 5, 6],
            vec![0, 3, 9, 2, 0],
            vec![2, 2, 8, 1, 1],
            vec![7, 7, 0, 0, 0],
            vec![3, 2, 6, 3, 0],
            vec![2, 5, 3, 2, 2],
            vec![6, 5, 2, 1, 0],
            vec![0, 2, 2, 3, 7],
        ];
        let r = fleiss_kappa(&table).unwrap();
        assert!((r.p_bar - 0.378021978021978).abs() < 1e-12);
        assert!((r.p_e - 0.21275510204081632).abs() < 1e-12);
        assert!((r.kappa - 0.20993070442195522).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_uneven() {
        assert!(matches!(fleiss_kappa(&[vec![3, 0], vec![3, 0]]), Err(Error::Degenerate(_))));
        assert!(matches!(
            fleiss_kappa(&[vec![3, 0], vec![1, 1]]),
            Err(Error::UnevenRaters { row: 1, found: 2, expected: 3 })
        ));
    }
}
