//! Binned ITM difference distributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::itm::ItmDiffSamples;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricHistogram {
    pub counts: Vec<u64>,
    pub n: usize,
    /// Share of samples strictly below zero.
    pub fraction_below_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffHistogram {
    /// `bins + 1` edges shared by every metric.
    pub edges: Vec<f64>,
    pub metrics: BTreeMap<String, MetricHistogram>,
}

impl DiffHistogram {
    /// `bin_left,bin_right,count` rows for one metric.
    pub fn to_csv(&self, metric: &str) -> Result<String> {
        let h = self
            .metrics
            .get(metric)
            .ok_or_else(|| Error::Precondition(format!("no histogram for `{metric}`")))?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Precondition(format!("csv: {e}"));
        w.write_record(["bin_left", "bin_right", "count"]).map_err(csv_err)?;
        for (i, c) in h.counts.iter().enumerate() {
            w.write_record([self.edges[i].to_string(), self.edges[i + 1].to_string(), c.to_string()])
                .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Precondition(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn bin_index(x: f64, lo: f64, width: f64, bins: usize) -> usize {
    (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1)
}

/// Equal-width bins over the range pooled across all four metrics. Metrics
/// with no samples are left out.
pub fn diff_histogram(samples: &ItmDiffSamples, bins: usize) -> Result<DiffHistogram> {
    if bins == 0 {
        return Err(Error::Precondition("bins must be positive".into()));
    }
    let series: Vec<(&str, &[f64])> = ItmDiffSamples::METRICS
        .iter()
        .filter_map(|&m| samples.metric(m).filter(|s| !s.is_empty()).map(|s| (m, s)))
        .collect();
    if series.is_empty() {
        return Err(Error::EmptyInput("itm difference samples"));
    }
    let all = series.iter().flat_map(|(_, s)| s.iter().copied());
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidEmbedding("non-finite ITM difference".into()));
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
    edges.push(hi);
    let metrics = series
        .into_iter()
        .map(|(name, s)| {
            let mut counts = vec![0u64; bins];
            for &x in s {
                counts[bin_index(x, lo, width, bins)] += 1;
            }
            let below = s.iter().filter(|&&x| x < 0.0).count();
            let h = MetricHistogram {
                counts,
                n: s.len(),
                fraction_below_zero: below as f64 / s.len() as f64,
            };
            (name.to_string(), h)
        })
        .collect();
    Ok(DiffHistogram { edges, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn only_ir_cf(v: Vec<f64>) -> ItmDiffSamples {
        ItmDiffSamples {
            ir_cf: v,
            ..Default::default()
        }
    }

    #[test]
    fn two_bins() {
        let h = diff_histogram(&only_ir_cf(vec![-1.0, 1.0]), 2).unwrap();
        assert_eq!(h.metrics["ir_cf"].counts, vec![1, 1]);
        assert_eq!(h.metrics["ir_cf"].fraction_below_zero, 0.5);
        assert_eq!(h.to_csv("ir_cf").unwrap(), "bin_left,bin_right,count\n-1,0,1\n0,1,1\n");
    }

    #[test]
    fn positive_and_empty() {
        let h = diff_histogram(&only_ir_cf(vec![0.0, 0.2, 3.0]), 4).unwrap();
        assert_eq!(h.metrics["ir_cf"].fraction_below_zero, 0.0);
        assert!(diff_histogram(&ItmDiffSamples::default(), 4).is_err());
    }

    #[test]
    fn conservation() {
        let mut rng = crate::rng::SeededRng::new(3);
        let v: Vec<f64> = (0..1000).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let h = diff_histogram(&only_ir_cf(v), 17).unwrap();
        assert_eq!(h.metrics["ir_cf"].counts.iter().sum::<u64>(), 1000);
    }
}
