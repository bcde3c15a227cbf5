use serde::{Deserialize, Serialize};

use super::manifest::{Manifest, Sample};
use super::mix::{pair_groups, round_half_up};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Train/validation split that never separates the members of a
/// counterfactual pair.
///
/// Pairs and lone samples form units. Units are shuffled with the seed and
/// assigned to train while the train side stays within
/// `round_half_up(train_fraction * n)`; the rest go to validation. Both
/// sides keep input order.
pub fn split_train_val(
    manifest: &Manifest<Sample>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Manifest<Sample>, Manifest<Sample>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {train_fraction} must lie in (0, 1)")));
    }
    let records = &manifest.records;
    let (paired, lone): (Vec<usize>, Vec<usize>) = (0..records.len()).partition(|&i| records[i].pair_id.is_some());
    let paired_samples: Vec<Sample> = paired.iter().map(|&i| records[i].clone()).collect();
    let mut units: Vec<Vec<usize>> = pair_groups(&paired_samples)?
        .into_iter()
        .map(|g| g.into_iter().map(|j| paired[j]).collect())
        .collect();
    units.extend(lone.into_iter().map(|i| vec![i]));
    units.sort_by_key(|u| u[0]);

    let mut rng = SeededRng::new(seed);
    rng.shuffle(&mut units);
    let target = round_half_up(train_fraction, records.len());
    let mut in_train = vec![false; records.len()];
    let mut n_train = 0;
    for unit in &units {
        if n_train + unit.len() <= target {
            n_train += unit.len();
            for &i in unit {
                in_train[i] = true;
            }
        }
    }
    let (train, val): (Vec<_>, Vec<_>) = records.iter().cloned().zip(&in_train).partition(|(_, t)| **t);
    let strip = |v: Vec<(Sample, &bool)>| v.into_iter().map(|(s, _)| s).collect::<Vec<_>>();
    let desc = &manifest.source_descriptor;
    Ok((
        Manifest::new(format!("{desc}|train:{train_fraction}:seed={seed}"), strip(train))?,
        Manifest::new(format!("{desc}|val:{train_fraction}:seed={seed}"), strip(val))?,
    ))
}

/// Sizes of a split, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::dataset::manifest::{PairRole, SampleOrigin};

    fn lone(n: usize) -> Manifest<Sample> {
        let recs = (0..n)
            .map(|i| Sample {
                id: format!("s{i}"),
                caption: "c".into(),
                image_path: "i.png".into(),
                origin: SampleOrigin::Coco,
                pair_id: None,
                role: None,
                altered_from: None,
                altered_to: None,
            })
            .collect();
        Manifest::new("lone", recs).unwrap()
    }

    fn mixed(n_lone: usize, n_pairs: usize) -> Manifest<Sample> {
        let mut m = lone(n_lone);
        for i in 0..n_pairs {
            for role in [PairRole::Original, PairRole::Counterfactual] {
                m.records.push(Sample {
                    id: format!("p{i}:{role:?}"),
                    caption: "c".into(),
                    image_path: "i.png".into(),
                    origin: SampleOrigin::Counterfactual,
                    pair_id: Some(format!("p{i}")),
                    role: Some(role),
                    altered_from: None,
                    altered_to: None,
                });
            }
        }
        m
    }

    #[test]
    fn ten_records_eighty_percent() {
        let (t, v) = split_train_val(&lone(10), 0.8, 1).unwrap();
        assert_eq!((t.len(), v.len()), (8, 2));
    }

    #[test]
    fn disjoint_and_exhaustive() {
        let m = mixed(13, 9);
        let (t, v) = split_train_val(&m, 0.8, 4).unwrap();
        let ids = |m: &Manifest<Sample>| m.records.iter().map(|s| s.id.clone()).collect::<HashSet<_>>();
        let (a, b) = (ids(&t), ids(&v));
        assert!(a.is_disjoint(&b));
        assert_eq!(a.len() + b.len(), m.len());
    }

    #[test]
    fn pairs_never_straddle() {
        let m = mixed(7, 20);
        for seed in 0..100 {
            let (t, _) = split_train_val(&m, 0.8, seed).unwrap();
            let mut c = std::collections::HashMap::new();
            for s in &t.records {
                if let Some(p) = &s.pair_id {
                    *c.entry(p.clone()).or_insert(0) += 1;
                }
            }
            assert!(c.values().all(|&n| n == 2), "seed {seed}");
        }
    }

    #[test]
    fn fraction_bounds() {
        assert!(split_train_val(&lone(10), 1.0, 0).is_err());
        assert!(split_train_val(&lone(10), 0.0, 0).is_err());
    }

    #[test]
    fn deterministic() {
        let m = mixed(30, 30);
        assert_eq!(split_train_val(&m, 0.8, 3).unwrap(), split_train_val(&m, 0.8, 3).unwrap());
    }
}
