//! Original/counterfactual training mixes.
//!
//! The three named mixes reproduce the reference dataset sizes when fed
//! 17,410 original samples and 17,410 counterfactual pairs:
//!
//! | mix    | originals | counterfactuals                     | total  |
//! |--------|-----------|-------------------------------------|--------|
//! | base   | 50%       | 25% of pairs, half-up -> 4,353 pairs | 17,411 |
//! | medium | 100%      | 75% of samples -> 26,115 samples     | 43,525 |
//! | all    | 100%      | 100%                                | 52,230 |
//!
//! `medium` samples at the record level: the target count is odd, so it
//! takes 13,057 whole pairs plus one member of one further pair.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::manifest::{Manifest, PairRole, Sample};
use crate::error::{Error, Result};
use crate::hashing::combine;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixName {
    Base,
    Medium,
    All,
    Custom,
}

impl std::str::FromStr for MixName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Self::Base),
            "medium" => Ok(Self::Medium),
            "all" => Ok(Self::All),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Config(format!("unknown mix `{other}` (base|medium|all|custom)"))),
        }
    }
}

/// What the counterfactual fraction counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfUnit {
    /// `round_half_up(fraction * pairs)` whole pairs.
    Pairs,
    /// `round_half_up(fraction * samples)` samples, taken as whole pairs
    /// plus at most one lone member when the target is odd.
    Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    pub name: MixName,
    pub coco_fraction: f64,
    pub cf_fraction: f64,
    pub cf_unit: CfUnit,
    pub seed: u64,
    /// When set, the built mix must have exactly this many samples.
    pub expected_total: Option<usize>,
}

impl MixSpec {
    pub fn preset(name: MixName, seed: u64) -> Result<Self> {
        let (coco_fraction, cf_fraction, cf_unit) = match name {
            MixName::Base => (0.5, 0.25, CfUnit::Pairs),
            MixName::Medium => (1.0, 0.75, CfUnit::Samples),
            MixName::All => (1.0, 1.0, CfUnit::Pairs),
            MixName::Custom => {
                return Err(Error::Config("custom mixes need explicit fractions".into()));
            }
        };
        Ok(Self {
            name,
            coco_fraction,
            cf_fraction,
            cf_unit,
            seed,
            expected_total: None,
        })
    }

    pub fn custom(coco_fraction: f64, cf_fraction: f64, cf_unit: CfUnit, seed: u64) -> Result<Self> {
        let spec = Self {
            name: MixName::Custom,
            coco_fraction,
            cf_fraction,
            cf_unit,
            seed,
            expected_total: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("coco_fraction", self.coco_fraction), ("cf_fraction", self.cf_fraction)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!("{name} = {f} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// `round(fraction * n)` with halves rounded up.
pub fn round_half_up(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) + 0.5 + 1e-9).floor() as usize
}

/// Counterfactual samples grouped by pair id, in first-appearance order.
pub(crate) fn pair_groups(cfs: &[Sample]) -> Result<Vec<Vec<usize>>> {
    let mut order: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, s) in cfs.iter().enumerate() {
        let pid = s.pair_id.as_deref().ok_or_else(|| Error::Linkage {
            pair_id: s.id.clone(),
            message: "counterfactual sample has no pair_id".into(),
        })?;
        let slot = *index.entry(pid).or_insert_with(|| {
            order.push(Vec::new());
            order.len() - 1
        });
        order[slot].push(i);
    }
    Ok(order)
}

fn check_linked(cfs: &[Sample], group: &[usize]) -> Result<()> {
    let mut roles: Vec<Option<PairRole>> = group.iter().map(|&i| cfs[i].role).collect();
    roles.sort();
    if roles != [Some(PairRole::Original), Some(PairRole::Counterfactual)] {
        let s = &cfs[group[0]];
        return Err(Error::Linkage {
            pair_id: s.pair_id.clone().unwrap_or_default(),
            message: format!("expected one original and one counterfactual member, found {roles:?}"),
        });
    }
    Ok(())
}

/// Sample a mix. Output keeps input order: selected originals first, then
/// selected counterfactual samples.
pub fn build_mix(spec: &MixSpec, coco: &Manifest<Sample>, cfs: &Manifest<Sample>) -> Result<Manifest<Sample>> {
    spec.validate()?;
    let n_coco = round_half_up(spec.coco_fraction, coco.len());
    let mut coco_rng = SeededRng::new(combine(spec.seed, 1));
    let coco_idx = coco_rng.sample_indices(coco.len(), n_coco);

    let groups = pair_groups(&cfs.records)?;
    let mut cf_rng = SeededRng::new(combine(spec.seed, 2));
    let (full, lone) = match spec.cf_unit {
        CfUnit::Pairs => (round_half_up(spec.cf_fraction, groups.len()), 0),
        CfUnit::Samples => {
            let target = round_half_up(spec.cf_fraction, cfs.len());
            (target / 2, target % 2)
        }
    };
    if full + lone > groups.len() {
        return Err(Error::Precondition(format!(
            "mix needs {} pairs but only {} exist",
            full + lone,
            groups.len()
        )));
    }
    let mut order: Vec<usize> = (0..groups.len()).collect();
    cf_rng.shuffle(&mut order);
    let mut keep = vec![false; cfs.len()];
    for &g in &order[..full] {
        check_linked(&cfs.records, &groups[g])?;
        for &i in &groups[g] {
            keep[i] = true;
        }
    }
    if lone == 1 {
        let g = &groups[order[full]];
        check_linked(&cfs.records, g)?;
        keep[g[cf_rng.below(2) as usize]] = true;
    }

    let mut records: Vec<Sample> = coco_idx.iter().map(|&i| coco.records[i].clone()).collect();
    records.extend(
        cfs.records
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(s, _)| s.clone()),
    );
    if let Some(expected) = spec.expected_total {
        if records.len() != expected {
            return Err(Error::Precondition(format!(
                "mix has {} samples, expected {expected}",
                records.len()
            )));
        }
    }
    let name = serde_json::to_value(spec.name).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    Manifest::new(format!("mix:{name}:seed={}", spec.seed), records)
}
