//! Image-text matching score differences between a counterfactual pair and a
//! random pair.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backends::{ImageRef, ImageSource, ItmScorer};
use crate::dataset::manifest::{PairRole, Sample};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// One evaluation unit: the originating caption and its corpus image, the
/// synthetic pair, and a random caption-image pair from elsewhere in the
/// corpus.
#[derive(Debug, Clone)]
pub struct ItmTuple {
    pub c_o: String,
    pub i_o: ImageRef,
    pub i_o_s: ImageRef,
    pub c_c: String,
    pub i_c_s: ImageRef,
    pub c_r: String,
    pub i_r: ImageRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTuple {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ItmDiffSamples {
    pub ir_random: Vec<f64>,
    pub ir_cf: Vec<f64>,
    pub tr_random: Vec<f64>,
    pub tr_cf: Vec<f64>,
    #[serde(default)]
    pub skipped: Vec<SkippedTuple>,
}

impl ItmDiffSamples {
    pub const METRICS: [&'static str; 4] = ["ir_random", "ir_cf", "tr_random", "tr_cf"];

    pub fn metric(&self, name: &str) -> Option<&[f64]> {
        match name {
            "ir_random" => Some(&self.ir_random),
            "ir_cf" => Some(&self.ir_cf),
            "tr_random" => Some(&self.tr_random),
            "tr_cf" => Some(&self.tr_cf),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.ir_random.len()
    }

    pub fn is_empty(&self) -> bool {
        Self::METRICS.iter().all(|m| self.metric(m).is_none_or(|s| s.is_empty()))
    }
}

/// The four differences for one tuple, in `METRICS` order.
pub fn tuple_diffs(t: &ItmTuple, scorer: &dyn ItmScorer) -> Result<[f64; 4]> {
    let g = |c: &str, i: &ImageRef| -> Result<f64> {
        let s = scorer.itm_score(c, i)?;
        if s.is_finite() {
            Ok(s)
        } else {
            Err(Error::backend(scorer.descriptor(), format!("non-finite score for `{c}`")))
        }
    };
    let rr = g(&t.c_r, &t.i_r)?;
    let cc = g(&t.c_c, &t.i_c_s)?;
    Ok([
        rr - g(&t.c_r, &t.i_o)?,
        cc - g(&t.c_c, &t.i_o_s)?,
        rr - g(&t.c_o, &t.i_r)?,
        cc - g(&t.c_o, &t.i_c_s)?,
    ])
}

/// Score every tuple. A tuple whose random image is its own corpus image
/// violates the sampling rule and fails the call; a backend failure skips
/// the tuple and is recorded.
pub fn itm_diffs(tuples: &[ItmTuple], scorer: &dyn ItmScorer) -> Result<ItmDiffSamples> {
    if let Some(i) = tuples.iter().position(|t| t.i_o.id == t.i_r.id) {
        return Err(Error::Precondition(format!(
            "tuple {i}: random image `{}` is the original image",
            tuples[i].i_r.id
        )));
    }
    let mut out = ItmDiffSamples::default();
    for (index, t) in tuples.iter().enumerate() {
        match tuple_diffs(t, scorer) {
            Ok([ir_r, ir_c, tr_r, tr_c]) => {
                out.ir_random.push(ir_r);
                out.ir_cf.push(ir_c);
                out.tr_random.push(tr_r);
                out.tr_cf.push(tr_c);
            }
            Err(e) => out.skipped.push(SkippedTuple {
                index,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Assemble tuples from the coco samples and counterfactual samples of a
/// built dataset. Image paths resolve against `base`; the random pair for
/// each tuple is drawn from the other coco samples.
pub fn build_itm_tuples(coco: &[Sample], cfs: &[Sample], base: &Path, seed: u64) -> Result<Vec<ItmTuple>> {
    if coco.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: coco.len(),
        });
    }
    let coco_index: HashMap<&str, usize> = coco.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let mut pairs: std::collections::BTreeMap<&str, [Option<&Sample>; 2]> = Default::default();
    for s in cfs {
        let (Some(pid), Some(role)) = (s.pair_id.as_deref(), s.role) else {
            return Err(Error::Linkage {
                pair_id: s.id.clone(),
                message: "counterfactual sample without pair_id/role".into(),
            });
        };
        let slot = &mut pairs.entry(pid).or_default()[(role == PairRole::Counterfactual) as usize];
        if slot.replace(s).is_some() {
            return Err(Error::Linkage {
                pair_id: pid.to_string(),
                message: format!("two {role:?} members"),
            });
        }
    }
    let image = |s: &Sample, source| ImageRef::from_path(s.id.clone(), base.join(&s.image_path), source);
    let mut rng = SeededRng::new(seed);
    let mut out = Vec::with_capacity(pairs.len());
    for (pid, members) in pairs {
        let [Some(o), Some(c)] = members else {
            return Err(Error::Linkage {
                pair_id: pid.to_string(),
                message: "incomplete pair".into(),
            });
        };
        let &oi = coco_index.get(pid).ok_or_else(|| Error::Coverage {
            missing: 1,
            first: pid.to_string(),
        })?;
        let mut ri = rng.below(coco.len() as u64 - 1) as usize;
        if ri >= oi {
            ri += 1;
        }
        out.push(ItmTuple {
            c_o: o.caption.clone(),
            i_o: image(&coco[oi], ImageSource::Original),
            i_o_s: image(o, ImageSource::Generated),
            c_c: c.caption.clone(),
            i_c_s: image(c, ImageSource::Generated),
            c_r: coco[ri].caption.clone(),
            i_r: image(&coco[ri], ImageSource::Original),
        });
    }
    Ok(out)
}
