//! Synthetic caption corpora for demos and tests.
//!
//! Captions are assembled from small word lists; each gets a stand-in
//! "photo" rendered by the mock pair generator, so the whole pipeline runs
//! without external data.

use std::path::{Path, PathBuf};

use crate::backends::mock::MockPairGenerator;
use crate::backends::MockDescriptor;
use crate::dataset::manifest::{CorpusRecord, Manifest, PairRole, Sample, SampleOrigin};
use crate::error::Result;
use crate::rng::SeededRng;

const SUBJECTS: &[&str] = &[
    "cat", "dog", "horse", "man", "woman", "boy", "girl", "child", "bear", "bird", "person", "lady",
];
const ADJECTIVES: &[&str] = &["small", "large", "white", "black", "brown", "young", "old", "happy"];
const VERBS: &[&str] = &["sitting", "standing", "lying", "waiting", "looking"];
const PREPOSITIONS: &[&str] = &["on", "near", "under", "beside", "behind"];
const PLACES: &[&str] = &[
    "table", "bench", "couch", "bed", "street", "road", "field", "beach", "kitchen", "window", "car", "boat",
];

fn pick<'a>(rng: &mut SeededRng, words: &[&'a str]) -> &'a str {
    words[rng.below(words.len() as u64) as usize]
}

/// `n` captions with ids `img00000`, `img00001`, ...
pub fn synthetic_captions(n: usize, seed: u64) -> Vec<CorpusRecord> {
    let mut rng = SeededRng::new(seed);
    (0..n)
        .map(|i| {
            let caption = format!(
                "A {} {} {} {} the {} {}",
                pick(&mut rng, ADJECTIVES),
                pick(&mut rng, SUBJECTS),
                pick(&mut rng, VERBS),
                pick(&mut rng, PREPOSITIONS),
                pick(&mut rng, ADJECTIVES),
                pick(&mut rng, PLACES),
            );
            CorpusRecord {
                id: format!("img{i:05}"),
                caption,
                image_path: None,
            }
        })
        .collect()
}

/// Write `dir/corpus.jsonl` and one rendered image per caption under
/// `dir/photos/`. Returns the corpus path.
pub fn write_synthetic_corpus(dir: &Path, n: usize, seed: u64) -> Result<PathBuf> {
    let generator = MockPairGenerator::new(MockDescriptor { dim: 16, seed });
    let mut records = synthetic_captions(n, seed);
    for (i, r) in records.iter_mut().enumerate() {
        let rel = format!("photos/{}.png", r.id);
        generator.render(&r.caption, seed.wrapping_add(i as u64))?.save_png(&dir.join(&rel))?;
        r.image_path = Some(rel);
    }
    let path = dir.join("corpus.jsonl");
    Manifest::new(format!("synthetic:n={n}:seed={seed}"), records)?.write(&path)?;
    Ok(path)
}

/// Sample manifests shaped like a built dataset, without images: `n_coco`
/// originals and `n_pairs` linked counterfactual pairs.
pub fn synthetic_samples(n_coco: usize, n_pairs: usize) -> Result<(Manifest<Sample>, Manifest<Sample>)> {
    let coco = (0..n_coco)
        .map(|i| Sample {
            id: format!("coco{i:06}"),
            caption: format!("caption {i}"),
            image_path: format!("photos/coco{i:06}.png"),
            origin: SampleOrigin::Coco,
            pair_id: None,
            role: None,
            altered_from: None,
            altered_to: None,
        })
        .collect();
    let cfs = (0..n_pairs)
        .flat_map(|i| {
            [(PairRole::Original, "orig"), (PairRole::Counterfactual, "cf")].map(|(role, tag)| Sample {
                id: format!("pair{i:06}:{tag}"),
                caption: format!("caption {i} {tag}"),
                image_path: format!("images/pair{i:06}/{tag}.png"),
                origin: SampleOrigin::Counterfactual,
                pair_id: Some(format!("pair{i:06}")),
                role: Some(role),
                altered_from: Some("cat".into()),
                altered_to: Some("dog".into()),
            })
        })
        .collect();
    Ok((Manifest::new("synthetic-coco", coco)?, Manifest::new("synthetic-cfs", cfs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::BackendSuite;
    use crate::capgen::{make_counterfactual, CaptionGenConfig};

    #[test]
    fn most_captions_yield_pairs() {
        let suite = BackendSuite::mock(MockDescriptor { dim: 16, seed: 1 });
        let cfg = CaptionGenConfig::default();
        let caps = synthetic_captions(50, 7);
        let ok = caps
            .iter()
            .filter(|c| make_counterfactual(&c.id, &c.caption, &cfg, &suite).unwrap().record.is_some())
            .count();
        assert!(ok >= 20, "only {ok} of 50 captions produced a pair");
    }

    #[test]
    fn corpus_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_synthetic_corpus(dir.path(), 3, 1).unwrap();
        let back = crate::dataset::manifest::read_corpus(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert!(dir.path().join(back[0].image_path.as_ref().unwrap()).is_file());
    }
}
