//! Paired image over-generation and selection.
//!
//! For one caption pair: draw `n_candidates` share fractions uniformly from
//! `[p_low, p_high]`, render each attention-shared pair, keep pairs whose
//! caption-image and image-image cosines clear the minimums, and select the
//! pair whose image-embedding change points most nearly the same way as the
//! text-embedding change (directional similarity).

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::backends::{cosine, BackendSuite, Embedding, ImageRef, ImageSource};
use crate::capgen::CaptionPair;
use crate::error::{Error, Result};
use crate::hashing::{combine, hash_str};
use crate::rng::SeededRng;

/// Difference vectors with norm at or below this are treated as having no
/// direction.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub n_candidates: usize,
    pub p_low: f64,
    pub p_high: f64,
    pub min_caption_image_sim: f64,
    pub min_image_image_sim: f64,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            n_candidates: 100,
            p_low: 0.1,
            p_high: 0.9,
            min_caption_image_sim: 0.2,
            min_image_image_sim: 0.7,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_candidates == 0 {
            return Err(Error::Config("n_candidates must be at least 1".into()));
        }
        if !(0.0 <= self.p_low && self.p_low < self.p_high && self.p_high <= 1.0) {
            return Err(Error::Config(format!(
                "share range [{}, {}] must satisfy 0 <= low < high <= 1",
                self.p_low, self.p_high
            )));
        }
        for (name, v) in [
            ("min_caption_image_sim", self.min_caption_image_sim),
            ("min_image_image_sim", self.min_image_image_sim),
        ] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is outside [-1, 1]")));
            }
        }
        Ok(())
    }
}

/// Draw one attention-share fraction, uniform on `[p_low, p_high]`.
pub fn sample_share_fraction(rng: &mut SeededRng, cfg: &GenerationConfig) -> f64 {
    rng.uniform(cfg.p_low, cfg.p_high)
}

/// Embeddings computed once per candidate and shared by the filters and the
/// directional score.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEmbeddings {
    pub text_o: Embedding,
    pub text_c: Embedding,
    pub image_o: Embedding,
    pub image_c: Embedding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagePairCandidate {
    pub image_o: ImageRef,
    pub image_c: ImageRef,
    pub p: f64,
    pub sim_caption_o: f64,
    pub sim_caption_c: f64,
    pub sim_image_image: f64,
    pub clip_dir: Option<f64>,
    pub generation_seed: u64,
    pub embeddings: CandidateEmbeddings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Overgeneration {
    pub candidates: Vec<ImagePairCandidate>,
    /// One message per failed candidate generation.
    pub failures: Vec<String>,
}

fn pair_stream_seed(cfg: &GenerationConfig, pair: &CaptionPair) -> u64 {
    combine(cfg.seed, hash_str(0, &pair.source_id))
}

pub fn overgenerate(
    pair: &CaptionPair,
    cfg: &GenerationConfig,
    suite: &BackendSuite,
) -> Result<Overgeneration> {
    cfg.validate()?;
    let text_o = suite.text_encoder.encode_text(&pair.original)?;
    let text_c = suite.text_encoder.encode_text(&pair.counterfactual)?;
    let mut rng = SeededRng::new(pair_stream_seed(cfg, pair));
    let draws: Vec<(u64, f64)> = (0..cfg.n_candidates as u64)
        .map(|i| (cfg.seed.wrapping_add(i), sample_share_fraction(&mut rng, cfg)))
        .collect();

    let mut out = Overgeneration {
        candidates: Vec::with_capacity(draws.len()),
        failures: Vec::new(),
    };
    for (seed, p) in draws {
        let one = || -> Result<ImagePairCandidate> {
            let (image_o, image_c) =
                suite
                    .pair_generator
                    .generate_pair(&pair.original, &pair.counterfactual, p, seed)?;
            let emb_o = suite.image_encoder.encode_image(&image_o)?;
            let emb_c = suite.image_encoder.encode_image(&image_c)?;
            Ok(ImagePairCandidate {
                sim_caption_o: cosine(&text_o, &emb_o)?,
                sim_caption_c: cosine(&text_c, &emb_c)?,
                sim_image_image: cosine(&emb_o, &emb_c)?,
                image_o,
                image_c,
                p,
                clip_dir: None,
                generation_seed: seed,
                embeddings: CandidateEmbeddings {
                    text_o: text_o.clone(),
                    text_c: text_c.clone(),
                    image_o: emb_o,
                    image_c: emb_c,
                },
            })
        };
        match one() {
            Ok(c) => out.candidates.push(c),
            Err(e) => out.failures.push(format!("seed {seed}: {e}")),
        }
    }
    if out.candidates.is_empty() {
        return Err(Error::PairGenerationFailed {
            source_id: pair.source_id.clone(),
            failures: out.failures.len(),
        });
    }
    Ok(out)
}

/// Inclusive minimums on both caption-image cosines and the image-image
/// cosine.
pub fn passes_filters(c: &ImagePairCandidate, cfg: &GenerationConfig) -> bool {
    c.sim_caption_o >= cfg.min_caption_image_sim
        && c.sim_caption_c >= cfg.min_caption_image_sim
        && c.sim_image_image >= cfg.min_image_image_sim
}

pub fn filter_pairs(candidates: Vec<ImagePairCandidate>, cfg: &GenerationConfig) -> Vec<ImagePairCandidate> {
    candidates.into_iter().filter(|c| passes_filters(c, cfg)).collect()
}

/// Directional similarity: cosine between the text-embedding change and the
/// image-embedding change of a counterfactual pair.
pub fn clip_dir(
    e_text_o: &Embedding,
    e_text_c: &Embedding,
    e_img_o: &Embedding,
    e_img_c: &Embedding,
) -> Result<f64> {
    let text = e_text_c.difference(e_text_o)?;
    let image = e_img_c.difference(e_img_o)?;
    if text.len() != image.len() {
        return Err(Error::DimMismatch {
            left: text.len(),
            right: image.len(),
        });
    }
    let (mut dot, mut nt, mut ni) = (0.0, 0.0, 0.0);
    for (t, i) in text.iter().zip(&image) {
        dot += t * i;
        nt += t * t;
        ni += i * i;
    }
    let (nt, ni) = (nt.sqrt(), ni.sqrt());
    for n in [nt, ni] {
        if n <= DEGENERATE_NORM {
            return Err(Error::DegenerateDirection { norm: n });
        }
    }
    Ok((dot / (nt * ni)).clamp(-1.0, 1.0))
}

/// Highest directional similarity; ties go to the lower generation seed.
/// Candidates with a degenerate direction are skipped.
pub fn select_best(candidates: Vec<ImagePairCandidate>) -> Option<ImagePairCandidate> {
    candidates
        .into_iter()
        .filter_map(|mut c| {
            let e = &c.embeddings;
            let d = clip_dir(&e.text_o, &e.text_c, &e.image_o, &e.image_c).ok()?;
            c.clip_dir = Some(d);
            Some(c)
        })
        .reduce(|best, c| {
            let (b, x) = (best.clip_dir.unwrap(), c.clip_dir.unwrap());
            if x > b || (x == b && c.generation_seed < best.generation_seed) {
                c
            } else {
                best
            }
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualRecord {
    pub pair: CaptionPair,
    pub selected: ImagePairCandidate,
    pub rejected_count: usize,
    pub backend_descriptor: String,
    pub created_at: DateTime<Utc>,
}

/// Counts behind one `generate_record` call.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generated: usize,
    pub failed: usize,
    pub passed_filters: usize,
}

pub fn generate_record(
    pair: &CaptionPair,
    cfg: &GenerationConfig,
    suite: &BackendSuite,
) -> Result<(Option<CounterfactualRecord>, GenerationStats)> {
    let over = overgenerate(pair, cfg, suite)?;
    let mut stats = GenerationStats {
        generated: over.candidates.len(),
        failed: over.failures.len(),
        passed_filters: 0,
    };
    let survivors = filter_pairs(over.candidates, cfg);
    stats.passed_filters = survivors.len();
    let record = select_best(survivors).map(|selected| CounterfactualRecord {
        pair: pair.clone(),
        selected,
        rejected_count: stats.generated - 1,
        backend_descriptor: suite.descriptor().to_string(),
        created_at: Utc::now(),
    });
    Ok((record, stats))
}

/// One line of the counterfactual-record manifest. Image paths are relative
/// to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualRow {
    pub source_id: String,
    pub original: String,
    pub counterfactual: String,
    pub altered_from: String,
    pub altered_to: String,
    pub image_o: String,
    pub image_c: String,
    pub p: f64,
    pub sim_caption_o: f64,
    pub sim_caption_c: f64,
    pub sim_image_image: f64,
    pub clip_dir: f64,
    pub generation_seed: u64,
    pub rejected_count: usize,
    pub backend_descriptor: String,
    pub created_at: DateTime<Utc>,
}

impl CounterfactualRow {
    pub fn pair(&self) -> CaptionPair {
        CaptionPair {
            source_id: self.source_id.clone(),
            original: self.original.clone(),
            counterfactual: self.counterfactual.clone(),
            altered_from: self.altered_from.clone(),
            altered_to: self.altered_to.clone(),
        }
    }

    pub fn image_refs(&self, base: &Path) -> (ImageRef, ImageRef) {
        (
            ImageRef::from_path(format!("{}:orig", self.source_id), base.join(&self.image_o), ImageSource::Generated),
            ImageRef::from_path(format!("{}:cf", self.source_id), base.join(&self.image_c), ImageSource::Generated),
        )
    }
}

/// Path component safe for use as a directory name.
pub fn sanitize_id(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// Write `<base>/<images_subdir>/<source_id>/{orig,cf}.png` and return the
/// manifest row referencing them.
pub fn write_record(record: &CounterfactualRecord, base: &Path, images_subdir: &str) -> Result<CounterfactualRow> {
    let dir: PathBuf = Path::new(images_subdir).join(sanitize_id(&record.pair.source_id));
    let rel_o = dir.join("orig.png");
    let rel_c = dir.join("cf.png");
    record.selected.image_o.save_png(&base.join(&rel_o))?;
    record.selected.image_c.save_png(&base.join(&rel_c))?;
    let s = &record.selected;
    Ok(CounterfactualRow {
        source_id: record.pair.source_id.clone(),
        original: record.pair.original.clone(),
        counterfactual: record.pair.counterfactual.clone(),
        altered_from: record.pair.altered_from.clone(),
        altered_to: record.pair.altered_to.clone(),
        image_o: rel_o.to_string_lossy().replace('\\', "/"),
        image_c: rel_c.to_string_lossy().replace('\\', "/"),
        p: s.p,
        sim_caption_o: s.sim_caption_o,
        sim_caption_c: s.sim_caption_c,
        sim_image_image: s.sim_image_image,
        clip_dir: s.clip_dir.expect("selected candidates carry a directional score"),
        generation_seed: s.generation_seed,
        rejected_count: record.rejected_count,
        backend_descriptor: record.backend_descriptor.clone(),
        created_at: record.created_at,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::backends::{Backend, MockDescriptor, PairGenerator, SuiteParts};

    const D: MockDescriptor = MockDescriptor { dim: 16, seed: 1 };

    fn emb(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    fn pair() -> CaptionPair {
        CaptionPair {
            source_id: "42".into(),
            original: "a cat sitting on a wooden bench in the park".into(),
            counterfactual: "a dog sitting on a wooden bench in the park".into(),
            altered_from: "cat".into(),
            altered_to: "dog".into(),
        }
    }

    fn synthetic(seed: u64, dir: f64, sims: (f64, f64, f64)) -> ImagePairCandidate {
        // text change along e0; image change at angle acos(dir) from it
        let s = (1.0 - dir * dir).sqrt();
        let zero = emb(&[0.0, 0.0, 1.0]);
        ImagePairCandidate {
            image_o: ImageRef::from_path("o", "o.png", ImageSource::Mock),
            image_c: ImageRef::from_path("c", "c.png", ImageSource::Mock),
            p: 0.5,
            sim_caption_o: sims.0,
            sim_caption_c: sims.1,
            sim_image_image: sims.2,
            clip_dir: None,
            generation_seed: seed,
            embeddings: CandidateEmbeddings {
                text_o: zero.clone(),
                text_c: emb(&[1.0, 0.0, 1.0]),
                image_o: zero,
                image_c: emb(&[dir, s, 1.0]),
            },
        }
    }

    #[test]
    fn share_fraction_moments() {
        let cfg = GenerationConfig::default();
        let mut rng = SeededRng::new(3);
        let draws: Vec<f64> = (0..10_000).map(|_| sample_share_fraction(&mut rng, &cfg)).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
        assert!(draws.iter().all(|&p| (0.1..=0.9).contains(&p)));
        let mut again = SeededRng::new(3);
        assert!(draws.iter().take(100).all(|&p| p == sample_share_fraction(&mut again, &cfg)));
        let bad = GenerationConfig { p_low: 0.5, p_high: 0.5, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn overgenerate_counts_and_recomputes() {
        let suite = BackendSuite::mock(D);
        let cfg = GenerationConfig { n_candidates: 5, seed: 11, ..Default::default() };
        let over = overgenerate(&pair(), &cfg, &suite).unwrap();
        assert_eq!(over.candidates.len(), 5);
        let mut keys: Vec<_> = over.candidates.iter().map(|c| (c.p.to_bits(), c.generation_seed)).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 5);
        for c in &over.candidates {
            let t_o = suite.text_encoder.encode_text(&pair().original).unwrap();
            let t_c = suite.text_encoder.encode_text(&pair().counterfactual).unwrap();
            let i_o = suite.image_encoder.encode_image(&c.image_o).unwrap();
            let i_c = suite.image_encoder.encode_image(&c.image_c).unwrap();
            let cos = |a: &Embedding, b: &Embedding| {
                let d: f64 = a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum();
                d / (a.norm() * b.norm())
            };
            assert!((c.sim_caption_o - cos(&t_o, &i_o)).abs() < 1e-12);
            assert!((c.sim_caption_c - cos(&t_c, &i_c)).abs() < 1e-12);
            assert!((c.sim_image_image - cos(&i_o, &i_c)).abs() < 1e-12);
        }
    }

    struct Failing;
    impl Backend for Failing {
        fn descriptor(&self) -> String {
            "failing".into()
        }
    }
    impl PairGenerator for Failing {
        fn generate_pair(&self, _: &str, _: &str, _: f64, _: u64) -> Result<(ImageRef, ImageRef)> {
            Err(Error::backend("failing", "out of memory"))
        }
    }

    #[test]
    fn all_failing_generator() {
        let base = BackendSuite::mock(D);
        let suite = BackendSuite::new(SuiteParts {
            mlm: base.mlm.clone(),
            sent_sim: base.sent_sim.clone(),
            ppl: base.ppl.clone(),
            text_encoder: base.text_encoder.clone(),
            image_encoder: base.image_encoder.clone(),
            pair_generator: Arc::new(Failing),
            itm_scorer: None,
            tagger: base.tagger.clone(),
        })
        .unwrap();
        let cfg = GenerationConfig { n_candidates: 3, ..Default::default() };
        assert!(matches!(
            overgenerate(&pair(), &cfg, &suite),
            Err(Error::PairGenerationFailed { failures: 3, .. })
        ));
    }

    #[test]
    fn filter_thresholds_inclusive() {
        let cfg = GenerationConfig::default();
        let keep = |s| passes_filters(&synthetic(0, 0.5, s), &cfg);
        assert!(keep((0.25, 0.30, 0.80)));
        assert!(!keep((0.25, 0.15, 0.80)));
        assert!(!keep((0.25, 0.30, 0.65)));
        assert!(keep((0.2, 0.2, 0.7)));
    }

    #[test]
    fn clip_dir_basic_geometry() {
        let z = emb(&[0.0, 0.0, 0.0]);
        let x = emb(&[1.0, 0.0, 0.0]);
        let y = emb(&[0.0, 1.0, 0.0]);
        assert_eq!(clip_dir(&z, &x, &z, &x).unwrap(), 1.0);
        assert_eq!(clip_dir(&z, &x, &z, &y).unwrap(), 0.0);
        assert!(matches!(clip_dir(&x, &x, &z, &y), Err(Error::DegenerateDirection { .. })));
        assert!(matches!(clip_dir(&z, &x, &y, &y), Err(Error::DegenerateDirection { .. })));
        let w = emb(&[1.0, 0.0]);
        assert!(matches!(clip_dir(&z, &x, &w, &w), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn select_best_argmax_and_ties() {
        let best = select_best(vec![
            synthetic(1, 0.2, (1.0, 1.0, 1.0)),
            synthetic(2, 0.7, (1.0, 1.0, 1.0)),
            synthetic(3, 0.5, (1.0, 1.0, 1.0)),
        ])
        .unwrap();
        assert_eq!(best.generation_seed, 2);
        assert!((best.clip_dir.unwrap() - 0.7).abs() < 1e-12);
        assert!(select_best(vec![]).is_none());
        let tied = select_best(vec![synthetic(9, 0.7, (1.0, 1.0, 1.0)), synthetic(4, 0.7, (1.0, 1.0, 1.0))]).unwrap();
        assert_eq!(tied.generation_seed, 4);
    }

    #[test]
    fn degenerate_candidates_are_skipped() {
        let mut flat = synthetic(1, 0.9, (1.0, 1.0, 1.0));
        flat.embeddings.image_c = flat.embeddings.image_o.clone();
        let ok = synthetic(2, 0.1, (1.0, 1.0, 1.0));
        assert_eq!(select_best(vec![flat.clone(), ok]).unwrap().generation_seed, 2);
        assert!(select_best(vec![flat]).is_none());
    }

    #[test]
    fn record_selection_matches_brute_force() {
        let suite = BackendSuite::mock(D);
        let cfg = GenerationConfig { n_candidates: 5, seed: 3, ..Default::default() };
        let over = overgenerate(&pair(), &cfg, &suite).unwrap();
        // brute force over the same five candidates
        let passing: Vec<_> = over.candidates.iter().filter(|c| passes_filters(c, &cfg)).collect();
        let (rec, stats) = generate_record(&pair(), &cfg, &suite).unwrap();
        assert_eq!(stats.generated, 5);
        assert_eq!(stats.passed_filters, passing.len());
        if passing.is_empty() {
            assert!(rec.is_none());
            return;
        }
        let best = passing
            .iter()
            .map(|c| {
                let e = &c.embeddings;
                (clip_dir(&e.text_o, &e.text_c, &e.image_o, &e.image_c).unwrap(), c.generation_seed)
            })
            .fold((f64::MIN, 0), |a, b| if b.0 > a.0 { b } else { a });
        let rec = rec.unwrap();
        assert_eq!(rec.selected.generation_seed, best.1);
        assert_eq!(rec.rejected_count, 4);
    }

    #[test]
    fn impossible_filters_yield_none() {
        let suite = BackendSuite::mock(D);
        let cfg = GenerationConfig { n_candidates: 4, min_image_image_sim: 1.0, min_caption_image_sim: 1.0, ..Default::default() };
        let (rec, stats) = generate_record(&pair(), &cfg, &suite).unwrap();
        assert!(rec.is_none());
        assert_eq!(stats.passed_filters, 0);
    }

    #[test]
    fn rerun_is_identical_modulo_timestamp() {
        let suite = BackendSuite::mock(D);
        let cfg = GenerationConfig { n_candidates: 8, seed: 5, ..Default::default() };
        let (a, _) = generate_record(&pair(), &cfg, &suite).unwrap();
        let (b, _) = generate_record(&pair(), &cfg, &suite).unwrap();
        let (mut a, b) = (a.unwrap(), b.unwrap());
        a.created_at = b.created_at;
        assert_eq!(a, b);
    }

    #[test]
    fn written_row_points_at_pngs() {
        let suite = BackendSuite::mock(D);
        let cfg = GenerationConfig { n_candidates: 10, ..Default::default() };
        let (rec, _) = generate_record(&pair(), &cfg, &suite).unwrap();
        let rec = rec.expect("mock pair should survive at n=10");
        let dir = tempfile::tempdir().unwrap();
        let row = write_record(&rec, dir.path(), "images").unwrap();
        assert_eq!(row.image_o, "images/42/orig.png");
        let (o, c) = row.image_refs(dir.path());
        assert!(o.same_pixels(&rec.selected.image_o).unwrap());
        assert!(c.same_pixels(&rec.selected.image_c).unwrap());
    }
}
