//! Deterministic stand-ins for every model role.
//!
//! The mocks are tied together through a token palette: each word maps to a
//! fixed RGB colour ([`palette`]), the pair generator paints token-owned grid
//! cells in that colour, and both encoders embed a colour (or the word that
//! owns it) with the same seeded hash vector. Text and image embeddings of a
//! caption and its rendering therefore land close together, so every
//! similarity threshold in the pipeline sees realistic floating-point values.

use std::collections::HashMap;

use image::{Rgb, RgbImage};

use super::{
    check_single_mask, Backend, Embedding, ImageEncoder, ImageRef, ImageSource, MaskFill,
    MaskedLm, MockDescriptor, PairGenerator, PerplexityScorer, SentenceSimilarity, TextEncoder,
};
use crate::error::{Error, Result};
use crate::hashing::{combine, fnv1a, hash_str, signed_unit, unit};
use crate::text::word_tokens;

/// Colour a word is painted with. Independent of any backend seed.
pub fn palette(token: &str) -> [u8; 3] {
    let h = fnv1a(token.to_lowercase().as_bytes());
    [(h >> 16) as u8, (h >> 8) as u8, h as u8]
}

/// Seeded hash vector for one colour.
pub fn colour_vector(rgb: [u8; 3], seed: u64, dim: usize) -> Vec<f64> {
    let key = combine(seed, u64::from_le_bytes([rgb[0], rgb[1], rgb[2], 0, 0, 0, 0, 1]));
    (0..dim as u64).map(|i| signed_unit(combine(key, i))).collect()
}

pub fn token_vector(token: &str, seed: u64, dim: usize) -> Vec<f64> {
    colour_vector(palette(token), seed, dim)
}

/// Bag-of-words hash embedding.
#[derive(Debug, Clone)]
pub struct MockTextEncoder {
    desc: MockDescriptor,
}

impl MockTextEncoder {
    pub fn new(desc: MockDescriptor) -> Self {
        Self { desc }
    }

    /// Unwrapped raw sum, used by the sentence-similarity mock.
    pub(crate) fn raw(&self, text: &str) -> Result<Vec<f64>> {
        let tokens = word_tokens(text);
        if tokens.is_empty() {
            return Err(Error::backend(self.descriptor(), "text has no word tokens"));
        }
        let mut acc = vec![0.0; self.desc.dim];
        for t in &tokens {
            for (a, v) in acc.iter_mut().zip(token_vector(t, self.desc.seed, self.desc.dim)) {
                *a += v;
            }
        }
        Ok(acc)
    }
}

impl Backend for MockTextEncoder {
    fn descriptor(&self) -> String {
        self.desc.to_string()
    }
}

impl TextEncoder for MockTextEncoder {
    fn dim(&self) -> usize {
        self.desc.dim
    }

    fn encode_text(&self, text: &str) -> Result<Embedding> {
        Embedding::new(self.raw(text)?)
    }
}

/// Mean of per-pixel colour vectors.
#[derive(Debug, Clone)]
pub struct MockImageEncoder {
    desc: MockDescriptor,
}

impl MockImageEncoder {
    pub fn new(desc: MockDescriptor) -> Self {
        Self { desc }
    }
}

impl Backend for MockImageEncoder {
    fn descriptor(&self) -> String {
        self.desc.to_string()
    }
}

impl ImageEncoder for MockImageEncoder {
    fn dim(&self) -> usize {
        self.desc.dim
    }

    fn encode_image(&self, image: &ImageRef) -> Result<Embedding> {
        let pixels = image.rgb()?;
        let mut counts: HashMap<[u8; 3], u64> = HashMap::new();
        for p in pixels.pixels() {
            *counts.entry(p.0).or_default() += 1;
        }
        // sorted so the summation order (and hence the float result) is fixed
        let mut colours: Vec<_> = counts.into_iter().collect();
        colours.sort_unstable();
        let total = (pixels.width() as u64 * pixels.height() as u64) as f64;
        let mut acc = vec![0.0; self.desc.dim];
        for (rgb, n) in colours {
            let w = n as f64 / total;
            for (a, v) in acc.iter_mut().zip(colour_vector(rgb, self.desc.seed, self.desc.dim)) {
                *a += w * v;
            }
        }
        Embedding::new(acc)
    }
}

/// Cosine of [`MockTextEncoder`] embeddings.
#[derive(Debug, Clone)]
pub struct MockSentenceSimilarity {
    encoder: MockTextEncoder,
}

impl MockSentenceSimilarity {
    pub fn new(desc: MockDescriptor) -> Self {
        Self {
            encoder: MockTextEncoder::new(desc),
        }
    }
}

impl Backend for MockSentenceSimilarity {
    fn descriptor(&self) -> String {
        self.encoder.descriptor()
    }
}

impl SentenceSimilarity for MockSentenceSimilarity {
    fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        if a.trim().is_empty() || b.trim().is_empty() {
            return Err(Error::backend(self.descriptor(), "empty sentence"));
        }
        if a == b {
            return Ok(1.0);
        }
        let (ea, eb) = (self.encoder.raw(a)?, self.encoder.raw(b)?);
        super::cosine_slices(&ea, &eb).map_err(|e| Error::backend(self.descriptor(), e.to_string()))
    }
}

/// Unigram probabilities the perplexity mock knows about.
pub const DEFAULT_UNIGRAMS: &[(&str, f64)] = &[
    ("a", 0.06),
    ("the", 0.05),
    ("of", 0.03),
    ("on", 0.025),
    ("in", 0.025),
    ("with", 0.02),
    ("and", 0.02),
    ("is", 0.015),
    ("an", 0.01),
    ("sitting", 0.006),
    ("man", 0.004),
    ("woman", 0.003),
    ("table", 0.002),
    ("cat", 0.002),
    ("dog", 0.002),
    ("street", 0.0015),
    ("plate", 0.0012),
    ("pizza", 0.001),
];

/// Perplexity as `2^(mean surprisal)` under a unigram table. Words missing
/// from the table get a seeded probability in `[1e-5, 1e-3)`.
#[derive(Debug, Clone)]
pub struct MockPerplexity {
    desc: MockDescriptor,
    table: HashMap<String, f64>,
}

impl MockPerplexity {
    pub fn new(desc: MockDescriptor) -> Self {
        Self::with_table(desc, DEFAULT_UNIGRAMS.iter().map(|(w, p)| (w.to_string(), *p)))
    }

    pub fn with_table(desc: MockDescriptor, table: impl IntoIterator<Item = (String, f64)>) -> Self {
        Self {
            desc,
            table: table.into_iter().map(|(w, p)| (w.to_lowercase(), p)).collect(),
        }
    }

    pub fn probability(&self, token: &str) -> f64 {
        match self.table.get(token) {
            Some(p) => *p,
            None => 10f64.powf(-(3.0 + 2.0 * unit(hash_str(self.desc.seed, token)))),
        }
    }
}

impl Backend for MockPerplexity {
    fn descriptor(&self) -> String {
        self.desc.to_string()
    }
}

impl PerplexityScorer for MockPerplexity {
    fn perplexity(&self, text: &str) -> Result<f64> {
        let tokens = word_tokens(text);
        if tokens.is_empty() {
            return Err(Error::backend(self.descriptor(), "text has no word tokens"));
        }
        let surprisal: f64 = tokens.iter().map(|t| -self.probability(t).log2()).sum();
        Ok((surprisal / tokens.len() as f64).exp2())
    }
}

/// Vocabulary the masked-LM mock proposes from: mostly caption nouns, plus a
/// few verbs, adjectives, and multi-word fills that later filters must reject.
pub const DEFAULT_VOCABULARY: &[&str] = &[
    "cat", "dog", "horse", "cow", "sheep", "elephant", "giraffe", "zebra", "bear", "bird",
    "man", "woman", "boy", "girl", "child", "person", "people", "lady", "guy", "kid",
    "car", "bus", "truck", "train", "bike", "motorcycle", "boat", "plane", "kite", "skateboard",
    "table", "chair", "bench", "couch", "bed", "desk", "shelf", "counter", "sink", "toilet",
    "pizza", "sandwich", "cake", "donut", "banana", "apple", "orange", "broccoli", "bowl", "plate",
    "street", "road", "field", "beach", "park", "kitchen", "room", "window", "door", "wall",
    "phone", "laptop", "remote", "toy", "umbrella", "clock", "vase", "book", "bag", "hat",
    "running", "sat", "red", "small", "quickly", "hot dog", "teddy bear",
];

/// Scores every vocabulary word by a seeded hash of `(context, word)`.
#[derive(Debug, Clone)]
pub struct MockMaskedLm {
    desc: MockDescriptor,
    vocabulary: Vec<String>,
}

impl MockMaskedLm {
    pub fn new(desc: MockDescriptor) -> Self {
        Self::with_vocabulary(desc, DEFAULT_VOCABULARY.iter().map(|s| s.to_string()))
    }

    pub fn with_vocabulary(desc: MockDescriptor, vocabulary: impl IntoIterator<Item = String>) -> Self {
        let mut vocabulary: Vec<String> = vocabulary.into_iter().collect();
        vocabulary.sort();
        vocabulary.dedup();
        Self { desc, vocabulary }
    }

    pub fn score(&self, masked_text: &str, token: &str) -> f64 {
        let ctx = hash_str(self.desc.seed, &masked_text.to_lowercase());
        // log-probability-like: in (-inf, 0]
        (1.0 - unit(combine(ctx, fnv1a(token.as_bytes())))).ln()
    }
}

impl Backend for MockMaskedLm {
    fn descriptor(&self) -> String {
        self.desc.to_string()
    }
}

impl MaskedLm for MockMaskedLm {
    fn top_k(&self, masked_text: &str, placeholder: &str, k: usize) -> Result<Vec<MaskFill>> {
        check_single_mask(masked_text, placeholder)?;
        let mut fills: Vec<MaskFill> = self
            .vocabulary
            .iter()
            .map(|t| MaskFill {
                token: t.clone(),
                score: self.score(masked_text, t),
            })
            .collect();
        fills.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.token.cmp(&b.token)));
        fills.truncate(k);
        Ok(fills)
    }
}

/// Procedural paired renderer.
///
/// The canvas is a grid of square cells. Each cell is owned either by a
/// token position or by the background, decided by the generation seed. A
/// token-owned cell is painted with the [`palette`] colour of the token at
/// that position in each prompt, so positions where the prompts agree are
/// pixel-identical. A background cell is shared between the two images when
/// its seeded threshold falls below `share`; otherwise each image paints it
/// with a prompt-specific colour.
#[derive(Debug, Clone)]
pub struct MockPairGenerator {
    desc: MockDescriptor,
    /// Cells per side.
    pub grid: u32,
    /// Pixels per cell side.
    pub cell: u32,
}

impl MockPairGenerator {
    pub fn new(desc: MockDescriptor) -> Self {
        Self {
            desc,
            grid: 8,
            cell: 4,
        }
    }

    /// Render a single prompt (both sides of the pair identical).
    pub fn render(&self, prompt: &str, seed: u64) -> Result<ImageRef> {
        Ok(self.generate_pair(prompt, prompt, 1.0, seed)?.0)
    }
}

impl Backend for MockPairGenerator {
    fn descriptor(&self) -> String {
        self.desc.to_string()
    }
}

fn background(key: u64) -> [u8; 3] {
    let h = combine(key, 0x6267);
    [(h >> 40) as u8, (h >> 24) as u8, (h >> 8) as u8]
}

impl PairGenerator for MockPairGenerator {
    fn generate_pair(
        &self,
        prompt_o: &str,
        prompt_c: &str,
        share: f64,
        seed: u64,
    ) -> Result<(ImageRef, ImageRef)> {
        if prompt_o.trim().is_empty() || prompt_c.trim().is_empty() {
            return Err(Error::backend(self.descriptor(), "empty prompt"));
        }
        if !(0.0..=1.0).contains(&share) {
            return Err(Error::backend(self.descriptor(), format!("share {share} outside [0, 1]")));
        }
        let toks_o = word_tokens(prompt_o);
        let toks_c = word_tokens(prompt_c);
        let n = toks_o.len().max(toks_c.len()) as u64;
        let layout = combine(self.desc.seed, seed);
        let (ho, hc) = (hash_str(layout, prompt_o), hash_str(layout, prompt_c));
        let side = self.grid * self.cell;
        let mut img_o = RgbImage::new(side, side);
        let mut img_c = RgbImage::new(side, side);
        for cy in 0..self.grid {
            for cx in 0..self.grid {
                let k = (cy * self.grid + cx) as u64;
                let h = combine(layout, k);
                let owner = h % (n + 2);
                let (co, cc) = if owner < n {
                    let paint = |toks: &[String], bg: u64| match toks.get(owner as usize) {
                        Some(t) => palette(t),
                        None => background(combine(bg, k)),
                    };
                    (paint(&toks_o, ho), paint(&toks_c, hc))
                } else if unit(combine(h, 0x5eed)) < share {
                    let c = background(combine(layout, k));
                    (c, c)
                } else {
                    (background(combine(ho, k)), background(combine(hc, k)))
                };
                for dy in 0..self.cell {
                    for dx in 0..self.cell {
                        let (x, y) = (cx * self.cell + dx, cy * self.cell + dy);
                        img_o.put_pixel(x, y, Rgb(co));
                        img_c.put_pixel(x, y, Rgb(cc));
                    }
                }
            }
        }
        let id = format!("{:016x}", combine(combine(ho, hc), share.to_bits()));
        Ok((
            ImageRef::from_pixels(format!("{id}-o"), img_o, ImageSource::Mock)?,
            ImageRef::from_pixels(format!("{id}-c"), img_c, ImageSource::Mock)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::cosine;

    const D: MockDescriptor = MockDescriptor { dim: 16, seed: 1 };

    fn identical_fraction(a: &ImageRef, b: &ImageRef) -> f64 {
        let (a, b) = (a.rgb().unwrap(), b.rgb().unwrap());
        let same = a.pixels().zip(b.pixels()).filter(|(x, y)| x == y).count();
        same as f64 / (a.width() * a.height()) as f64
    }

    #[test]
    fn mlm_orders_and_truncates() {
        let mlm = MockMaskedLm::new(D);
        let fills = mlm.top_k("A photo of a <mask>", "<mask>", 3).unwrap();
        assert_eq!(fills.len(), 3);
        assert!(fills.windows(2).all(|w| w[0].score > w[1].score));
    }

    #[test]
    fn mlm_requires_one_mask() {
        let mlm = MockMaskedLm::new(D);
        assert!(matches!(
            mlm.top_k("no mask here", "<mask>", 10),
            Err(Error::MaskCount { found: 0, .. })
        ));
        assert!(mlm.top_k("A [MASK] runs", "[MASK]", 2).is_ok());
    }

    #[test]
    fn mlm_exhausts_small_vocabulary() {
        let vocab = ["cat", "dog", "car"].map(String::from);
        let mlm = MockMaskedLm::with_vocabulary(D, vocab.clone());
        let fills = mlm.top_k("A <mask> runs", "<mask>", 10).unwrap();
        let mut got: Vec<_> = fills.iter().map(|f| f.token.clone()).collect();
        got.sort();
        assert_eq!(got, ["car", "cat", "dog"]);
    }

    #[test]
    fn sentence_similarity_contract() {
        let s = MockSentenceSimilarity::new(D);
        let a = "a cat on a mat";
        let b = "a dog on a mat";
        assert!((s.similarity(a, a).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(s.similarity(a, b).unwrap(), s.similarity(b, a).unwrap());
        assert!(s.similarity("", "x").is_err());
        // independent recomputation from the token vectors
        let bag = |t: &[&str]| {
            let mut v = vec![0.0; 16];
            for w in t {
                for (x, y) in v.iter_mut().zip(token_vector(w, 1, 16)) {
                    *x += y;
                }
            }
            v
        };
        let ea = bag(&["a", "cat", "on", "a", "mat"]);
        let eb = bag(&["a", "dog", "on", "a", "mat"]);
        let dot: f64 = ea.iter().zip(&eb).map(|(x, y)| x * y).sum();
        let na: f64 = ea.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = eb.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((s.similarity(a, b).unwrap() - dot / (na * nb)).abs() < 1e-12);
    }

    #[test]
    fn perplexity_matches_hand_computation() {
        let p = MockPerplexity::new(D);
        // a: 0.06, cat: 0.002, on: 0.025
        let expected = 2f64.powf(
            (-(0.06f64.log2()) - 0.002f64.log2() - 0.025f64.log2()) / 3.0,
        );
        let got = p.perplexity("a cat on").unwrap();
        assert!((got - expected).abs() < 1e-9 * expected, "{got} vs {expected}");
        assert!(p.perplexity("zyzzyva quux").unwrap() > 0.0);
        assert_eq!(p.perplexity("x y z").unwrap(), p.perplexity("x y z").unwrap());
        assert!(p.perplexity("...").is_err());
    }

    #[test]
    fn encoders_have_configured_dim_and_are_deterministic() {
        let t = MockTextEncoder::new(D);
        let i = MockImageEncoder::new(D);
        assert_eq!(t.encode_text("a").unwrap(), t.encode_text("a").unwrap());
        assert_eq!(t.encode_text("a").unwrap().dim(), 16);
        let img = MockPairGenerator::new(D).render("a cat", 3).unwrap();
        assert_eq!(i.encode_image(&img).unwrap().dim(), 16);
    }

    #[test]
    fn corrupted_image_path_is_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.png");
        std::fs::write(&path, b"not a png").unwrap();
        let r = ImageRef::from_path("x", &path, ImageSource::Original);
        assert!(matches!(
            MockImageEncoder::new(D).encode_image(&r),
            Err(Error::Decode { .. })
        ));
    }

    #[test]
    fn aligned_text_and_image_score_one() {
        let colour = palette("cat");
        let img = RgbImage::from_pixel(8, 8, Rgb(colour));
        let r = ImageRef::from_pixels("cat", img, ImageSource::Mock).unwrap();
        let e_t = MockTextEncoder::new(D).encode_text("cat").unwrap();
        let e_i = MockImageEncoder::new(D).encode_image(&r).unwrap();
        assert!((cosine(&e_t, &e_i).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn identical_prompts_identical_images() {
        let g = MockPairGenerator::new(D);
        let (a, b) = g.generate_pair("a cat on a mat", "a cat on a mat", 0.5, 7).unwrap();
        assert!(a.same_pixels(&b).unwrap());
    }

    #[test]
    fn generation_is_deterministic() {
        let g = MockPairGenerator::new(D);
        let x = g.generate_pair("a cat", "a dog", 0.3, 9).unwrap();
        let y = g.generate_pair("a cat", "a dog", 0.3, 9).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn higher_share_keeps_more_pixels() {
        let g = MockPairGenerator::new(D);
        let hi = g.generate_pair("a cat", "a dog", 0.9, 7).unwrap();
        let lo = g.generate_pair("a cat", "a dog", 0.1, 7).unwrap();
        let (fh, fl) = (identical_fraction(&hi.0, &hi.1), identical_fraction(&lo.0, &lo.1));
        assert!(fh > fl, "{fh} vs {fl}");
    }

    #[test]
    fn rendered_caption_is_close_to_its_text() {
        let g = MockPairGenerator::new(D);
        let img = g.render("a man riding a horse on the beach", 5).unwrap();
        let e_i = MockImageEncoder::new(D).encode_image(&img).unwrap();
        let e_t = MockTextEncoder::new(D).encode_text("a man riding a horse on the beach").unwrap();
        let e_x = MockTextEncoder::new(D).encode_text("pizza").unwrap();
        let matched = cosine(&e_t, &e_i).unwrap();
        assert!(matched > cosine(&e_x, &e_i).unwrap());
        assert!(matched > 0.2);
    }
}
