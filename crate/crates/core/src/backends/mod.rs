//! Model interfaces the pipeline depends on, and a suite that bundles them.
//!
//! Nothing here runs a neural network. Real checkpoints plug in by
//! implementing the traits; the in-tree implementations are the
//! deterministic mocks in [`mock`], selected with `mock:<dim>:<seed>`
//! descriptors.

mod embedding;
mod image_ref;
pub mod mock;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use embedding::{cosine, cosine_slices, Embedding};
pub use image_ref::{ImageData, ImageRef, ImageSource};

use crate::error::{Error, Result};
use crate::text::{LexiconTagger, PosTagger};

pub const DEFAULT_MASK: &str = "<mask>";

/// Whether a handle may be called from several workers at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concurrency {
    Concurrent,
    SingleThreaded,
}

pub trait Backend: Send + Sync {
    fn descriptor(&self) -> String;

    fn concurrency(&self) -> Concurrency {
        Concurrency::Concurrent
    }
}

/// One masked-LM proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskFill {
    pub token: String,
    /// Higher is more probable.
    pub score: f64,
}

pub trait MaskedLm: Backend {
    /// At most `k` fills for the single `placeholder` in `masked_text`,
    /// best first.
    fn top_k(&self, masked_text: &str, placeholder: &str, k: usize) -> Result<Vec<MaskFill>>;
}

pub trait SentenceSimilarity: Backend {
    fn similarity(&self, a: &str, b: &str) -> Result<f64>;
}

pub trait PerplexityScorer: Backend {
    fn perplexity(&self, text: &str) -> Result<f64>;
}

pub trait TextEncoder: Backend {
    fn dim(&self) -> usize;
    fn encode_text(&self, text: &str) -> Result<Embedding>;
}

pub trait ImageEncoder: Backend {
    fn dim(&self) -> usize;
    fn encode_image(&self, image: &ImageRef) -> Result<Embedding>;
}

/// Attention-shared paired generation: two images from one seed whose
/// differences follow the prompt difference. `share` is the fraction of
/// denoising steps with shared attention.
pub trait PairGenerator: Backend {
    fn generate_pair(
        &self,
        prompt_o: &str,
        prompt_c: &str,
        share: f64,
        seed: u64,
    ) -> Result<(ImageRef, ImageRef)>;
}

pub trait ItmScorer: Backend {
    fn itm_score(&self, caption: &str, image: &ImageRef) -> Result<f64>;
}

/// Number of occurrences of `placeholder` in `text`; implementations reject
/// anything other than one.
pub fn check_single_mask(text: &str, placeholder: &str) -> Result<()> {
    let found = if placeholder.is_empty() {
        0
    } else {
        text.matches(placeholder).count()
    };
    if found != 1 {
        return Err(Error::MaskCount {
            placeholder: placeholder.to_string(),
            found,
        });
    }
    Ok(())
}

/// ITM score as the cosine of a dual encoder's text and image embeddings.
pub struct EmbeddingItmScorer {
    pub text: Arc<dyn TextEncoder>,
    pub image: Arc<dyn ImageEncoder>,
}

impl Backend for EmbeddingItmScorer {
    fn descriptor(&self) -> String {
        format!("cosine({}, {})", self.text.descriptor(), self.image.descriptor())
    }

    fn concurrency(&self) -> Concurrency {
        if self.text.concurrency() == Concurrency::Concurrent
            && self.image.concurrency() == Concurrency::Concurrent
        {
            Concurrency::Concurrent
        } else {
            Concurrency::SingleThreaded
        }
    }
}

impl ItmScorer for EmbeddingItmScorer {
    fn itm_score(&self, caption: &str, image: &ImageRef) -> Result<f64> {
        let t = self.text.encode_text(caption)?;
        let i = self.image.encode_image(image)?;
        cosine(&t, &i)
    }
}

/// The roles a suite is assembled from, as they appear in config keys
/// (`backends.<role>`).
pub const ROLES: [&str; 7] = [
    "mlm",
    "sent_sim",
    "ppl",
    "text_encoder",
    "image_encoder",
    "pair_generator",
    "itm_scorer",
];

/// Parsed `mock:<dim>:<seed>` descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockDescriptor {
    pub dim: usize,
    pub seed: u64,
}

impl std::str::FromStr for MockDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownBackend(s.to_string());
        let mut parts = s.split(':');
        if parts.next() != Some("mock") {
            return Err(bad());
        }
        let dim: usize = parts.next().and_then(|d| d.parse().ok()).ok_or_else(bad)?;
        let seed: u64 = parts.next().and_then(|d| d.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() || dim < 2 {
            return Err(bad());
        }
        Ok(Self { dim, seed })
    }
}

impl std::fmt::Display for MockDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "mock:{}:{}", self.dim, self.seed)
    }
}

/// Every model handle a pipeline run needs.
#[derive(Clone)]
pub struct BackendSuite {
    pub mlm: Arc<dyn MaskedLm>,
    pub sent_sim: Arc<dyn SentenceSimilarity>,
    pub ppl: Arc<dyn PerplexityScorer>,
    pub text_encoder: Arc<dyn TextEncoder>,
    pub image_encoder: Arc<dyn ImageEncoder>,
    pub pair_generator: Arc<dyn PairGenerator>,
    pub itm_scorer: Arc<dyn ItmScorer>,
    pub tagger: Arc<dyn PosTagger>,
    descriptor: String,
}

impl std::fmt::Debug for BackendSuite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BackendSuite")
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

pub struct SuiteParts {
    pub mlm: Arc<dyn MaskedLm>,
    pub sent_sim: Arc<dyn SentenceSimilarity>,
    pub ppl: Arc<dyn PerplexityScorer>,
    pub text_encoder: Arc<dyn TextEncoder>,
    pub image_encoder: Arc<dyn ImageEncoder>,
    pub pair_generator: Arc<dyn PairGenerator>,
    /// `None` selects [`EmbeddingItmScorer`] over the suite's encoders.
    pub itm_scorer: Option<Arc<dyn ItmScorer>>,
    pub tagger: Arc<dyn PosTagger>,
}

impl BackendSuite {
    pub fn new(parts: SuiteParts) -> Result<Self> {
        let (td, id) = (parts.text_encoder.dim(), parts.image_encoder.dim());
        if td != id {
            return Err(Error::DimMismatch { left: td, right: id });
        }
        let itm_scorer = parts.itm_scorer.unwrap_or_else(|| {
            Arc::new(EmbeddingItmScorer {
                text: parts.text_encoder.clone(),
                image: parts.image_encoder.clone(),
            })
        });
        let descriptor = [
            ("mlm", parts.mlm.descriptor()),
            ("sent_sim", parts.sent_sim.descriptor()),
            ("ppl", parts.ppl.descriptor()),
            ("text_encoder", parts.text_encoder.descriptor()),
            ("image_encoder", parts.image_encoder.descriptor()),
            ("pair_generator", parts.pair_generator.descriptor()),
            ("itm_scorer", itm_scorer.descriptor()),
        ]
        .iter()
        .map(|(role, d)| format!("{role}={d}"))
        .collect::<Vec<_>>()
        .join(";");
        Ok(Self {
            mlm: parts.mlm,
            sent_sim: parts.sent_sim,
            ppl: parts.ppl,
            text_encoder: parts.text_encoder,
            image_encoder: parts.image_encoder,
            pair_generator: parts.pair_generator,
            itm_scorer,
            tagger: parts.tagger,
            descriptor,
        })
    }

    /// All roles backed by mocks sharing one descriptor.
    pub fn mock(desc: MockDescriptor) -> Self {
        let roles: BTreeMap<String, String> = ROLES
            .iter()
            .map(|r| (r.to_string(), desc.to_string()))
            .collect();
        Self::from_descriptors(&roles).expect("uniform mock suite is always valid")
    }

    /// Build from `role -> descriptor`. Every role must be present; only
    /// `mock:<dim>:<seed>` descriptors are provided in-tree.
    pub fn from_descriptors(roles: &BTreeMap<String, String>) -> Result<Self> {
        let get = |role: &str| -> Result<MockDescriptor> {
            let d = roles
                .get(role)
                .ok_or_else(|| Error::Config(format!("missing backend for role `{role}`")))?;
            d.parse()
        };
        for key in roles.keys() {
            if !ROLES.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown backend role `{key}`")));
            }
        }
        let te = get("text_encoder")?;
        let ie = get("image_encoder")?;
        let text_encoder: Arc<dyn TextEncoder> = Arc::new(mock::MockTextEncoder::new(te));
        let image_encoder: Arc<dyn ImageEncoder> = Arc::new(mock::MockImageEncoder::new(ie));
        let itm_desc = get("itm_scorer")?;
        let itm_scorer: Arc<dyn ItmScorer> = Arc::new(EmbeddingItmScorer {
            text: Arc::new(mock::MockTextEncoder::new(itm_desc)),
            image: Arc::new(mock::MockImageEncoder::new(itm_desc)),
        });
        Self::new(SuiteParts {
            mlm: Arc::new(mock::MockMaskedLm::new(get("mlm")?)),
            sent_sim: Arc::new(mock::MockSentenceSimilarity::new(get("sent_sim")?)),
            ppl: Arc::new(mock::MockPerplexity::new(get("ppl")?)),
            text_encoder,
            image_encoder,
            pair_generator: Arc::new(mock::MockPairGenerator::new(get("pair_generator")?)),
            itm_scorer: Some(itm_scorer),
            tagger: Arc::new(LexiconTagger::default()),
        })
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// Worker count honoring single-threaded handles.
    pub fn max_workers(&self, requested: usize) -> usize {
        let all_concurrent = [
            self.mlm.concurrency(),
            self.sent_sim.concurrency(),
            self.ppl.concurrency(),
            self.text_encoder.concurrency(),
            self.image_encoder.concurrency(),
            self.pair_generator.concurrency(),
            self.itm_scorer.concurrency(),
        ]
        .iter()
        .all(|c| *c == Concurrency::Concurrent);
        if all_concurrent {
            requested.max(1)
        } else {
            1
        }
    }
}
