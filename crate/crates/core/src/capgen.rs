//! Counterfactual caption generation.
//!
//! For each noun in a caption: mask it, ask the masked LM for the top-k
//! fills, keep fills that are still nouns in the new sentence, keep those
//! whose sentence similarity to the original lies inside
//! `(sim_low, sim_high)`, and finally take the lowest-perplexity survivor
//! across all sites.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backends::BackendSuite;
use crate::error::{Error, Result};
use crate::text::{tokenize, PosTagger};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounSite {
    pub token_index: usize,
    pub surface: String,
    /// Byte offsets into the original caption.
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateCaption {
    pub text: String,
    pub site: NounSite,
    pub replacement: String,
    pub similarity: Option<f64>,
    pub perplexity: Option<f64>,
    pub pos_valid: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionPair {
    pub source_id: String,
    pub original: String,
    pub counterfactual: String,
    pub altered_from: String,
    pub altered_to: String,
}

/// A caption pair as written to the caption-pair manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionPairRecord {
    #[serde(flatten)]
    pub pair: CaptionPair,
    pub similarity: f64,
    pub perplexity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionGenConfig {
    pub top_k: usize,
    pub sim_low: f64,
    pub sim_high: f64,
    pub mask_placeholder: String,
    /// Accept similarities equal to either bound. Off by default: the range
    /// is an open interval.
    pub inclusive_bounds: bool,
}

impl Default for CaptionGenConfig {
    fn default() -> Self {
        Self {
            top_k: 10,
            sim_low: 0.8,
            sim_high: 0.91,
            mask_placeholder: crate::backends::DEFAULT_MASK.to_string(),
            inclusive_bounds: false,
        }
    }
}

impl CaptionGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if !(0.0 <= self.sim_low && self.sim_low < self.sim_high && self.sim_high <= 1.0) {
            return Err(Error::Config(format!(
                "similarity range ({}, {}) must satisfy 0 <= low < high <= 1",
                self.sim_low, self.sim_high
            )));
        }
        if self.mask_placeholder.trim().is_empty() {
            return Err(Error::Config("mask placeholder is empty".into()));
        }
        Ok(())
    }

    pub fn admits(&self, similarity: f64) -> bool {
        if self.inclusive_bounds {
            self.sim_low <= similarity && similarity <= self.sim_high
        } else {
            self.sim_low < similarity && similarity < self.sim_high
        }
    }
}

/// Why a candidate or a caption was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    // candidate level
    SameAsOriginal,
    NotSingleToken,
    NotNoun,
    OutsideSimilarityRange,
    BackendError,
    TaggerError,
    // caption level
    NoSites,
    NoCandidates,
    NoNounCandidates,
    NoSimilarCandidates,
    ScoringFailed,
}

/// Per-caption bookkeeping of what each stage did.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateLog {
    pub sites: usize,
    pub proposed: usize,
    pub after_pos: usize,
    pub after_similarity: usize,
    pub dropped: BTreeMap<DropReason, usize>,
    pub errors: Vec<String>,
    /// Candidates that reached perplexity scoring, with scores where scoring
    /// succeeded.
    pub survivors: Vec<CandidateCaption>,
}

impl CandidateLog {
    fn drop(&mut self, reason: DropReason) {
        *self.dropped.entry(reason).or_default() += 1;
    }

    fn error(&mut self, reason: DropReason, err: &Error) {
        self.drop(reason);
        self.errors.push(err.to_string());
    }
}

pub fn extract_noun_sites(caption: &str, tagger: &dyn PosTagger) -> Result<Vec<NounSite>> {
    if caption.trim().is_empty() {
        return Err(Error::Precondition("caption is empty".into()));
    }
    let tokens = tokenize(caption);
    let tags = tagger.tag(&tokens)?;
    if tags.len() != tokens.len() {
        return Err(Error::Tagger(format!(
            "{} tags for {} tokens",
            tags.len(),
            tokens.len()
        )));
    }
    Ok(tokens
        .into_iter()
        .zip(tags)
        .enumerate()
        .filter(|(_, (_, tag))| tag.is_noun())
        .map(|(i, (tok, _))| NounSite {
            token_index: i,
            surface: tok.text,
            char_span: tok.span,
        })
        .collect())
}

fn match_case(fill: &str, surface: &str) -> String {
    let upper = surface.chars().next().is_some_and(char::is_uppercase);
    let mut chars = fill.chars();
    match chars.next() {
        Some(first) if upper => first.to_uppercase().chain(chars).collect(),
        _ => fill.to_string(),
    }
}

pub fn propose_candidates(
    caption: &str,
    sites: &[NounSite],
    cfg: &CaptionGenConfig,
    suite: &BackendSuite,
    log: &mut CandidateLog,
) -> Vec<CandidateCaption> {
    let mut out = Vec::new();
    for site in sites {
        let (start, end) = site.char_span;
        let masked = format!("{}{}{}", &caption[..start], cfg.mask_placeholder, &caption[end..]);
        let fills = match suite.mlm.top_k(&masked, &cfg.mask_placeholder, cfg.top_k) {
            Ok(f) => f,
            Err(e) => {
                log.error(DropReason::BackendError, &e);
                continue;
            }
        };
        for fill in fills.into_iter().take(cfg.top_k) {
            let token = fill.token.trim();
            let single = tokenize(token);
            if single.len() != 1 || single[0].text != token {
                log.drop(DropReason::NotSingleToken);
                continue;
            }
            if token.to_lowercase() == site.surface.to_lowercase() {
                log.drop(DropReason::SameAsOriginal);
                continue;
            }
            let replacement = match_case(token, &site.surface);
            out.push(CandidateCaption {
                text: format!("{}{}{}", &caption[..start], replacement, &caption[end..]),
                site: site.clone(),
                replacement,
                similarity: None,
                perplexity: None,
                pos_valid: None,
            });
        }
    }
    log.proposed += out.len();
    out
}

/// Keep candidates whose replacement is tagged as a noun in the candidate
/// sentence.
pub fn filter_pos_noun(
    candidates: Vec<CandidateCaption>,
    tagger: &dyn PosTagger,
    log: &mut CandidateLog,
) -> Vec<CandidateCaption> {
    let mut out = Vec::with_capacity(candidates.len());
    for mut c in candidates {
        let tokens = tokenize(&c.text);
        let tags = match tagger.tag(&tokens) {
            Ok(t) => t,
            Err(e) => {
                log.error(DropReason::TaggerError, &e);
                continue;
            }
        };
        let idx = c.site.token_index;
        let ok = tokens.get(idx).is_some_and(|t| t.text == c.replacement)
            && tags.get(idx).is_some_and(|t| t.is_noun());
        c.pos_valid = Some(ok);
        if ok {
            out.push(c);
        } else {
            log.drop(DropReason::NotNoun);
        }
    }
    log.after_pos += out.len();
    out
}

pub fn filter_similarity(
    candidates: Vec<CandidateCaption>,
    original: &str,
    cfg: &CaptionGenConfig,
    suite: &BackendSuite,
    log: &mut CandidateLog,
) -> Vec<CandidateCaption> {
    let mut out = Vec::with_capacity(candidates.len());
    for mut c in candidates {
        match suite.sent_sim.similarity(original, &c.text) {
            Ok(s) if cfg.admits(s) => {
                c.similarity = Some(s);
                out.push(c);
            }
            Ok(_) => log.drop(DropReason::OutsideSimilarityRange),
            Err(e) => log.error(DropReason::BackendError, &e),
        }
    }
    log.after_similarity += out.len();
    out
}

fn candidate_order(a: &CandidateCaption, b: &CandidateCaption) -> std::cmp::Ordering {
    a.site
        .token_index
        .cmp(&b.site.token_index)
        .then_with(|| a.replacement.cmp(&b.replacement))
}

/// Lowest-perplexity candidate; ties go to the lower site index, then the
/// lexicographically smaller replacement.
pub fn select_lowest_perplexity(
    candidates: Vec<CandidateCaption>,
    suite: &BackendSuite,
    log: &mut CandidateLog,
) -> Result<Option<CandidateCaption>> {
    if candidates.is_empty() {
        return Ok(None);
    }
    let total = candidates.len();
    let mut scored = Vec::with_capacity(total);
    for mut c in candidates {
        match suite.ppl.perplexity(&c.text) {
            Ok(p) => {
                c.perplexity = Some(p);
                scored.push(c);
            }
            Err(e) => log.error(DropReason::BackendError, &e),
        }
    }
    scored.sort_by(candidate_order);
    log.survivors = scored.clone();
    if scored.is_empty() {
        return Err(Error::AllCandidatesFailed(total));
    }
    Ok(scored
        .into_iter()
        .min_by(|a, b| {
            a.perplexity
                .unwrap()
                .total_cmp(&b.perplexity.unwrap())
                .then_with(|| candidate_order(a, b))
        }))
}

/// Outcome of running the whole caption stage on one caption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionOutcome {
    pub record: Option<CaptionPairRecord>,
    /// Set exactly when `record` is `None`.
    pub rejection: Option<DropReason>,
    pub log: CandidateLog,
}

pub fn make_counterfactual(
    source_id: &str,
    caption: &str,
    cfg: &CaptionGenConfig,
    suite: &BackendSuite,
) -> Result<CaptionOutcome> {
    cfg.validate()?;
    let mut log = CandidateLog::default();
    let reject = |reason: DropReason, log: CandidateLog| CaptionOutcome {
        record: None,
        rejection: Some(reason),
        log,
    };
    let sites = extract_noun_sites(caption, suite.tagger.as_ref())?;
    log.sites = sites.len();
    if sites.is_empty() {
        return Ok(reject(DropReason::NoSites, log));
    }
    let candidates = propose_candidates(caption, &sites, cfg, suite, &mut log);
    if candidates.is_empty() {
        return Ok(reject(DropReason::NoCandidates, log));
    }
    let candidates = filter_pos_noun(candidates, suite.tagger.as_ref(), &mut log);
    if candidates.is_empty() {
        return Ok(reject(DropReason::NoNounCandidates, log));
    }
    let candidates = filter_similarity(candidates, caption, cfg, suite, &mut log);
    if candidates.is_empty() {
        return Ok(reject(DropReason::NoSimilarCandidates, log));
    }
    let best = match select_lowest_perplexity(candidates, suite, &mut log) {
        Ok(Some(best)) => best,
        Ok(None) => return Ok(reject(DropReason::NoSimilarCandidates, log)),
        Err(Error::AllCandidatesFailed(_)) => return Ok(reject(DropReason::ScoringFailed, log)),
        Err(e) => return Err(e),
    };
    let record = CaptionPairRecord {
        pair: CaptionPair {
            source_id: source_id.to_string(),
            original: caption.to_string(),
            counterfactual: best.text.clone(),
            altered_from: best.site.surface.to_lowercase(),
            altered_to: best.replacement.to_lowercase(),
        },
        similarity: best.similarity.expect("set by the similarity filter"),
        perplexity: best.perplexity.expect("set by perplexity scoring"),
    };
    Ok(CaptionOutcome {
        record: Some(record),
        rejection: None,
        log,
    })
}
