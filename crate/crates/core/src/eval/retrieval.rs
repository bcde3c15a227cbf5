//! Recall@K for image-text retrieval.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::backends::{cosine, Embedding, ImageRef, ItmScorer};
use crate::error::{Error, Result};

pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Image queries against a caption gallery.
    TextRetrieval,
    /// Caption queries against an image gallery.
    ImageRetrieval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub direction: Direction,
    pub recall_at: BTreeMap<usize, f64>,
    pub n_queries: usize,
}

/// 0-based rank of `gold` in a similarity row. Items scoring equal to the
/// gold item rank ahead of it only when they have a lower index.
pub fn gold_rank(row: &[f64], gold: usize) -> usize {
    let g = row[gold];
    row.iter()
        .enumerate()
        .filter(|&(j, &s)| s > g || (s == g && j < gold))
        .count()
}

/// Shared recall computation over any pairwise score function.
pub fn recall_from_scores<F>(
    n_queries: usize,
    gallery_len: usize,
    gold: &[usize],
    ks: &[usize],
    direction: Direction,
    mut score: F,
) -> Result<RetrievalReport>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    if gallery_len == 0 {
        return Err(Error::EmptyGallery);
    }
    if n_queries == 0 {
        return Err(Error::EmptyInput("queries"));
    }
    if gold.len() != n_queries {
        return Err(Error::LengthMismatch {
            left: n_queries,
            right: gold.len(),
        });
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Precondition("recall cut-offs must be positive".into()));
    }
    let mut seen = HashSet::new();
    for &g in gold {
        if g >= gallery_len {
            return Err(Error::Precondition(format!("gold index {g} outside gallery of {gallery_len}")));
        }
        if !seen.insert(g) {
            return Err(Error::Precondition(format!("gold index {g} assigned to two queries")));
        }
    }
    let mut hits: BTreeMap<usize, usize> = ks.iter().map(|&k| (k, 0)).collect();
    let mut row = vec![0.0; gallery_len];
    for (q, &g) in gold.iter().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            let s = score(q, j)?;
            if !s.is_finite() {
                return Err(Error::InvalidEmbedding(format!("non-finite score for query {q}, item {j}")));
            }
            *slot = s;
        }
        let rank = gold_rank(&row, g);
        for (&k, h) in hits.iter_mut() {
            if rank < k {
                *h += 1;
            }
        }
    }
    Ok(RetrievalReport {
        direction,
        recall_at: hits.into_iter().map(|(k, h)| (k, h as f64 / n_queries as f64)).collect(),
        n_queries,
    })
}

/// Recall@K ranking the gallery by cosine similarity to each query.
pub fn retrieval_recall(
    queries: &[Embedding],
    gallery: &[Embedding],
    gold: &[usize],
    ks: &[usize],
    direction: Direction,
) -> Result<RetrievalReport> {
    if let (Some(q), Some(g)) = (queries.first(), gallery.first()) {
        for e in queries.iter().chain(gallery) {
            if e.dim() != q.dim() {
                return Err(Error::DimMismatch { left: q.dim(), right: e.dim() });
            }
        }
        if q.dim() != g.dim() {
            return Err(Error::DimMismatch { left: q.dim(), right: g.dim() });
        }
    }
    recall_from_scores(queries.len(), gallery.len(), gold, ks, direction, |q, j| {
        cosine(&queries[q], &gallery[j])
    })
}

/// Recall@K with a cross-encoder: every caption-image pair is scored by
/// `scorer`. Captions and images are aligned by index.
pub fn retrieval_recall_itm(
    captions: &[String],
    images: &[ImageRef],
    scorer: &dyn ItmScorer,
    ks: &[usize],
    direction: Direction,
) -> Result<RetrievalReport> {
    if captions.len() != images.len() {
        return Err(Error::LengthMismatch {
            left: captions.len(),
            right: images.len(),
        });
    }
    let gold: Vec<usize> = (0..captions.len()).collect();
    let n = captions.len();
    match direction {
        Direction::ImageRetrieval => recall_from_scores(n, n, &gold, ks, direction, |q, j| {
            scorer.itm_score(&captions[q], &images[j])
        }),
        Direction::TextRetrieval => recall_from_scores(n, n, &gold, ks, direction, |q, j| {
            scorer.itm_score(&captions[j], &images[q])
        }),
    }
}
