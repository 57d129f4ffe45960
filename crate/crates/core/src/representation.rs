//! Closed-form user representations.
//!
//! Given unit video vectors `x_j` with preference weights `a_j`, the unit
//! vector maximizing `Σ a_j ⟨x_j, μ⟩` is `Σ a_j x_j / ‖Σ a_j x_j‖` (the
//! objective is `⟨Σ a_j x_j, μ⟩`, maximized by alignment). The same
//! aggregation serves both the history mode and the candidate mode; only
//! the source of the pairs differs.

use alloc::vec;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, VideoEmbedding};
use crate::preference::{resolve_history, Interaction, PreferenceParams};
use crate::vector::{dot, norm, random_unit};

/// Below this norm the weighted sum is treated as zero.
pub const UNDEFINED_NORM: f64 = 1e-12;

/// Default number of most recent interactions aggregated in history mode.
pub const DEFAULT_HISTORY_WINDOW: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationMode {
    History,
    Candidate,
}

/// A user's interest as a unit vector in the video embedding space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRepresentation {
    pub vector: Vec<f64>,
    pub mode: RepresentationMode,
    pub support_count: usize,
    pub computed_at: i64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RepresentationError {
    #[error("no interactions to aggregate")]
    EmptyHistory,
    #[error("weighted sum has norm {0:e}; preferences cancel out")]
    RepresentationUndefined(f64),
    #[error("vectors have inconsistent dimensions ({expected} vs {found})")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{candidates} candidates but {scores} scores")]
    LengthMismatch { candidates: usize, scores: usize },
}

/// `Σ a_j ⟨x_j, μ⟩`.
pub fn objective(pairs: &[(&[f64], f64)], mu: &[f64]) -> f64 {
    pairs.iter().map(|(x, a)| a * dot(x, mu)).sum()
}

fn aggregate(pairs: &[(&[f64], f64)]) -> Result<Vec<f64>, RepresentationError> {
    let first = pairs.first().ok_or(RepresentationError::EmptyHistory)?;
    let dim = first.0.len();
    let mut sum = vec![0.0; dim];
    for (x, a) in pairs {
        if x.len() != dim {
            return Err(RepresentationError::DimensionMismatch {
                expected: dim,
                found: x.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(x.iter()) {
            *s += a * v;
        }
    }
    let n = norm(&sum);
    if n.is_nan() || n < UNDEFINED_NORM {
        return Err(RepresentationError::RepresentationUndefined(n));
    }
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// History-mode representation from `(x_j, a_j)` pairs.
pub fn dream_umm(
    pairs: &[(&[f64], f64)],
    computed_at: i64,
) -> Result<UserRepresentation, RepresentationError> {
    Ok(UserRepresentation {
        vector: aggregate(pairs)?,
        mode: RepresentationMode::History,
        support_count: pairs.len(),
        computed_at,
    })
}

/// Candidate-mode representation from candidate embeddings and their
/// predicted preference scores.
pub fn candidate_dream_umm(
    candidates: &[&VideoEmbedding],
    predicted: &[f64],
    computed_at: i64,
) -> Result<UserRepresentation, RepresentationError> {
    if candidates.len() != predicted.len() {
        return Err(RepresentationError::LengthMismatch {
            candidates: candidates.len(),
            scores: predicted.len(),
        });
    }
    let pairs: Vec<(&[f64], f64)> = candidates
        .iter()
        .zip(predicted)
        .map(|(c, &a)| (c.vector.as_slice(), a))
        .collect();
    Ok(UserRepresentation {
        vector: aggregate(&pairs)?,
        mode: RepresentationMode::Candidate,
        support_count: pairs.len(),
        computed_at,
    })
}

/// History-mode representation over the most recent `window` interactions.
/// Interactions with uncataloged videos are skipped; if none remain the
/// result is `EmptyHistory`.
pub fn history_representation(
    history: &[Interaction],
    catalog: &Catalog,
    params: &PreferenceParams,
    window: usize,
    computed_at: i64,
) -> Result<UserRepresentation, RepresentationError> {
    let recent = &history[history.len().saturating_sub(window)..];
    let items = resolve_history(recent, catalog, params);
    let pairs: Vec<(&[f64], f64)> = items
        .iter()
        .map(|h| (h.video.vector.as_slice(), h.score))
        .collect();
    dream_umm(&pairs, computed_at)
}

/// Brute-force search for the objective's maximizer over `samples` seeded
/// uniform unit directions plus the antipode of the closed-form solution.
/// Only meant as a test oracle.
pub fn direction_oracle(pairs: &[(&[f64], f64)], samples: usize, seed: u64) -> Vec<f64> {
    let dim = pairs.first().map_or(0, |p| p.0.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>)> = aggregate(pairs).ok().map(|v| {
        let anti: Vec<f64> = v.iter().map(|x| -x).collect();
        (objective(pairs, &anti), anti)
    });
    for _ in 0..samples {
        let u = random_unit(&mut rng, dim);
        let f = objective(pairs, &u);
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((f, u));
        }
    }
    best.map(|(_, v)| v).unwrap_or_default()
}
