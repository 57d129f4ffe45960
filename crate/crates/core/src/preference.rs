//! Watch-time preference scores and candidate preference prediction.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, VideoEmbedding};
use crate::vector::dot;

/// One watch event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub user_id: String,
    pub video_id: String,
    pub watch_time_s: f64,
    /// Epoch seconds.
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    Fixed,
    DurationFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreferenceParams {
    /// Sigmoid sensitivity, per second of watch time.
    pub alpha: f64,
    pub threshold_mode: ThresholdMode,
    pub fixed_threshold_s: f64,
    pub duration_fraction: f64,
    pub threshold_cap_s: f64,
}

impl Default for PreferenceParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            threshold_mode: ThresholdMode::Fixed,
            fixed_threshold_s: 18.0,
            duration_fraction: 0.5,
            threshold_cap_s: 18.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PreferenceError {
    #[error("invalid preference parameter: {0}")]
    InvalidParams(&'static str),
    #[error("video {0} has no embedding")]
    UnknownVideo(String),
}

impl PreferenceParams {
    pub fn validate(&self) -> Result<(), PreferenceError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(PreferenceError::InvalidParams("alpha must be positive"));
        }
        if !(self.fixed_threshold_s > 0.0 && self.fixed_threshold_s.is_finite()) {
            return Err(PreferenceError::InvalidParams("fixed_threshold_s must be positive"));
        }
        if !(self.duration_fraction > 0.0 && self.duration_fraction <= 1.0) {
            return Err(PreferenceError::InvalidParams("duration_fraction must be in (0, 1]"));
        }
        if self.threshold_cap_s.is_nan() || self.threshold_cap_s <= 0.0 {
            return Err(PreferenceError::InvalidParams("threshold_cap_s must be positive"));
        }
        Ok(())
    }
}

/// Long-view threshold `t_j` for a video.
pub fn long_view_threshold(video: &VideoEmbedding, params: &PreferenceParams) -> f64 {
    threshold_for_duration(video.duration_s, params)
}

pub fn threshold_for_duration(duration_s: f64, params: &PreferenceParams) -> f64 {
    match params.threshold_mode {
        ThresholdMode::Fixed => params.fixed_threshold_s,
        ThresholdMode::DurationFraction if duration_s <= 0.0 => params.fixed_threshold_s,
        ThresholdMode::DurationFraction => {
            (params.duration_fraction * duration_s).min(params.threshold_cap_s)
        }
    }
}

/// Logistic function with the exponent clamped to ±500.
#[inline]
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x.clamp(-500.0, 500.0)))
}

/// Soft long-view score `1 / (1 + exp(-alpha (w - t)))`.
#[inline]
pub fn preference_score(watch_time_s: f64, threshold_s: f64, alpha: f64) -> f64 {
    logistic(alpha * (watch_time_s - threshold_s))
}

/// Preference score of one interaction against its video.
pub fn interaction_score(
    interaction: &Interaction,
    video: &VideoEmbedding,
    params: &PreferenceParams,
) -> f64 {
    preference_score(
        interaction.watch_time_s,
        long_view_threshold(video, params),
        params.alpha,
    )
}

/// A history interaction resolved against the catalog, with its score.
#[derive(Debug, Clone, Copy)]
pub struct HistoryItem<'a> {
    pub video: &'a VideoEmbedding,
    pub score: f64,
}

/// Resolves interactions to embeddings and scores. Interactions whose video
/// is not cataloged are skipped.
pub fn resolve_history<'a>(
    history: &[Interaction],
    catalog: &'a Catalog,
    params: &PreferenceParams,
) -> Vec<HistoryItem<'a>> {
    history
        .iter()
        .filter_map(|i| {
            catalog.get(&i.video_id).map(|video| HistoryItem {
                video,
                score: interaction_score(i, video, params),
            })
        })
        .collect()
}

/// Maps a user's scored history and one candidate to a long-view
/// probability in (0, 1).
pub trait PreferencePredictor {
    fn predict(&self, history: &[HistoryItem<'_>], candidate: &VideoEmbedding) -> f64;
}

/// Similarity-weighted attention over history:
/// `σ(β · Σ_j softmax_j(γ⟨x_i, x_j⟩) · (2a_j − 1))`.
///
/// Candidates close to liked history score high, close to disliked history
/// score low. An empty history yields 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttentionPredictor {
    pub beta: f64,
    pub gamma: f64,
}

impl Default for AttentionPredictor {
    fn default() -> Self {
        Self {
            beta: 2.0,
            gamma: 5.0,
        }
    }
}

impl PreferencePredictor for AttentionPredictor {
    fn predict(&self, history: &[HistoryItem<'_>], candidate: &VideoEmbedding) -> f64 {
        if history.is_empty() {
            return 0.5;
        }
        let logits: Vec<f64> = history
            .iter()
            .map(|h| self.gamma * dot(&candidate.vector, &h.video.vector))
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut num = 0.0;
        let mut den = 0.0;
        for (l, h) in logits.iter().zip(history) {
            let w = libm::exp(l - max);
            num += w * (2.0 * h.score - 1.0);
            den += w;
        }
        logistic(self.beta * num / den)
    }
}

/// Predicts a preference score for every candidate id, order-aligned with
/// the input. Uncataloged candidates yield a per-entry error.
pub fn predict_candidate_scores<P: PreferencePredictor + ?Sized>(
    history: &[Interaction],
    candidate_ids: &[&str],
    catalog: &Catalog,
    params: &PreferenceParams,
    predictor: &P,
) -> Vec<Result<f64, PreferenceError>> {
    let items = resolve_history(history, catalog, params);
    candidate_ids
        .iter()
        .map(|id| {
            catalog
                .get(id)
                .map(|c| predictor.predict(&items, c))
                .ok_or_else(|| PreferenceError::UnknownVideo(String::from(*id)))
        })
        .collect()
}
