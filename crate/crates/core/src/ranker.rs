//! Request processing: pick a representation mode, score candidates by
//! inner product against the user vector, blend, sort and cut to top-k.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, VideoEmbedding};
use crate::preference::{
    resolve_history, Interaction, PreferenceError, PreferenceParams, PreferencePredictor,
};
use crate::representation::{
    candidate_dream_umm, history_representation, RepresentationError, RepresentationMode,
    UserRepresentation, DEFAULT_HISTORY_WINDOW,
};
use crate::vector::dot;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestMode {
    History,
    Candidate,
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationRequest {
    pub user_id: String,
    pub candidate_ids: Vec<String>,
    pub k: usize,
    #[serde(default)]
    pub mode: RequestMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub video_id: String,
    pub similarity: f64,
    pub predictor_score: f64,
    pub final_score: f64,
}

/// Rule for the `auto` request mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModePolicy {
    /// Fewer interactions than this means the history is insufficient.
    pub m_min: usize,
    /// A latest interaction older than this (seconds) means the history is stale.
    pub t_stale_s: i64,
}

impl Default for ModePolicy {
    fn default() -> Self {
        Self {
            m_min: 3,
            t_stale_s: 86_400,
        }
    }
}

/// `final = λ·s + (1 − λ)·(2a − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlendWeights {
    pub lambda: f64,
}

impl Default for BlendWeights {
    fn default() -> Self {
        Self { lambda: 1.0 }
    }
}

impl BlendWeights {
    pub fn blend(&self, similarity: f64, predictor_score: f64) -> f64 {
        self.lambda * similarity + (1.0 - self.lambda) * (2.0 * predictor_score - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankerConfig {
    pub preference: PreferenceParams,
    pub policy: ModePolicy,
    pub blend: BlendWeights,
    pub history_window: usize,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self {
            preference: PreferenceParams::default(),
            policy: ModePolicy::default(),
            blend: BlendWeights::default(),
            history_window: DEFAULT_HISTORY_WINDOW,
        }
    }
}

impl RankerConfig {
    pub fn validate(&self) -> Result<(), RankError> {
        self.preference.validate()?;
        if !(0.0..=1.0).contains(&self.blend.lambda) {
            return Err(RankError::InvalidParams("lambda must be in [0, 1]"));
        }
        if self.history_window == 0 {
            return Err(RankError::InvalidParams("history_window must be positive"));
        }
        Ok(())
    }
}

/// The mode a request was actually served with, after fallbacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UsedMode {
    History,
    Candidate,
    /// No representation could be built; ranked by predictor score alone.
    Predictor,
}

impl UsedMode {
    pub fn as_str(self) -> &'static str {
        match self {
            UsedMode::History => "history",
            UsedMode::Candidate => "candidate",
            UsedMode::Predictor => "predictor",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub mode_used: UsedMode,
    pub results: Vec<ScoredCandidate>,
    pub representation: Option<UserRepresentation>,
    /// Candidate ids that were not in the catalog.
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("request has no candidates")]
    NoCandidates,
    #[error("none of the candidates are in the catalog")]
    NoScorableCandidates,
    #[error("invalid ranker parameter: {0}")]
    InvalidParams(&'static str),
}

impl From<PreferenceError> for RankError {
    fn from(e: PreferenceError) -> Self {
        match e {
            PreferenceError::InvalidParams(m) => RankError::InvalidParams(m),
            PreferenceError::UnknownVideo(_) => RankError::NoScorableCandidates,
        }
    }
}

/// Resolves the representation mode. Explicit modes pass through; `auto`
/// picks candidate mode when history is short or stale.
pub fn choose_mode(
    history: &[Interaction],
    request_mode: RequestMode,
    now: i64,
    policy: &ModePolicy,
) -> RepresentationMode {
    match request_mode {
        RequestMode::History => RepresentationMode::History,
        RequestMode::Candidate => RepresentationMode::Candidate,
        RequestMode::Auto => {
            let latest = history.iter().map(|i| i.timestamp).max();
            match latest {
                Some(t) if history.len() >= policy.m_min && now.saturating_sub(t) <= policy.t_stale_s => {
                    RepresentationMode::History
                }
                _ => RepresentationMode::Candidate,
            }
        }
    }
}

/// Descending final score, ties by ascending video id.
pub fn ranking_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.final_score
        .total_cmp(&a.final_score)
        .then_with(|| a.video_id.cmp(&b.video_id))
}

/// Serves one recommendation request against catalog and history snapshots.
///
/// History mode falls back to candidate mode when the history yields no
/// representation; candidate mode falls back to ranking by predictor score.
pub fn process_user_request<P: PreferencePredictor + ?Sized>(
    request: &RecommendationRequest,
    history: &[Interaction],
    catalog: &Catalog,
    predictor: &P,
    config: &RankerConfig,
    now: i64,
) -> Result<Ranking, RankError> {
    if request.k == 0 {
        return Err(RankError::InvalidK);
    }
    if request.candidate_ids.is_empty() {
        return Err(RankError::NoCandidates);
    }
    config.validate()?;

    let mut seen = BTreeSet::new();
    let mut candidates: Vec<&VideoEmbedding> = Vec::new();
    let mut dropped = 0;
    for id in &request.candidate_ids {
        if !seen.insert(id.as_str()) {
            continue;
        }
        match catalog.get(id) {
            Some(e) => candidates.push(e),
            None => dropped += 1,
        }
    }
    if candidates.is_empty() {
        return Err(RankError::NoScorableCandidates);
    }

    let items = resolve_history(history, catalog, &config.preference);
    let predicted: Vec<f64> = candidates.iter().map(|c| predictor.predict(&items, c)).collect();

    let mode = choose_mode(history, request.mode, now, &config.policy);
    let mut representation = None;
    if mode == RepresentationMode::History {
        representation = history_representation(
            history,
            catalog,
            &config.preference,
            config.history_window,
            now,
        )
        .ok();
    }
    if representation.is_none() {
        representation = match candidate_dream_umm(&candidates, &predicted, now) {
            Ok(r) => Some(r),
            Err(RepresentationError::EmptyHistory | RepresentationError::RepresentationUndefined(_)) => None,
            Err(_) => return Err(RankError::InvalidParams("inconsistent candidate dimensions")),
        };
    }

    let (mode_used, mut results) = match &representation {
        Some(rep) => {
            let used = match rep.mode {
                RepresentationMode::History => UsedMode::History,
                RepresentationMode::Candidate => UsedMode::Candidate,
            };
            let scored = candidates
                .iter()
                .zip(&predicted)
                .map(|(c, &a)| {
                    let s = dot(&c.vector, &rep.vector);
                    ScoredCandidate {
                        video_id: c.video_id.clone(),
                        similarity: s,
                        predictor_score: a,
                        final_score: config.blend.blend(s, a),
                    }
                })
                .collect::<Vec<_>>();
            (used, scored)
        }
        None => {
            let scored = candidates
                .iter()
                .zip(&predicted)
                .map(|(c, &a)| ScoredCandidate {
                    video_id: c.video_id.clone(),
                    similarity: 0.0,
                    predictor_score: a,
                    final_score: 2.0 * a - 1.0,
                })
                .collect::<Vec<_>>();
            (UsedMode::Predictor, scored)
        }
    };
    results.sort_by(ranking_order);
    results.truncate(request.k);
    Ok(Ranking {
        mode_used,
        results,
        representation,
        dropped,
    })
}
