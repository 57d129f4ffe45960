//! Offline evaluation metrics: retrieval hit rate and cluster diversity.
//!
//! Surprise Cluster is defined here as: a recommended video whose cluster
//! appears in none of the user's history clusters *and* which received
//! positive feedback. It is reported as a fraction of all recommendations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterModel;
use crate::preference::{preference_score, threshold_for_duration, Interaction, PreferenceParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("no cases to evaluate")]
    EmptyInput,
    #[error("cutoff must be at least 1")]
    InvalidCutoff,
    #[error("case for query {0} has no relevant ids")]
    NoRelevant(String),
    #[error("video {0} has no cluster assignment")]
    Unassigned(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalCase {
    pub query_id: String,
    pub relevant_ids: Vec<String>,
    pub retrieved_ids: Vec<String>,
}

/// Mean over cases of `|top-cutoff retrieved ∩ relevant| / |relevant|`.
pub fn hit_rate(cases: &[RetrievalCase], cutoff: usize) -> Result<f64, MetricsError> {
    if cases.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if cutoff == 0 {
        return Err(MetricsError::InvalidCutoff);
    }
    let mut total = 0.0;
    for case in cases {
        let relevant: BTreeSet<&str> = case.relevant_ids.iter().map(String::as_str).collect();
        if relevant.is_empty() {
            return Err(MetricsError::NoRelevant(case.query_id.clone()));
        }
        let hits: BTreeSet<&str> = case
            .retrieved_ids
            .iter()
            .take(cutoff)
            .map(String::as_str)
            .filter(|id| relevant.contains(id))
            .collect();
        total += hits.len() as f64 / relevant.len() as f64;
    }
    Ok(total / cases.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposedVideo {
    pub video_id: String,
    /// Whether the exposure received positive feedback.
    pub positive: bool,
}

/// Positive feedback for a real watch: the long-view score exceeds 0.5,
/// i.e. watch time beyond the long-view threshold.
pub fn positive_from_watch(watch_time_s: f64, duration_s: f64, params: &PreferenceParams) -> bool {
    preference_score(watch_time_s, threshold_for_duration(duration_s, params), params.alpha) > 0.5
}

/// Exposures grouped by `(user_id, day)`. Days are calendar-date strings
/// (`YYYY-MM-DD`); the grouping only needs them to be equal per day.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExposureLog {
    days: BTreeMap<(String, String), Vec<ExposedVideo>>,
}

impl ExposureLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, user_id: &str, day: &str, video_id: &str, positive: bool) {
        self.days
            .entry((user_id.into(), day.into()))
            .or_default()
            .push(ExposedVideo {
                video_id: video_id.into(),
                positive,
            });
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn user_days(&self) -> impl Iterator<Item = (&str, &str, &[ExposedVideo])> {
        self.days
            .iter()
            .map(|((u, d), v)| (u.as_str(), d.as_str(), v.as_slice()))
    }
}

fn cluster_of(clusters: &ClusterModel, video_id: &str) -> Result<usize, MetricsError> {
    clusters
        .cluster_of(video_id)
        .ok_or_else(|| MetricsError::Unassigned(video_id.into()))
}

/// Mean number of distinct clusters exposed per `(user, day)`.
pub fn exposed_cluster(log: &ExposureLog, clusters: &ClusterModel) -> Result<f64, MetricsError> {
    if log.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut total = 0usize;
    let mut pairs = 0usize;
    for (_, _, videos) in log.user_days() {
        let mut distinct = BTreeSet::new();
        for v in videos {
            distinct.insert(cluster_of(clusters, &v.video_id)?);
        }
        total += distinct.len();
        pairs += 1;
    }
    Ok(total as f64 / pairs as f64)
}

/// Fraction of all exposures that land in a cluster absent from the
/// user's history and received positive feedback.
pub fn surprise_cluster(
    log: &ExposureLog,
    clusters: &ClusterModel,
    histories: &BTreeMap<String, Vec<Interaction>>,
) -> Result<f64, MetricsError> {
    if log.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut seen_by_user: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (user, hist) in histories {
        let mut set = BTreeSet::new();
        for i in hist {
            set.insert(cluster_of(clusters, &i.video_id)?);
        }
        seen_by_user.insert(user.as_str(), set);
    }
    let empty = BTreeSet::new();
    let mut hits = 0usize;
    let mut total = 0usize;
    for (user, _, videos) in log.user_days() {
        let seen = seen_by_user.get(user).unwrap_or(&empty);
        for v in videos {
            let c = cluster_of(clusters, &v.video_id)?;
            total += 1;
            if v.positive && !seen.contains(&c) {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(MetricsError::EmptyInput);
    }
    Ok(hits as f64 / total as f64)
}
