//! Process state: the catalog snapshot, per-user histories and the
//! interaction log they are replayed from.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock};

use mmrec_core::catalog::IngestReport;
use mmrec_core::ranker::{process_user_request, RankError};
use mmrec_core::representation::{history_representation, RepresentationError};
use mmrec_core::{Catalog, Interaction, RecommendationRequest, ScoredCandidate, UserRepresentation};
use serde::{Deserialize, Serialize};

use crate::config::ServiceConfig;
use crate::formats::{self, FormatError, InteractionLog};

/// Body of a `/v1/recommend` response, also printed by `mmrec recommend`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendResponse {
    pub mode_used: String,
    pub results: Vec<ScoredCandidate>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid interaction: {0}")]
    InvalidInteraction(String),
}

/// Inserts after every entry with an equal or earlier timestamp, keeping
/// histories ordered by time and stable for equal timestamps.
pub fn insert_by_time(history: &mut Vec<Interaction>, interaction: Interaction) {
    let pos = history.partition_point(|i| i.timestamp <= interaction.timestamp);
    history.insert(pos, interaction);
}

#[derive(Debug)]
pub struct Store {
    config: ServiceConfig,
    catalog: RwLock<Arc<Catalog>>,
    histories: RwLock<BTreeMap<String, Vec<Interaction>>>,
    log: Mutex<Option<InteractionLog>>,
    ingest: Mutex<()>,
}

impl Store {
    /// Loads the catalog snapshot and replays the interaction log.
    pub fn open(config: ServiceConfig) -> Result<Self, FormatError> {
        let catalog = formats::load_snapshot_or_empty(&config.snapshot_path)?;
        let (interactions, warnings) = formats::read_interaction_log(&config.interaction_log_path)?;
        for w in warnings {
            log::warn!("skipping log line {w}");
        }
        let mut histories: BTreeMap<String, Vec<Interaction>> = BTreeMap::new();
        for i in interactions {
            insert_by_time(histories.entry(i.user_id.clone()).or_default(), i);
        }
        log::info!(
            "loaded {} videos, {} users",
            catalog.len(),
            histories.len()
        );
        Ok(Self {
            config,
            catalog: RwLock::new(Arc::new(catalog)),
            histories: RwLock::new(histories),
            log: Mutex::new(None),
            ingest: Mutex::new(()),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    /// The current catalog. Ingestion swaps in a new one; holders of the
    /// old `Arc` keep a consistent view.
    pub fn catalog(&self) -> Arc<Catalog> {
        self.catalog.read().expect("catalog lock").clone()
    }

    pub fn history(&self, user_id: &str) -> Option<Vec<Interaction>> {
        self.histories
            .read()
            .expect("history lock")
            .get(user_id)
            .cloned()
    }

    /// Ingests JSON-lines embedding records, persists the snapshot and
    /// publishes the new catalog.
    pub fn ingest(&self, text: &str) -> Result<IngestReport, FormatError> {
        let _guard = self.ingest.lock().expect("ingest lock");
        let mut next = (*self.catalog()).clone();
        let report = formats::ingest_text(&mut next, text);
        if report.ingested > 0 {
            formats::save_snapshot(&self.config.snapshot_path, &next)?;
            *self.catalog.write().expect("catalog lock") = Arc::new(next);
        }
        Ok(report)
    }

    /// Appends to the log (synced) and then updates the in-memory history.
    pub fn record(&self, interaction: Interaction) -> Result<(), StoreError> {
        formats::validate_interaction(&interaction).map_err(StoreError::InvalidInteraction)?;
        let mut log = self.log.lock().expect("log lock");
        if log.is_none() {
            *log = Some(InteractionLog::open(&self.config.interaction_log_path)?);
        }
        log.as_mut().expect("opened above").append(&interaction)?;
        let mut histories = self.histories.write().expect("history lock");
        insert_by_time(
            histories.entry(interaction.user_id.clone()).or_default(),
            interaction,
        );
        Ok(())
    }

    pub fn recommend(
        &self,
        request: &RecommendationRequest,
        now: i64,
    ) -> Result<RecommendResponse, StoreError> {
        let catalog = self.catalog();
        if catalog.is_empty() {
            return Err(StoreError::EmptyCatalog);
        }
        let history = self.history(&request.user_id).unwrap_or_default();
        let ranking = process_user_request(
            request,
            &history,
            &catalog,
            &self.config.predictor,
            &self.config.ranker(),
            now,
        )?;
        if ranking.dropped > 0 {
            log::warn!(
                "user {}: dropped {} uncataloged candidates",
                request.user_id,
                ranking.dropped
            );
        }
        Ok(RecommendResponse {
            mode_used: ranking.mode_used.as_str().into(),
            results: ranking.results,
        })
    }

    /// History-mode representation; `None` for users without interactions.
    pub fn representation(
        &self,
        user_id: &str,
        now: i64,
    ) -> Option<Result<UserRepresentation, RepresentationError>> {
        let history = self.history(user_id)?;
        let catalog = self.catalog();
        Some(history_representation(
            &history,
            &catalog,
            &self.config.preference,
            self.config.history_window,
            now,
        ))
    }
}
