//! Video embedding catalog.
//!
//! Every stored vector is L2-normalized at ingestion, so inner products
//! between catalog entries (and user representations) are cosines. The
//! catalog dimension is fixed by the first accepted record.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::vector;

/// A video's id, duration and unit-norm embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEmbedding {
    pub video_id: String,
    pub dim: usize,
    pub vector: Vec<f64>,
    pub duration_s: f64,
}

impl VideoEmbedding {
    /// Validates and normalizes a raw record. `expected_dim` is the catalog
    /// dimension, if already fixed.
    pub fn from_raw(
        video_id: String,
        dim: usize,
        vector: Vec<f64>,
        duration_s: f64,
        expected_dim: Option<usize>,
    ) -> Result<Self, CatalogError> {
        if dim == 0 {
            return Err(CatalogError::ZeroDimension);
        }
        if vector.len() != dim {
            return Err(CatalogError::DimensionMismatch {
                expected: dim,
                found: vector.len(),
            });
        }
        if let Some(expected) = expected_dim {
            if expected != dim {
                return Err(CatalogError::DimensionMismatch {
                    expected,
                    found: dim,
                });
            }
        }
        if !(duration_s.is_finite() && duration_s >= 0.0) {
            return Err(CatalogError::InvalidDuration(duration_s));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(CatalogError::NonFinite);
        }
        let vector = vector::normalized(&vector).ok_or(CatalogError::ZeroNorm)?;
        Ok(Self {
            video_id,
            dim,
            vector,
            duration_s,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("zero-norm vector cannot be normalized")]
    ZeroNorm,
    #[error("vector has non-finite entries")]
    NonFinite,
    #[error("invalid duration {0}")]
    InvalidDuration(f64),
    #[error("malformed record: {0}")]
    Malformed(String),
}

/// One rejected record of an ingestion stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based position of the record in its stream.
    pub position: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub ingested: usize,
    pub rejected: usize,
    pub rejections: Vec<Rejection>,
}

impl IngestReport {
    pub fn reject(&mut self, position: usize, err: &CatalogError) {
        self.rejected += 1;
        self.rejections.push(Rejection {
            position,
            reason: err.to_string(),
        });
    }
}

/// A raw, not yet validated embedding record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub video_id: String,
    pub dim: usize,
    pub vector: Vec<f64>,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    dim: Option<usize>,
    videos: BTreeMap<String, VideoEmbedding>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    /// Validates, normalizes and stores one record. An existing entry with
    /// the same id is overwritten.
    pub fn insert(&mut self, record: EmbeddingRecord) -> Result<(), CatalogError> {
        let emb = VideoEmbedding::from_raw(
            record.video_id,
            record.dim,
            record.vector,
            record.duration_s,
            self.dim,
        )?;
        self.dim.get_or_insert(emb.dim);
        self.videos.insert(emb.video_id.clone(), emb);
        Ok(())
    }

    /// Ingests a stream of records, continuing past bad ones. Items that
    /// already failed to parse are passed in as `Err` and only counted.
    pub fn ingest<I>(&mut self, records: I) -> IngestReport
    where
        I: IntoIterator<Item = Result<EmbeddingRecord, CatalogError>>,
    {
        let mut report = IngestReport::default();
        for (i, rec) in records.into_iter().enumerate() {
            match rec.and_then(|r| self.insert(r)) {
                Ok(()) => report.ingested += 1,
                Err(e) => report.reject(i + 1, &e),
            }
        }
        report
    }

    pub fn get(&self, video_id: &str) -> Option<&VideoEmbedding> {
        self.videos.get(video_id)
    }

    /// Entries in ascending `video_id` order.
    pub fn iter(&self) -> impl Iterator<Item = &VideoEmbedding> {
        self.videos.values()
    }

    /// Rebuilds a catalog from already-normalized embeddings (a snapshot).
    /// Entries are re-validated; vectors already within 1e-9 of unit norm
    /// are kept bit-for-bit so a reload reproduces identical scores.
    pub fn from_embeddings<I>(embeddings: I) -> Result<Self, (String, CatalogError)>
    where
        I: IntoIterator<Item = VideoEmbedding>,
    {
        let mut catalog = Self::new();
        for e in embeddings {
            let id = e.video_id.clone();
            let original = e.vector.clone();
            let mut emb = VideoEmbedding::from_raw(
                e.video_id,
                e.dim,
                e.vector,
                e.duration_s,
                catalog.dim,
            )
            .map_err(|err| (id, err))?;
            if (vector::norm(&original) - 1.0).abs() < 1e-9 {
                emb.vector = original;
            }
            catalog.dim.get_or_insert(emb.dim);
            catalog.videos.insert(emb.video_id.clone(), emb);
        }
        Ok(catalog)
    }
}
