//! On-disk formats.
//!
//! * Embedding file: JSON lines, `{"video_id", "dim", "vector", "duration_s"}`.
//! * Catalog snapshot: one JSON document (see [`Snapshot`]).
//! * Interaction log: JSON lines of [`Interaction`], append-only.
//! * Cluster model: one JSON document of [`ClusterModel`].
//! * Retrieval benchmark: JSON, either `{"cases": [...]}` or a bare array.
//! * Exposure log: JSON lines of [`ExposureRecord`].

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use mmrec_core::catalog::{CatalogError, EmbeddingRecord, IngestReport};
use mmrec_core::cluster::ClusterModel;
use mmrec_core::metrics::{positive_from_watch, ExposureLog, RetrievalCase};
use mmrec_core::{Catalog, Interaction, PreferenceParams, VideoEmbedding};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Line {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{path}: {msg}")]
    Invalid { path: PathBuf, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes via a temporary sibling and a rename, so readers never see a
/// half-written document.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        serde_json::to_writer(&mut f, value).map_err(|source| FormatError::Json {
            path: tmp.clone(),
            source,
        })?;
        f.write_all(b"\n").map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Parses embedding records from JSON lines. Blank lines are skipped;
/// malformed lines become `Err` items so ingestion can count them.
pub fn parse_embedding_lines(text: &str) -> Vec<Result<EmbeddingRecord, CatalogError>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str::<EmbeddingRecord>(l)
                .map_err(|e| CatalogError::Malformed(e.to_string()))
        })
        .collect()
}

pub fn ingest_text(catalog: &mut Catalog, text: &str) -> IngestReport {
    catalog.ingest(parse_embedding_lines(text))
}

pub fn ingest_file(catalog: &mut Catalog, path: &Path) -> Result<IngestReport, FormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(ingest_text(catalog, &text))
}

/// Catalog snapshot document:
/// `{"format": "mmrec-catalog", "version": 1, "dim": int|null, "videos": [...]}`
/// with videos in ascending id order and vectors already unit-norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub version: u32,
    pub dim: Option<usize>,
    pub videos: Vec<VideoEmbedding>,
}

pub const SNAPSHOT_FORMAT: &str = "mmrec-catalog";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn save_snapshot(path: &Path, catalog: &Catalog) -> Result<(), FormatError> {
    let snap = Snapshot {
        format: SNAPSHOT_FORMAT.into(),
        version: SNAPSHOT_VERSION,
        dim: catalog.dim(),
        videos: catalog.iter().cloned().collect(),
    };
    write_json_atomic(path, &snap)
}

pub fn load_snapshot(path: &Path) -> Result<Catalog, FormatError> {
    let snap: Snapshot = read_json(path)?;
    if snap.format != SNAPSHOT_FORMAT || snap.version != SNAPSHOT_VERSION {
        return Err(FormatError::Invalid {
            path: path.to_path_buf(),
            msg: format!("unsupported snapshot {} v{}", snap.format, snap.version),
        });
    }
    Catalog::from_embeddings(snap.videos).map_err(|(id, e)| FormatError::Invalid {
        path: path.to_path_buf(),
        msg: format!("video {id}: {e}"),
    })
}

/// Loads the snapshot if it exists, otherwise an empty catalog.
pub fn load_snapshot_or_empty(path: &Path) -> Result<Catalog, FormatError> {
    if path.exists() {
        load_snapshot(path)
    } else {
        Ok(Catalog::new())
    }
}

pub fn validate_interaction(i: &Interaction) -> Result<(), String> {
    if i.user_id.is_empty() || i.video_id.is_empty() {
        return Err("user_id and video_id must be non-empty".into());
    }
    if !(i.watch_time_s.is_finite() && i.watch_time_s >= 0.0) {
        return Err(format!("invalid watch_time_s {}", i.watch_time_s));
    }
    Ok(())
}

/// Reads an interaction log. Unparseable lines are returned as warnings
/// rather than failing the whole replay (a crash can tear the last line).
pub fn read_interaction_log(path: &Path) -> Result<(Vec<Interaction>, Vec<String>), FormatError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), Vec::new())),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Interaction>(&line)
            .map_err(|e| e.to_string())
            .and_then(|i| validate_interaction(&i).map(|_| i))
        {
            Ok(i) => out.push(i),
            Err(e) => warnings.push(format!("{}:{}: {e}", path.display(), n + 1)),
        }
    }
    Ok((out, warnings))
}

/// Append handle for the interaction log. Every append is flushed and
/// synced before returning.
#[derive(Debug)]
pub struct InteractionLog {
    path: PathBuf,
    file: File,
}

impl InteractionLog {
    pub fn open(path: &Path) -> Result<Self, FormatError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append(&mut self, interaction: &Interaction) -> Result<(), FormatError> {
        let mut line = serde_json::to_vec(interaction).map_err(|source| FormatError::Json {
            path: self.path.clone(),
            source,
        })?;
        line.push(b'\n');
        self.file.write_all(&line).map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))
    }
}

pub fn load_clusters(path: &Path) -> Result<ClusterModel, FormatError> {
    let m: ClusterModel = read_json(path)?;
    if m.centroids.len() != m.k || m.assignment.values().any(|&c| c >= m.k) {
        return Err(FormatError::Invalid {
            path: path.to_path_buf(),
            msg: "assignments must index into k centroids".into(),
        });
    }
    Ok(m)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BenchmarkDoc {
    Wrapped { cases: Vec<RetrievalCase> },
    Bare(Vec<RetrievalCase>),
}

pub fn load_benchmark(path: &Path) -> Result<Vec<RetrievalCase>, FormatError> {
    Ok(match read_json::<BenchmarkDoc>(path)? {
        BenchmarkDoc::Wrapped { cases } | BenchmarkDoc::Bare(cases) => cases,
    })
}

/// One exposure: `positive` if known, otherwise derived from
/// `watch_time_s` against the long-view threshold for `duration_s`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExposureRecord {
    pub user_id: String,
    /// Calendar date, `YYYY-MM-DD`.
    pub day: String,
    pub video_id: String,
    #[serde(default)]
    pub positive: Option<bool>,
    #[serde(default)]
    pub watch_time_s: Option<f64>,
    #[serde(default)]
    pub duration_s: Option<f64>,
}

pub fn load_exposure_log(path: &Path, params: &PreferenceParams) -> Result<ExposureLog, FormatError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut log = ExposureLog::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| FormatError::Line {
            path: path.to_path_buf(),
            line: n + 1,
            msg,
        };
        let rec: ExposureRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        chrono::NaiveDate::parse_from_str(&rec.day, "%Y-%m-%d")
            .map_err(|e| bad(format!("day {:?}: {e}", rec.day)))?;
        let positive = match (rec.positive, rec.watch_time_s) {
            (Some(p), _) => p,
            (None, Some(w)) => positive_from_watch(w, rec.duration_s.unwrap_or(0.0), params),
            (None, None) => return Err(bad("need `positive` or `watch_time_s`".into())),
        };
        log.push(&rec.user_id, &rec.day, &rec.video_id, positive);
    }
    Ok(log)
}
