//! Command-line entry point. Every command prints JSON on stdout and
//! diagnostics on stderr. Exit codes: 0 success, 1 usage error, 2 data error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use mmrec_core::cluster::{build_clusters, default_k, ClusterParams};
use mmrec_core::metrics::{exposed_cluster, hit_rate, surprise_cluster};
use mmrec_core::simulator::{generate_world, recovery_experiment, WorldSpec};
use mmrec_core::{Catalog, Interaction, RecommendationRequest, RequestMode};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{ServiceConfig, ENV_SNAPSHOT};
use crate::formats;
use crate::store::Store;

#[derive(Debug, Parser)]
#[command(name = "mmrec", version, about = "Multimodal user-interest recommender")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest a JSON-lines embedding file into the catalog snapshot.
    Ingest {
        /// JSON-lines file of {"video_id", "dim", "vector", "duration_s"} records.
        #[arg(long)]
        embeddings: PathBuf,
        /// Catalog snapshot to update (created if missing).
        #[arg(long, env = ENV_SNAPSHOT, default_value = "catalog.json")]
        snapshot: PathBuf,
    },
    /// Run the HTTP service until interrupted.
    Serve {
        /// Service config (JSON).
        #[arg(long)]
        config: PathBuf,
    },
    /// Rank candidates for one user offline, using the service's state files.
    Recommend {
        /// Service config (JSON); its snapshot and interaction log are read.
        #[arg(long)]
        config: PathBuf,
        /// User id.
        #[arg(long)]
        user: String,
        /// Candidate ids: a JSON array of strings, or one id per line.
        #[arg(long)]
        candidates: PathBuf,
        /// Number of results.
        #[arg(long)]
        k: usize,
        /// Representation mode.
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// Evaluation time in epoch seconds (defaults to now).
        #[arg(long)]
        now: Option<i64>,
    },
    /// Build a k-means cluster model over the catalog and write it as JSON.
    Cluster {
        /// Number of clusters (default ⌈√catalog size⌉).
        #[arg(long)]
        k: Option<usize>,
        /// Seed for k-means++ initialization.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum Lloyd iterations.
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        /// Catalog snapshot to cluster.
        #[arg(long, env = ENV_SNAPSHOT, default_value = "catalog.json")]
        snapshot: PathBuf,
        /// Output cluster model file.
        #[arg(long, default_value = "clusters.json")]
        out: PathBuf,
    },
    /// Compute offline metrics.
    Eval(EvalArgs),
    /// Run the interest-recovery experiment on a synthetic world.
    Simulate {
        /// Simulation spec (JSON): {"world": {...}, "sessions": int, "per_session": int}.
        #[arg(long)]
        spec: PathBuf,
        /// Report output file (JSON).
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group(ArgGroup::new("input").required(true).args(["benchmark", "exposure"])))]
pub struct EvalArgs {
    /// Retrieval benchmark (JSON) for HitRate.
    #[arg(long, requires = "cutoff")]
    benchmark: Option<PathBuf>,
    /// HitRate cutoff.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Exposure log (JSON lines) for Exposed/Surprise Cluster.
    #[arg(long, requires = "clusters")]
    exposure: Option<PathBuf>,
    /// Cluster model file written by `mmrec cluster`.
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Interaction log with user histories; enables Surprise Cluster.
    #[arg(long, requires = "exposure")]
    interactions: Option<PathBuf>,
    /// Service config supplying preference parameters for exposures
    /// given as watch times.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Auto,
    History,
    Candidate,
}

impl From<ModeArg> for RequestMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => RequestMode::Auto,
            ModeArg::History => RequestMode::History,
            ModeArg::Candidate => RequestMode::Candidate,
        }
    }
}

/// Simulation spec document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationSpec {
    pub world: WorldSpec,
    pub sessions: u32,
    pub per_session: usize,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            world: WorldSpec::default(),
            sessions: 10,
            per_session: 20,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<formats::FormatError> for CliError {
    fn from(e: formats::FormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string(v).map_err(data)
}

fn load_config(path: &Path) -> Result<ServiceConfig, CliError> {
    Ok(ServiceConfig::load(path)?)
}

fn read_candidates(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| data(format!("{}: {e}", path.display())))
    } else {
        Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect())
    }
}

fn now_epoch() -> i64 {
    (crate::service::system_clock())()
}

/// Runs a parsed command and returns its stdout JSON. `serve` blocks.
pub fn run(command: Command) -> Result<String, CliError> {
    match command {
        Command::Ingest {
            embeddings,
            snapshot,
        } => {
            let mut catalog = formats::load_snapshot_or_empty(&snapshot)?;
            let report = formats::ingest_file(&mut catalog, &embeddings)?;
            for r in &report.rejections {
                eprintln!("{}:{}: rejected: {}", embeddings.display(), r.position, r.reason);
            }
            if report.ingested > 0 {
                formats::save_snapshot(&snapshot, &catalog)?;
            }
            to_json(&json!({
                "ingested": report.ingested,
                "rejected": report.rejected,
                "catalog_size": catalog.len(),
                "snapshot": snapshot,
            }))
        }
        Command::Serve { config } => {
            let cfg = load_config(&config)?;
            let rt = tokio::runtime::Runtime::new().map_err(data)?;
            rt.block_on(crate::service::serve(cfg)).map_err(data)?;
            to_json(&json!({ "status": "stopped" }))
        }
        Command::Recommend {
            config,
            user,
            candidates,
            k,
            mode,
            now,
        } => {
            let cfg = load_config(&config)?;
            let candidate_ids = read_candidates(&candidates)?;
            let store = Store::open(cfg)?;
            let request = RecommendationRequest {
                user_id: user,
                candidate_ids,
                k,
                mode: mode.into(),
            };
            let resp = store
                .recommend(&request, now.unwrap_or_else(now_epoch))
                .map_err(|e| match e {
                    crate::store::StoreError::Rank(
                        mmrec_core::RankError::InvalidK | mmrec_core::RankError::NoCandidates,
                    ) => CliError::Usage(e.to_string()),
                    other => data(other),
                })?;
            to_json(&resp)
        }
        Command::Cluster {
            k,
            seed,
            max_iters,
            snapshot,
            out,
        } => {
            let catalog: Catalog = formats::load_snapshot(&snapshot)?;
            let params = ClusterParams {
                k: k.unwrap_or_else(|| default_k(catalog.len())),
                seed,
                max_iters,
            };
            let model = build_clusters(&catalog, params).map_err(|e| match e {
                mmrec_core::ClusterError::EmptyCatalog => data(e),
                _ => CliError::Usage(e.to_string()),
            })?;
            formats::write_json_atomic(&out, &model)?;
            to_json(&json!({
                "k": model.k,
                "videos": model.assignment.len(),
                "out": out,
            }))
        }
        Command::Eval(args) => eval(args),
        Command::Simulate { spec, out } => {
            let spec: SimulationSpec = formats::read_json(&spec)?;
            let world = generate_world(&spec.world).map_err(data)?;
            let report = recovery_experiment(&world, spec.sessions, spec.per_session);
            formats::write_json_atomic(&out, &report)?;
            to_json(&report)
        }
    }
}

fn eval(args: EvalArgs) -> Result<String, CliError> {
    if let Some(bench) = args.benchmark {
        let cutoff = args
            .cutoff
            .ok_or_else(|| CliError::Usage("--benchmark needs --cutoff".into()))?;
        if cutoff == 0 {
            return Err(CliError::Usage("--cutoff must be at least 1".into()));
        }
        let cases = formats::load_benchmark(&bench)?;
        let value = hit_rate(&cases, cutoff).map_err(data)?;
        return to_json(&json!({
            "metric": "hit_rate",
            "cutoff": cutoff,
            "cases": cases.len(),
            "value": value,
        }));
    }
    let (Some(exposure), Some(clusters)) = (args.exposure, args.clusters) else {
        return Err(CliError::Usage(
            "use --benchmark FILE --cutoff N or --exposure FILE --clusters FILE".into(),
        ));
    };
    let params = match &args.config {
        Some(p) => load_config(p)?.preference,
        None => ServiceConfig::default().preference,
    };
    let model = formats::load_clusters(&clusters)?;
    let log = formats::load_exposure_log(&exposure, &params)?;
    let exposed = exposed_cluster(&log, &model).map_err(data)?;
    let surprise = match &args.interactions {
        Some(path) => {
            let (items, warnings) = formats::read_interaction_log(path)?;
            for w in warnings {
                eprintln!("skipping {w}");
            }
            let mut histories: BTreeMap<String, Vec<Interaction>> = BTreeMap::new();
            for i in items {
                histories.entry(i.user_id.clone()).or_default().push(i);
            }
            Some(surprise_cluster(&log, &model, &histories).map_err(data)?)
        }
        None => None,
    };
    to_json(&json!({
        "exposed_cluster": exposed,
        "surprise_cluster": surprise,
    }))
}
