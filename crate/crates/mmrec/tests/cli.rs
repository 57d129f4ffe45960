mod common;

use std::path::Path;
use std::process::{Command, Output};

use mmrec::formats;
use mmrec::RecommendResponse;
use mmrec_core::{
    process_user_request, AttentionPredictor, ClusterModel, Interaction, RankerConfig,
    RecommendationRequest, RequestMode,
};
use serde_json::{json, Value};

use common::*;

fn mmrec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmrec"))
        .current_dir(dir)
        .args(args)
        .env_remove("MMREC_SNAPSHOT")
        .env_remove("MMREC_INTERACTION_LOG")
        .env_remove("MMREC_LISTEN")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn ingest_then_recommend_matches_ranker() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "videos.jsonl", THREE_VIDEOS);
    let r = stdout_json(&mmrec(
        d,
        &["ingest", "--embeddings", "videos.jsonl", "--snapshot", "catalog.json"],
    ));
    assert_eq!(r["ingested"], 3);
    assert_eq!(r["catalog_size"], 3);

    let history = vec![
        Interaction {
            user_id: "u".into(),
            video_id: "c".into(),
            watch_time_s: 50.0,
            timestamp: 100,
        },
        Interaction {
            user_id: "u".into(),
            video_id: "a".into(),
            watch_time_s: 1.0,
            timestamp: 200,
        },
    ];
    let log: String = history
        .iter()
        .map(|i| serde_json::to_string(i).unwrap() + "\n")
        .collect();
    write(d, "interactions.jsonl", &log);
    write(d, "config.json", "{}");
    write(d, "cands.json", r#"["a","b","c"]"#);

    let out = mmrec(
        d,
        &[
            "recommend", "--config", "config.json", "--user", "u", "--candidates", "cands.json",
            "--k", "3", "--mode", "history", "--now", "300",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let catalog = formats::load_snapshot(&d.join("catalog.json")).unwrap();
    let req = RecommendationRequest {
        user_id: "u".into(),
        candidate_ids: vec!["a".into(), "b".into(), "c".into()],
        k: 3,
        mode: RequestMode::History,
    };
    let direct = process_user_request(
        &req,
        &history,
        &catalog,
        &AttentionPredictor::default(),
        &RankerConfig::default(),
        300,
    )
    .unwrap();
    let expected = serde_json::to_string(&RecommendResponse {
        mode_used: direct.mode_used.as_str().into(),
        results: direct.results,
    })
    .unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim_end(), expected);
}

#[test]
fn eval_hit_rate_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bench = json!({"cases": [
        {"query_id": "q1", "relevant_ids": ["a", "b"], "retrieved_ids": ["a", "x", "y"]},
        {"query_id": "q2", "relevant_ids": ["a", "b", "c", "d"], "retrieved_ids": ["a", "b", "c", "z"]},
    ]});
    write(d, "bench.json", &bench.to_string());
    let v = stdout_json(&mmrec(d, &["eval", "--benchmark", "bench.json", "--cutoff", "3"]));
    assert_eq!(v["value"], 0.625);
    assert_eq!(v["cases"], 2);
}

#[test]
fn eval_cluster_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let model = ClusterModel {
        k: 3,
        centroids: vec![vec![0.0]; 3],
        assignment: [("h", 0), ("a", 0), ("b", 1), ("c", 2)]
            .iter()
            .map(|(v, c)| (v.to_string(), *c))
            .collect(),
    };
    write(d, "clusters.json", &serde_json::to_string(&model).unwrap());
    write(
        d,
        "exposures.jsonl",
        concat!(
            r#"{"user_id":"u","day":"2024-03-01","video_id":"a","positive":true}"#, "\n",
            r#"{"user_id":"u","day":"2024-03-01","video_id":"b","watch_time_s":40,"duration_s":60}"#, "\n",
            r#"{"user_id":"u","day":"2024-03-02","video_id":"c","positive":false}"#, "\n",
        ),
    );
    write(
        d,
        "hist.jsonl",
        r#"{"user_id":"u","video_id":"h","watch_time_s":30,"timestamp":1}"#,
    );
    let v = stdout_json(&mmrec(
        d,
        &["eval", "--exposure", "exposures.jsonl", "--clusters", "clusters.json", "--interactions", "hist.jsonl"],
    ));
    // day 1: {0, 1}, day 2: {2}
    assert_eq!(v["exposed_cluster"], 1.5);
    // only b is both outside cluster 0 and positive (40 s > 18 s)
    assert_eq!(v["surprise_cluster"], json!(1.0 / 3.0));

    write(d, "bad.jsonl", r#"{"user_id":"u","day":"2024-02-30","video_id":"a","positive":true}"#);
    let out = mmrec(d, &["eval", "--exposure", "bad.jsonl", "--clusters", "clusters.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cluster_writes_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "videos.jsonl", THREE_VIDEOS);
    stdout_json(&mmrec(d, &["ingest", "--embeddings", "videos.jsonl"]));
    let v = stdout_json(&mmrec(d, &["cluster", "--out", "clusters.json"]));
    // ⌈√3⌉
    assert_eq!(v["k"], 2);
    let model = formats::load_clusters(&d.join("clusters.json")).unwrap();
    assert_eq!(model.assignment.len(), 3);

    let out = mmrec(d, &["cluster", "--k", "9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "spec.json",
        r#"{"world": {"seed": 1, "users": 5, "videos": 100, "watch_noise": 0.0}, "sessions": 4, "per_session": 10}"#,
    );
    let v = stdout_json(&mmrec(d, &["simulate", "--spec", "spec.json", "--out", "report.json"]));
    assert_eq!(v["users"].as_array().unwrap().len(), 5);
    assert!(v["mean_cosine"].as_f64().unwrap() > 0.9);
    let saved: Value = serde_json::from_slice(&std::fs::read(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(saved, v);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // data errors
    assert_eq!(mmrec(d, &["ingest", "--embeddings", "missing.jsonl"]).status.code(), Some(2));
    assert_eq!(mmrec(d, &["cluster"]).status.code(), Some(2));
    assert_eq!(
        mmrec(d, &["eval", "--benchmark", "missing.json", "--cutoff", "1"]).status.code(),
        Some(2)
    );
    // usage errors
    assert_eq!(mmrec(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(mmrec(d, &["eval", "--benchmark", "b.json"]).status.code(), Some(1));
    assert_eq!(mmrec(d, &["eval"]).status.code(), Some(1));
    assert_eq!(mmrec(d, &["--help"]).status.code(), Some(0));
}
