mod common;

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use mmrec::service::router_with_clock;
use mmrec::{RecommendResponse, Store};
use mmrec_core::{
    process_user_request, AttentionPredictor, Interaction, RankerConfig, RecommendationRequest,
    RequestMode,
};
use serde_json::{json, Value};
use tower::ServiceExt;

use common::*;

const NOW: i64 = 1_700_000_000;

fn app(dir: &std::path::Path) -> (Arc<Store>, Router) {
    let store = Arc::new(Store::open(config_in(dir)).unwrap());
    let router = router_with_clock(store.clone(), Arc::new(|| NOW));
    (store, router)
}

async fn call(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app
        .clone()
        .oneshot(Request::builder().method(method).uri(uri).body(body.into()).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

fn parse(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

fn interaction(user: &str, video: &str, watch: f64, ts: i64) -> Interaction {
    Interaction {
        user_id: user.into(),
        video_id: video.into(),
        watch_time_s: watch,
        timestamp: ts,
    }
}

#[tokio::test]
async fn end_to_end_matches_in_process_ranker() {
    let dir = tempfile::tempdir().unwrap();
    let (store, app) = app(dir.path());

    let (s, body) = call(&app, Method::PUT, "/v1/videos", THREE_VIDEOS).await;
    assert_eq!(s, StatusCode::OK);
    let report = parse(&body);
    assert_eq!((report["ingested"].clone(), report["rejected"].clone()), (json!(3), json!(0)));

    let history = [interaction("u1", "a", 40.0, NOW - 60), interaction("u1", "b", 2.0, NOW - 30)];
    for i in &history {
        let (s, _) = call(&app, Method::POST, "/v1/interactions", serde_json::to_vec(i).unwrap()).await;
        assert_eq!(s, StatusCode::OK);
    }

    let req = RecommendationRequest {
        user_id: "u1".into(),
        candidate_ids: vec!["a".into(), "b".into(), "c".into()],
        k: 3,
        mode: RequestMode::History,
    };
    let (s, body) = call(&app, Method::POST, "/v1/recommend", serde_json::to_vec(&req).unwrap()).await;
    assert_eq!(s, StatusCode::OK);

    let direct = process_user_request(
        &req,
        &history,
        &store.catalog(),
        &AttentionPredictor::default(),
        &RankerConfig::default(),
        NOW,
    )
    .unwrap();
    let expected = RecommendResponse {
        mode_used: direct.mode_used.as_str().into(),
        results: direct.results,
    };
    assert_eq!(body, serde_json::to_vec(&expected).unwrap());
    // a at 40 s is liked, b at 2 s is not: a ranks first
    assert_eq!(parse(&body)["results"][0]["video_id"], "a");
}

#[tokio::test]
async fn single_candidate_k1() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path());
    call(&app, Method::PUT, "/v1/videos", THREE_VIDEOS).await;
    let (s, body) = call(
        &app,
        Method::POST,
        "/v1/recommend",
        json!({"user_id": "x", "candidate_ids": ["b"], "k": 1}).to_string(),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    let v = parse(&body);
    assert_eq!(v["mode_used"], "candidate");
    assert_eq!(v["results"].as_array().unwrap().len(), 1);
    // the only candidate is its own representation
    assert!((v["results"][0]["similarity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[tokio::test]
async fn error_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path());
    let rec = |body: Value| body.to_string();

    let (s, _) = call(
        &app,
        Method::POST,
        "/v1/recommend",
        rec(json!({"user_id": "u", "candidate_ids": ["a"], "k": 1})),
    )
    .await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    let (s, _) = call(&app, Method::GET, "/v1/users/u/representation", Body::empty()).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);

    call(&app, Method::PUT, "/v1/videos", THREE_VIDEOS).await;

    for (body, want) in [
        (rec(json!({"user_id": "u", "candidate_ids": ["a"], "k": 0})), StatusCode::BAD_REQUEST),
        (rec(json!({"user_id": "u", "candidate_ids": [], "k": 1})), StatusCode::BAD_REQUEST),
        (rec(json!({"user_id": "u", "candidate_ids": ["zz"], "k": 1})), StatusCode::UNPROCESSABLE_ENTITY),
        (rec(json!({"user_id": "u", "candidate_ids": ["a"], "k": 1, "mode": "magic"})), StatusCode::BAD_REQUEST),
        ("not json".to_string(), StatusCode::BAD_REQUEST),
    ] {
        let (s, _) = call(&app, Method::POST, "/v1/recommend", body.clone()).await;
        assert_eq!(s, want, "{body}");
    }

    let (s, _) = call(
        &app,
        Method::POST,
        "/v1/interactions",
        rec(json!({"user_id": "u", "video_id": "a", "watch_time_s": -3.0, "timestamp": 1})),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, _) = call(&app, Method::GET, "/v1/users/nobody/representation", Body::empty()).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    // only uncataloged history: no representation can be built
    let (s, _) = call(
        &app,
        Method::POST,
        "/v1/interactions",
        rec(json!({"user_id": "ghost", "video_id": "gone", "watch_time_s": 3.0, "timestamp": 1})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = call(&app, Method::GET, "/v1/users/ghost/representation", Body::empty()).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = call(&app, Method::GET, "/v1/users/ghost/representation?mode=candidate", Body::empty()).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn representation_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path());
    call(&app, Method::PUT, "/v1/videos", THREE_VIDEOS).await;
    for (v, w) in [("a", 60.0), ("b", 60.0)] {
        call(
            &app,
            Method::POST,
            "/v1/interactions",
            serde_json::to_vec(&interaction("u", v, w, NOW - 5)).unwrap(),
        )
        .await;
    }
    let (s, body) = call(&app, Method::GET, "/v1/users/u/representation", Body::empty()).await;
    assert_eq!(s, StatusCode::OK);
    let v = parse(&body);
    assert_eq!(v["mode"], "history");
    assert_eq!(v["support_count"], 2);
    assert_eq!(v["computed_at"], NOW);
    // equal weights on (1,0) and (0,1) give the diagonal
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for x in v["vector"].as_array().unwrap() {
        assert!((x.as_f64().unwrap() - h).abs() < 1e-12);
    }
}

#[tokio::test]
async fn ingest_reports_rejections_and_health() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path());
    let body = format!(
        "{THREE_VIDEOS}{{\"video_id\":\"z\",\"dim\":2,\"vector\":[0,0],\"duration_s\":1}}\n{{\"video_id\":\"w\",\"dim\":3,\"vector\":[1,0,0],\"duration_s\":1}}\nnot json\n"
    );
    let (s, resp) = call(&app, Method::PUT, "/v1/videos", body).await;
    assert_eq!(s, StatusCode::OK);
    let r = parse(&resp);
    assert_eq!(r["ingested"], 3);
    assert_eq!(r["rejected"], 3);
    let positions: Vec<_> = r["rejections"].as_array().unwrap().iter().map(|x| x["position"].clone()).collect();
    assert_eq!(positions, [json!(4), json!(5), json!(6)]);

    let (s, resp) = call(&app, Method::GET, "/v1/health", Body::empty()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(parse(&resp), json!({"status": "ok", "catalog_size": 3, "dim": 2}));
}
