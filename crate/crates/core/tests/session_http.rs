use std::sync::Arc;

use anole::session::{router, SessionStore};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

// Return of a polyline under a direction goal: displacement along the goal.
fn along(goal: &[f64], line: &Value) -> f64 {
    let pts = line.as_array().unwrap();
    let start = &pts[0];
    let end = &pts[pts.len() - 1];
    let dx = end[0].as_f64().unwrap() - start[0].as_f64().unwrap();
    let dy = end[1].as_f64().unwrap() - start[1].as_f64().unwrap();
    goal[0] * dx + goal[1] * dy
}

#[tokio::test]
async fn scripted_truthful_client() {
    let app = router(Arc::new(SessionStore::default()));
    let (status, created) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"family": "RandDir", "seed": 5, "plant_true_task": true})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(created["round"], 1);
    assert_eq!(created["total_rounds"], 10);
    assert_eq!(created["total_volume"], 1008);
    assert_eq!(created["phase"], "awaiting_answer");
    let id = created["session_id"].as_str().unwrap().to_string();
    let goal: Vec<f64> = serde_json::from_value(created["goal"]["vector"].clone()).unwrap();

    let (status, _) = call(&app, "GET", &format!("/sessions/{id}/result"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let mut state = created;
    let mut rejected = 0;
    for round in 1..=10 {
        let q = &state["query"];
        let preferred = if along(&goal, &q["first"]) >= along(&goal, &q["second"]) {
            "first"
        } else {
            "second"
        };
        let body = json!({"round_index": round, "preferred": preferred});
        let (status, next) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(body.clone())).await;
        assert_eq!(status, StatusCode::OK);
        assert!(next["total_volume"].as_u64() <= state["total_volume"].as_u64());
        if round == 4 {
            let (status, _) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(body)).await;
            assert_eq!(status, StatusCode::CONFLICT);
            rejected += 1;
            let (_, unchanged) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
            assert_eq!(unchanged, next);
        }
        state = next;
    }
    assert_eq!(rejected, 1);
    assert_eq!(state["phase"], "done");
    assert!(state["query"].is_null());
    assert!(state["preview"].as_array().is_some_and(|p| p.len() == 65));

    let mismatches: Vec<u64> = state["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["mismatches"].as_u64().unwrap())
        .collect();
    let argmin = (0..mismatches.len()).min_by_key(|&i| (mismatches[i], i)).unwrap();
    assert_eq!(state["decision"].as_u64(), Some(argmin as u64));

    let (status, result) = call(&app, "GET", &format!("/sessions/{id}/result"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(result["selected_index"].as_u64(), Some(argmin as u64));
    assert_eq!(result["mismatches"], 0);
    let trace: Vec<u64> = serde_json::from_value(result["volume_trace"].clone()).unwrap();
    assert_eq!(trace.len(), 11);
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));

    // the pick points the best way the pool allows
    let cosine = |c: &Value| {
        let (x, y) = (c["x"].as_f64().unwrap(), c["y"].as_f64().unwrap());
        (goal[0] * x + goal[1] * y) / x.hypot(y)
    };
    let cands = state["candidates"].as_array().unwrap();
    let best = cands.iter().map(cosine).fold(f64::NEG_INFINITY, f64::max);
    assert!((best - 1.0).abs() < 1e-9);
    assert!(cosine(&cands[argmin]) >= best - 1e-9);
}

#[tokio::test]
async fn error_statuses() {
    let app = router(Arc::new(SessionStore::default()));
    let (status, body) = call(&app, "POST", "/sessions", Some(json!({"family": "HalfCheetah"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("HalfCheetah"));
    let (status, _) = call(&app, "POST", "/sessions", Some(json!({"family": "RandGoal", "K": 0}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "GET", "/sessions/missing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(
        &app,
        "POST",
        "/sessions/missing/answer",
        Some(json!({"round_index": 1, "preferred": "first"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (_, created) = call(&app, "POST", "/sessions", Some(json!({"family": "fwd-back", "seed": 1}))).await;
    let id = created["session_id"].as_str().unwrap();
    let (status, _) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/answer"),
        Some(json!({"round_index": 3, "preferred": "first"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, two) = call(&app, "POST", "/sessions", Some(json!({"family": "RandVel"}))).await;
    assert_ne!(two["session_id"], created["session_id"]);
}
