//! Starts the steering service in-process, creates a session, follows its
//! stream and changes the preference mid-run.
//!
//! Run with `cargo run --release --example service_client`.

use std::collections::BTreeMap;
use std::sync::Arc;

use futures_util::StreamExt;
use mompc::service::{router, ServiceState};
use mompc::vehicle::Track;
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut tracks = BTreeMap::new();
    tracks.insert("test".to_string(), Track::synthetic_test());
    let state = Arc::new(ServiceState::new(tracks, None, None));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(async move { axum::serve(listener, router(state)).await });

    let http = reqwest::Client::new();
    let body = json!({ "track": "test", "method": "rpm", "steps": 30, "options": { "rpm_budget": 200 } });
    let created: Value = http.post(format!("http://{addr}/sessions")).json(&body).send().await?.json().await?;
    let id = created["id"].as_u64().ok_or("no session id")?;

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/sessions/{id}/stream")).await?;
    http.post(format!("http://{addr}/sessions/{id}/control")).json(&json!({ "action": "run" })).send().await?;
    while let Some(msg) = ws.next().await {
        let frame: Value = serde_json::from_str(msg?.to_text()?)?;
        let step = frame["step"].as_u64().unwrap_or(0);
        println!("step {step:>2}  d = {:+.3}  applied = {}  rho = {}", frame["d"].as_f64().unwrap_or(0.0), frame["applied"], frame["rho"]);
        if step == 10 {
            http.put(format!("http://{addr}/sessions/{id}/preference")).json(&json!({ "rho": [1.0, 0.0] })).send().await?;
        }
        if step == 29 {
            break;
        }
    }
    let snapshot: Value = http.get(format!("http://{addr}/sessions/{id}")).send().await?.json().await?;
    println!("status {} after {} steps, events {}", snapshot["status"], snapshot["step"], snapshot["events"]);
    Ok(())
}
