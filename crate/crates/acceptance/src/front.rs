use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use axum::body::Body;
use axum::http::Request;
use futures_util::StreamExt;
use http_body_util::BodyExt;
use kinesim_core::fk::fk_chain;
use kinesim_core::robot_model::Catalog;
use kinesim_service::{router, AppState, RegistryOptions, TICK_HZ};
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;
use tower::ServiceExt;

use crate::{ensure, Outcome};

fn crate_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("..").join(name)
}

pub fn cli_goldens() -> Outcome {
    let cli = crate_dir("cli");
    let golden = cli.join("tests/golden");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&golden)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    ensure!(!files.is_empty(), "no transcripts in {}", golden.display());
    // Matrix file arguments in the transcripts are relative to the CLI crate.
    std::env::set_current_dir(&cli).map_err(|e| e.to_string())?;
    let mut codes = BTreeSet::new();
    for path in &files {
        let want = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let header = want.lines().next().unwrap_or_default();
        let args: Vec<&str> = header
            .strip_prefix("$ kinesim ")
            .ok_or_else(|| format!("{}: bad header", path.display()))?
            .split(' ')
            .collect();
        let out = kinesim_cli::run(std::iter::once("kinesim").chain(args.iter().copied()));
        let mut got = format!("{header}\n{}", out.stdout);
        if !out.stderr.is_empty() {
            got.push_str("--- stderr\n");
            got.push_str(&out.stderr);
        }
        got.push_str(&format!("exit: {}\n", out.code));
        ensure!(got == want, "{} differs", path.file_name().unwrap().to_string_lossy());
        codes.insert(out.code);
    }
    for code in [0, 2, 3] {
        ensure!(codes.contains(&code), "no transcript exercises exit code {code}");
    }
    Ok(format!("{} transcripts byte-identical; exit codes {codes:?}", files.len()))
}

const PLACEHOLDER: &str = "{session_id}";

async fn replay_fixtures() -> Result<usize, String> {
    let path = crate_dir("service").join("tests/fixtures/contract.json");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let scenarios: Vec<Value> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let mut count = 0;
    for scenario in &scenarios {
        let app = router(AppState::new(
            Catalog::builtin(),
            RegistryOptions {
                tick_hz: None,
                ..Default::default()
            },
        ));
        let mut id: Option<String> = None;
        for ex in scenario["exchanges"].as_array().ok_or("exchanges")? {
            let sub = |s: &str| match &id {
                Some(id) => s.replace(PLACEHOLDER, id),
                None => s.to_string(),
            };
            let body = match (&ex.get("body"), ex.get("raw_body").and_then(Value::as_str)) {
                (Some(v), _) => sub(&v.to_string()),
                (None, Some(raw)) => raw.to_string(),
                (None, None) => String::new(),
            };
            let req = Request::builder()
                .method(ex["method"].as_str().ok_or("method")?)
                .uri(sub(ex["path"].as_str().ok_or("path")?))
                .header("content-type", "application/json")
                .body(Body::from(body))
                .map_err(|e| e.to_string())?;
            let resp = app.clone().oneshot(req).await.map_err(|e| e.to_string())?;
            let status = resp.status().as_u16();
            let bytes = resp.into_body().collect().await.map_err(|e| e.to_string())?.to_bytes();
            let text = String::from_utf8(bytes.to_vec()).map_err(|e| e.to_string())?;
            if status == 201 && id.is_none() {
                let v: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
                id = v["session_id"].as_str().map(str::to_string);
            }
            let normalized = match &id {
                Some(id) => text.replace(id.as_str(), PLACEHOLDER),
                None => text,
            };
            let what = format!("{} {} {}", scenario["name"], ex["method"], ex["path"]);
            ensure!(ex["status"].as_u64() == Some(status as u64), "{what}: status {status}");
            ensure!(ex["response"].as_str() == Some(normalized.as_str()), "{what}: body differs");
            count += 1;
        }
    }
    Ok(count)
}

async fn post(addr: &str, path: &str, body: Value) -> Result<Value, String> {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let mut stream = tokio::net::TcpStream::connect(addr).await.map_err(|e| e.to_string())?;
    let payload = body.to_string();
    let req = format!(
        "POST {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
    stream.write_all(req.as_bytes()).await.map_err(|e| e.to_string())?;
    let mut raw = String::new();
    stream.read_to_string(&mut raw).await.map_err(|e| e.to_string())?;
    let (head, body) = raw.split_once("\r\n\r\n").ok_or("no body")?;
    ensure!(head.starts_with("HTTP/1.1 20"), "{path}: {head}");
    serde_json::from_str(body).map_err(|e| e.to_string())
}

/// Drives an IK animation and checks every streamed message.
async fn stream_check() -> Result<usize, String> {
    let app = AppState::new(
        Catalog::builtin(),
        RegistryOptions {
            tick_hz: Some(TICK_HZ),
            animation_seconds: 0.5,
        },
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?.to_string();
    tokio::spawn(async move { axum::serve(listener, router(app)).await });

    let model = Catalog::builtin().get("scara_rrp").map_err(|e| e.to_string())?;
    let a = post(&addr, "/api/sessions", json!({"model": "scara_rrp"})).await?;
    let b = post(&addr, "/api/sessions", json!({"model": "scara_rrp"})).await?;
    let id = a["session_id"].as_str().ok_or("session_id")?.to_string();
    let other = b["session_id"].as_str().ok_or("session_id")?.to_string();
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/api/sessions/{id}/stream"))
        .await
        .map_err(|e| e.to_string())?;
    let (mut quiet, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/api/sessions/{other}/stream"))
        .await
        .map_err(|e| e.to_string())?;

    let cmd = format!("/api/sessions/{id}/commands");
    post(&addr, &cmd, json!({"command": "set_joint", "index": 0, "value": 0.4})).await?;
    post(&addr, &cmd, json!({"command": "set_mode", "mode": "inverse_kinematics"})).await?;
    post(&addr, &cmd, json!({"command": "request_ik", "target": [0.35, 0.25, 0.3], "branch": "elbow_up"})).await?;

    let mut last = 0u64;
    let mut messages = 0;
    loop {
        let next = tokio::time::timeout(Duration::from_secs(3), ws.next()).await;
        let Ok(Some(Ok(msg))) = next else {
            return Err("stream ended before the animation finished".into());
        };
        let Message::Text(text) = msg else { continue };
        let event: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        ensure!(event["session_id"] == id.as_str(), "foreign event on the socket");
        let rev = event["revision"].as_u64().ok_or("revision")?;
        ensure!(rev > last, "revision {rev} after {last}");
        last = rev;
        let q: Vec<f64> = serde_json::from_value(event["q"].clone()).map_err(|e| e.to_string())?;
        let frames: Vec<[f64; 16]> = serde_json::from_value(event["frames"].clone()).map_err(|e| e.to_string())?;
        let engine = fk_chain(&model, &q).map_err(|e| e.to_string())?.to_row_major();
        ensure!(frames.len() == engine.len(), "frame count");
        for (w, e) in frames.iter().zip(&engine) {
            ensure!(w.map(f64::to_bits) == e.map(f64::to_bits), "revision {rev}: frames differ from fk_chain");
            ensure!(w[12..] == [0.0, 0.0, 0.0, 1.0], "revision {rev}: bottom row {:?}", &w[12..]);
        }
        messages += 1;
        if event.get("solutions").is_some() && event.get("animation").is_none() {
            break;
        }
    }
    // The other session saw its snapshot and nothing else.
    let first = tokio::time::timeout(Duration::from_secs(3), quiet.next()).await;
    ensure!(matches!(first, Ok(Some(Ok(Message::Text(_))))), "no snapshot on the second socket");
    let leak = tokio::time::timeout(Duration::from_millis(200), quiet.next()).await;
    ensure!(leak.is_err(), "second session received another session's events");
    Ok(messages)
}

pub fn service_contract() -> Outcome {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    let exchanges = runtime.block_on(replay_fixtures())?;
    let messages = runtime.block_on(stream_check())?;
    Ok(format!(
        "{exchanges} recorded exchanges replay byte-identically; {messages} streamed states with strictly rising revisions and fk_chain frames; sessions isolated; no UI build needed"
    ))
}
