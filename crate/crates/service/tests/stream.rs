use std::time::Duration;

use futures_util::StreamExt;
use kinesim_core::fk::fk_chain;
use kinesim_core::robot_model::Catalog;
use kinesim_service::{router, AppState, RegistryOptions, TICK_HZ};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message;

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

struct Server {
    base: String,
    ws: String,
}

async fn start() -> Server {
    let app = AppState::new(
        Catalog::builtin(),
        RegistryOptions {
            tick_hz: Some(TICK_HZ),
            animation_seconds: 0.3,
        },
    );
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(app)).await.unwrap() });
    Server {
        base: format!("http://{addr}"),
        ws: format!("ws://{addr}"),
    }
}

/// Minimal HTTP/1.1 client: one request per connection.
async fn post(url: &str, body: Value) -> (u16, Value) {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let rest = url.strip_prefix("http://").unwrap();
    let (host, path) = rest.split_at(rest.find('/').unwrap());
    let mut stream = tokio::net::TcpStream::connect(host).await.unwrap();
    let payload = body.to_string();
    let req = format!(
        "POST {path} HTTP/1.1\r\nHost: {host}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
    stream.write_all(req.as_bytes()).await.unwrap();
    let mut raw = String::new();
    stream.read_to_string(&mut raw).await.unwrap();
    let status: u16 = raw[9..12].parse().unwrap();
    let (_, body) = raw.split_once("\r\n\r\n").unwrap();
    (status, serde_json::from_str(body).unwrap())
}

async fn create(server: &Server, model: &str) -> String {
    let (status, v) = post(&format!("{}/api/sessions", server.base), json!({"model": model})).await;
    assert_eq!(status, 201);
    v["session_id"].as_str().unwrap().to_string()
}

async fn command(server: &Server, id: &str, body: Value) -> Value {
    let (status, v) = post(&format!("{}/api/sessions/{id}/commands", server.base), body).await;
    assert_eq!(status, 200, "{v}");
    v
}

async fn connect(server: &Server, id: &str) -> Socket {
    let (socket, _) = tokio_tungstenite::connect_async(format!("{}/api/sessions/{id}/stream", server.ws))
        .await
        .unwrap();
    socket
}

async fn next_event(socket: &mut Socket, wait: Duration) -> Option<Value> {
    loop {
        match tokio::time::timeout(wait, socket.next()).await {
            Err(_) => return None,
            Ok(None) => return None,
            Ok(Some(msg)) => match msg.unwrap() {
                Message::Text(t) => return Some(serde_json::from_str(&t).unwrap()),
                _ => continue,
            },
        }
    }
}

fn frames_of(event: &Value) -> Vec<[f64; 16]> {
    serde_json::from_value(event["frames"].clone()).unwrap()
}

fn q_of(event: &Value) -> Vec<f64> {
    serde_json::from_value(event["q"].clone()).unwrap()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn animation_streams_monotone_revisions_with_engine_frames() {
    let server = start().await;
    let id = create(&server, "articulated_rrr").await;
    let model = Catalog::builtin().get("articulated_rrr").unwrap();
    let mut socket = connect(&server, &id).await;

    let snapshot = next_event(&mut socket, Duration::from_secs(5)).await.unwrap();
    assert_eq!(snapshot["revision"], 1);
    command(&server, &id, json!({"command": "set_mode", "mode": "inverse_kinematics"})).await;
    let applied = command(&server, &id, json!({"command": "request_ik", "target": [0.3, 0.2, 0.5]})).await;
    let goal = applied["state"]["animation"]["q_end"].clone();
    assert!(goal.is_array(), "{applied}");

    let mut last = snapshot["revision"].as_u64().unwrap();
    let mut count = 0;
    let mut finished = false;
    while let Some(event) = next_event(&mut socket, Duration::from_secs(3)).await {
        let rev = event["revision"].as_u64().unwrap();
        assert!(rev > last, "revision {rev} after {last}");
        last = rev;
        count += 1;
        let q = q_of(&event);
        let engine = fk_chain(&model, &q).unwrap().to_row_major();
        let wire = frames_of(&event);
        assert_eq!(wire.len(), engine.len());
        for (w, e) in wire.iter().zip(&engine) {
            assert_eq!(w.map(f64::to_bits), e.map(f64::to_bits));
            assert_eq!(w[12..], [0.0, 0.0, 0.0, 1.0]);
        }
        if event.get("animation").is_none() && event["q"] == goal {
            finished = true;
            break;
        }
    }
    assert!(finished, "animation never completed");
    // Two commands plus roughly 0.3 s of 30 Hz ticks.
    assert!(count >= 5, "only {count} events");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn sessions_only_see_their_own_events() {
    let server = start().await;
    let a = create(&server, "scara_rrp").await;
    let b = create(&server, "scara_rrp").await;
    let mut sa = connect(&server, &a).await;
    let mut sb = connect(&server, &b).await;
    assert_eq!(next_event(&mut sa, Duration::from_secs(5)).await.unwrap()["session_id"], a.as_str());
    assert_eq!(next_event(&mut sb, Duration::from_secs(5)).await.unwrap()["session_id"], b.as_str());

    for i in 0..5 {
        command(&server, &a, json!({"command": "set_joint", "index": 0, "value": 0.1 * i as f64})).await;
    }
    for _ in 0..5 {
        let e = next_event(&mut sa, Duration::from_secs(5)).await.unwrap();
        assert_eq!(e["session_id"], a.as_str());
    }
    assert!(next_event(&mut sb, Duration::from_millis(300)).await.is_none());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn unknown_stream_is_rejected() {
    let server = start().await;
    let err = tokio_tungstenite::connect_async(format!("{}/api/sessions/nope/stream", server.ws)).await;
    assert!(err.is_err());
}
