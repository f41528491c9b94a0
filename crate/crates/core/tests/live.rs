use std::path::PathBuf;
use std::time::{Duration, Instant};

use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use synchrony::live::{start, RunningServer, ServerConfig};
use tokio_tungstenite::tungstenite::Message;

/// Trained with `synchrony train --seed 2024` (500 episodes).
fn trained_checkpoint() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/ca_seed2024.json")
}

async fn server() -> RunningServer {
    let mut cfg = ServerConfig::default();
    cfg.bind = "127.0.0.1:0".parse().unwrap();
    start(cfg).await.unwrap()
}

/// A group spread wide enough that it does not lock by itself.
fn detuned(condition: &str) -> Value {
    json!({
        "condition": condition,
        "checkpoint": trained_checkpoint(),
        "coupling": 0.5,
        "freq_process": {"kind": "constant", "omegas": [3.0, 3.6, 4.5, 5.0]},
        "seed": 0,
    })
}

async fn post(url: String, body: &Value) -> (u16, Value) {
    let r = reqwest::Client::new()
        .post(url)
        .json(body)
        .send()
        .await
        .unwrap();
    (r.status().as_u16(), r.json().await.unwrap())
}

async fn get(url: String) -> (u16, Value) {
    let r = reqwest::get(url).await.unwrap();
    (r.status().as_u16(), r.json().await.unwrap())
}

struct Trial {
    config: Value,
    report: Value,
    frames: Vec<Value>,
    arrivals: Vec<Instant>,
}

/// Joins a session and plays a 4 rad/s sinusoid at 40 Hz until the server
/// ends the trial.
async fn play(base: &str, ws_path: &str) -> Trial {
    let url = format!("ws://{}{ws_path}", base.trim_start_matches("http://"));
    let (socket, _) = tokio_tungstenite::connect_async(url).await.unwrap();
    let (mut tx, mut rx) = socket.split();
    tx.send(Message::text(
        json!({"type": "hello", "name": "script"}).to_string(),
    ))
    .await
    .unwrap();
    let config = loop {
        let Some(Ok(Message::Text(m))) = rx.next().await else {
            panic!("no config message")
        };
        let v: Value = serde_json::from_str(&m).unwrap();
        if v["type"] == "config" {
            break v;
        }
    };
    let sender = tokio::spawn(async move {
        let start = Instant::now();
        let mut tick = tokio::time::interval(Duration::from_millis(25));
        loop {
            tick.tick().await;
            let t = start.elapsed().as_secs_f64() * 1000.0;
            let x = 0.8 * (4.0 * t / 1000.0).cos();
            let msg = json!({"type": "input", "t": t, "x": x}).to_string();
            if tx.send(Message::text(msg)).await.is_err() {
                break;
            }
        }
    });
    let mut frames = Vec::new();
    let mut arrivals = Vec::new();
    let report = loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), rx.next())
            .await
            .expect("server went silent");
        let Some(Ok(msg)) = msg else {
            panic!("socket closed before the report")
        };
        let Message::Text(m) = msg else { continue };
        let v: Value = serde_json::from_str(&m).unwrap();
        match v["type"].as_str() {
            Some("frame") => {
                arrivals.push(Instant::now());
                frames.push(v);
            }
            Some("end") => break v["report"].clone(),
            other => panic!("unexpected message {other:?}: {v}"),
        }
    };
    sender.abort();
    Trial {
        config,
        report,
        frames,
        arrivals,
    }
}

async fn run_trial(condition: &str) -> Trial {
    let srv = server().await;
    let base = format!("http://{}", srv.addr);
    let (status, created) = post(format!("{base}/session"), &detuned(condition)).await;
    assert_eq!(status, 201, "{created}");
    let trial = play(&base, created["ws"].as_str().unwrap()).await;
    let (status, report) = get(format!("{base}{}", created["report"].as_str().unwrap())).await;
    assert_eq!(status, 200);
    assert_eq!(report, trial.report);
    srv.stop().await.unwrap();
    trial
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn thirty_second_trials_over_the_socket() {
    let (ca, p) = tokio::join!(run_trial("CA"), run_trial("P"));

    assert_eq!(ca.config["condition"], "CA");
    assert_eq!(ca.config["you"], "human");
    let balls: Vec<&str> = ca.config["balls"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b.as_str().unwrap())
        .collect();
    assert_eq!(balls, ["human", "p1", "p2", "p3", "p4", "avatar"]);
    for f in &ca.frames {
        let pos = f["positions"].as_object().unwrap();
        assert_eq!(pos.len(), 6);
        assert!(pos.values().all(|x| x.as_f64().unwrap().abs() <= 1.2));
    }

    for (name, t) in [("CA", &ca), ("P", &p)] {
        let r = &t.report;
        assert!(r["steps"].as_u64().unwrap() >= 2990, "{name}: {r}");
        for k in ["value", "r_net", "r_tot"] {
            let v = r[k].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&v), "{name} {k}: {v}");
        }
        assert!(r["inputs_accepted"].as_u64().unwrap() > 1000, "{name}: {r}");
        assert_eq!(r["inputs_dropped"], 0);
        assert!(t.frames.len() >= 1190, "{name}: {} frames", t.frames.len());
    }
    assert_eq!(ca.report["metric"], "r_net");
    assert_eq!(p.report["metric"], "r_tot");
    assert_eq!(p.report["r_net"], p.report["r_tot"]);
    let (with, without) = (
        ca.report["r_tot"].as_f64().unwrap(),
        p.report["r_tot"].as_f64().unwrap(),
    );
    assert!(with > without, "CA {with} vs P {without}");

    for (name, t) in [("CA", &ca), ("P", &p)] {
        let mut dev: Vec<f64> = t
            .arrivals
            .windows(2)
            .map(|w| ((w[1] - w[0]).as_secs_f64() * 1000.0 - 25.0).abs())
            .collect();
        dev.sort_by(|a, b| a.total_cmp(b));
        let p99 = dev[dev.len() * 99 / 100];
        assert!(
            p99 < 10.0,
            "{name}: 99th percentile jitter {p99:.2} ms, max {:.2}",
            dev.last().unwrap()
        );
        let mean = dev.iter().sum::<f64>() / dev.len() as f64;
        assert!(mean < 6.0, "{name}: mean jitter {mean:.2} ms");
    }
}

#[tokio::test]
async fn one_session_at_a_time() {
    let srv = server().await;
    let base = format!("http://{}", srv.addr);
    let short = json!({"condition": "P", "trial_length": 60.0});
    let (status, first) = post(format!("{base}/session"), &short).await;
    assert_eq!(status, 201);
    let id = first["id"].as_str().unwrap().to_string();

    let (status, body) = post(format!("{base}/session"), &short).await;
    assert_eq!(status, 409);
    assert_eq!(body["error"], "session-exists");

    let (status, body) = get(format!("{base}/session/{id}/report")).await;
    assert_eq!((status, body["status"].as_str()), (202, Some("running")));

    tokio::time::sleep(Duration::from_millis(300)).await;
    let (status, report) = post(format!("{base}/session/{id}/end"), &Value::Null).await;
    assert_eq!(status, 200, "{report}");
    assert_eq!(report["condition"], "P");
    let (status, again) = get(format!("{base}/session/{id}/report")).await;
    assert_eq!((status, &again), (200, &report));

    // The slot is free again.
    let (status, second) = post(format!("{base}/session"), &short).await;
    assert_eq!(status, 201);
    assert_ne!(second["id"], first["id"]);
    srv.stop().await.unwrap();
}

#[tokio::test]
async fn rejected_requests() {
    let srv = server().await;
    let base = format!("http://{}", srv.addr);
    let (status, body) = post(format!("{base}/session"), &json!({"condition": "CA"})).await;
    assert_eq!(status, 400);
    assert_eq!(body["error"], "config");
    assert!(body["message"].as_str().unwrap().contains("checkpoint"));

    let (status, body) = post(format!("{base}/session"), &json!({"conditon": "P"})).await;
    assert_eq!(status, 400);
    assert!(body["message"].as_str().unwrap().contains("conditon"));

    let (status, body) = get(format!("{base}/session/s99/report")).await;
    assert_eq!((status, body["error"].as_str()), (404, Some("not-found")));
    let r = reqwest::get(format!("{base}/session/s99/ws"))
        .await
        .unwrap();
    assert_ne!(r.status().as_u16(), 101);

    // Malformed input over the socket yields an error message, not a hangup.
    let (_, created) = post(
        format!("{base}/session"),
        &json!({"condition": "P", "trial_length": 60.0}),
    )
    .await;
    let url = format!("ws://{}{}", srv.addr, created["ws"].as_str().unwrap());
    let (mut socket, _) = tokio_tungstenite::connect_async(url).await.unwrap();
    socket
        .send(Message::text(r#"{"type":"shout"}"#))
        .await
        .unwrap();
    let err = loop {
        let Some(Ok(Message::Text(m))) = socket.next().await else {
            panic!("closed")
        };
        let v: Value = serde_json::from_str(&m).unwrap();
        if v["type"] == "error" {
            break v;
        }
    };
    assert_eq!(err["category"], "config");
    socket
        .send(Message::text(r#"{"type":"hello"}"#))
        .await
        .unwrap();
    let cfg = loop {
        let Some(Ok(Message::Text(m))) = socket.next().await else {
            panic!("closed")
        };
        let v: Value = serde_json::from_str(&m).unwrap();
        if v["type"] == "config" {
            break v;
        }
    };
    assert_eq!(cfg["condition"], "P");
    srv.stop().await.unwrap();
}
