mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{MockServer, Reply};
use ethical_reasoning::gateway::{FixtureStore, Gateway, GatewayError, ProviderConfig, ReplayKey, ResponseStatus};
use ethical_reasoning::prompt::{build_prompt_f64, PromptTemplate};
use ethical_reasoning::reasoning::EmotionWeight;

fn config(server: &MockServer, key_env: Option<&str>) -> ProviderConfig {
    let mut c = ProviderConfig::new("mock", &server.base_url, "mock-model-1");
    c.api_key_env = key_env.map(String::from);
    c.retry_backoff_ms = 10;
    c
}

fn half() -> EmotionWeight {
    EmotionWeight::new(0.5).unwrap()
}

fn send(gw: &Gateway) -> Result<ethical_reasoning::gateway::ChatResponse, GatewayError> {
    let prompt = build_prompt_f64("A robot must choose.", 0.5, &PromptTemplate::default()).unwrap();
    gw.complete(&gw.request_for(&prompt), half())
}

#[test]
fn wire_format_and_bearer_auth() {
    std::env::set_var("ETHREASON_TEST_KEY_WIRE", "sk-wire-123");
    let server = MockServer::start(|_, _| Reply::ok_content("hello"));
    let gw = Gateway::live(config(&server, Some("ETHREASON_TEST_KEY_WIRE"))).unwrap();
    let resp = send(&gw).unwrap();
    assert_eq!(resp.content, "hello");
    assert_eq!(resp.status, ResponseStatus::Ok);
    assert_eq!(resp.provider, "mock");

    let reqs = server.recorded();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].path, "/v1/chat/completions");
    assert_eq!(reqs[0].header("authorization"), Some("Bearer sk-wire-123"));
    let body: serde_json::Value = serde_json::from_str(&reqs[0].body).unwrap();
    assert_eq!(body["model"], "mock-model-1");
    assert_eq!(body["temperature"], 0.0);
    let msgs = body["messages"].as_array().unwrap();
    assert_eq!(msgs.len(), 2);
    assert_eq!(msgs[0]["role"], "system");
    assert_eq!(msgs[1]["role"], "user");
    assert!(msgs[1]["content"].as_str().unwrap().contains("A robot must choose."));
}

#[test]
fn missing_key_fails_before_network() {
    std::env::remove_var("ETHREASON_TEST_KEY_ABSENT");
    let server = MockServer::start(|_, _| Reply::ok_content("never"));
    let gw = Gateway::live(config(&server, Some("ETHREASON_TEST_KEY_ABSENT"))).unwrap();
    assert!(matches!(send(&gw), Err(GatewayError::AuthError(_))));
    assert!(server.recorded().is_empty());
}

#[test]
fn server_errors_are_retried() {
    let server = MockServer::start(|n, _| {
        if n < 2 {
            Reply::json(503, serde_json::json!({"error": "busy"}))
        } else {
            Reply::ok_content("third time")
        }
    });
    let gw = Gateway::live(config(&server, None)).unwrap();
    assert_eq!(send(&gw).unwrap().content, "third time");
    assert_eq!(server.recorded().len(), 3);
}

#[test]
fn retries_are_bounded() {
    let server = MockServer::start(|_, _| Reply::json(500, serde_json::json!({"error": "down"})));
    let mut c = config(&server, None);
    c.max_retries = 1;
    let gw = Gateway::live(c).unwrap();
    match send(&gw) {
        Err(GatewayError::HttpError { status, body }) => {
            assert_eq!(status, 500);
            assert!(body.contains("down"));
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(server.recorded().len(), 2);
}

#[test]
fn client_errors_are_not_retried() {
    let server = MockServer::start(|_, _| Reply::json(400, serde_json::json!({"error": "bad"})));
    let gw = Gateway::live(config(&server, None)).unwrap();
    assert!(matches!(send(&gw), Err(GatewayError::HttpError { status: 400, .. })));
    assert_eq!(server.recorded().len(), 1);

    let server = MockServer::start(|_, _| Reply::json(401, serde_json::json!({"error": "who"})));
    let gw = Gateway::live(config(&server, None)).unwrap();
    assert!(matches!(send(&gw), Err(GatewayError::AuthError(_))));
}

#[test]
fn timeout() {
    let server = MockServer::start(|_, _| Reply::ok_content("late").delayed(Duration::from_millis(2500)));
    let mut c = config(&server, None);
    c.timeout_secs = 1;
    c.max_retries = 0;
    let gw = Gateway::live(c).unwrap();
    let started = Instant::now();
    assert!(matches!(send(&gw), Err(GatewayError::Timeout)));
    assert!(started.elapsed() < Duration::from_millis(2400));
}

#[test]
fn malformed_and_refused_replies() {
    let server = MockServer::start(|_, _| Reply::json(200, serde_json::json!({"choices": []})));
    let gw = Gateway::live(config(&server, None)).unwrap();
    assert!(matches!(send(&gw), Err(GatewayError::InvalidResponse(_))));

    let server = MockServer::start(|_, _| {
        Reply::json(
            200,
            serde_json::json!({"choices": [{"message": {"content": null, "refusal": "No."}}]}),
        )
    });
    let gw = Gateway::live(config(&server, None)).unwrap();
    assert_eq!(send(&gw).unwrap().status, ResponseStatus::Refusal);

    let server = MockServer::start(|_, _| Reply::ok_content("Sorry, I can't assist with that."));
    let gw = Gateway::live(config(&server, None)).unwrap();
    assert_eq!(send(&gw).unwrap().status, ResponseStatus::Refusal);
}

#[test]
fn in_flight_limit_holds_under_load() {
    let server = MockServer::start(|_, _| Reply::ok_content("ok").delayed(Duration::from_millis(40)));
    let mut c = config(&server, None);
    c.max_in_flight = 2;
    let gw = Arc::new(Gateway::live(c).unwrap());
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let gw = gw.clone();
            std::thread::spawn(move || send(&gw).unwrap())
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(server.recorded().len(), 8);
    assert!(server.peak_in_flight.load(std::sync::atomic::Ordering::SeqCst) <= 2);
    assert_eq!(gw.limiter().peak(), 2);
}

#[test]
fn live_replies_are_recorded_for_replay() {
    let dir = tempfile::tempdir().unwrap();
    let store = FixtureStore::new(dir.path());
    let server = MockServer::start(|_, _| Reply::ok_content("recorded text"));
    let c = config(&server, None);
    let live = Gateway::live(c.clone()).unwrap().recording_to(store.clone());
    send(&live).unwrap();

    let replay = Gateway::replay(c, store.clone()).unwrap();
    assert_eq!(send(&replay).unwrap().content, "recorded text");
    let prompt = build_prompt_f64("A robot must choose.", 0.5, &PromptTemplate::default()).unwrap();
    let key = ReplayKey::new(&replay.request_for(&prompt), half());
    assert!(store.contains(&key));
    assert_eq!(server.recorded().len(), 1);
}
