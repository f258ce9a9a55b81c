//! Wire-protocol tests against the in-process HTTP stub: request shape,
//! bearer auth, retry/backoff classification, and embeddings parsing.

mod common;

use std::sync::Arc;

use alignlab::gateway::{
    Backend, ChatClient, ChatMessage, EmbeddingClient, ProviderConfig, SamplingParams,
    VirtualClock,
};
use alignlab::Error;
use common::{chat_body, embeddings_body, StubServer};

fn http_config(base_url: String, key_env: &str) -> ProviderConfig {
    ProviderConfig {
        base_url,
        model_name: "stub-model".to_string(),
        api_key_env: key_env.to_string(),
        max_retries: 3,
        requests_per_minute: 600,
        backend: Backend::Http,
    }
}

fn sampling() -> SamplingParams {
    SamplingParams::new(0.7, 128)
}

#[test]
fn chat_round_trip_returns_the_stub_completion() {
    let server = StubServer::start(chat_body("hello"));
    std::env::set_var("ALIGNLAB_TEST_KEY_ROUNDTRIP", "sk-test-123");
    let config = http_config(server.base_url(), "ALIGNLAB_TEST_KEY_ROUNDTRIP");
    let clock = Arc::new(VirtualClock::new());
    let client = ChatClient::from_config("role_play", &config, 0, clock, None).unwrap();
    let reply = client
        .chat(vec![ChatMessage::user("hi there")], &sampling())
        .unwrap();
    assert_eq!(reply, "hello");

    let requests = server.requests();
    assert_eq!(requests.len(), 1);
    let request = &requests[0];
    assert_eq!(request.path, "/chat/completions");
    assert_eq!(
        request.authorization.as_deref(),
        Some("Bearer sk-test-123")
    );
    assert_eq!(request.body["model"], "stub-model");
    assert_eq!(request.body["messages"][0]["role"], "user");
    assert_eq!(request.body["messages"][0]["content"], "hi there");
    assert!((request.body["temperature"].as_f64().unwrap() - 0.7).abs() < 1e-9);
    assert_eq!(request.body["max_tokens"], 128);
}

#[test]
fn transient_statuses_are_retried_until_success() {
    let server = StubServer::start(chat_body("recovered"));
    server.push_response(500, "oops".to_string());
    server.push_response(429, "slow down".to_string());
    let config = http_config(server.base_url(), "ALIGNLAB_TEST_KEY_UNSET");
    let clock = Arc::new(VirtualClock::new());
    let client = ChatClient::from_config("preferred", &config, 0, clock.clone(), None).unwrap();
    let reply = client
        .chat(vec![ChatMessage::user("try")], &sampling())
        .unwrap();
    assert_eq!(reply, "recovered");
    assert_eq!(server.requests().len(), 3);
    // Two backoffs elapsed on the virtual clock: 500ms and 1000ms bases,
    // each jittered into [0.5, 1.5] of the base.
    let slept = clock.elapsed();
    assert!(slept >= std::time::Duration::from_millis(750), "{slept:?}");
    assert!(slept <= std::time::Duration::from_millis(2250), "{slept:?}");
}

#[test]
fn fatal_statuses_fail_without_retry() {
    let server = StubServer::start(chat_body("unused"));
    server.push_response(404, "no such model".to_string());
    let config = http_config(server.base_url(), "ALIGNLAB_TEST_KEY_UNSET");
    let clock = Arc::new(VirtualClock::new());
    let client = ChatClient::from_config("judge", &config, 0, clock, None).unwrap();
    let err = client
        .chat(vec![ChatMessage::user("try")], &sampling())
        .unwrap_err();
    assert!(matches!(err, Error::ProviderFatal(_)), "{err:?}");
    assert_eq!(server.requests().len(), 1);
}

#[test]
fn exhausted_retries_report_the_last_error() {
    let server = StubServer::start(chat_body("unused"));
    let mut config = http_config(server.base_url(), "ALIGNLAB_TEST_KEY_UNSET");
    config.max_retries = 1;
    for _ in 0..2 {
        server.push_response(500, "boom".to_string());
    }
    let clock = Arc::new(VirtualClock::new());
    let client = ChatClient::from_config("induction", &config, 0, clock, None).unwrap();
    let err = client
        .chat(vec![ChatMessage::user("try")], &sampling())
        .unwrap_err();
    match err {
        Error::ProviderExhausted { attempts, .. } => assert_eq!(attempts, 2),
        other => panic!("unexpected error {other:?}"),
    }
    assert_eq!(server.requests().len(), 2);
}

#[test]
fn embeddings_round_trip_normalizes_vectors() {
    let server = StubServer::start(embeddings_body(&[vec![3.0, 4.0], vec![0.0, 2.0]]));
    let config = http_config(server.base_url(), "ALIGNLAB_TEST_KEY_UNSET");
    let clock = Arc::new(VirtualClock::new());
    let embedder = EmbeddingClient::from_config(&config, clock).unwrap();
    let vectors = embedder
        .embed(&["first".to_string(), "second".to_string()])
        .unwrap();
    assert_eq!(vectors.len(), 2);
    assert!((vectors[0][0] - 0.6).abs() < 1e-9);
    assert!((vectors[0][1] - 0.8).abs() < 1e-9);
    assert!((vectors[1][1] - 1.0).abs() < 1e-9);
    let requests = server.requests();
    assert_eq!(requests[0].path, "/embeddings");
    assert_eq!(requests[0].body["input"][0], "first");
}
