//! The HTTP completion backend against a local stub server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use adarefiner::config::RunConfig;
use adarefiner::craftworld::{EnvConfig, WorldState};
use adarefiner::lm::{build_decision_prompt, Backend, BackendSpec, DecisionInput, HttpBackend, LmError, ReplayBufferView};
use adarefiner::orchestrator::{generation_step, Backends, Counters, GoalDriver};
use adarefiner::textembed::ComprehensionScore;

enum Reply {
    /// Close the connection without answering.
    Hangup,
    Json(u16, String),
}

fn chat(content: &str) -> Reply {
    Reply::Json(200, serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string())
}

struct Stub {
    endpoint: String,
    requests: Arc<Mutex<Vec<(String, String)>>>,
}

/// Serves `replies` in order, one connection each, recording (head, body).
fn stub(replies: Vec<Reply>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let log = requests.clone();
    thread::spawn(move || {
        for reply in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
                head.push_str(&line);
            }
            let len = head
                .lines()
                .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                .unwrap_or(0);
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push((head, String::from_utf8(body).unwrap()));
            let mut stream = stream;
            match reply {
                Reply::Hangup => drop(stream),
                Reply::Json(status, text) => {
                    let _ = write!(
                        stream,
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                        text.len()
                    );
                }
            }
        }
    });
    Stub { endpoint, requests }
}

fn spec(endpoint: &str) -> BackendSpec {
    let mut s = BackendSpec::http(endpoint, "test-model");
    s.backoff_base_secs = 0.01;
    s.timeout_secs = 5.0;
    s
}

fn view() -> ReplayBufferView {
    let world = WorldState::new(EnvConfig { size: 16, ..EnvConfig::default() }, 1);
    let driver = GoalDriver::new(&RunConfig::default(), 0);
    driver.view(&world, &world.observation())
}

#[test]
fn request_carries_both_messages_and_sampling_params() {
    let s = stub(vec![chat("collect wood, place table, eat cow")]);
    let backend = HttpBackend::new(spec(&s.endpoint));
    let prompt = build_decision_prompt(&view(), DecisionInput::Score(Some(ComprehensionScore(0.25)))).unwrap();
    let text = backend.complete(&prompt).unwrap();
    assert_eq!(text, "collect wood, place table, eat cow");

    let requests = s.requests.lock().unwrap();
    let (head, body) = &requests[0];
    assert!(head.starts_with("POST /v1/chat/completions"), "{head}");
    let json: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(json["model"], "test-model");
    assert_eq!(json["messages"][0]["role"], "system");
    assert_eq!(json["messages"][0]["content"], prompt.system.as_str());
    assert_eq!(json["messages"][1]["content"], prompt.user.as_str());
    assert_eq!(json["temperature"], 0.5);
    assert_eq!(json["top_p"], 1.0);
    assert_eq!(json["max_tokens"], 100);
}

#[test]
fn transport_failures_are_retried() {
    let s = stub(vec![Reply::Hangup, Reply::Hangup, chat("a, b, c")]);
    let backend = HttpBackend::new(spec(&s.endpoint));
    let prompt = build_decision_prompt(&view(), DecisionInput::Score(None)).unwrap();
    assert_eq!(backend.complete(&prompt).unwrap(), "a, b, c");
    assert_eq!(s.requests.lock().unwrap().len(), 3);
}

#[test]
fn retry_budget_is_finite() {
    let s = stub(vec![Reply::Hangup, Reply::Hangup]);
    let mut sp = spec(&s.endpoint);
    sp.retry_budget = 2;
    let prompt = build_decision_prompt(&view(), DecisionInput::Score(None)).unwrap();
    match HttpBackend::new(sp).complete(&prompt) {
        Err(LmError::Transport { attempts, .. }) => assert_eq!(attempts, 2),
        other => panic!("expected a transport error, got {other:?}"),
    }
}

#[test]
fn error_status_is_a_protocol_error() {
    let s = stub(vec![Reply::Json(503, "{\"error\":\"busy\"}".into())]);
    let prompt = build_decision_prompt(&view(), DecisionInput::Score(None)).unwrap();
    match HttpBackend::new(spec(&s.endpoint)).complete(&prompt) {
        Err(LmError::Protocol { status, body }) => {
            assert_eq!(status, 503);
            assert!(body.contains("busy"));
        }
        other => panic!("expected a protocol error, got {other:?}"),
    }
    let s = stub(vec![Reply::Json(200, "{\"choices\":[]}".into())]);
    assert!(matches!(HttpBackend::new(spec(&s.endpoint)).complete(&prompt), Err(LmError::Malformed(_))));
}

#[test]
fn unusable_answers_carry_the_previous_goals() {
    let s = stub(vec![
        chat("collect wood, place table, eat cow"),
        chat("I am not sure what to suggest."),
        Reply::Json(500, "{}".into()),
        chat("collect drink, eat cow, collect sapling"),
    ]);
    let backends = Backends { adapter: Backend::from_spec(&BackendSpec::scripted()), decision: Backend::from_spec(&spec(&s.endpoint)) };
    let v = view();
    let mut counters = Counters::default();
    let mut previous = None;
    let mut history = Vec::new();
    for round in 0..4u64 {
        let (summary, goals) = generation_step(&v, &backends, &[], ComprehensionScore(0.1), round, previous.as_ref(), &mut counters);
        history.push(goals.clone().map(|g| g.to_string()));
        previous = Some(adarefiner::orchestrator::Generation {
            id: round,
            tick: round * 20,
            summary,
            goals,
            score: ComprehensionScore(0.1),
            context: v.clone(),
        });
    }
    let first = Some("collect wood, place table, eat cow".to_string());
    assert_eq!(history, vec![first.clone(), first.clone(), first, Some("collect drink, eat cow, collect sapling".into())]);
    assert_eq!(counters.decision_calls, 4);
    assert_eq!(counters.parse_failures, 1);
    assert_eq!(counters.dropped_queries, 1);
}
