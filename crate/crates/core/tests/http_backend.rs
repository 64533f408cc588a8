//! HttpBackend against a scripted local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use funcmapper::llm::{CompletionBackend, CompletionConfig, CompletionRequest, HttpBackend, LlmError, RetryPolicy};

struct Recorded {
    authorization: Option<String>,
    body: serde_json::Value,
}

/// Serves `script` responses in order, one per connection, and records what
/// it received.
fn serve(script: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Recorded>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            let mut authorization = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                if let Some((name, value)) = line.split_once(':') {
                    match name.to_ascii_lowercase().as_str() {
                        "content-length" => length = value.trim().parse().unwrap(),
                        "authorization" => authorization = Some(value.trim().to_string()),
                        _ => {}
                    }
                }
            }
            let mut raw = vec![0; length];
            reader.read_exact(&mut raw).unwrap();
            log.lock().unwrap().push(Recorded {
                authorization,
                body: serde_json::from_slice(&raw).unwrap(),
            });
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} Scripted\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn completion(content: &str) -> String {
    serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": content } }] }).to_string()
}

fn config(endpoint: String) -> CompletionConfig {
    CompletionConfig {
        endpoint,
        model: "test-model".into(),
        api_key: Some("sk-test".into()),
        retry: RetryPolicy {
            attempts: 3,
            backoff_ms: 1,
        },
        timeout_secs: 5,
        ..CompletionConfig::default()
    }
}

fn request() -> CompletionRequest {
    CompletionRequest {
        correlation_id: "c1".into(),
        prompt: "Clause ID: X:1\nClause: something".into(),
    }
}

#[test]
fn sends_chat_request_and_returns_content() {
    let (url, seen) = serve(vec![(200, completion("FUNCTION: hasSpace(building a, space b)"))]);
    let backend = HttpBackend::new(config(url)).unwrap();
    let text = backend.complete(&request()).unwrap();
    assert_eq!(text, "FUNCTION: hasSpace(building a, space b)");

    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer sk-test"));
    let body = &seen[0].body;
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["role"], "user");
    assert_eq!(body["messages"][1]["content"], "Clause ID: X:1\nClause: something");
}

#[test]
fn retries_server_errors_then_succeeds() {
    let (url, seen) = serve(vec![
        (503, "{}".into()),
        (429, "{}".into()),
        (200, completion("ok")),
    ]);
    let backend = HttpBackend::new(config(url)).unwrap();
    assert_eq!(backend.complete(&request()).unwrap(), "ok");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn authentication_failure_is_not_retried() {
    let (url, seen) = serve(vec![(401, r#"{"error":"bad key"}"#.into()), (200, completion("late"))]);
    let backend = HttpBackend::new(config(url)).unwrap();
    let err = backend.complete(&request()).unwrap_err();
    assert!(matches!(err, LlmError::Authentication { status: 401 }), "{err}");
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn context_overflow_is_reported() {
    let body = r#"{"error":{"code":"context_length_exceeded","message":"too long"}}"#;
    let (url, _) = serve(vec![(400, body.into())]);
    let backend = HttpBackend::new(config(url)).unwrap();
    assert!(matches!(backend.complete(&request()), Err(LlmError::ContextOverflow(_))));
}

#[test]
fn malformed_body_is_reported() {
    let (url, _) = serve(vec![(200, r#"{"unexpected":true}"#.into())]);
    let backend = HttpBackend::new(config(url)).unwrap();
    assert!(matches!(backend.complete(&request()), Err(LlmError::MalformedResponse(_))));
}

#[test]
fn unreachable_endpoint_exhausts_attempts() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut cfg = config(format!("http://127.0.0.1:{port}/v1/chat/completions"));
    cfg.retry.attempts = 2;
    let backend = HttpBackend::new(cfg).unwrap();
    match backend.complete(&request()) {
        Err(LlmError::Transport { attempts, .. }) => assert_eq!(attempts, 2),
        other => panic!("expected transport error, got {other:?}"),
    }
}
