use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use beerlab::llm::{network_calls, ChatRequest, ChatTransport, HttpTransport, RequestLimits, TransportError};

/// One-shot HTTP server: answers a single request with `status` and `body`,
/// and hands back the raw request head and body.
fn serve_once(status: u16, body: &'static str) -> (String, thread::JoinHandle<(String, String)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut head = String::new();
        let mut len = 0usize;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
            if line == "\r\n" {
                break;
            }
            head.push_str(&line);
        }
        let mut buf = vec![0; len];
        reader.read_exact(&mut buf).unwrap();
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
            body.len()
        )
        .unwrap();
        (head, String::from_utf8(buf).unwrap())
    });
    (url, handle)
}

fn request() -> ChatRequest {
    ChatRequest {
        model: "m-1".into(),
        temperature: 0.0,
        system_role: "system".into(),
        system: "sys".into(),
        user: "round 1".into(),
    }
}

fn transport(url: &str, key: Option<&str>) -> HttpTransport {
    HttpTransport::new(url, key.map(str::to_string), Duration::from_secs(5), RequestLimits::new(2, Duration::ZERO)).unwrap()
}

#[test]
fn posts_chat_body_and_reads_reply() {
    let (url, server) = serve_once(200, r#"{"choices":[{"message":{"role":"assistant","content":"I order [7]"}}]}"#);
    let before = network_calls();
    let reply = transport(&url, Some("k-123")).complete(&request()).unwrap();
    assert_eq!(reply.text, "I order [7]");
    assert!(network_calls() > before);
    let (head, body) = server.join().unwrap();
    assert!(head.starts_with("POST /v1/chat/completions"));
    assert!(head.to_ascii_lowercase().contains("authorization: bearer k-123"));
    let json: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(json["model"], "m-1");
    assert_eq!(json["messages"][0]["role"], "system");
    assert_eq!(json["messages"][1]["content"], "round 1");
}

#[test]
fn error_status_is_reported() {
    let (url, server) = serve_once(429, r#"{"error":"slow down"}"#);
    let err = transport(&url, None).complete(&request()).unwrap_err();
    assert!(matches!(err, TransportError::Status { status: 429, .. }), "{err:?}");
    let (head, _) = server.join().unwrap();
    assert!(!head.to_ascii_lowercase().contains("authorization"));
}

#[test]
fn malformed_body_is_a_shape_error() {
    let (url, server) = serve_once(200, r#"{"choices":[]}"#);
    let err = transport(&url, None).complete(&request()).unwrap_err();
    assert!(matches!(err, TransportError::Shape(_)));
    server.join().unwrap();
}

#[test]
fn refused_connection_is_a_connection_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = transport(&format!("http://127.0.0.1:{port}/x"), None).complete(&request()).unwrap_err();
    assert!(matches!(err, TransportError::Connection(_)), "{err:?}");
}
