//! Minimal in-process HTTP stub speaking just enough of the chat-completions
//! wire protocol for client tests: request capture, scripted status codes,
//! and fixed reply bodies.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct CapturedHttp {
    pub path: String,
    pub authorization: Option<String>,
    pub body: serde_json::Value,
}

pub struct StubServer {
    addr: std::net::SocketAddr,
    requests: Arc<Mutex<Vec<CapturedHttp>>>,
    scripted: Arc<Mutex<VecDeque<(u16, String)>>>,
    running: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

pub fn chat_body(text: &str) -> String {
    serde_json::json!({"choices": [{"message": {"content": text}}]}).to_string()
}

pub fn embeddings_body(vectors: &[Vec<f64>]) -> String {
    let data: Vec<serde_json::Value> = vectors
        .iter()
        .map(|v| serde_json::json!({"embedding": v}))
        .collect();
    serde_json::json!({"data": data}).to_string()
}

fn read_request(stream: &mut TcpStream) -> Option<(String, Option<String>, Vec<u8>)> {
    stream
        .set_read_timeout(Some(Duration::from_secs(5)))
        .ok()?;
    let mut buf = Vec::new();
    let mut chunk = [0u8; 1024];
    let header_end = loop {
        if let Some(pos) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
            break pos + 4;
        }
        let n = stream.read(&mut chunk).ok()?;
        if n == 0 {
            return None;
        }
        buf.extend_from_slice(&chunk[..n]);
    };
    let head = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let mut lines = head.lines();
    let request_line = lines.next()?;
    let path = request_line.split_whitespace().nth(1)?.to_string();
    let mut content_length = 0usize;
    let mut authorization = None;
    for line in lines {
        let lower = line.to_ascii_lowercase();
        if let Some(value) = lower.strip_prefix("content-length:") {
            content_length = value.trim().parse().ok()?;
        }
        if lower.starts_with("authorization:") {
            authorization = Some(line.splitn(2, ':').nth(1)?.trim().to_string());
        }
    }
    let mut body = buf[header_end..].to_vec();
    while body.len() < content_length {
        let n = stream.read(&mut chunk).ok()?;
        if n == 0 {
            break;
        }
        body.extend_from_slice(&chunk[..n]);
    }
    Some((path, authorization, body))
}

fn write_response(stream: &mut TcpStream, status: u16, body: &str) {
    let reason = match status {
        200 => "OK",
        404 => "Not Found",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        _ => "Status",
    };
    let response = format!(
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.write_all(response.as_bytes());
    let _ = stream.flush();
}

impl StubServer {
    /// Serve `default_body` with status 200 for every request not covered by
    /// a scripted response.
    pub fn start(default_body: String) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let addr = listener.local_addr().unwrap();
        let requests: Arc<Mutex<Vec<CapturedHttp>>> = Arc::new(Mutex::new(Vec::new()));
        let scripted: Arc<Mutex<VecDeque<(u16, String)>>> = Arc::new(Mutex::new(VecDeque::new()));
        let running = Arc::new(AtomicBool::new(true));
        let handle = {
            let requests = requests.clone();
            let scripted = scripted.clone();
            let running = running.clone();
            std::thread::spawn(move || {
                while running.load(Ordering::SeqCst) {
                    let Ok((mut stream, _)) = listener.accept() else {
                        break;
                    };
                    if !running.load(Ordering::SeqCst) {
                        break;
                    }
                    let Some((path, authorization, body)) = read_request(&mut stream) else {
                        continue;
                    };
                    let parsed = serde_json::from_slice(&body)
                        .unwrap_or(serde_json::Value::Null);
                    requests.lock().unwrap().push(CapturedHttp {
                        path,
                        authorization,
                        body: parsed,
                    });
                    let (status, reply) = scripted
                        .lock()
                        .unwrap()
                        .pop_front()
                        .unwrap_or((200, default_body.clone()));
                    write_response(&mut stream, status, &reply);
                }
            })
        };
        Self {
            addr,
            requests,
            scripted,
            running,
            handle: Some(handle),
        }
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Queue a one-shot response consumed before the default body.
    pub fn push_response(&self, status: u16, body: String) {
        self.scripted.lock().unwrap().push_back((status, body));
    }

    pub fn requests(&self) -> Vec<CapturedHttp> {
        self.requests.lock().unwrap().clone()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.running.store(false, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}
