//! Scripted chat-completion server on a loopback port.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

pub type Responder = dyn Fn(usize, &serde_json::Value) -> (u16, String) + Send + Sync;

pub struct MockServer {
    pub endpoint: String,
    hits: Arc<AtomicUsize>,
}

impl MockServer {
    /// `respond(n, body)` gets the zero-based request number and the parsed
    /// JSON body; it returns a status and the assistant text (or raw body
    /// for non-2xx statuses).
    pub fn start(
        respond: impl Fn(usize, &serde_json::Value) -> (u16, String) + Send + Sync + 'static,
    ) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let endpoint = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let respond: Arc<Responder> = Arc::new(respond);
        let counter = hits.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let respond = respond.clone();
                let counter = counter.clone();
                thread::spawn(move || serve(stream, &*respond, &counter));
            }
        });
        Self { endpoint, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, respond: &Responder, hits: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut out = stream;
    out.set_nodelay(true).ok();
    loop {
        let mut length = 0usize;
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        loop {
            line.clear();
            if reader.read_line(&mut line).unwrap_or(0) == 0 {
                return;
            }
            let trimmed = line.trim_end();
            if trimmed.is_empty() {
                break;
            }
            if let Some((name, value)) = trimmed.split_once(':') {
                if name.eq_ignore_ascii_case("content-length") {
                    length = value.trim().parse().unwrap();
                }
            }
        }
        let mut body = vec![0; length];
        reader.read_exact(&mut body).unwrap();
        let json: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
        let n = hits.fetch_add(1, Ordering::SeqCst);
        let (status, text) = respond(n, &json);
        let payload = if (200..300).contains(&status) {
            serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]})
                .to_string()
        } else {
            text
        };
        let response = format!(
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{payload}",
            payload.len()
        );
        if out.write_all(response.as_bytes()).is_err() {
            return;
        }
    }
}

pub fn prompt_of(body: &serde_json::Value) -> String {
    body["messages"][0]["content"]
        .as_str()
        .unwrap_or_default()
        .to_string()
}
