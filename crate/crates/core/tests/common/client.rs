//! Scripted WebSocket client for a running node.

use std::collections::VecDeque;
use std::net::TcpListener;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

/// A port that was free a moment ago.
pub fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

/// Minimal HTTP/1.1 GET returning status code and body.
pub async fn http_get(port: u16, path: &str) -> (u16, String) {
    let mut s = None;
    for _ in 0..100 {
        if let Ok(conn) = tokio::net::TcpStream::connect(("127.0.0.1", port)).await {
            s = Some(conn);
            break;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    let mut s = s.expect("node listening");
    let req = format!("GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n");
    s.write_all(req.as_bytes()).await.unwrap();
    let mut buf = String::new();
    s.read_to_string(&mut buf).await.unwrap();
    let code = buf[9..12].parse().unwrap();
    let body = buf.split_once("\r\n\r\n").map(|(_, b)| b.to_owned()).unwrap_or_default();
    (code, body)
}

pub struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    next_id: u64,
    /// Frames received while waiting for something else.
    pub backlog: VecDeque<Value>,
    pub token: Option<String>,
}

impl Client {
    pub async fn connect(api_port: u16) -> Client {
        let url = format!("ws://127.0.0.1:{api_port}/ws");
        let mut last = None;
        for _ in 0..100 {
            match tokio_tungstenite::connect_async(&url).await {
                Ok((ws, _)) => {
                    return Client {
                        ws,
                        next_id: 1,
                        backlog: VecDeque::new(),
                        token: None,
                    }
                }
                Err(e) => last = Some(e),
            }
            tokio::time::sleep(Duration::from_millis(50)).await;
        }
        panic!("cannot connect to {url}: {last:?}");
    }

    async fn recv(&mut self, deadline: tokio::time::Instant) -> Option<Value> {
        loop {
            let msg = tokio::time::timeout_at(deadline, self.ws.next()).await.ok()??.ok()?;
            if let Message::Text(text) = msg {
                return Some(serde_json::from_str(&text).expect("server frames are JSON"));
            }
        }
    }

    /// Sends a raw text frame.
    pub async fn send_text(&mut self, text: &str) {
        self.ws.send(Message::Text(text.into())).await.unwrap();
    }

    /// Sends a request and returns the frame answering it. The token is
    /// added to the body once joined.
    pub async fn request(&mut self, kind: &str, mut body: Value) -> Value {
        let id = self.next_id;
        self.next_id += 1;
        if let (Some(token), Some(obj)) = (&self.token, body.as_object_mut()) {
            obj.entry("token").or_insert_with(|| json!(token));
        }
        let frame = json!({ "req_id": id, "type": kind, "body": body });
        self.send_text(&frame.to_string()).await;
        let deadline = tokio::time::Instant::now() + Duration::from_secs(10);
        loop {
            let v = self.recv(deadline).await.unwrap_or_else(|| panic!("no reply to {kind}"));
            if v.get("req_id") == Some(&json!(id)) {
                return v;
            }
            self.backlog.push_back(v);
        }
    }

    pub async fn join(&mut self, nickname: &str) -> Value {
        let reply = self.request("join", json!({ "nickname": nickname })).await;
        assert_eq!(reply["type"], "join", "{reply}");
        self.token = Some(reply["body"]["token"].as_str().unwrap().to_owned());
        reply
    }

    /// Waits for the first pushed event of `kind` satisfying `pred`.
    pub async fn wait_event(&mut self, kind: &str, timeout: Duration, pred: impl Fn(&Value) -> bool) -> Option<Value> {
        if let Some(pos) = self.backlog.iter().position(|v| v["type"] == kind && pred(&v["body"])) {
            return self.backlog.remove(pos);
        }
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            let v = self.recv(deadline).await?;
            if v["type"] == kind && v.get("req_id").is_none() && pred(&v["body"]) {
                return Some(v);
            }
            self.backlog.push_back(v);
        }
    }

    /// Next pushed event, oldest backlog entry first.
    pub async fn next_event(&mut self, deadline: tokio::time::Instant) -> Option<Value> {
        if let Some(pos) = self.backlog.iter().position(|v| v.get("req_id").is_none()) {
            return self.backlog.remove(pos);
        }
        loop {
            let v = self.recv(deadline).await?;
            if v.get("req_id").is_none() {
                return Some(v);
            }
        }
    }

    pub async fn close(mut self) {
        let _ = self.ws.close(None).await;
    }
}
