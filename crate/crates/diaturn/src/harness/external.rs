//! Bridge to an out-of-process recognizer over line-delimited JSON.
//!
//! Requests (one JSON object per line):
//!   `{"type":"open_audio","protocol":1,"chunk_id":...,"audio_ref":{"recording_id":...,"start_s":...,"end_s":...}}`
//!   `{"type":"turn","chunk_id":...,"prompt":...}`
//!   `{"type":"close","chunk_id":...}`
//! Every request gets exactly one response line: `{"text":...,"error":null}`.
//! A set `error` field fails that call; malformed JSON, EOF, or a
//! timeout aborts the session and every later call fails fast.
//!
//! Endpoints: `tcp://host:port` connects a socket; anything else is run
//! as a command speaking the protocol on stdin/stdout.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::backend::{AudioRef, BackendCaps, RecognizerBackend};

pub const WIRE_PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct ExternalBackendConfig {
    pub timeout: Duration,
    pub caps: BackendCaps,
}

impl Default for ExternalBackendConfig {
    fn default() -> Self {
        ExternalBackendConfig {
            timeout: Duration::from_secs(30),
            caps: BackendCaps::default(),
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    #[serde(rename = "type")]
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    protocol: Option<u32>,
    chunk_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    audio_ref: Option<&'a AudioRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prompt: Option<&'a str>,
}

#[derive(Deserialize)]
struct WireResponse {
    #[serde(default)]
    text: String,
    #[serde(default)]
    error: Option<String>,
}

enum Transport {
    Tcp(TcpStream, BufReader<TcpStream>),
    Child {
        child: Child,
        lines: mpsc::Receiver<std::io::Result<String>>,
    },
}

impl Transport {
    fn send(&mut self, line: &str) -> Result<()> {
        match self {
            Transport::Tcp(stream, _) => {
                stream.write_all(line.as_bytes())?;
                stream.write_all(b"\n")?;
                stream.flush()?;
            }
            Transport::Child { child, .. } => {
                let stdin = child
                    .stdin
                    .as_mut()
                    .ok_or_else(|| Error::Backend("backend stdin closed".into()))?;
                stdin.write_all(line.as_bytes())?;
                stdin.write_all(b"\n")?;
                stdin.flush()?;
            }
        }
        Ok(())
    }

    fn recv(&mut self, timeout: Duration) -> Result<String> {
        match self {
            Transport::Tcp(stream, reader) => {
                stream.set_read_timeout(Some(timeout))?;
                let mut line = String::new();
                let n = reader.read_line(&mut line).map_err(|e| {
                    if e.kind() == std::io::ErrorKind::WouldBlock
                        || e.kind() == std::io::ErrorKind::TimedOut
                    {
                        Error::Backend(format!("timed out after {:?}", timeout))
                    } else {
                        Error::Backend(format!("read failed: {}", e))
                    }
                })?;
                if n == 0 {
                    return Err(Error::Backend("connection closed".into()));
                }
                Ok(line)
            }
            Transport::Child { lines, .. } => match lines.recv_timeout(timeout) {
                Ok(Ok(line)) => Ok(line),
                Ok(Err(e)) => Err(Error::Backend(format!("read failed: {}", e))),
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    Err(Error::Backend(format!("timed out after {:?}", timeout)))
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => {
                    Err(Error::Backend("backend process closed its output".into()))
                }
            },
        }
    }
}

/// Adapter holding one wire session at a time.
pub struct ExternalBackend {
    transport: Transport,
    cfg: ExternalBackendConfig,
    open_chunk: Option<String>,
    dead: Option<String>,
}

impl ExternalBackend {
    /// Connects a `tcp://host:port` endpoint or spawns a command.
    pub fn connect(endpoint: &str, cfg: ExternalBackendConfig) -> Result<ExternalBackend> {
        let transport = if let Some(addr) = endpoint.strip_prefix("tcp://") {
            let stream = TcpStream::connect(addr)
                .map_err(|e| Error::Backend(format!("connect {}: {}", addr, e)))?;
            let reader = BufReader::new(
                stream
                    .try_clone()
                    .map_err(|e| Error::Backend(format!("clone socket: {}", e)))?,
            );
            Transport::Tcp(stream, reader)
        } else {
            let mut parts = endpoint.split_whitespace();
            let program = parts
                .next()
                .ok_or_else(|| Error::Backend("empty backend command".into()))?;
            let mut child = Command::new(program)
                .args(parts)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .spawn()
                .map_err(|e| Error::Backend(format!("spawn {:?}: {}", endpoint, e)))?;
            let stdout = child
                .stdout
                .take()
                .ok_or_else(|| Error::Backend("backend stdout unavailable".into()))?;
            let (tx, rx) = mpsc::channel();
            std::thread::spawn(move || {
                let reader = BufReader::new(stdout);
                for line in reader.lines() {
                    if tx.send(line).is_err() {
                        break;
                    }
                }
            });
            Transport::Child { child, lines: rx }
        };
        Ok(ExternalBackend {
            transport,
            cfg,
            open_chunk: None,
            dead: None,
        })
    }

    fn request(&mut self, req: &WireRequest<'_>) -> Result<String> {
        if let Some(reason) = &self.dead {
            return Err(Error::Backend(format!("session aborted: {}", reason)));
        }
        let line = serde_json::to_string(req)?;
        let outcome = self
            .transport
            .send(&line)
            .and_then(|()| self.transport.recv(self.cfg.timeout));
        let reply = match outcome {
            Ok(reply) => reply,
            Err(e) => {
                self.dead = Some(e.to_string());
                return Err(e);
            }
        };
        let parsed: WireResponse = match serde_json::from_str(reply.trim()) {
            Ok(parsed) => parsed,
            Err(e) => {
                let reason = format!("malformed reply {:?}: {}", reply.trim(), e);
                self.dead = Some(reason.clone());
                return Err(Error::Backend(reason));
            }
        };
        match parsed.error {
            Some(err) => Err(Error::Backend(format!("backend reported: {}", err))),
            None => Ok(parsed.text),
        }
    }
}

impl RecognizerBackend for ExternalBackend {
    fn capabilities(&self) -> BackendCaps {
        self.cfg.caps
    }

    fn open_audio(&mut self, chunk_id: &str, audio_ref: &AudioRef) -> Result<()> {
        self.request(&WireRequest {
            kind: "open_audio",
            protocol: Some(WIRE_PROTOCOL_VERSION),
            chunk_id,
            audio_ref: Some(audio_ref),
            prompt: None,
        })?;
        self.open_chunk = Some(chunk_id.to_string());
        Ok(())
    }

    fn turn(&mut self, prompt: &str) -> Result<String> {
        let chunk_id = self
            .open_chunk
            .clone()
            .ok_or_else(|| Error::Backend("turn before open_audio".into()))?;
        self.request(&WireRequest {
            kind: "turn",
            protocol: None,
            chunk_id: &chunk_id,
            audio_ref: None,
            prompt: Some(prompt),
        })
    }

    fn close(&mut self) -> Result<()> {
        let chunk_id = match self.open_chunk.take() {
            Some(id) => id,
            None => return Ok(()),
        };
        // Best effort: a dead session has nothing to close.
        if self.dead.is_none() {
            let _ = self.request(&WireRequest {
                kind: "close",
                protocol: None,
                chunk_id: &chunk_id,
                audio_ref: None,
                prompt: None,
            });
        }
        Ok(())
    }
}

impl Drop for ExternalBackend {
    fn drop(&mut self) {
        if let Transport::Child { child, .. } = &mut self.transport {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
