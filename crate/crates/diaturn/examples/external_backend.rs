//! Serve the line-delimited JSON wire protocol from a thread and drive
//! the harness against it over TCP. A real recognizer only has to speak
//! the same protocol on a socket or on stdin/stdout.
//!
//! ```bash
//! cargo run --example external_backend
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;

use diaturn::codec::{TargetMode, TargetWords};
use diaturn::dialogue::build_dialogue;
use diaturn::harness::{run_dialogue, ExternalBackend, ExternalBackendConfig, RecognizerBackend};
use diaturn::perturb::PerturbationConfig;
use diaturn::time::TimeInterval;
use diaturn::timeline::{Chunk, DiarSegment};

/// A toy recognizer: acknowledges the session and answers every turn
/// with a fixed transcription.
fn serve(listener: TcpListener) {
    let (stream, _) = listener.accept().unwrap();
    let mut writer = stream.try_clone().unwrap();
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let line = match line {
            Ok(line) => line,
            Err(_) => break,
        };
        let request: serde_json::Value = serde_json::from_str(&line).unwrap();
        eprintln!("server <- {}", request["type"].as_str().unwrap_or("?"));
        let text = match request["type"].as_str() {
            Some("turn") => "<|spk_idx_0|>transcribed by the external backend",
            _ => "",
        };
        let reply = serde_json::json!({ "text": text, "error": null });
        writeln!(writer, "{}", reply).unwrap();
    }
}

fn main() -> diaturn::Result<()> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let endpoint = format!("tcp://{}", listener.local_addr()?);
    std::thread::spawn(move || serve(listener));

    let chunk = Chunk::new(
        "demo-c000",
        "demo",
        TimeInterval::from_seconds(0.0, 6.0)?,
        vec![
            DiarSegment::new("alice", TimeInterval::from_seconds(0.0, 2.5)?)?,
            DiarSegment::new("bob", TimeInterval::from_seconds(3.0, 6.0)?)?,
        ],
    )?;
    let mut transcripts = BTreeMap::new();
    transcripts.insert(0, TargetWords::Plain(vec!["hi".into(), "there".into()]));
    transcripts.insert(1, TargetWords::Plain(vec!["hello".into()]));
    let dialogue = build_dialogue(
        &chunk,
        0,
        &transcripts,
        TargetMode::Plain,
        &PerturbationConfig::off(0),
        &Default::default(),
    )?;

    let mut backend = ExternalBackend::connect(&endpoint, ExternalBackendConfig::default())?;
    println!("connected to {}", endpoint);
    println!("capabilities: {:?}", backend.capabilities());
    let outcomes = run_dialogue(&dialogue, &mut backend);
    for outcome in &outcomes {
        println!(
            "turn {}: failed={} response={:?}",
            outcome.turn_index, outcome.failed, outcome.response
        );
    }
    Ok(())
}
