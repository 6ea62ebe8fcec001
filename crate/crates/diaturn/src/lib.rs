//! diaturn — a data plane for diarization-conditioned multi-turn
//! transcription.
//!
//! The library turns diarization output (RTTM) plus word-level
//! transcripts (CTM) into chunk-local, token-discretized multi-turn
//! dialogues, drives a pluggable turn-by-turn recognizer over them,
//! composes hypotheses under four evaluation setups, and scores the
//! results with DER, cpWER/cpCER, and tcpWER/tcpCER.
//!
//! Pipeline stages and where they live:
//!
//! - [`timeline`] — recording timelines and the 15-25 s chunking policy
//! - [`io`] — RTTM / CTM / SegLST readers and writers
//! - [`codec`] — special tokens, timestamp grid, prompts, targets
//! - [`perturb`] — label perturbation for robustness training data
//! - [`dialogue`] — multi-turn assembly and the dialogue JSONL format
//! - [`harness`] — backend trait, mock oracle, wire protocol, setups
//! - [`metrics`] — DER, cpWER, tcpWER with error breakdowns
//! - [`synth`] — deterministic synthetic corpora
//! - [`pipeline`] — end-to-end commands behind the `diaturn` binary
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example chunk_recording      # RTTM -> chunks
//! cargo run --example prompts_and_targets  # token codec round trips
//! cargo run --example build_dialogues      # dialogue JSONL + loss spans
//! cargo run --example perturb_labels       # label perturbation stats
//! cargo run --example run_mock_inference   # mock backend, four setups
//! cargo run --example score_hypotheses     # DER / cpWER / tcpWER
//! cargo run --example external_backend     # wire-protocol backend
//! ```
//!
//! The `diaturn` binary chains the same stages as subcommands
//! (`ingest`, `build`, `simulate`, `compose`, `score`, `report`); see
//! the README for the file formats and flags.

pub mod codec;
pub mod dialogue;
pub mod error;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod perturb;
pub mod pipeline;
pub mod synth;
pub mod time;
pub mod timeline;

pub use error::{Error, Result};
pub use time::{overlap_duration, Time, TimeInterval};
pub use timeline::{
    chunk_recording, clip_segment, Chunk, DiarSegment, Recording, WordTiming, DEFAULT_MIN_CLIP,
};
