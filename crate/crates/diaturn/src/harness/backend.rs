//! The pluggable recognizer interface driven by the harness.

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Where the audio for a chunk lives; the harness never moves audio
/// bytes, only this reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioRef {
    pub recording_id: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// What a backend can do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackendCaps {
    /// Backend keeps per-session state between turns; when false the
    /// harness replays the dialogue so far as a prompt prefix.
    pub supports_context_reuse: bool,
    pub supports_timestamps: bool,
}

impl Default for BackendCaps {
    fn default() -> Self {
        BackendCaps {
            supports_context_reuse: true,
            supports_timestamps: true,
        }
    }
}

/// A turn-by-turn recognizer session. One session at a time: exactly one
/// `open_audio`, then zero or more `turn` calls, then `close`.
pub trait RecognizerBackend {
    fn capabilities(&self) -> BackendCaps;

    /// Starts a session over one chunk's audio.
    fn open_audio(&mut self, chunk_id: &str, audio_ref: &AudioRef) -> Result<()>;

    /// Sends one prompt and returns the raw response text.
    fn turn(&mut self, prompt: &str) -> Result<String>;

    fn close(&mut self) -> Result<()>;
}
