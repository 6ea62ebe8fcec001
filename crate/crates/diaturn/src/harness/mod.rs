//! Turn-by-turn inference over a pluggable recognizer, and hypothesis
//! composition under the four evaluation setups.
//!
//! A dialogue executes strictly sequentially against one backend
//! session: open the audio, send each turn's prompt, close. Transport
//! failures mark the turn failed with an empty response and the dialogue
//! continues. Composition is pure over the collected responses, so the
//! four setups can be replayed from one run without re-decoding.

mod backend;
mod external;
mod mock;

pub use backend::{AudioRef, BackendCaps, RecognizerBackend};
pub use external::{ExternalBackend, ExternalBackendConfig, WIRE_PROTOCOL_VERSION};
pub use mock::{MockOracleBackend, MockOracleConfig};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::{decode_response, undiscretize_instant, CodecConfig};
use crate::dialogue::Dialogue;
use crate::error::{Error, Result};
use crate::io::SegLstEntry;
use crate::timeline::WordTiming;

/// Where a composed hypothesis takes each field from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueSource {
    Diarization,
    Model,
}

/// One of the four evaluation setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSetup {
    pub speaker_source: CueSource,
    pub time_source: CueSource,
}

impl EvalSetup {
    pub const fn all() -> [EvalSetup; 4] {
        [
            EvalSetup {
                speaker_source: CueSource::Diarization,
                time_source: CueSource::Diarization,
            },
            EvalSetup {
                speaker_source: CueSource::Diarization,
                time_source: CueSource::Model,
            },
            EvalSetup {
                speaker_source: CueSource::Model,
                time_source: CueSource::Diarization,
            },
            EvalSetup {
                speaker_source: CueSource::Model,
                time_source: CueSource::Model,
            },
        ]
    }
}

impl fmt::Display for EvalSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spk = match self.speaker_source {
            CueSource::Diarization => "dia-spk",
            CueSource::Model => "llm-spk",
        };
        let time = match self.time_source {
            CueSource::Diarization => "dia-time",
            CueSource::Model => "llm-time",
        };
        write!(f, "{},{}", spk, time)
    }
}

impl FromStr for EvalSetup {
    type Err = Error;

    /// Parses `"<dia-spk|llm-spk>,<dia-time|llm-time>"`.
    fn from_str(s: &str) -> Result<EvalSetup> {
        let bad = || {
            Error::Config(format!(
                "unknown setup {:?} (expected e.g. dia-spk,llm-time)",
                s
            ))
        };
        let (spk, time) = s.split_once(',').ok_or_else(bad)?;
        let speaker_source = match spk.trim() {
            "dia-spk" => CueSource::Diarization,
            "llm-spk" => CueSource::Model,
            _ => return Err(bad()),
        };
        let time_source = match time.trim() {
            "dia-time" => CueSource::Diarization,
            "llm-time" => CueSource::Model,
            _ => return Err(bad()),
        };
        Ok(EvalSetup {
            speaker_source,
            time_source,
        })
    }
}

/// Raw outcome of one backend turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnOutcome {
    pub turn_index: usize,
    pub response: String,
    pub failed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Runs one dialogue against a backend session and collects every
/// turn's raw response. A failed turn yields an empty response with a
/// diagnostic; later turns still run.
pub fn run_dialogue(dialogue: &Dialogue, backend: &mut dyn RecognizerBackend) -> Vec<TurnOutcome> {
    let audio_ref = AudioRef {
        recording_id: dialogue.recording_id.clone(),
        start_s: dialogue.window.start().as_seconds(),
        end_s: dialogue.window.end().as_seconds(),
    };
    let mut outcomes = Vec::with_capacity(dialogue.turns.len());
    if let Err(e) = backend.open_audio(&dialogue.chunk_id, &audio_ref) {
        for turn in &dialogue.turns {
            outcomes.push(TurnOutcome {
                turn_index: turn.turn_index,
                response: String::new(),
                failed: true,
                diagnostic: Some(format!("open_audio failed: {}", e)),
            });
        }
        return outcomes;
    }

    let replay_context = !backend.capabilities().supports_context_reuse;
    let mut transcript_so_far = String::new();
    for turn in &dialogue.turns {
        let prompt = if replay_context && !transcript_so_far.is_empty() {
            format!("{}{}", transcript_so_far, turn.prompt_text)
        } else {
            turn.prompt_text.clone()
        };
        let outcome = match backend.turn(&prompt) {
            Ok(response) => TurnOutcome {
                turn_index: turn.turn_index,
                response,
                failed: false,
                diagnostic: None,
            },
            Err(e) => TurnOutcome {
                turn_index: turn.turn_index,
                response: String::new(),
                failed: true,
                diagnostic: Some(e.to_string()),
            },
        };
        if replay_context {
            transcript_so_far.push_str(&turn.prompt_text);
            transcript_so_far.push_str(&outcome.response);
        }
        outcomes.push(outcome);
    }
    let _ = backend.close();
    outcomes
}

/// One composed hypothesis entry plus its parse-quality flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedTurn {
    pub entry: SegLstEntry,
    /// The response carried no speaker token; the prompt condition was
    /// used instead (relevant under model speaker source).
    pub speaker_fallback: bool,
    /// Model times were requested but unavailable; diarization times
    /// were used for this turn.
    pub time_fallback: bool,
    pub dropped_tokens: u32,
}

/// Composes final SegLST entries for one dialogue under a setup.
/// Responses must cover every turn (failed turns compose as empty
/// text). Entries are re-based to absolute recording time.
pub fn compose_hypothesis(
    dialogue: &Dialogue,
    responses: &[TurnOutcome],
    setup: EvalSetup,
    codec: &CodecConfig,
) -> Result<Vec<ComposedTurn>> {
    if responses.len() != dialogue.turns.len() {
        return Err(Error::Dialogue(format!(
            "dialogue {} has {} turns but {} responses",
            dialogue.chunk_id,
            dialogue.turns.len(),
            responses.len()
        )));
    }
    let window_start = dialogue.window.start();
    let mut composed = Vec::with_capacity(dialogue.turns.len());
    for (turn, outcome) in dialogue.turns.iter().zip(responses) {
        let decoded = decode_response(&outcome.response, &turn.condition, dialogue.mode, codec);

        // Speaker: diarization cue or decoded token, mapped back to the
        // global label. Unmappable model indices fall back to the cue.
        let mut speaker_fallback = decoded.speaker_fallback;
        let local_speaker = match setup.speaker_source {
            CueSource::Diarization => turn.condition.local_speaker,
            CueSource::Model => {
                if dialogue.speaker_map.global_label(decoded.speaker).is_some() {
                    decoded.speaker
                } else {
                    speaker_fallback = true;
                    turn.condition.local_speaker
                }
            }
        };
        let speaker = dialogue
            .speaker_map
            .global_label(local_speaker)
            .ok_or_else(|| {
                Error::Dialogue(format!(
                    "dialogue {}: condition speaker {} missing from the speaker map",
                    dialogue.chunk_id, local_speaker
                ))
            })?
            .to_string();

        // Times: the prompt's grid boundaries, or the decoded envelope.
        let dia_start =
            undiscretize_instant(turn.condition.start_idx.min(codec.max_time_index), codec)?;
        let dia_end =
            undiscretize_instant(turn.condition.end_idx.min(codec.max_time_index), codec)?;
        let mut time_fallback = false;
        let (start_rel, end_rel, word_timings) = match setup.time_source {
            CueSource::Diarization => (dia_start, dia_end, None),
            CueSource::Model => match &decoded.timings {
                Some(timings) if !timings.is_empty() => {
                    let first = timings.first().expect("non-empty");
                    let last = timings.last().expect("non-empty");
                    let abs: Vec<WordTiming> = timings
                        .iter()
                        .map(|w| {
                            WordTiming::new(w.word(), w.interval().shifted_forward_by(window_start))
                                .expect("valid shifted interval")
                        })
                        .collect();
                    (first.start(), last.end(), Some(abs))
                }
                _ => {
                    time_fallback = true;
                    (dia_start, dia_end, None)
                }
            },
        };
        // Malformed output can decode to an inverted envelope; keep the
        // entry well-formed.
        let end_rel = end_rel.max(start_rel);

        composed.push(ComposedTurn {
            entry: SegLstEntry {
                session_id: dialogue.recording_id.clone(),
                speaker,
                start_time: start_rel + window_start,
                end_time: end_rel + window_start,
                words: decoded.words.join(" "),
                word_timings,
            },
            speaker_fallback,
            time_fallback,
            dropped_tokens: decoded.dropped_tokens,
        });
    }
    Ok(composed)
}
