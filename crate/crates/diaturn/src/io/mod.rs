//! Readers and writers for the interchange formats: RTTM diarization
//! files, CTM word transcripts, and SegLST hypothesis/reference JSON.
//!
//! Writers emit a deterministic normal form; reading a written value
//! reproduces it exactly. Parsers either succeed or report an error with
//! a line/entry locator — nothing is dropped silently except comment
//! lines.

mod ctm;
mod rttm;
mod seglst;

pub use ctm::{read_word_transcript, write_word_transcript, WordTranscripts};
pub use rttm::{read_rttm, write_rttm};
pub use seglst::{read_seglst, write_seglst, SegLstEntry};
