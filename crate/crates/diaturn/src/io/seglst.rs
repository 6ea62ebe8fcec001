//! SegLST segment lists: the JSON carrier for references and
//! hypotheses.
//!
//! A file is a JSON array of objects with keys `session_id`, `speaker`,
//! `start_time`, `end_time`, `words`, and an optional `word_timings`
//! array of `[word, start, end]` triples whose concatenated words must
//! match `words` (whitespace-insensitively, so character-spaced scripts
//! validate too).

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::time::{Time, TimeInterval};
use crate::timeline::WordTiming;

/// One scored segment: a speaker's words over a time span in a session.
#[derive(Debug, Clone, PartialEq)]
pub struct SegLstEntry {
    pub session_id: String,
    pub speaker: String,
    pub start_time: Time,
    pub end_time: Time,
    /// Space-separated word string.
    pub words: String,
    /// Per-word times, when the producer has them.
    pub word_timings: Option<Vec<WordTiming>>,
}

impl SegLstEntry {
    pub fn interval(&self) -> TimeInterval {
        TimeInterval::new(self.start_time, self.end_time).expect("validated on construction")
    }

    fn validate(&self, index: usize) -> Result<()> {
        let fail = |msg: String| Error::Entry { index, msg };
        if self.session_id.is_empty() {
            return Err(fail("session_id must be non-empty".into()));
        }
        if self.speaker.is_empty() {
            return Err(fail("speaker must be non-empty".into()));
        }
        if self.end_time < self.start_time {
            return Err(fail(format!(
                "end_time {} before start_time {}",
                self.end_time, self.start_time
            )));
        }
        if let Some(timings) = &self.word_timings {
            let from_words: String = self.words.split_whitespace().collect();
            let from_timings: String = timings.iter().map(WordTiming::word).collect();
            if from_words != from_timings {
                return Err(fail(format!(
                    "word_timings spell {:?} but words field holds {:?}",
                    from_timings, from_words
                )));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct EntryRepr {
    session_id: String,
    speaker: String,
    start_time: f64,
    end_time: f64,
    words: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    word_timings: Option<Vec<(String, f64, f64)>>,
}

/// Parses and validates a SegLST JSON array.
pub fn read_seglst(text: &str) -> Result<Vec<SegLstEntry>> {
    let values: Vec<Value> = serde_json::from_str(text)?;
    let mut entries = Vec::with_capacity(values.len());
    for (index, value) in values.into_iter().enumerate() {
        let entry = entry_from_value(index, value)?;
        entry.validate(index)?;
        entries.push(entry);
    }
    Ok(entries)
}

fn entry_from_value(index: usize, value: Value) -> Result<SegLstEntry> {
    let fail = |msg: String| Error::Entry { index, msg };
    let obj = value
        .as_object()
        .ok_or_else(|| fail("expected a JSON object".into()))?;
    for key in ["session_id", "speaker", "start_time", "end_time", "words"] {
        if !obj.contains_key(key) {
            return Err(fail(format!("missing required key {:?}", key)));
        }
    }
    let repr: EntryRepr =
        serde_json::from_value(Value::Object(obj.clone())).map_err(|e| fail(e.to_string()))?;
    let word_timings = match repr.word_timings {
        None => None,
        Some(triples) => {
            let mut timings = Vec::with_capacity(triples.len());
            for (word, s, e) in triples {
                let interval = TimeInterval::from_seconds(s, e).map_err(|e| fail(e.to_string()))?;
                timings.push(WordTiming::new(word, interval).map_err(|e| fail(e.to_string()))?);
            }
            Some(timings)
        }
    };
    Ok(SegLstEntry {
        session_id: repr.session_id,
        speaker: repr.speaker,
        start_time: Time::from_seconds(repr.start_time),
        end_time: Time::from_seconds(repr.end_time),
        words: repr.words,
        word_timings,
    })
}

/// Serializes entries in normal form: sorted by
/// `(session_id, start_time, speaker)` with a stable key order.
pub fn write_seglst(entries: &[SegLstEntry]) -> Result<String> {
    for (index, entry) in entries.iter().enumerate() {
        entry.validate(index)?;
    }
    let mut sorted: Vec<&SegLstEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.session_id, a.start_time, &a.speaker).cmp(&(&b.session_id, b.start_time, &b.speaker))
    });
    let reprs: Vec<EntryRepr> = sorted
        .into_iter()
        .map(|e| EntryRepr {
            session_id: e.session_id.clone(),
            speaker: e.speaker.clone(),
            start_time: e.start_time.as_seconds(),
            end_time: e.end_time.as_seconds(),
            words: e.words.clone(),
            word_timings: e.word_timings.as_ref().map(|ts| {
                ts.iter()
                    .map(|w| {
                        (
                            w.word().to_string(),
                            w.start().as_seconds(),
                            w.end().as_seconds(),
                        )
                    })
                    .collect()
            }),
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&reprs)?;
    out.push('\n');
    Ok(out)
}
