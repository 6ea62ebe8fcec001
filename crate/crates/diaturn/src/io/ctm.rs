//! CTM word transcripts: `<file> <chan> <tbeg> <tdur> <word> [conf] [speaker]`.
//!
//! The optional sixth field is a confidence when numeric, otherwise a
//! speaker label; a seventh field is always the speaker. When no speaker
//! field is present the channel stands in for it, which matches the
//! two-party telephone convention.

use std::collections::BTreeMap;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::time::{Time, TimeInterval};
use crate::timeline::WordTiming;

/// Word timings grouped by `(recording_id, speaker)`, each list sorted
/// by start time. Overlapping words within one speaker are legal but
/// reported in `warnings`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WordTranscripts {
    pub by_speaker: BTreeMap<(String, String), Vec<WordTiming>>,
    pub warnings: Vec<String>,
}

impl WordTranscripts {
    /// All words of one speaker in one recording, temporally sorted.
    pub fn words(&self, recording_id: &str, speaker: &str) -> Option<&[WordTiming]> {
        self.by_speaker
            .get(&(recording_id.to_string(), speaker.to_string()))
            .map(Vec::as_slice)
    }

    /// Recording ids present in the transcript.
    pub fn recording_ids(&self) -> impl Iterator<Item = &str> {
        let mut last: Option<&str> = None;
        self.by_speaker.keys().filter_map(move |(rec, _)| {
            if last == Some(rec.as_str()) {
                None
            } else {
                last = Some(rec.as_str());
                Some(rec.as_str())
            }
        })
    }
}

pub fn read_word_transcript<R: BufRead>(reader: R) -> Result<WordTranscripts> {
    let mut by_speaker: BTreeMap<(String, String), Vec<WordTiming>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(";;") || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 5 {
            return Err(Error::at_line(
                lineno,
                format!(
                    "CTM record has {} fields, expected at least 5",
                    fields.len()
                ),
            ));
        }
        let file = fields[0];
        let chan = fields[1];
        let tbeg: f64 = fields[2]
            .parse()
            .map_err(|_| Error::at_line(lineno, format!("malformed tbeg {:?}", fields[2])))?;
        let tdur: f64 = fields[3]
            .parse()
            .map_err(|_| Error::at_line(lineno, format!("malformed tdur {:?}", fields[3])))?;
        if tdur < 0.0 || tbeg < 0.0 || !tbeg.is_finite() || !tdur.is_finite() {
            return Err(Error::at_line(
                lineno,
                format!("invalid times tbeg={} tdur={}", fields[2], fields[3]),
            ));
        }
        let word = fields[4];
        let speaker = match fields.len() {
            5 => chan,
            6 => {
                if fields[5].parse::<f64>().is_ok() {
                    chan
                } else {
                    fields[5]
                }
            }
            _ => fields[6],
        };
        let start = Time::from_seconds(tbeg);
        let interval = TimeInterval::new(start, start + Time::from_seconds(tdur))
            .map_err(|e| Error::at_line(lineno, e.to_string()))?;
        let timing =
            WordTiming::new(word, interval).map_err(|e| Error::at_line(lineno, e.to_string()))?;
        by_speaker
            .entry((file.to_string(), speaker.to_string()))
            .or_default()
            .push(timing);
    }

    let mut warnings = Vec::new();
    for ((file, speaker), words) in by_speaker.iter_mut() {
        words.sort_by(|a, b| (a.start(), a.end(), a.word()).cmp(&(b.start(), b.end(), b.word())));
        for pair in words.windows(2) {
            if pair[1].start() < pair[0].end() {
                warnings.push(format!(
                    "{} {}: word {:?} at {} overlaps {:?} ending {}",
                    file,
                    speaker,
                    pair[1].word(),
                    pair[1].start(),
                    pair[0].word(),
                    pair[0].end()
                ));
            }
        }
    }
    Ok(WordTranscripts {
        by_speaker,
        warnings,
    })
}

/// Normal form: one line per word, grouped by (recording, speaker),
/// words by start time, confidence fixed at `1.00`.
pub fn write_word_transcript(transcripts: &WordTranscripts) -> String {
    let mut out = String::new();
    for ((file, speaker), words) in &transcripts.by_speaker {
        for w in words {
            out.push_str(&format!(
                "{} 1 {} {} {} 1.00 {}\n",
                file,
                w.start(),
                w.interval().duration(),
                w.word(),
                speaker
            ));
        }
    }
    out
}
