//! Deterministic synthetic corpora for demos and verification.
//!
//! The generator lays grid-aligned speaker segments along a timeline,
//! alternating speakers with occasional silence gaps. Words tile each
//! segment exactly (equal length, contiguous), so reference word times,
//! segment boundaries, and the token grid all agree — useful when a test
//! needs end-to-end identities to hold exactly.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::io::SegLstEntry;
use crate::time::{Time, TimeInterval};
use crate::timeline::{DiarSegment, Recording, WordTiming};

const LEXICON: [&str; 40] = [
    "the", "quick", "brown", "fox", "jumps", "over", "lazy", "dog", "meeting", "starts", "now",
    "please", "review", "action", "items", "before", "next", "week", "thanks", "sure", "agree",
    "point", "data", "model", "result", "looks", "good", "maybe", "check", "again", "right",
    "okay", "question", "about", "budget", "plan", "team", "work", "done", "soon",
];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub recording_id: String,
    pub speakers: usize,
    /// Approximate total duration in seconds; generation stops at the
    /// first segment boundary past it.
    pub target_duration_s: f64,
    /// Length of every word in centiseconds (grid-aligned).
    pub word_centis: i64,
    pub min_words_per_segment: usize,
    pub max_words_per_segment: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            recording_id: "synth".into(),
            speakers: 3,
            target_duration_s: 300.0,
            word_centis: 10,
            min_words_per_segment: 4,
            max_words_per_segment: 12,
            seed: 0,
        }
    }
}

/// A generated corpus: the diarization timeline, per-speaker word
/// timings, and the matching reference segment list.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub recording: Recording,
    /// `(recording_id, speaker) -> words`, CTM-shaped.
    pub words: BTreeMap<(String, String), Vec<WordTiming>>,
    pub reference: Vec<SegLstEntry>,
}

impl SynthCorpus {
    pub fn total_words(&self) -> usize {
        self.words.values().map(Vec::len).sum()
    }
}

pub fn synth_corpus(cfg: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5E_ED));
    let speakers: Vec<String> = (0..cfg.speakers).map(|i| format!("spk{}", i)).collect();

    let mut cursor = Time::from_centis(0);
    let mut segments = Vec::new();
    let mut words: BTreeMap<(String, String), Vec<WordTiming>> = BTreeMap::new();
    let mut reference = Vec::new();
    let target = Time::from_seconds(cfg.target_duration_s);
    let mut last_speaker = usize::MAX;
    let mut last_gap_end = Time::ZERO;

    while cursor < target {
        // Never the same speaker twice in a row.
        let mut speaker_idx = rng.gen_range(0..cfg.speakers);
        if speaker_idx == last_speaker {
            speaker_idx = (speaker_idx + 1) % cfg.speakers;
        }
        last_speaker = speaker_idx;
        let speaker = &speakers[speaker_idx];

        let n_words = rng.gen_range(cfg.min_words_per_segment..=cfg.max_words_per_segment);
        let seg_start = cursor;
        let mut seg_words = Vec::with_capacity(n_words);
        for _ in 0..n_words {
            let word = LEXICON[rng.gen_range(0..LEXICON.len())];
            let interval = TimeInterval::new(cursor, cursor + Time::from_centis(cfg.word_centis))
                .expect("word end after start");
            seg_words.push(WordTiming::new(word, interval).expect("lexicon words are clean"));
            cursor = interval.end();
        }
        let seg_interval = TimeInterval::new(seg_start, cursor).expect("ordered");
        segments.push(DiarSegment::new(speaker.clone(), seg_interval).expect("non-empty label"));
        reference.push(SegLstEntry {
            session_id: cfg.recording_id.clone(),
            speaker: speaker.clone(),
            start_time: seg_interval.start(),
            end_time: seg_interval.end(),
            words: seg_words
                .iter()
                .map(|w| w.word().to_string())
                .collect::<Vec<_>>()
                .join(" "),
            word_timings: Some(seg_words.clone()),
        });
        words
            .entry((cfg.recording_id.clone(), speaker.clone()))
            .or_default()
            .extend(seg_words);

        // Silence gap after roughly every third segment, 1.2-2.0 s on
        // the grid. Never more than 6 s of continuous speech, so every
        // admissible cut range contains a gap and chunk cuts always
        // land in silence.
        if rng.gen_range(0..3) == 0 || cursor - last_gap_end > Time::from_seconds(6.0) {
            cursor = cursor + Time::from_centis(rng.gen_range(12..=20) * 10);
            last_gap_end = cursor;
        }
    }

    let recording = Recording::new(cfg.recording_id.clone(), cursor, segments)
        .expect("generated segments are in range");
    SynthCorpus {
        recording,
        words,
        reference,
    }
}

/// Simulates an imperfect diarization front-end: shifts each boundary by
/// a whole number of 0.1 s grid steps up to `max_steps`, keeping
/// segments valid and at least one grid step long.
pub fn jitter_segments_on_grid(rec: &Recording, max_steps: i64, seed: u64) -> Recording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x71_77_E5));
    let duration = rec.duration();
    let segments: Vec<DiarSegment> = rec
        .segments()
        .iter()
        .map(|seg| {
            let shift = |t: Time, rng: &mut ChaCha8Rng| {
                let steps = rng.gen_range(-max_steps..=max_steps);
                (t + Time::from_centis(steps * 10)).clamp(Time::ZERO, duration)
            };
            let start = shift(seg.start(), &mut rng);
            let end = shift(seg.end(), &mut rng).max(start + Time::from_centis(10));
            let end = end.clamp(Time::ZERO, duration);
            let start = start.min(end - Time::from_centis(10)).max(Time::ZERO);
            DiarSegment::new(
                seg.speaker(),
                TimeInterval::new(start, end.max(start)).expect("ordered"),
            )
            .expect("speaker label kept")
        })
        .collect();
    Recording::new(rec.recording_id(), duration, segments).expect("segments clamped into range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic() {
        let cfg = SynthConfig::default();
        let a = synth_corpus(&cfg);
        let b = synth_corpus(&cfg);
        assert_eq!(a.recording, b.recording);
        assert_eq!(a.words, b.words);
    }

    #[test]
    fn words_tile_segments_exactly() {
        let corpus = synth_corpus(&SynthConfig::default());
        for entry in &corpus.reference {
            let timings = entry.word_timings.as_ref().unwrap();
            assert_eq!(timings.first().unwrap().start(), entry.start_time);
            assert_eq!(timings.last().unwrap().end(), entry.end_time);
            for pair in timings.windows(2) {
                assert_eq!(pair[0].end(), pair[1].start());
            }
        }
    }

    #[test]
    fn everything_is_grid_aligned() {
        let corpus = synth_corpus(&SynthConfig::default());
        for seg in corpus.recording.segments() {
            assert_eq!(seg.start().centis() % 10, 0);
            assert_eq!(seg.end().centis() % 10, 0);
        }
    }

    #[test]
    fn jitter_keeps_segments_valid() {
        let corpus = synth_corpus(&SynthConfig::default());
        let jittered = jitter_segments_on_grid(&corpus.recording, 3, 9);
        assert_eq!(jittered.segments().len(), corpus.recording.segments().len());
        for seg in jittered.segments() {
            assert!(seg.start() >= Time::ZERO);
            assert!(seg.end() <= jittered.duration());
            assert!(seg.end() > seg.start());
        }
    }
}
