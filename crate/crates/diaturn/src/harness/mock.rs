//! A corruptible oracle backend for tests and simulations.
//!
//! The oracle answers every turn with the dialogue's clean target,
//! optionally corrupted by independent word substitutions, deletions and
//! insertions, speaker-token flips to another in-chunk index, and
//! Gaussian time jitter that lands back on the token grid through
//! re-encoding. Fully deterministic under a seed regardless of dialogue
//! execution order.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{
    decode_response, encode_target, CodecConfig, SegmentCondition, TargetMode, TargetWords,
};
use crate::dialogue::Dialogue;
use crate::error::{Error, Result};
use crate::harness::backend::{AudioRef, BackendCaps, RecognizerBackend};
use crate::perturb::derive_rng_stream;
use crate::time::{Time, TimeInterval};
use crate::timeline::WordTiming;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MockOracleConfig {
    pub word_sub_rate: f64,
    pub word_del_rate: f64,
    pub word_ins_rate: f64,
    pub speaker_flip_rate: f64,
    /// Standard deviation in seconds of the word-boundary jitter.
    pub time_jitter_sd: f64,
    pub seed: u64,
}

impl Default for MockOracleConfig {
    fn default() -> Self {
        MockOracleConfig {
            word_sub_rate: 0.0,
            word_del_rate: 0.0,
            word_ins_rate: 0.0,
            speaker_flip_rate: 0.0,
            time_jitter_sd: 0.0,
            seed: 0,
        }
    }
}

impl MockOracleConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("word_sub_rate", self.word_sub_rate),
            ("word_del_rate", self.word_del_rate),
            ("word_ins_rate", self.word_ins_rate),
            ("speaker_flip_rate", self.speaker_flip_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{} {} outside [0, 1]", name, rate)));
            }
        }
        if self.time_jitter_sd < 0.0 || !self.time_jitter_sd.is_finite() {
            return Err(Error::Config(format!(
                "time_jitter_sd {} must be non-negative",
                self.time_jitter_sd
            )));
        }
        Ok(())
    }

    fn is_noiseless(&self) -> bool {
        self.word_sub_rate == 0.0
            && self.word_del_rate == 0.0
            && self.word_ins_rate == 0.0
            && self.speaker_flip_rate == 0.0
            && self.time_jitter_sd == 0.0
    }
}

#[derive(Debug, Clone)]
struct ChunkRefs {
    mode: TargetMode,
    n_speakers: usize,
    targets: Vec<String>,
}

/// Oracle backend answering from stored dialogue targets.
#[derive(Debug, Clone)]
pub struct MockOracleBackend {
    refs: BTreeMap<String, ChunkRefs>,
    cfg: MockOracleConfig,
    codec: CodecConfig,
    open: Option<(String, usize)>,
}

impl MockOracleBackend {
    pub fn from_dialogues(
        dialogues: &[Dialogue],
        cfg: MockOracleConfig,
        codec: CodecConfig,
    ) -> Result<MockOracleBackend> {
        cfg.validate()?;
        codec.validate()?;
        let mut refs = BTreeMap::new();
        for d in dialogues {
            refs.insert(
                d.chunk_id.clone(),
                ChunkRefs {
                    mode: d.mode,
                    n_speakers: d.speaker_map.len(),
                    targets: d.turns.iter().map(|t| t.target_text.clone()).collect(),
                },
            );
        }
        Ok(MockOracleBackend {
            refs,
            cfg,
            codec,
            open: None,
        })
    }

    fn corrupt(&self, target: &str, chunk: &ChunkRefs, rng: &mut ChaCha8Rng) -> Result<String> {
        if self.cfg.is_noiseless() {
            return Ok(target.to_string());
        }
        // Targets are well formed, so the expected condition only
        // supplies an unused fallback.
        let decoded = decode_response(
            target,
            &SegmentCondition::new(0, 0, 0),
            chunk.mode,
            &self.codec,
        );

        let mut speaker = decoded.speaker;
        if rng.gen_bool(self.cfg.speaker_flip_rate) && chunk.n_speakers > 1 {
            let offset = rng.gen_range(0..chunk.n_speakers as u32 - 1);
            speaker = if offset >= speaker {
                offset + 1
            } else {
                offset
            };
        }

        match chunk.mode {
            TargetMode::Plain => {
                let words =
                    self.corrupt_words(decoded.words.iter().map(|w| (w.clone(), (0.0, 0.0))), rng);
                let words: Vec<String> = words.into_iter().map(|(w, _)| w).collect();
                encode_target(speaker, &TargetWords::Plain(words), chunk.mode, &self.codec)
            }
            TargetMode::WithTimestamps => {
                let timed = decoded.timings.unwrap_or_default();
                let corrupted = self.corrupt_words(
                    timed.iter().map(|w| {
                        (
                            w.word().to_string(),
                            (w.start().as_seconds(), w.end().as_seconds()),
                        )
                    }),
                    rng,
                );
                let jittered = self.jitter_times(corrupted, rng)?;
                encode_target(
                    speaker,
                    &TargetWords::Timed(jittered),
                    chunk.mode,
                    &self.codec,
                )
            }
        }
    }

    /// Applies substitution/deletion/insertion independently per word.
    /// All three Bernoulli draws happen for every word so the stream
    /// consumption is stable.
    fn corrupt_words(
        &self,
        words: impl Iterator<Item = (String, (f64, f64))>,
        rng: &mut ChaCha8Rng,
    ) -> Vec<(String, (f64, f64))> {
        let mut out = Vec::new();
        for (word, span) in words {
            let sub = rng.gen_bool(self.cfg.word_sub_rate);
            let del = rng.gen_bool(self.cfg.word_del_rate);
            let ins = rng.gen_bool(self.cfg.word_ins_rate);
            if !del {
                let kept = if sub {
                    random_word(rng, Some(&word))
                } else {
                    word
                };
                out.push((kept, span));
            }
            if ins {
                out.push((random_word(rng, None), span));
            }
        }
        out
    }

    fn jitter_times(
        &self,
        words: Vec<(String, (f64, f64))>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<WordTiming>> {
        let sd = self.cfg.time_jitter_sd;
        let mut out = Vec::with_capacity(words.len());
        let mut prev_start = 0.0f64;
        for (word, (start, end)) in words {
            let (start, end) = if sd > 0.0 {
                let s = (start + gaussian(rng) * sd).max(0.0);
                let e = (end + gaussian(rng) * sd).max(s);
                (s, e)
            } else {
                (start, end)
            };
            // Keep starts non-decreasing so the encoder accepts them.
            let start = start.max(prev_start);
            let end = end.max(start);
            prev_start = start;
            let interval = TimeInterval::new(Time::from_seconds(start), Time::from_seconds(end))?;
            out.push(WordTiming::new(word, interval)?);
        }
        Ok(out)
    }
}

/// Four random lowercase letters, guaranteed different from `avoid`.
fn random_word(rng: &mut ChaCha8Rng, avoid: Option<&str>) -> String {
    loop {
        let word: String = (0..4)
            .map(|_| (b'a' + rng.gen_range(0..26u8)) as char)
            .collect();
        if avoid != Some(word.as_str()) {
            return word;
        }
    }
}

/// Standard normal draw via Box-Muller.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

impl RecognizerBackend for MockOracleBackend {
    fn capabilities(&self) -> BackendCaps {
        BackendCaps::default()
    }

    fn open_audio(&mut self, chunk_id: &str, _audio_ref: &AudioRef) -> Result<()> {
        if !self.refs.contains_key(chunk_id) {
            return Err(Error::Backend(format!(
                "mock oracle has no references for chunk {}",
                chunk_id
            )));
        }
        self.open = Some((chunk_id.to_string(), 0));
        Ok(())
    }

    fn turn(&mut self, _prompt: &str) -> Result<String> {
        let (chunk_id, turn_index) = match &mut self.open {
            Some((id, idx)) => {
                let turn = *idx;
                *idx += 1;
                (id.clone(), turn)
            }
            None => return Err(Error::Backend("turn before open_audio".into())),
        };
        let chunk = &self.refs[&chunk_id];
        let target = chunk.targets.get(turn_index).ok_or_else(|| {
            Error::Backend(format!(
                "mock oracle has no reference for turn {} of chunk {}",
                turn_index, chunk_id
            ))
        })?;
        let mut rng = derive_rng_stream(self.cfg.seed, &chunk_id, 0, turn_index as u64);
        self.corrupt(target, chunk, &mut rng)
    }

    fn close(&mut self) -> Result<()> {
        self.open = None;
        Ok(())
    }
}
