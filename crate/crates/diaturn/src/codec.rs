//! Special-token vocabulary, timestamp discretization, chunk-local
//! speaker remapping, prompt rendering, and target encoding/decoding.
//!
//! The token surface forms are a compatibility contract and must stay
//! byte-exact: `<|spk_idx_N|>`, `<|time_idx_N|>`, `<|start_of_audio|>`,
//! `<|end_of_audio|>`, `<|start_of_spk|>`, `<|end_of_spk|>`,
//! `<|start_of_time|>`, `<|end_of_time|>`, `<|with_timestamps|>`.
//!
//! Timestamps are discretized as `u = round(t / delta_t)` with ties
//! rounded half away from zero and results clamped to
//! `[0, max_time_index]`. A timestamped target interleaves words with
//! time tokens as `[t1, w1, t2, w2, ..., tn, wn, t(n+1)]`: `t_j` is word
//! j's start and `t(n+1)` is the last word's end, so decoding assigns
//! word j's end to `t(j+1)`. An empty word list emits no time tokens.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{Time, TimeInterval};
use crate::timeline::{Chunk, WordTiming};

/// Grid and vocabulary sizing for the token codec.
///
/// `delta_t` must be a multiple of 0.01 s so grid arithmetic stays exact
/// on the fixed-point timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub delta_t: f64,
    pub max_time_index: u32,
    pub max_speakers: usize,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            delta_t: 0.1,
            max_time_index: 250,
            max_speakers: 16,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta_t <= 0.0 || !self.delta_t.is_finite() {
            return Err(Error::Codec(format!(
                "delta_t must be positive, got {}",
                self.delta_t
            )));
        }
        let centis = self.delta_t * 100.0;
        if (centis - centis.round()).abs() > 1e-9 || centis.round() < 1.0 {
            return Err(Error::Codec(format!(
                "delta_t {} is not a multiple of 0.01 s",
                self.delta_t
            )));
        }
        if self.max_time_index < 1 {
            return Err(Error::Codec("max_time_index must be at least 1".into()));
        }
        if self.max_speakers < 1 {
            return Err(Error::Codec("max_speakers must be at least 1".into()));
        }
        Ok(())
    }

    fn delta_centis(&self) -> i64 {
        (self.delta_t * 100.0).round() as i64
    }
}

/// `round(t / delta_t)` with ties away from zero, clamped to
/// `[0, max_time_index]`. Negative times are an error.
///
/// Quotients within 1e-9 of an exact half-integer are snapped onto it
/// first, so inputs that are mathematically ties (but carry float noise)
/// still round away from zero.
pub fn discretize_time(t_seconds: f64, cfg: &CodecConfig) -> Result<u32> {
    if t_seconds < 0.0 || t_seconds.is_nan() {
        return Err(Error::Codec(format!(
            "cannot discretize negative time {}",
            t_seconds
        )));
    }
    let q = t_seconds / cfg.delta_t;
    let snapped = (q * 2.0).round() / 2.0;
    let q = if (q - snapped).abs() <= 1e-9 {
        snapped
    } else {
        q
    };
    let u = q.round() as i64;
    Ok(u.clamp(0, cfg.max_time_index as i64) as u32)
}

/// Integer-exact discretization for fixed-point times. Agrees with
/// [`discretize_time`] on every grid-representable input.
pub fn discretize_instant(t: Time, cfg: &CodecConfig) -> Result<u32> {
    if t.is_negative() {
        return Err(Error::Codec(format!(
            "cannot discretize negative time {}",
            t
        )));
    }
    let c = t.centis();
    let d = cfg.delta_centis();
    let u = (2 * c + d) / (2 * d);
    Ok(u.clamp(0, cfg.max_time_index as i64) as u32)
}

/// Inverse of the grid: `u * delta_t` in seconds.
pub fn undiscretize_time(u: u32, cfg: &CodecConfig) -> Result<f64> {
    if u > cfg.max_time_index {
        return Err(Error::Codec(format!(
            "time index {} exceeds max_time_index {}",
            u, cfg.max_time_index
        )));
    }
    Ok(u as f64 * cfg.delta_t)
}

/// Inverse of the grid on the fixed-point timeline.
pub fn undiscretize_instant(u: u32, cfg: &CodecConfig) -> Result<Time> {
    if u > cfg.max_time_index {
        return Err(Error::Codec(format!(
            "time index {} exceeds max_time_index {}",
            u, cfg.max_time_index
        )));
    }
    Ok(Time::from_centis(u as i64 * cfg.delta_centis()))
}

/// Chunk-local speaker numbering: a bijection between global labels and
/// indices `0..n`, ordered by first appearance within the chunk (ties by
/// label).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeakerMap {
    forward: BTreeMap<String, u32>,
    reverse: Vec<String>,
}

impl SpeakerMap {
    /// Rebuilds a map from a `global -> local` table, validating that
    /// the indices are exactly `0..n`.
    pub fn from_forward(forward: BTreeMap<String, u32>) -> Result<SpeakerMap> {
        let n = forward.len();
        let mut reverse = vec![String::new(); n];
        for (label, &idx) in &forward {
            if idx as usize >= n || !reverse[idx as usize].is_empty() {
                return Err(Error::Codec(format!(
                    "speaker map indices must be a bijection onto 0..{}",
                    n
                )));
            }
            reverse[idx as usize] = label.clone();
        }
        Ok(SpeakerMap { forward, reverse })
    }

    pub fn local_index(&self, global: &str) -> Option<u32> {
        self.forward.get(global).copied()
    }

    pub fn global_label(&self, local: u32) -> Option<&str> {
        self.reverse.get(local as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.reverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reverse.is_empty()
    }

    pub fn forward(&self) -> &BTreeMap<String, u32> {
        &self.forward
    }
}

/// Assigns local indices by first segment start time; speakers starting
/// at the same instant are ordered by label.
pub fn build_speaker_map(chunk: &Chunk, cfg: &CodecConfig) -> Result<SpeakerMap> {
    let mut first_start: BTreeMap<&str, Time> = BTreeMap::new();
    for seg in chunk.segments() {
        first_start
            .entry(seg.speaker())
            .and_modify(|t| *t = (*t).min(seg.start()))
            .or_insert_with(|| seg.start());
    }
    if first_start.len() > cfg.max_speakers {
        return Err(Error::Codec(format!(
            "chunk {} has {} speakers, exceeding max_speakers {}",
            chunk.chunk_id(),
            first_start.len(),
            cfg.max_speakers
        )));
    }
    let mut order: Vec<(&str, Time)> = first_start.into_iter().collect();
    order.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let mut forward = BTreeMap::new();
    let mut reverse = Vec::with_capacity(order.len());
    for (idx, (label, _)) in order.into_iter().enumerate() {
        forward.insert(label.to_string(), idx as u32);
        reverse.push(label.to_string());
    }
    Ok(SpeakerMap { forward, reverse })
}

/// One token of the control vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialToken {
    SpeakerIndex(u32),
    TimeIndex(u32),
    StartOfAudio,
    EndOfAudio,
    StartOfSpk,
    EndOfSpk,
    StartOfTime,
    EndOfTime,
    WithTimestamps,
}

impl fmt::Display for SpecialToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecialToken::SpeakerIndex(n) => write!(f, "<|spk_idx_{}|>", n),
            SpecialToken::TimeIndex(n) => write!(f, "<|time_idx_{}|>", n),
            SpecialToken::StartOfAudio => write!(f, "<|start_of_audio|>"),
            SpecialToken::EndOfAudio => write!(f, "<|end_of_audio|>"),
            SpecialToken::StartOfSpk => write!(f, "<|start_of_spk|>"),
            SpecialToken::EndOfSpk => write!(f, "<|end_of_spk|>"),
            SpecialToken::StartOfTime => write!(f, "<|start_of_time|>"),
            SpecialToken::EndOfTime => write!(f, "<|end_of_time|>"),
            SpecialToken::WithTimestamps => write!(f, "<|with_timestamps|>"),
        }
    }
}

impl SpecialToken {
    fn from_inner(inner: &str) -> Option<SpecialToken> {
        match inner {
            "start_of_audio" => Some(SpecialToken::StartOfAudio),
            "end_of_audio" => Some(SpecialToken::EndOfAudio),
            "start_of_spk" => Some(SpecialToken::StartOfSpk),
            "end_of_spk" => Some(SpecialToken::EndOfSpk),
            "start_of_time" => Some(SpecialToken::StartOfTime),
            "end_of_time" => Some(SpecialToken::EndOfTime),
            "with_timestamps" => Some(SpecialToken::WithTimestamps),
            _ => {
                if let Some(n) = inner.strip_prefix("spk_idx_") {
                    n.parse().ok().map(SpecialToken::SpeakerIndex)
                } else if let Some(n) = inner.strip_prefix("time_idx_") {
                    n.parse().ok().map(SpecialToken::TimeIndex)
                } else {
                    None
                }
            }
        }
    }
}

/// One lexed piece of a response: a known token, an unknown `<|...|>`
/// marker, or a plain text run.
#[derive(Debug, Clone, PartialEq)]
enum Piece<'a> {
    Token(SpecialToken),
    Unknown(&'a str),
    Text(&'a str),
}

fn scan_pieces(text: &str) -> Vec<Piece<'_>> {
    let mut pieces = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        match rest.find("<|") {
            None => {
                pieces.push(Piece::Text(rest));
                break;
            }
            Some(open) => {
                if open > 0 {
                    pieces.push(Piece::Text(&rest[..open]));
                }
                let after = &rest[open + 2..];
                match after.find("|>") {
                    None => {
                        // Unterminated marker: keep as text.
                        pieces.push(Piece::Text(&rest[open..]));
                        break;
                    }
                    Some(close) => {
                        let inner = &after[..close];
                        match SpecialToken::from_inner(inner) {
                            Some(tok) => pieces.push(Piece::Token(tok)),
                            None => pieces.push(Piece::Unknown(&rest[open..open + 2 + close + 2])),
                        }
                        rest = &after[close + 2..];
                    }
                }
            }
        }
    }
    pieces
}

/// The discretized condition one turn is prompted with: a local speaker
/// plus start/end time indices. Serializes as `{spk, start_idx,
/// end_idx}` in the dialogue dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentCondition {
    #[serde(rename = "spk")]
    pub local_speaker: u32,
    pub start_idx: u32,
    pub end_idx: u32,
}

impl SegmentCondition {
    pub fn new(local_speaker: u32, start_idx: u32, end_idx: u32) -> SegmentCondition {
        SegmentCondition {
            local_speaker,
            start_idx,
            end_idx,
        }
    }

    pub fn validate(&self, cfg: &CodecConfig) -> Result<()> {
        if self.start_idx > self.end_idx {
            return Err(Error::Codec(format!(
                "condition start index {} after end index {}",
                self.start_idx, self.end_idx
            )));
        }
        if self.end_idx > cfg.max_time_index {
            return Err(Error::Codec(format!(
                "condition end index {} exceeds max_time_index {}",
                self.end_idx, cfg.max_time_index
            )));
        }
        if self.local_speaker as usize >= cfg.max_speakers {
            return Err(Error::Codec(format!(
                "local speaker {} exceeds max_speakers {}",
                self.local_speaker, cfg.max_speakers
            )));
        }
        Ok(())
    }

    /// Condition for a chunk-relative segment interval.
    pub fn from_interval(
        local_speaker: u32,
        interval: &TimeInterval,
        cfg: &CodecConfig,
    ) -> Result<SegmentCondition> {
        Ok(SegmentCondition {
            local_speaker,
            start_idx: discretize_instant(interval.start(), cfg)?,
            end_idx: discretize_instant(interval.end(), cfg)?,
        })
    }
}

/// Target flavor: bare words, or words interleaved with time tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    Plain,
    WithTimestamps,
}

impl fmt::Display for TargetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetMode::Plain => write!(f, "plain"),
            TargetMode::WithTimestamps => write!(f, "with_timestamps"),
        }
    }
}

impl FromStr for TargetMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<TargetMode> {
        match s {
            "plain" => Ok(TargetMode::Plain),
            "with_timestamps" => Ok(TargetMode::WithTimestamps),
            other => Err(Error::Config(format!(
                "unknown mode {:?} (expected plain or with_timestamps)",
                other
            ))),
        }
    }
}

/// Renders the per-turn transcription prompt for a condition, appending
/// the timestamp trigger token when requested. Pure and byte-stable.
pub fn render_prompt(cond: &SegmentCondition, with_timestamps: bool) -> String {
    let mut prompt = format!(
        "Please transcribe the speech content of speaker {}{}{} within the time segment {}{}{}{} into text.",
        SpecialToken::StartOfSpk,
        SpecialToken::SpeakerIndex(cond.local_speaker),
        SpecialToken::EndOfSpk,
        SpecialToken::StartOfTime,
        SpecialToken::TimeIndex(cond.start_idx),
        SpecialToken::TimeIndex(cond.end_idx),
        SpecialToken::EndOfTime,
    );
    if with_timestamps {
        prompt.push_str(&SpecialToken::WithTimestamps.to_string());
    }
    prompt
}

/// Words for one target: plain strings, or timed words on the
/// chunk-relative timeline.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetWords {
    Plain(Vec<String>),
    Timed(Vec<WordTiming>),
}

impl TargetWords {
    pub fn is_empty(&self) -> bool {
        match self {
            TargetWords::Plain(w) => w.is_empty(),
            TargetWords::Timed(w) => w.is_empty(),
        }
    }

    fn texts(&self) -> Vec<&str> {
        match self {
            TargetWords::Plain(w) => w.iter().map(String::as_str).collect(),
            TargetWords::Timed(w) => w.iter().map(WordTiming::word).collect(),
        }
    }
}

fn is_cjk(c: char) -> bool {
    matches!(c,
        '\u{3400}'..='\u{4DBF}'   // CJK extension A
        | '\u{4E00}'..='\u{9FFF}' // CJK unified
        | '\u{F900}'..='\u{FAFF}' // CJK compatibility
        | '\u{3040}'..='\u{30FF}' // kana
    )
}

/// Joins words with single spaces, except between two CJK characters,
/// which matches character-level scoring downstream.
pub fn join_words<S: AsRef<str>>(words: &[S]) -> String {
    let mut out = String::new();
    for word in words {
        let word = word.as_ref();
        if !out.is_empty() {
            let prev_cjk = out.chars().last().map(is_cjk).unwrap_or(false);
            let next_cjk = word.chars().next().map(is_cjk).unwrap_or(false);
            if !(prev_cjk && next_cjk) {
                out.push(' ');
            }
        }
        out.push_str(word);
    }
    out
}

fn check_word_text(word: &str) -> Result<()> {
    if word.is_empty() || word.chars().any(char::is_whitespace) {
        return Err(Error::Codec(format!("invalid target word {:?}", word)));
    }
    if word.contains("<|") {
        return Err(Error::Codec(format!(
            "target word {:?} collides with the token vocabulary",
            word
        )));
    }
    Ok(())
}

/// Encodes one response target. Both modes start with the speaker
/// prefix `<|start_of_spk|><|spk_idx_S|><|end_of_spk|>`; timestamped
/// targets need timed words sorted by start.
pub fn encode_target(
    leading_speaker: u32,
    words: &TargetWords,
    mode: TargetMode,
    cfg: &CodecConfig,
) -> Result<String> {
    if leading_speaker as usize >= cfg.max_speakers {
        return Err(Error::Codec(format!(
            "leading speaker {} exceeds max_speakers {}",
            leading_speaker, cfg.max_speakers
        )));
    }
    for word in words.texts() {
        check_word_text(word)?;
    }
    let mut out = format!(
        "{}{}{}",
        SpecialToken::StartOfSpk,
        SpecialToken::SpeakerIndex(leading_speaker),
        SpecialToken::EndOfSpk,
    );
    match mode {
        TargetMode::Plain => {
            out.push_str(&join_words(&words.texts()));
        }
        TargetMode::WithTimestamps => {
            let timed = match words {
                TargetWords::Timed(t) => t,
                TargetWords::Plain(_) => {
                    return Err(Error::Codec(
                        "timestamped targets require timed words".into(),
                    ))
                }
            };
            for pair in timed.windows(2) {
                if pair[1].start() < pair[0].start() {
                    return Err(Error::Codec(format!(
                        "word timings out of order: {:?} starts before {:?}",
                        pair[1].word(),
                        pair[0].word()
                    )));
                }
            }
            for (j, word) in timed.iter().enumerate() {
                let tau = discretize_instant(word.start(), cfg)?;
                out.push_str(&SpecialToken::TimeIndex(tau).to_string());
                out.push_str(word.word());
                if j + 1 == timed.len() {
                    let tail = discretize_instant(word.end(), cfg)?;
                    out.push_str(&SpecialToken::TimeIndex(tail).to_string());
                }
            }
        }
    }
    Ok(out)
}

/// What came back out of a response, plus parse-quality bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedResponse {
    /// Leading speaker token, or the expected speaker when absent.
    pub speaker: u32,
    /// True when the speaker fell back to the prompt condition.
    pub speaker_fallback: bool,
    pub words: Vec<String>,
    /// Timed words (timestamp mode only; `None` in plain mode).
    pub timings: Option<Vec<WordTiming>>,
    /// Count of tokens/words dropped while recovering from malformed
    /// output.
    pub dropped_tokens: u32,
}

impl DecodedResponse {
    /// Grid envelope `[first time index, last time index]` of the
    /// decoded words, when any were timed.
    pub fn time_envelope(&self, cfg: &CodecConfig) -> Option<(u32, u32)> {
        let timings = self.timings.as_ref()?;
        let first = timings.first()?;
        let last = timings.last()?;
        let lo = discretize_instant(first.start(), cfg).ok()?;
        let hi = discretize_instant(last.end(), cfg).ok()?;
        Some((lo, hi))
    }
}

/// Decodes arbitrary model output. Never fails: a missing speaker prefix
/// falls back to the expected condition, malformed tail tokens are
/// dropped and counted.
pub fn decode_response(
    text: &str,
    expected: &SegmentCondition,
    mode: TargetMode,
    cfg: &CodecConfig,
) -> DecodedResponse {
    let pieces = scan_pieces(text);
    let mut iter = pieces.into_iter().peekable();
    let mut dropped = 0u32;

    // Leading speaker prefix: optional <|start_of_spk|>, the speaker
    // index, optional <|end_of_spk|>. Leading whitespace is tolerated.
    while let Some(Piece::Text(t)) = iter.peek() {
        if t.trim().is_empty() {
            iter.next();
        } else {
            break;
        }
    }
    let mut saw_start_of_spk = false;
    if let Some(Piece::Token(SpecialToken::StartOfSpk)) = iter.peek() {
        saw_start_of_spk = true;
        iter.next();
    }
    let (speaker, speaker_fallback) = match iter.peek() {
        Some(Piece::Token(SpecialToken::SpeakerIndex(n))) => {
            let n = *n;
            iter.next();
            if let Some(Piece::Token(SpecialToken::EndOfSpk)) = iter.peek() {
                iter.next();
            }
            (n, false)
        }
        _ => {
            if saw_start_of_spk {
                dropped += 1;
            }
            (expected.local_speaker, true)
        }
    };

    let mut words: Vec<String> = Vec::new();
    match mode {
        TargetMode::Plain => {
            for piece in iter {
                match piece {
                    Piece::Text(t) => words.extend(t.split_whitespace().map(str::to_string)),
                    Piece::Token(_) | Piece::Unknown(_) => dropped += 1,
                }
            }
            DecodedResponse {
                speaker,
                speaker_fallback,
                words,
                timings: None,
                dropped_tokens: dropped,
            }
        }
        TargetMode::WithTimestamps => {
            let mut timings: Vec<WordTiming> = Vec::new();
            let mut cur_start: Option<u32> = None;
            let mut cur_text = String::new();
            for piece in iter {
                match piece {
                    Piece::Text(t) => cur_text.push_str(t),
                    Piece::Token(SpecialToken::TimeIndex(u)) => {
                        let u = u.min(cfg.max_time_index);
                        let pending: Vec<&str> = cur_text.split_whitespace().collect();
                        match cur_start {
                            None => {
                                // Text before the first time token is
                                // unanchored; drop it.
                                dropped += pending.len() as u32;
                                cur_start = Some(u);
                            }
                            Some(_) if pending.is_empty() => {
                                // Two adjacent time tokens: the earlier
                                // one anchors nothing.
                                dropped += 1;
                                cur_start = Some(u);
                            }
                            Some(s) => {
                                emit_words(&pending, s, u, cfg, &mut words, &mut timings);
                                cur_start = Some(u);
                            }
                        }
                        cur_text.clear();
                    }
                    Piece::Token(_) | Piece::Unknown(_) => dropped += 1,
                }
            }
            let tail: Vec<&str> = cur_text.split_whitespace().collect();
            if !tail.is_empty() {
                // Words with no closing time token.
                dropped += tail.len() as u32;
            } else if cur_start.is_some() && timings.is_empty() {
                // A lone time token with no words at all.
                dropped += 1;
            }
            DecodedResponse {
                speaker,
                speaker_fallback,
                words,
                timings: Some(timings),
                dropped_tokens: dropped,
            }
        }
    }
}

/// Emits the words between two time tokens. A single word spans
/// `[start, end]`; several words subdivide the span equally.
fn emit_words(
    pending: &[&str],
    start_idx: u32,
    end_idx: u32,
    cfg: &CodecConfig,
    words: &mut Vec<String>,
    timings: &mut Vec<WordTiming>,
) {
    let end_idx = end_idx.max(start_idx);
    let start = start_idx as f64 * cfg.delta_t;
    let end = end_idx as f64 * cfg.delta_t;
    let n = pending.len();
    for (k, word) in pending.iter().enumerate() {
        let lo = start + (end - start) * k as f64 / n as f64;
        let hi = start + (end - start) * (k + 1) as f64 / n as f64;
        let lo = Time::from_seconds(lo);
        let hi = Time::from_seconds(hi).max(lo);
        if let Ok(interval) = TimeInterval::new(lo, hi) {
            if let Ok(timing) = WordTiming::new(*word, interval) {
                words.push(word.to_string());
                timings.push(timing);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::DiarSegment;

    fn cfg() -> CodecConfig {
        CodecConfig::default()
    }

    fn timed(word: &str, s: f64, e: f64) -> WordTiming {
        WordTiming::new(word, TimeInterval::from_seconds(s, e).unwrap()).unwrap()
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(discretize_time(0.0, &cfg()).unwrap(), 0);
        assert_eq!(discretize_time(1.26, &cfg()).unwrap(), 13);
        assert_eq!(discretize_time(0.05, &cfg()).unwrap(), 1);
        assert!(discretize_time(-0.1, &cfg()).is_err());
    }

    #[test]
    fn discretize_clamps_at_grid_end() {
        assert_eq!(discretize_time(25.04, &cfg()).unwrap(), 250);
        assert_eq!(discretize_time(99.0, &cfg()).unwrap(), 250);
    }

    #[test]
    fn undiscretize_examples() {
        assert_eq!(undiscretize_time(13, &cfg()).unwrap(), 1.3);
        assert_eq!(undiscretize_time(0, &cfg()).unwrap(), 0.0);
        assert!(undiscretize_time(251, &cfg()).is_err());
    }

    #[test]
    fn instant_and_float_paths_agree() {
        let cfg = cfg();
        for c in 0..2600 {
            let t = Time::from_centis(c);
            assert_eq!(
                discretize_instant(t, &cfg).unwrap(),
                discretize_time(t.as_seconds(), &cfg).unwrap(),
                "c={}",
                c
            );
        }
    }

    fn chunk_of(segs: Vec<(&str, f64, f64)>) -> Chunk {
        let segments = segs
            .into_iter()
            .map(|(spk, s, e)| {
                DiarSegment::new(spk, TimeInterval::from_seconds(s, e).unwrap()).unwrap()
            })
            .collect();
        Chunk::new(
            "rec-c000",
            "rec",
            TimeInterval::from_seconds(0.0, 20.0).unwrap(),
            segments,
        )
        .unwrap()
    }

    #[test]
    fn speaker_map_orders_by_first_appearance() {
        let chunk = chunk_of(vec![
            ("spk7", 3.2, 4.0),
            ("spk2", 5.0, 6.0),
            ("spk7", 8.1, 9.0),
        ]);
        let map = build_speaker_map(&chunk, &cfg()).unwrap();
        assert_eq!(map.local_index("spk7"), Some(0));
        assert_eq!(map.local_index("spk2"), Some(1));
        assert_eq!(map.global_label(0), Some("spk7"));
    }

    #[test]
    fn speaker_map_tie_breaks_lexicographically() {
        let chunk = chunk_of(vec![("zeta", 1.0, 2.0), ("alpha", 1.0, 1.5)]);
        let map = build_speaker_map(&chunk, &cfg()).unwrap();
        assert_eq!(map.local_index("alpha"), Some(0));
        assert_eq!(map.local_index("zeta"), Some(1));
    }

    #[test]
    fn speaker_map_overflow_names_chunk() {
        let chunk = chunk_of(vec![("a", 0.0, 1.0), ("b", 1.0, 2.0), ("c", 2.0, 3.0)]);
        let tight = CodecConfig {
            max_speakers: 2,
            ..cfg()
        };
        let err = build_speaker_map(&chunk, &tight).unwrap_err();
        assert!(err.to_string().contains("rec-c000"), "{err}");
    }

    #[test]
    fn token_surface_forms_are_byte_exact() {
        let cases = [
            (SpecialToken::SpeakerIndex(7), "<|spk_idx_7|>"),
            (SpecialToken::TimeIndex(250), "<|time_idx_250|>"),
            (SpecialToken::StartOfAudio, "<|start_of_audio|>"),
            (SpecialToken::EndOfAudio, "<|end_of_audio|>"),
            (SpecialToken::StartOfSpk, "<|start_of_spk|>"),
            (SpecialToken::EndOfSpk, "<|end_of_spk|>"),
            (SpecialToken::StartOfTime, "<|start_of_time|>"),
            (SpecialToken::EndOfTime, "<|end_of_time|>"),
            (SpecialToken::WithTimestamps, "<|with_timestamps|>"),
        ];
        for (token, surface) in cases {
            assert_eq!(token.to_string(), surface);
            let inner = &surface[2..surface.len() - 2];
            assert_eq!(SpecialToken::from_inner(inner), Some(token));
        }
    }

    #[test]
    fn prompt_is_byte_exact() {
        let cond = SegmentCondition::new(0, 12, 48);
        assert_eq!(
            render_prompt(&cond, false),
            "Please transcribe the speech content of speaker <|start_of_spk|><|spk_idx_0|><|end_of_spk|> within the time segment <|start_of_time|><|time_idx_12|><|time_idx_48|><|end_of_time|> into text."
        );
        assert!(render_prompt(&cond, true).ends_with("into text.<|with_timestamps|>"));
        let degenerate = SegmentCondition::new(3, 0, 0);
        assert!(render_prompt(&degenerate, false)
            .contains("<|start_of_time|><|time_idx_0|><|time_idx_0|><|end_of_time|>"));
    }

    #[test]
    fn encode_timestamped_example() {
        let words = TargetWords::Timed(vec![timed("hi", 0.5, 0.8), timed("there", 0.9, 1.4)]);
        let text = encode_target(0, &words, TargetMode::WithTimestamps, &cfg()).unwrap();
        assert_eq!(
            text,
            "<|start_of_spk|><|spk_idx_0|><|end_of_spk|><|time_idx_5|>hi<|time_idx_9|>there<|time_idx_14|>"
        );
    }

    #[test]
    fn encode_plain_cjk_without_spaces() {
        let words = TargetWords::Plain(vec!["好".into(), "的".into()]);
        let text = encode_target(1, &words, TargetMode::Plain, &cfg()).unwrap();
        assert_eq!(text, "<|start_of_spk|><|spk_idx_1|><|end_of_spk|>好的");
    }

    #[test]
    fn encode_empty_timestamped_is_prefix_only() {
        let words = TargetWords::Timed(vec![]);
        let text = encode_target(2, &words, TargetMode::WithTimestamps, &cfg()).unwrap();
        assert_eq!(text, "<|start_of_spk|><|spk_idx_2|><|end_of_spk|>");
    }

    #[test]
    fn encode_rejects_unsorted_timings() {
        let words = TargetWords::Timed(vec![timed("b", 1.0, 1.5), timed("a", 0.2, 0.6)]);
        assert!(encode_target(0, &words, TargetMode::WithTimestamps, &cfg()).is_err());
    }

    #[test]
    fn decode_round_trips_contiguous_timings() {
        let words = TargetWords::Timed(vec![
            timed("hi", 0.5, 0.9),
            timed("there", 0.9, 1.4),
            timed("friend", 1.4, 2.0),
        ]);
        let text = encode_target(1, &words, TargetMode::WithTimestamps, &cfg()).unwrap();
        let expected = SegmentCondition::new(0, 0, 20);
        let decoded = decode_response(&text, &expected, TargetMode::WithTimestamps, &cfg());
        assert_eq!(decoded.speaker, 1);
        assert!(!decoded.speaker_fallback);
        assert_eq!(decoded.dropped_tokens, 0);
        match words {
            TargetWords::Timed(original) => assert_eq!(decoded.timings.unwrap(), original),
            _ => unreachable!(),
        }
    }

    #[test]
    fn decode_falls_back_to_expected_speaker() {
        let expected = SegmentCondition::new(2, 0, 20);
        let decoded = decode_response("hello world", &expected, TargetMode::Plain, &cfg());
        assert_eq!(decoded.speaker, 2);
        assert!(decoded.speaker_fallback);
        assert_eq!(decoded.words, vec!["hello", "world"]);
    }

    #[test]
    fn decode_honors_model_correction() {
        let expected = SegmentCondition::new(0, 0, 20);
        let decoded = decode_response("<|spk_idx_1|>hello", &expected, TargetMode::Plain, &cfg());
        assert_eq!(decoded.speaker, 1);
        assert!(!decoded.speaker_fallback);
    }

    #[test]
    fn decode_drops_malformed_tail() {
        let expected = SegmentCondition::new(0, 0, 20);
        let text =
            "<|start_of_spk|><|spk_idx_0|><|end_of_spk|><|time_idx_5|>hi<|time_idx_9|>dangling";
        let decoded = decode_response(text, &expected, TargetMode::WithTimestamps, &cfg());
        assert_eq!(decoded.words, vec!["hi"]);
        assert_eq!(decoded.dropped_tokens, 1);
    }

    #[test]
    fn decode_counts_unknown_tokens() {
        let expected = SegmentCondition::new(0, 0, 20);
        let decoded = decode_response(
            "<|spk_idx_0|>hello <|made_up|> world",
            &expected,
            TargetMode::Plain,
            &cfg(),
        );
        assert_eq!(decoded.words, vec!["hello", "world"]);
        assert_eq!(decoded.dropped_tokens, 1);
    }

    #[test]
    fn decode_envelope_matches_first_and_last_tau() {
        let words = TargetWords::Timed(vec![timed("a", 1.0, 1.5), timed("b", 1.5, 2.5)]);
        let text = encode_target(0, &words, TargetMode::WithTimestamps, &cfg()).unwrap();
        let decoded = decode_response(
            &text,
            &SegmentCondition::new(0, 0, 0),
            TargetMode::WithTimestamps,
            &cfg(),
        );
        assert_eq!(decoded.time_envelope(&cfg()), Some((10, 25)));
    }
}
