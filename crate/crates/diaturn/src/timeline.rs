//! Diarization segments, recordings, word timings, and the chunking
//! policy that splits long recordings into short clips.
//!
//! Chunking only manipulates labels; there is no audio handling here.
//! Cut points are picked greedily at the latest coverage gap inside the
//! admissible window, with a hard cut at the maximum duration when
//! speech is continuous.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::time::{Time, TimeInterval};

/// Segments shorter than this after clipping are dropped; below the
/// 0.1 s token grid such slivers cannot be represented anyway.
pub const DEFAULT_MIN_CLIP: Time = Time::from_centis(5);

/// One diarization label: a speaker active over an interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiarSegment {
    speaker: String,
    interval: TimeInterval,
}

impl DiarSegment {
    pub fn new(speaker: impl Into<String>, interval: TimeInterval) -> Result<DiarSegment> {
        let speaker = speaker.into();
        if speaker.is_empty() {
            return Err(Error::Timeline("speaker label must be non-empty".into()));
        }
        Ok(DiarSegment { speaker, interval })
    }

    pub fn speaker(&self) -> &str {
        &self.speaker
    }

    pub fn interval(&self) -> &TimeInterval {
        &self.interval
    }

    pub fn start(&self) -> Time {
        self.interval.start()
    }

    pub fn end(&self) -> Time {
        self.interval.end()
    }

    fn sort_key(&self) -> (Time, Time, &str) {
        (self.interval.start(), self.interval.end(), &self.speaker)
    }
}

/// A single word with its interval. Words never contain whitespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordTiming {
    word: String,
    interval: TimeInterval,
}

impl WordTiming {
    pub fn new(word: impl Into<String>, interval: TimeInterval) -> Result<WordTiming> {
        let word = word.into();
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(Error::Timeline(format!(
                "word {:?} must be non-empty and contain no whitespace",
                word
            )));
        }
        Ok(WordTiming { word, interval })
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn interval(&self) -> &TimeInterval {
        &self.interval
    }

    pub fn start(&self) -> Time {
        self.interval.start()
    }

    pub fn end(&self) -> Time {
        self.interval.end()
    }
}

/// A recording timeline: duration plus sorted diarization segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recording {
    recording_id: String,
    duration: Time,
    segments: Vec<DiarSegment>,
}

impl Recording {
    /// Builds a recording, sorting segments by (start, end, speaker) and
    /// checking that every segment lies within `[0, duration]`.
    pub fn new(
        recording_id: impl Into<String>,
        duration: Time,
        mut segments: Vec<DiarSegment>,
    ) -> Result<Recording> {
        let recording_id = recording_id.into();
        if recording_id.is_empty() {
            return Err(Error::Timeline("recording id must be non-empty".into()));
        }
        if duration.is_negative() {
            return Err(Error::Timeline(format!(
                "recording {} has negative duration",
                recording_id
            )));
        }
        for seg in &segments {
            if seg.start() < Time::ZERO || seg.end() > duration {
                return Err(Error::Timeline(format!(
                    "recording {}: segment {:?} ({}) outside [0, {}]",
                    recording_id,
                    seg.interval(),
                    seg.speaker(),
                    duration
                )));
            }
        }
        segments.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Ok(Recording {
            recording_id,
            duration,
            segments,
        })
    }

    /// Builds a recording whose duration is the maximum segment end.
    pub fn from_segments(
        recording_id: impl Into<String>,
        segments: Vec<DiarSegment>,
    ) -> Result<Recording> {
        let duration = segments.iter().map(|s| s.end()).max().unwrap_or(Time::ZERO);
        Recording::new(recording_id, duration, segments)
    }

    /// Replaces the duration, e.g. when the true audio length is known.
    pub fn with_duration(self, duration: Time) -> Result<Recording> {
        Recording::new(self.recording_id, duration, self.segments)
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn duration(&self) -> Time {
        self.duration
    }

    pub fn segments(&self) -> &[DiarSegment] {
        &self.segments
    }

    /// Total labeled speech per speaker.
    pub fn speech_per_speaker(&self) -> BTreeMap<&str, Time> {
        let mut totals: BTreeMap<&str, Time> = BTreeMap::new();
        for seg in &self.segments {
            let t = totals.entry(seg.speaker()).or_insert(Time::ZERO);
            *t = *t + seg.interval().duration();
        }
        totals
    }
}

/// A short window of a recording with chunk-relative segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    chunk_id: String,
    recording_id: String,
    window: TimeInterval,
    segments: Vec<DiarSegment>,
}

impl Chunk {
    /// `segments` are chunk-relative; they must lie within
    /// `[0, window.duration]` and get sorted by (start, end, speaker).
    pub fn new(
        chunk_id: impl Into<String>,
        recording_id: impl Into<String>,
        window: TimeInterval,
        mut segments: Vec<DiarSegment>,
    ) -> Result<Chunk> {
        let chunk_id = chunk_id.into();
        if window.duration() <= Time::ZERO {
            return Err(Error::Timeline(format!(
                "chunk {}: window {:?} must have positive duration",
                chunk_id, window
            )));
        }
        let wdur = window.duration();
        for seg in &segments {
            if seg.start() < Time::ZERO || seg.end() > wdur {
                return Err(Error::Timeline(format!(
                    "chunk {}: relative segment {:?} outside [0, {}]",
                    chunk_id,
                    seg.interval(),
                    wdur
                )));
            }
        }
        segments.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Ok(Chunk {
            chunk_id,
            recording_id: recording_id.into(),
            window,
            segments,
        })
    }

    pub fn chunk_id(&self) -> &str {
        &self.chunk_id
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    /// Window in absolute recording time.
    pub fn window(&self) -> &TimeInterval {
        &self.window
    }

    /// Chunk-relative segments.
    pub fn segments(&self) -> &[DiarSegment] {
        &self.segments
    }
}

/// Intersects `seg` with `window` and re-bases it to window-relative
/// time. Returns `None` when the intersection is shorter than
/// `min_clip`.
pub fn clip_segment(
    seg: &DiarSegment,
    window: &TimeInterval,
    min_clip: Time,
) -> Option<DiarSegment> {
    let isect = seg.interval().intersect(window)?;
    if isect.duration() < min_clip {
        return None;
    }
    let rel = isect.shifted_back_by(window.start());
    Some(DiarSegment {
        speaker: seg.speaker.clone(),
        interval: rel,
    })
}

/// Splits a recording into chunks of duration `<= max_dur`, tiling
/// `[0, duration]` without overlap.
///
/// Every window except possibly the last lasts at least `min_dur`. The
/// cut point is the midpoint of the latest coverage gap (an interval no
/// segment covers) intersected with `[start + min_dur, start + max_dur]`;
/// when no gap exists the cut falls exactly at `start + max_dur`.
pub fn chunk_recording(rec: &Recording, min_dur: Time, max_dur: Time) -> Result<Vec<Chunk>> {
    chunk_recording_with(rec, min_dur, max_dur, DEFAULT_MIN_CLIP)
}

/// As [`chunk_recording`] with an explicit clipping threshold.
pub fn chunk_recording_with(
    rec: &Recording,
    min_dur: Time,
    max_dur: Time,
    min_clip: Time,
) -> Result<Vec<Chunk>> {
    if min_dur <= Time::ZERO {
        return Err(Error::Timeline(format!(
            "minimum chunk duration must be positive, got {}",
            min_dur
        )));
    }
    if min_dur > max_dur {
        return Err(Error::Timeline(format!(
            "minimum chunk duration {} exceeds maximum {}",
            min_dur, max_dur
        )));
    }

    let gaps = coverage_gaps(rec);
    let mut windows = Vec::new();
    let mut start = Time::ZERO;
    while rec.duration() - start > max_dur {
        let lo = start + min_dur;
        let hi = start + max_dur;
        let cut = latest_gap_cut(&gaps, lo, hi).unwrap_or(hi);
        windows.push(TimeInterval::new(start, cut)?);
        start = cut;
    }
    if rec.duration() > start || windows.is_empty() {
        windows.push(TimeInterval::new(start, rec.duration())?);
    }

    let mut chunks = Vec::with_capacity(windows.len());
    for (idx, window) in windows.into_iter().enumerate() {
        let segments = rec
            .segments()
            .iter()
            .filter_map(|seg| clip_segment(seg, &window, min_clip))
            .collect();
        chunks.push(Chunk::new(
            format!("{}-c{:03}", rec.recording_id(), idx),
            rec.recording_id(),
            window,
            segments,
        )?);
    }
    Ok(chunks)
}

/// Maximal intervals of strictly positive length covered by no segment,
/// within `[0, duration]`.
fn coverage_gaps(rec: &Recording) -> Vec<TimeInterval> {
    let mut merged: Vec<(Time, Time)> = Vec::new();
    // Segments are sorted by start.
    for seg in rec.segments() {
        match merged.last_mut() {
            Some((_, end)) if seg.start() <= *end => {
                *end = (*end).max(seg.end());
            }
            _ => merged.push((seg.start(), seg.end())),
        }
    }
    let mut gaps = Vec::new();
    let mut cursor = Time::ZERO;
    for (s, e) in merged {
        if s > cursor {
            gaps.push(TimeInterval::new(cursor, s).expect("cursor <= s"));
        }
        cursor = cursor.max(e);
    }
    if rec.duration() > cursor {
        gaps.push(TimeInterval::new(cursor, rec.duration()).expect("cursor <= duration"));
    }
    gaps
}

/// Midpoint of the latest gap intersecting `[lo, hi]`, if any. The cut
/// is snapped onto the 0.1 s token grid when the gap allows, so window
/// starts stay representable after timestamp discretization; a gap too
/// narrow to contain a grid point is cut at its exact midpoint.
fn latest_gap_cut(gaps: &[TimeInterval], lo: Time, hi: Time) -> Option<Time> {
    let range = TimeInterval::new(lo, hi).ok()?;
    let isect = gaps.iter().rev().find_map(|gap| gap.intersect(&range))?;
    let mid = Time::midpoint(isect.start(), isect.end());
    let snapped = Time::from_centis((mid.centis() as f64 / 10.0).round() as i64 * 10);
    if snapped >= isect.start() && snapped <= isect.end() {
        Some(snapped)
    } else {
        Some(mid)
    }
}
