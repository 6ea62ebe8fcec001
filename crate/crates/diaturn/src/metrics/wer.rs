//! Concatenated minimum-permutation word/character error rates, plain
//! (cpWER/cpCER) and time-constrained (tcpWER/tcpCER).
//!
//! Each speaker's tokens are concatenated in segment start-time order.
//! The pairwise stream distances feed the assignment kernel; streams
//! without a counterpart are padded against empty streams so a missing
//! speaker costs its full length in deletions or insertions. The
//! time-constrained variant shares the same alignment with an
//! admissibility predicate: a match or substitution between a reference
//! token and a hypothesis token is allowed only when their intervals
//! fall within the collar; inadmissible pairs pay deletion plus
//! insertion. Tokens without explicit word times get pseudo-times by
//! equal subdivision of their segment interval.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::SegLstEntry;
use crate::metrics::assignment::{optimal_assignment, CostMatrix};
use crate::metrics::tokenize::{tokenize, TokenizationMode};

/// Counts and rate for one permutation-minimized comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WerBreakdown {
    pub substitutions: u64,
    pub insertions: u64,
    pub deletions: u64,
    pub reference_length: u64,
    /// `(S + I + D) / reference_length`; infinity when the reference is
    /// empty but the hypothesis is not (serialized as JSON null).
    #[serde(with = "crate::metrics::rate_serde")]
    pub rate: f64,
    /// Hypothesis speaker -> matched reference speaker.
    pub assignment: BTreeMap<String, Option<String>>,
}

impl WerBreakdown {
    pub fn errors(&self) -> u64 {
        self.substitutions + self.insertions + self.deletions
    }

    fn from_counts(
        substitutions: u64,
        insertions: u64,
        deletions: u64,
        reference_length: u64,
        assignment: BTreeMap<String, Option<String>>,
    ) -> WerBreakdown {
        let errors = substitutions + insertions + deletions;
        let rate = if reference_length > 0 {
            errors as f64 / reference_length as f64
        } else if errors == 0 {
            0.0
        } else {
            f64::INFINITY
        };
        WerBreakdown {
            substitutions,
            insertions,
            deletions,
            reference_length,
            rate,
            assignment,
        }
    }

    /// Pools component counts; the assignment map does not survive
    /// aggregation.
    pub fn pooled<'a>(parts: impl Iterator<Item = &'a WerBreakdown>) -> WerBreakdown {
        let mut s = 0;
        let mut i = 0;
        let mut d = 0;
        let mut n = 0;
        for part in parts {
            s += part.substitutions;
            i += part.insertions;
            d += part.deletions;
            n += part.reference_length;
        }
        WerBreakdown::from_counts(s, i, d, n, BTreeMap::new())
    }
}

/// One scoring token with its (possibly synthesized) interval.
#[derive(Debug, Clone)]
struct TimedToken {
    text: String,
    start: f64,
    end: f64,
}

/// Per-speaker token streams, ordered by segment start time.
fn speaker_streams(
    entries: &[SegLstEntry],
    tok: &TokenizationMode,
) -> Result<BTreeMap<String, Vec<TimedToken>>> {
    let mut by_speaker: BTreeMap<String, Vec<&SegLstEntry>> = BTreeMap::new();
    let session = entries.first().map(|e| e.session_id.clone());
    for entry in entries {
        if Some(&entry.session_id) != session.as_ref() {
            return Err(Error::Metrics(format!(
                "entries span sessions {:?} and {:?}; score one session at a time",
                session.unwrap_or_default(),
                entry.session_id
            )));
        }
        by_speaker
            .entry(entry.speaker.clone())
            .or_default()
            .push(entry);
    }
    let mut streams = BTreeMap::new();
    for (speaker, mut segs) in by_speaker {
        segs.sort_by_key(|e| (e.start_time, e.end_time));
        let mut stream = Vec::new();
        for seg in segs {
            match &seg.word_timings {
                Some(timings) => {
                    for w in timings {
                        let tokens = tokenize(w.word(), tok);
                        subdivide(
                            &tokens,
                            w.start().as_seconds(),
                            w.end().as_seconds(),
                            &mut stream,
                        );
                    }
                }
                None => {
                    let tokens = tokenize(&seg.words, tok);
                    subdivide(
                        &tokens,
                        seg.start_time.as_seconds(),
                        seg.end_time.as_seconds(),
                        &mut stream,
                    );
                }
            }
        }
        streams.insert(speaker, stream);
    }
    Ok(streams)
}

/// Spreads `tokens` evenly over `[start, end]`.
fn subdivide(tokens: &[String], start: f64, end: f64, out: &mut Vec<TimedToken>) {
    let n = tokens.len();
    for (k, text) in tokens.iter().enumerate() {
        out.push(TimedToken {
            text: text.clone(),
            start: start + (end - start) * k as f64 / n as f64,
            end: start + (end - start) * (k + 1) as f64 / n as f64,
        });
    }
}

/// Edit distance with an admissibility predicate on match/substitution.
fn constrained_distance<F>(r: &[TimedToken], h: &[TimedToken], admissible: &F) -> u64
where
    F: Fn(&TimedToken, &TimedToken) -> bool,
{
    let n = r.len();
    let m = h.len();
    let mut prev: Vec<u64> = (0..=m as u64).collect();
    let mut cur = vec![0u64; m + 1];
    for i in 1..=n {
        cur[0] = i as u64;
        for j in 1..=m {
            let mut best = (prev[j] + 1).min(cur[j - 1] + 1);
            if admissible(&r[i - 1], &h[j - 1]) {
                let sub = prev[j - 1] + u64::from(r[i - 1].text != h[j - 1].text);
                best = best.min(sub);
            }
            cur[j] = best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct AlignCounts {
    substitutions: u64,
    insertions: u64,
    deletions: u64,
}

/// Full backtraced alignment. Preference at ties: diagonal, then
/// deletion, then insertion.
fn constrained_align<F>(r: &[TimedToken], h: &[TimedToken], admissible: &F) -> AlignCounts
where
    F: Fn(&TimedToken, &TimedToken) -> bool,
{
    let n = r.len();
    let m = h.len();
    let mut dist = vec![0u64; (n + 1) * (m + 1)];
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    for i in 0..=n {
        dist[idx(i, 0)] = i as u64;
    }
    for j in 0..=m {
        dist[idx(0, j)] = j as u64;
    }
    for i in 1..=n {
        for j in 1..=m {
            let mut best = (dist[idx(i - 1, j)] + 1).min(dist[idx(i, j - 1)] + 1);
            if admissible(&r[i - 1], &h[j - 1]) {
                let sub = dist[idx(i - 1, j - 1)] + u64::from(r[i - 1].text != h[j - 1].text);
                best = best.min(sub);
            }
            dist[idx(i, j)] = best;
        }
    }
    let mut counts = AlignCounts::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[idx(i, j)];
        if i > 0 && j > 0 && admissible(&r[i - 1], &h[j - 1]) {
            let sub_cost = u64::from(r[i - 1].text != h[j - 1].text);
            if dist[idx(i - 1, j - 1)] + sub_cost == here {
                counts.substitutions += sub_cost;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dist[idx(i - 1, j)] + 1 == here {
            counts.deletions += 1;
            i -= 1;
            continue;
        }
        counts.insertions += 1;
        j -= 1;
    }
    counts
}

/// Shared permutation-minimized scoring over speaker streams.
fn score_streams<F>(
    ref_entries: &[SegLstEntry],
    hyp_entries: &[SegLstEntry],
    tok: &TokenizationMode,
    admissible: F,
) -> Result<WerBreakdown>
where
    F: Fn(&TimedToken, &TimedToken) -> bool,
{
    let ref_streams = speaker_streams(ref_entries, tok)?;
    let hyp_streams = speaker_streams(hyp_entries, tok)?;
    let ref_speakers: Vec<&String> = ref_streams.keys().collect();
    let hyp_speakers: Vec<&String> = hyp_streams.keys().collect();
    let empty: Vec<TimedToken> = Vec::new();

    // Pad to a square so unmatched streams pair with empty ones.
    let size = ref_speakers.len().max(hyp_speakers.len());
    let ref_len: u64 = ref_streams.values().map(|s| s.len() as u64).sum();
    if size == 0 {
        return Ok(WerBreakdown::from_counts(0, 0, 0, ref_len, BTreeMap::new()));
    }
    let stream_of_ref = |i: usize| ref_speakers.get(i).map_or(&empty, |s| &ref_streams[*s]);
    let stream_of_hyp = |j: usize| hyp_speakers.get(j).map_or(&empty, |s| &hyp_streams[*s]);

    let mut data = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            data.push(constrained_distance(stream_of_ref(i), stream_of_hyp(j), &admissible) as f64);
        }
    }
    let assignment = optimal_assignment(&CostMatrix::new(size, size, data)?);

    let mut counts = AlignCounts::default();
    let mut mapping: BTreeMap<String, Option<String>> = BTreeMap::new();
    for (i, col) in assignment.row_to_col.iter().enumerate() {
        let j = col.expect("square matrix assigns every row");
        let pair = constrained_align(stream_of_ref(i), stream_of_hyp(j), &admissible);
        counts.substitutions += pair.substitutions;
        counts.insertions += pair.insertions;
        counts.deletions += pair.deletions;
        if let Some(hyp) = hyp_speakers.get(j) {
            mapping.insert((*hyp).clone(), ref_speakers.get(i).map(|s| (*s).clone()));
        }
    }
    Ok(WerBreakdown::from_counts(
        counts.substitutions,
        counts.insertions,
        counts.deletions,
        ref_len,
        mapping,
    ))
}

/// Concatenated minimum-permutation error rate for one session.
pub fn compute_cpwer(
    ref_entries: &[SegLstEntry],
    hyp_entries: &[SegLstEntry],
    tok: &TokenizationMode,
) -> Result<WerBreakdown> {
    score_streams(ref_entries, hyp_entries, tok, |_, _| true)
}

/// Time-constrained variant: tokens match only within `collar` seconds.
pub fn compute_tcpwer(
    ref_entries: &[SegLstEntry],
    hyp_entries: &[SegLstEntry],
    collar: f64,
    tok: &TokenizationMode,
) -> Result<WerBreakdown> {
    if collar < 0.0 || !collar.is_finite() {
        return Err(Error::Metrics(format!(
            "collar must be non-negative, got {}",
            collar
        )));
    }
    score_streams(ref_entries, hyp_entries, tok, move |r, h| {
        h.start <= r.end + collar && h.end >= r.start - collar
    })
}
