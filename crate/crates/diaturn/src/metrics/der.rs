//! Diarization error rate via a boundary-event sweep.
//!
//! Hypothesis speakers are mapped onto reference speakers once per
//! comparison by a maximum-overlap assignment, then every homogeneous
//! region contributes missed/false-alarm/confusion seconds with overlap
//! multiplicity (a region with two reference speakers and one matching
//! hypothesis speaker contributes one missed second per second). A
//! collar excludes the regions within `+-collar` of each reference
//! segment boundary from scoring entirely.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::assignment::{optimal_assignment, CostMatrix};
use crate::time::{overlap_duration, Time, TimeInterval};
use crate::timeline::DiarSegment;

/// Error seconds and the resulting rate for one comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerBreakdown {
    pub missed: f64,
    pub false_alarm: f64,
    pub confusion: f64,
    /// Scored reference speech seconds (with overlap multiplicity).
    pub scored: f64,
    /// `(missed + false_alarm + confusion) / scored`; 0 when both are
    /// zero, infinity when errors exist against zero scored time.
    #[serde(with = "crate::metrics::rate_serde")]
    pub der: f64,
}

impl DerBreakdown {
    fn from_components(missed: f64, false_alarm: f64, confusion: f64, scored: f64) -> DerBreakdown {
        let errors = missed + false_alarm + confusion;
        let der = if scored > 0.0 {
            errors / scored
        } else if errors == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        DerBreakdown {
            missed,
            false_alarm,
            confusion,
            scored,
            der,
        }
    }

    pub fn errors(&self) -> f64 {
        self.missed + self.false_alarm + self.confusion
    }

    /// Pools component seconds and recomputes the rate.
    pub fn pooled<'a>(parts: impl Iterator<Item = &'a DerBreakdown>) -> DerBreakdown {
        let mut m = 0.0;
        let mut fa = 0.0;
        let mut c = 0.0;
        let mut s = 0.0;
        for p in parts {
            m += p.missed;
            fa += p.false_alarm;
            c += p.confusion;
            s += p.scored;
        }
        DerBreakdown::from_components(m, fa, c, s)
    }
}

/// Computes DER between reference and hypothesis segment lists.
pub fn compute_der(
    ref_segs: &[DiarSegment],
    hyp_segs: &[DiarSegment],
    collar: f64,
) -> Result<DerBreakdown> {
    if collar < 0.0 || !collar.is_finite() {
        return Err(Error::Metrics(format!(
            "collar must be non-negative, got {}",
            collar
        )));
    }
    let collar = Time::from_seconds(collar);

    let hyp_to_ref = map_speakers(ref_segs, hyp_segs);
    let exclusions = collar_exclusions(ref_segs, collar);

    // Elementary regions between consecutive boundary events.
    let mut events: BTreeSet<Time> = BTreeSet::new();
    for seg in ref_segs.iter().chain(hyp_segs) {
        events.insert(seg.start());
        events.insert(seg.end());
    }
    for zone in &exclusions {
        events.insert(zone.start());
        events.insert(zone.end());
    }
    let events: Vec<Time> = events.into_iter().collect();

    let mut missed = Time::ZERO;
    let mut false_alarm = Time::ZERO;
    let mut confusion = Time::ZERO;
    let mut scored = Time::ZERO;
    for pair in events.windows(2) {
        let region = TimeInterval::new(pair[0], pair[1]).expect("events sorted");
        let dur = region.duration();
        if dur == Time::ZERO || is_excluded(&region, &exclusions) {
            continue;
        }
        let ref_active: BTreeSet<&str> = ref_segs
            .iter()
            .filter(|s| covers(s, &region))
            .map(DiarSegment::speaker)
            .collect();
        let hyp_active: BTreeSet<&str> = hyp_segs
            .iter()
            .filter(|s| covers(s, &region))
            .map(DiarSegment::speaker)
            .collect();
        let n_ref = ref_active.len() as i64;
        let n_hyp = hyp_active.len() as i64;
        let matched = hyp_active
            .iter()
            .filter(|h| {
                hyp_to_ref
                    .get(**h)
                    .map(|r| ref_active.contains(r.as_str()))
                    .unwrap_or(false)
            })
            .count() as i64;

        let weight = |n: i64| Time::from_centis(dur.centis() * n);
        scored = scored + weight(n_ref);
        missed = missed + weight((n_ref - n_hyp).max(0));
        false_alarm = false_alarm + weight((n_hyp - n_ref).max(0));
        confusion = confusion + weight(n_ref.min(n_hyp) - matched);
    }

    Ok(DerBreakdown::from_components(
        missed.as_seconds(),
        false_alarm.as_seconds(),
        confusion.as_seconds(),
        scored.as_seconds(),
    ))
}

fn covers(seg: &DiarSegment, region: &TimeInterval) -> bool {
    seg.start() <= region.start() && seg.end() >= region.end()
}

/// Global hypothesis -> reference speaker mapping by maximum total
/// overlap, via the assignment kernel.
fn map_speakers(ref_segs: &[DiarSegment], hyp_segs: &[DiarSegment]) -> BTreeMap<String, String> {
    let ref_speakers: Vec<&str> = ref_segs
        .iter()
        .map(DiarSegment::speaker)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let hyp_speakers: Vec<&str> = hyp_segs
        .iter()
        .map(DiarSegment::speaker)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if ref_speakers.is_empty() || hyp_speakers.is_empty() {
        return BTreeMap::new();
    }

    let mut overlap = vec![0i64; ref_speakers.len() * hyp_speakers.len()];
    for (i, r) in ref_speakers.iter().enumerate() {
        for (j, h) in hyp_speakers.iter().enumerate() {
            let mut total = Time::ZERO;
            for rs in ref_segs.iter().filter(|s| s.speaker() == *r) {
                for hs in hyp_segs.iter().filter(|s| s.speaker() == *h) {
                    total = total + overlap_duration(rs.interval(), hs.interval());
                }
            }
            overlap[i * hyp_speakers.len() + j] = total.centis();
        }
    }
    let max = overlap.iter().copied().max().unwrap_or(0);
    let cost: Vec<f64> = overlap.iter().map(|&o| (max - o) as f64).collect();
    let matrix = CostMatrix::new(ref_speakers.len(), hyp_speakers.len(), cost)
        .expect("overlap costs are non-negative");
    let assignment = optimal_assignment(&matrix);

    let mut mapping = BTreeMap::new();
    for (i, col) in assignment.row_to_col.iter().enumerate() {
        if let Some(j) = col {
            // Zero-overlap pairs are no mapping at all.
            if overlap[i * hyp_speakers.len() + *j] > 0 {
                mapping.insert(hyp_speakers[*j].to_string(), ref_speakers[i].to_string());
            }
        }
    }
    mapping
}

/// Merged exclusion zones of `+-collar` around reference boundaries.
fn collar_exclusions(ref_segs: &[DiarSegment], collar: Time) -> Vec<TimeInterval> {
    if collar == Time::ZERO {
        return Vec::new();
    }
    let mut bounds: Vec<Time> = Vec::with_capacity(ref_segs.len() * 2);
    for seg in ref_segs {
        bounds.push(seg.start());
        bounds.push(seg.end());
    }
    bounds.sort();
    let mut zones: Vec<TimeInterval> = Vec::new();
    for b in bounds {
        let lo = (b - collar).max(Time::ZERO);
        let hi = b + collar;
        match zones.last_mut() {
            Some(last) if lo <= last.end() => {
                *last = TimeInterval::new(last.start(), last.end().max(hi)).expect("ordered");
            }
            _ => zones.push(TimeInterval::new(lo, hi).expect("lo <= hi")),
        }
    }
    zones
}

fn is_excluded(region: &TimeInterval, zones: &[TimeInterval]) -> bool {
    zones.iter().any(|z| z.contains(region))
}
