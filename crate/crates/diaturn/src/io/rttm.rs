//! RTTM speaker-segment files.
//!
//! Only `SPEAKER` records are consumed:
//! `SPEAKER <file> <chan> <tbeg> <tdur> <ortho> <stype> <name> <conf> <slat>`.
//! The channel is ignored on read and written back as `1`; times are
//! serialized with exactly two decimals.

use std::collections::BTreeMap;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::time::{Time, TimeInterval};
use crate::timeline::{DiarSegment, Recording};

/// Parses RTTM text into recordings keyed by file id. Lines starting
/// with `;;` and non-SPEAKER records are skipped. Each recording's
/// duration is its maximum segment end; use [`Recording::with_duration`]
/// to override.
pub fn read_rttm<R: BufRead>(reader: R) -> Result<BTreeMap<String, Recording>> {
    let mut segments: BTreeMap<String, Vec<DiarSegment>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(";;") {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields[0] != "SPEAKER" {
            continue;
        }
        if fields.len() < 8 {
            return Err(Error::at_line(
                lineno,
                format!(
                    "SPEAKER record has {} fields, expected at least 8",
                    fields.len()
                ),
            ));
        }
        let file = fields[1];
        let tbeg = parse_seconds(fields[3], lineno, "tbeg")?;
        let tdur = parse_seconds(fields[4], lineno, "tdur")?;
        if tdur.is_negative() {
            return Err(Error::at_line(
                lineno,
                format!("negative tdur {}", fields[4]),
            ));
        }
        if tbeg.is_negative() {
            return Err(Error::at_line(
                lineno,
                format!("negative tbeg {}", fields[3]),
            ));
        }
        let speaker = fields[7];
        let interval = TimeInterval::new(tbeg, tbeg + tdur)
            .map_err(|e| Error::at_line(lineno, e.to_string()))?;
        let seg = DiarSegment::new(speaker, interval)
            .map_err(|e| Error::at_line(lineno, e.to_string()))?;
        segments.entry(file.to_string()).or_default().push(seg);
    }

    let mut recordings = BTreeMap::new();
    for (file, segs) in segments {
        let rec = Recording::from_segments(file.clone(), segs)?;
        recordings.insert(file, rec);
    }
    Ok(recordings)
}

/// Serializes recordings in normal form: recordings ordered by id,
/// segments by (start, end, speaker). Recordings without segments emit
/// no lines.
pub fn write_rttm(recordings: &BTreeMap<String, Recording>) -> String {
    let mut out = String::new();
    for rec in recordings.values() {
        for seg in rec.segments() {
            out.push_str(&format!(
                "SPEAKER {} 1 {} {} <NA> <NA> {} <NA> <NA>\n",
                rec.recording_id(),
                seg.start(),
                seg.interval().duration(),
                seg.speaker()
            ));
        }
    }
    out
}

fn parse_seconds(field: &str, lineno: usize, name: &str) -> Result<Time> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::at_line(lineno, format!("malformed {} field {:?}", name, field)))?;
    if !v.is_finite() {
        return Err(Error::at_line(
            lineno,
            format!("non-finite {} field {:?}", name, field),
        ));
    }
    Ok(Time::from_seconds(v))
}
