//! Fixed-point time values and intervals on a recording timeline.
//!
//! All times are stored as integer hundredths of a second. Chunk
//! boundaries, clipped segments and the serialized formats all have to
//! agree on ordering and equality to the last digit, so comparisons must
//! be exact rather than floating-point.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An instant or duration in centiseconds.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(i64);

impl Time {
    pub const ZERO: Time = Time(0);

    pub const fn from_centis(centis: i64) -> Time {
        Time(centis)
    }

    /// Rounds a value in seconds onto the centisecond grid
    /// (ties away from zero).
    pub fn from_seconds(secs: f64) -> Time {
        Time((secs * 100.0).round() as i64)
    }

    pub const fn centis(self) -> i64 {
        self.0
    }

    pub fn as_seconds(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub const fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn min(self, other: Time) -> Time {
        Time(self.0.min(other.0))
    }

    pub fn max(self, other: Time) -> Time {
        Time(self.0.max(other.0))
    }

    pub fn clamp(self, lo: Time, hi: Time) -> Time {
        Time(self.0.clamp(lo.0, hi.0))
    }

    /// Midpoint on the centisecond grid, rounding down on odd sums.
    pub fn midpoint(a: Time, b: Time) -> Time {
        Time((a.0 + b.0) / 2)
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl fmt::Display for Time {
    /// Two-decimal rendering, e.g. `3.20`; the grid makes this exact.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.abs();
        write!(f, "{}{}.{:02}", sign, abs / 100, abs % 100)
    }
}

impl fmt::Debug for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self)
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_seconds())
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let secs = f64::deserialize(deserializer)?;
        if !secs.is_finite() {
            return Err(serde::de::Error::custom("time must be finite"));
        }
        Ok(Time::from_seconds(secs))
    }
}

/// A closed interval `[start, end]` with `start <= end`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeInterval {
    start: Time,
    end: Time,
}

impl TimeInterval {
    pub fn new(start: Time, end: Time) -> Result<TimeInterval> {
        if start > end {
            return Err(Error::Timeline(format!(
                "invalid interval: start {} > end {}",
                start, end
            )));
        }
        Ok(TimeInterval { start, end })
    }

    pub fn from_seconds(start: f64, end: f64) -> Result<TimeInterval> {
        TimeInterval::new(Time::from_seconds(start), Time::from_seconds(end))
    }

    pub const fn start(&self) -> Time {
        self.start
    }

    pub const fn end(&self) -> Time {
        self.end
    }

    pub fn duration(&self) -> Time {
        self.end - self.start
    }

    /// Intersection of two intervals; zero-length results (touching
    /// intervals) are kept so callers can apply their own thresholds.
    pub fn intersect(&self, other: &TimeInterval) -> Option<TimeInterval> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        if start <= end {
            Some(TimeInterval { start, end })
        } else {
            None
        }
    }

    /// Translates the interval by `offset` (may be negative via `Sub`).
    pub fn shifted_back_by(&self, offset: Time) -> TimeInterval {
        TimeInterval {
            start: self.start - offset,
            end: self.end - offset,
        }
    }

    pub fn shifted_forward_by(&self, offset: Time) -> TimeInterval {
        TimeInterval {
            start: self.start + offset,
            end: self.end + offset,
        }
    }

    pub fn contains(&self, other: &TimeInterval) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Debug for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

impl Serialize for TimeInterval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            start: f64,
            end: f64,
        }
        Repr {
            start: self.start.as_seconds(),
            end: self.end.as_seconds(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TimeInterval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            start: f64,
            end: f64,
        }
        let repr = Repr::deserialize(deserializer)?;
        TimeInterval::from_seconds(repr.start, repr.end).map_err(serde::de::Error::custom)
    }
}

/// Overlapped duration of two intervals: `max(0, min(ends) - max(starts))`.
pub fn overlap_duration(a: &TimeInterval, b: &TimeInterval) -> Time {
    let lo = a.start.max(b.start);
    let hi = a.end.min(b.end);
    (hi - lo).max(Time::ZERO)
}
