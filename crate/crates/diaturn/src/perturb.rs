//! Label perturbation: corrupt prompt-side speaker/time cues with
//! probability `p` while the targets stay untouched, teaching a model to
//! correct noisy conditions instead of copying them.
//!
//! Each of the speaker label, start index and end index is perturbed by
//! an independent Bernoulli(p) draw. Boundary perturbation adds uniform
//! jitter on the continuous timeline and re-discretizes; the jitter is
//! redrawn (bounded retries) until the index actually changes, so a set
//! flag always corresponds to a changed condition and the marginal flag
//! rate stays at `p`. Single-speaker chunks cannot flip the speaker;
//! that draw is skipped with the flag left false.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::{discretize_time, undiscretize_time, CodecConfig, SegmentCondition};
use crate::error::{Error, Result};

/// Retries for the boundary jitter before giving up on changing the
/// index (possible only when the jitter range is narrower than the grid
/// or the condition is pinned against a clamp).
const JITTER_RETRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    /// Per-field perturbation probability.
    pub p: f64,
    /// Uniform jitter range in seconds for each boundary.
    pub time_jitter_max: f64,
    pub seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            p: 0.1,
            time_jitter_max: 0.5,
            seed: 0,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!(
                "perturbation p {} outside [0, 1]",
                self.p
            )));
        }
        if self.time_jitter_max < 0.0 || !self.time_jitter_max.is_finite() {
            return Err(Error::Config(format!(
                "time_jitter_max {} must be non-negative",
                self.time_jitter_max
            )));
        }
        Ok(())
    }

    /// Disabled perturbation (p = 0).
    pub fn off(seed: u64) -> PerturbationConfig {
        PerturbationConfig {
            p: 0.0,
            time_jitter_max: 0.0,
            seed,
        }
    }
}

/// What happened to one condition: the flags, the original, and the
/// perturbed value actually placed in the prompt. The perturbed
/// condition differs from the original exactly when some flag is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub speaker_perturbed: bool,
    pub start_perturbed: bool,
    pub end_perturbed: bool,
    pub original: SegmentCondition,
    pub perturbed: SegmentCondition,
}

impl PerturbationRecord {
    /// An identity record (all flags false).
    pub fn unchanged(cond: SegmentCondition) -> PerturbationRecord {
        PerturbationRecord {
            speaker_perturbed: false,
            start_perturbed: false,
            end_perturbed: false,
            original: cond,
            perturbed: cond,
        }
    }
}

/// Deterministic, order-independent random stream for one dialogue turn.
/// Identical inputs give identical draws regardless of parallelism.
pub fn derive_rng_stream(
    seed: u64,
    recording_id: &str,
    chunk_index: u64,
    turn_index: u64,
) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((recording_id.len() as u64).to_le_bytes());
    hasher.update(recording_id.as_bytes());
    hasher.update(chunk_index.to_le_bytes());
    hasher.update(turn_index.to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Perturbs one prompt condition. `chunk_speakers` is the number of
/// distinct speakers in the chunk (the replacement pool).
pub fn perturb_condition(
    cond: &SegmentCondition,
    chunk_speakers: usize,
    cfg: &PerturbationConfig,
    codec: &CodecConfig,
    rng: &mut impl Rng,
) -> PerturbationRecord {
    let draw_speaker = rng.gen_bool(cfg.p);
    let draw_start = rng.gen_bool(cfg.p);
    let draw_end = rng.gen_bool(cfg.p);

    let mut perturbed = *cond;
    let mut speaker_perturbed = false;
    if draw_speaker && chunk_speakers > 1 {
        let offset = rng.gen_range(0..chunk_speakers as u32 - 1);
        let replacement = if offset >= cond.local_speaker {
            offset + 1
        } else {
            offset
        };
        perturbed.local_speaker = replacement;
        speaker_perturbed = true;
    }

    let start_perturbed = draw_start
        && jitter_index(
            cond.start_idx,
            None,
            Some(perturbed.end_idx),
            cfg,
            codec,
            rng,
        )
        .map(|idx| {
            perturbed.start_idx = idx;
            true
        })
        .unwrap_or(false);
    let end_perturbed = draw_end
        && jitter_index(
            cond.end_idx,
            Some(perturbed.start_idx),
            None,
            cfg,
            codec,
            rng,
        )
        .map(|idx| {
            perturbed.end_idx = idx;
            true
        })
        .unwrap_or(false);

    PerturbationRecord {
        speaker_perturbed,
        start_perturbed,
        end_perturbed,
        original: *cond,
        perturbed,
    }
}

/// Jitters one boundary index on the continuous timeline, clamping into
/// `[floor, ceil]` and `[0, max_time_index]`. Returns `None` when the
/// index cannot be moved.
fn jitter_index(
    idx: u32,
    floor: Option<u32>,
    ceil: Option<u32>,
    cfg: &PerturbationConfig,
    codec: &CodecConfig,
    rng: &mut impl Rng,
) -> Option<u32> {
    if cfg.time_jitter_max <= 0.0 {
        return None;
    }
    let t = undiscretize_time(idx.min(codec.max_time_index), codec).ok()?;
    for _ in 0..JITTER_RETRIES {
        let jitter = rng.gen_range(-cfg.time_jitter_max..=cfg.time_jitter_max);
        let shifted = (t + jitter).max(0.0);
        let mut new_idx = discretize_time(shifted, codec).ok()?;
        if let Some(lo) = floor {
            new_idx = new_idx.max(lo);
        }
        if let Some(hi) = ceil {
            new_idx = new_idx.min(hi);
        }
        if new_idx != idx {
            return Some(new_idx);
        }
    }
    None
}
