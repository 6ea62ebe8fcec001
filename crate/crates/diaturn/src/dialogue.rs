//! Multi-turn dialogue assembly and the dialogue JSONL dataset format.
//!
//! Each chunk becomes one dialogue with one turn per diarized segment,
//! ordered by (segment start, local speaker index). Turn 0 carries the
//! audio placeholder markers; later turns are text-only. Prompts are
//! built from possibly perturbed conditions while targets always come
//! from the clean labels, and a training sequence is the plain
//! concatenation of prompts and targets with character-offset spans
//! marking exactly the target regions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::{
    build_speaker_map, encode_target, render_prompt, CodecConfig, SegmentCondition, SpeakerMap,
    SpecialToken, TargetMode, TargetWords,
};
use crate::error::{Error, Result};
use crate::perturb::{
    derive_rng_stream, perturb_condition, PerturbationConfig, PerturbationRecord,
};
use crate::time::TimeInterval;
use crate::timeline::Chunk;

/// One prompt/target pair conditioning on a single diarized segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub turn_index: usize,
    /// The condition rendered into the prompt (perturbed when the
    /// perturbation drew a change).
    pub condition: SegmentCondition,
    pub perturbation: PerturbationRecord,
    pub prompt_text: String,
    pub target_text: String,
    /// True only for turn 0, which carries the audio markers.
    pub has_audio: bool,
}

/// A chunk reformulated as a dialogue.
#[derive(Debug, Clone, PartialEq)]
pub struct Dialogue {
    pub chunk_id: String,
    pub recording_id: String,
    /// Chunk window in absolute recording time.
    pub window: TimeInterval,
    pub speaker_map: SpeakerMap,
    pub turns: Vec<Turn>,
    pub mode: TargetMode,
}

/// A half-open `[begin_char, end_char)` span of Unicode scalars into a
/// concatenated training sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossMaskSpan {
    pub begin_char: usize,
    pub end_char: usize,
}

/// Builds the dialogue for one chunk. `transcripts` maps each segment
/// index (in the chunk's sorted order) to its target words; every
/// segment needs an entry, possibly empty.
pub fn build_dialogue(
    chunk: &Chunk,
    chunk_index: usize,
    transcripts: &BTreeMap<usize, TargetWords>,
    mode: TargetMode,
    pert_cfg: &PerturbationConfig,
    codec_cfg: &CodecConfig,
) -> Result<Dialogue> {
    codec_cfg.validate()?;
    pert_cfg.validate()?;
    if chunk.segments().is_empty() {
        return Err(Error::Dialogue(format!(
            "chunk {} has no segments; a dialogue needs at least one turn",
            chunk.chunk_id()
        )));
    }
    let missing: Vec<usize> = (0..chunk.segments().len())
        .filter(|idx| !transcripts.contains_key(idx))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Dialogue(format!(
            "chunk {}: missing transcripts for segment indices {:?}",
            chunk.chunk_id(),
            missing
        )));
    }
    if let Some(&extra) = transcripts.keys().find(|k| **k >= chunk.segments().len()) {
        return Err(Error::Dialogue(format!(
            "chunk {}: transcript key {} has no matching segment",
            chunk.chunk_id(),
            extra
        )));
    }

    let speaker_map = build_speaker_map(chunk, codec_cfg)?;
    let with_timestamps = mode == TargetMode::WithTimestamps;

    // Turn order: (segment start, local speaker index, segment end).
    let mut order: Vec<usize> = (0..chunk.segments().len()).collect();
    order.sort_by_key(|&idx| {
        let seg = &chunk.segments()[idx];
        let local = speaker_map
            .local_index(seg.speaker())
            .expect("mapped above");
        (seg.start(), local, seg.end())
    });

    let mut turns = Vec::with_capacity(order.len());
    for (turn_index, &seg_idx) in order.iter().enumerate() {
        let seg = &chunk.segments()[seg_idx];
        let local = speaker_map
            .local_index(seg.speaker())
            .expect("mapped above");
        let clean = SegmentCondition::from_interval(local, seg.interval(), codec_cfg)?;
        let mut rng = derive_rng_stream(
            pert_cfg.seed,
            chunk.recording_id(),
            chunk_index as u64,
            turn_index as u64,
        );
        let perturbation =
            perturb_condition(&clean, speaker_map.len(), pert_cfg, codec_cfg, &mut rng);

        let mut prompt_text = String::new();
        if turn_index == 0 {
            prompt_text.push_str(&SpecialToken::StartOfAudio.to_string());
            prompt_text.push_str(&SpecialToken::EndOfAudio.to_string());
        }
        prompt_text.push_str(&render_prompt(&perturbation.perturbed, with_timestamps));
        let target_text = encode_target(local, &transcripts[&seg_idx], mode, codec_cfg)?;

        turns.push(Turn {
            turn_index,
            condition: perturbation.perturbed,
            perturbation,
            prompt_text,
            target_text,
            has_audio: turn_index == 0,
        });
    }

    Ok(Dialogue {
        chunk_id: chunk.chunk_id().to_string(),
        recording_id: chunk.recording_id().to_string(),
        window: *chunk.window(),
        speaker_map,
        turns,
        mode,
    })
}

/// Concatenates prompts and targets in turn order and returns the spans
/// (in Unicode scalars) covering exactly the target regions.
pub fn concat_training_sequence(dialogue: &Dialogue) -> (String, Vec<LossMaskSpan>) {
    let mut text = String::new();
    let mut chars = 0usize;
    let mut spans = Vec::with_capacity(dialogue.turns.len());
    for turn in &dialogue.turns {
        text.push_str(&turn.prompt_text);
        chars += turn.prompt_text.chars().count();
        let begin_char = chars;
        text.push_str(&turn.target_text);
        chars += turn.target_text.chars().count();
        spans.push(LossMaskSpan {
            begin_char,
            end_char: chars,
        });
    }
    (text, spans)
}

#[derive(Serialize, Deserialize)]
struct WindowRecord {
    start: f64,
    end: f64,
}

#[derive(Serialize, Deserialize)]
struct TurnRecord {
    prompt: String,
    target: String,
    condition: SegmentCondition,
    perturbation: PerturbationRecord,
    has_audio: bool,
}

#[derive(Serialize, Deserialize)]
struct DialogueRecord {
    chunk_id: String,
    recording_id: String,
    window: WindowRecord,
    mode: TargetMode,
    speaker_map: BTreeMap<String, u32>,
    turns: Vec<TurnRecord>,
}

/// Serializes dialogues as JSONL, one object per line, preserving input
/// order. Zero-turn dialogues are rejected.
pub fn write_dialogues(dialogues: &[Dialogue]) -> Result<String> {
    let mut out = String::new();
    for d in dialogues {
        if d.turns.is_empty() {
            return Err(Error::Dialogue(format!(
                "dialogue {} has no turns",
                d.chunk_id
            )));
        }
        let record = DialogueRecord {
            chunk_id: d.chunk_id.clone(),
            recording_id: d.recording_id.clone(),
            window: WindowRecord {
                start: d.window.start().as_seconds(),
                end: d.window.end().as_seconds(),
            },
            mode: d.mode,
            speaker_map: d.speaker_map.forward().clone(),
            turns: d
                .turns
                .iter()
                .map(|t| TurnRecord {
                    prompt: t.prompt_text.clone(),
                    target: t.target_text.clone(),
                    condition: t.condition,
                    perturbation: t.perturbation,
                    has_audio: t.has_audio,
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses dialogue JSONL, validating the type invariants; errors carry
/// the 1-based line number.
pub fn read_dialogues(text: &str) -> Result<Vec<Dialogue>> {
    let mut dialogues = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: DialogueRecord =
            serde_json::from_str(line).map_err(|e| Error::at_line(lineno, e.to_string()))?;
        dialogues.push(dialogue_from_record(record, lineno)?);
    }
    Ok(dialogues)
}

fn dialogue_from_record(record: DialogueRecord, lineno: usize) -> Result<Dialogue> {
    let fail = |msg: String| Error::at_line(lineno, msg);
    if record.turns.is_empty() {
        return Err(fail(format!("dialogue {} has no turns", record.chunk_id)));
    }
    let window = TimeInterval::from_seconds(record.window.start, record.window.end)
        .map_err(|e| fail(e.to_string()))?;
    let speaker_map =
        SpeakerMap::from_forward(record.speaker_map).map_err(|e| fail(e.to_string()))?;
    let start_marker = SpecialToken::StartOfAudio.to_string();
    let end_marker = SpecialToken::EndOfAudio.to_string();
    let mut turns = Vec::with_capacity(record.turns.len());
    for (turn_index, t) in record.turns.into_iter().enumerate() {
        if t.condition.start_idx > t.condition.end_idx {
            return Err(fail(format!(
                "turn {}: condition start index {} after end index {}",
                turn_index, t.condition.start_idx, t.condition.end_idx
            )));
        }
        if turn_index == 0 {
            // The placeholder region between the markers may hold
            // backend-specific audio tokens; this writer leaves it
            // empty.
            if !t.has_audio
                || !t.prompt.starts_with(&start_marker)
                || !t.prompt.contains(&end_marker)
            {
                return Err(fail(format!(
                    "turn 0 of {} must carry the audio markers",
                    record.chunk_id
                )));
            }
        } else if t.has_audio || t.prompt.contains(&start_marker) {
            return Err(fail(format!(
                "turn {} of {} must not carry audio markers",
                turn_index, record.chunk_id
            )));
        }
        let any_flag = t.perturbation.speaker_perturbed
            || t.perturbation.start_perturbed
            || t.perturbation.end_perturbed;
        if (t.perturbation.perturbed != t.perturbation.original) != any_flag {
            return Err(fail(format!(
                "turn {}: perturbation flags disagree with recorded conditions",
                turn_index
            )));
        }
        turns.push(Turn {
            turn_index,
            condition: t.condition,
            perturbation: t.perturbation,
            prompt_text: t.prompt,
            target_text: t.target,
            has_audio: t.has_audio,
        });
    }
    Ok(Dialogue {
        chunk_id: record.chunk_id,
        recording_id: record.recording_id,
        window,
        speaker_map,
        turns,
        mode: record.mode,
    })
}
