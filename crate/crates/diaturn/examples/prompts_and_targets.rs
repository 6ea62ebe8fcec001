//! Render per-turn prompts and encode/decode response targets in both
//! modes.
//!
//! ```bash
//! cargo run --example prompts_and_targets
//! ```

use diaturn::codec::{
    decode_response, encode_target, render_prompt, CodecConfig, SegmentCondition, TargetMode,
    TargetWords,
};
use diaturn::time::TimeInterval;
use diaturn::timeline::WordTiming;

fn main() -> diaturn::Result<()> {
    let cfg = CodecConfig::default();
    let cond = SegmentCondition::new(0, 12, 48);

    println!("prompt (plain):\n  {}", render_prompt(&cond, false));
    println!("prompt (timestamped):\n  {}", render_prompt(&cond, true));

    let words = TargetWords::Timed(vec![
        WordTiming::new("hi", TimeInterval::from_seconds(0.5, 0.8)?)?,
        WordTiming::new("there", TimeInterval::from_seconds(0.9, 1.4)?)?,
    ]);
    let target = encode_target(0, &words, TargetMode::WithTimestamps, &cfg)?;
    println!("timestamped target:\n  {}", target);

    let decoded = decode_response(&target, &cond, TargetMode::WithTimestamps, &cfg);
    println!(
        "decoded speaker {} words {:?}",
        decoded.speaker, decoded.words
    );
    for timing in decoded.timings.as_deref().unwrap_or_default() {
        println!("  {} [{}, {}]", timing.word(), timing.start(), timing.end());
    }

    // A response may correct the prompted speaker; the decoder keeps
    // the correction and falls back only when no token is present.
    let corrected = "<|spk_idx_1|>actually me";
    let decoded = decode_response(corrected, &cond, TargetMode::Plain, &cfg);
    println!(
        "corrected response -> speaker {} (fallback: {})",
        decoded.speaker, decoded.speaker_fallback
    );
    Ok(())
}
