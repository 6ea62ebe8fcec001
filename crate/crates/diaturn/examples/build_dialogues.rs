//! Build dialogue JSONL from a synthetic corpus and show the
//! concatenated training sequence with its response-only loss spans.
//!
//! ```bash
//! cargo run --example build_dialogues
//! ```

use std::collections::BTreeMap;

use diaturn::codec::TargetMode;
use diaturn::dialogue::{concat_training_sequence, write_dialogues};
use diaturn::io::WordTranscripts;
use diaturn::pipeline::{build_corpus_dialogues, RunConfig};
use diaturn::synth::{synth_corpus, SynthConfig};

fn main() -> diaturn::Result<()> {
    let synth = synth_corpus(&SynthConfig {
        target_duration_s: 60.0,
        ..SynthConfig::default()
    });
    let mut recordings = BTreeMap::new();
    recordings.insert(
        synth.recording.recording_id().to_string(),
        synth.recording.clone(),
    );
    let words = WordTranscripts {
        by_speaker: synth.words,
        warnings: vec![],
    };
    let cfg = RunConfig {
        mode: TargetMode::WithTimestamps,
        perturb_p: 0.1,
        seed: 7,
        ..RunConfig::default()
    };
    let dialogues = build_corpus_dialogues(&recordings, &words, &cfg)?;
    println!(
        "built {} dialogues / {} turns",
        dialogues.len(),
        dialogues.iter().map(|d| d.turns.len()).sum::<usize>()
    );

    let jsonl = write_dialogues(&dialogues)?;
    println!(
        "\nfirst JSONL line:\n{}",
        jsonl.lines().next().unwrap_or("")
    );

    let (text, spans) = concat_training_sequence(&dialogues[0]);
    println!("\ntraining sequence for {}:", dialogues[0].chunk_id);
    println!(
        "  {} chars, {} response spans",
        text.chars().count(),
        spans.len()
    );
    let chars: Vec<char> = text.chars().collect();
    for span in spans.iter().take(3) {
        let slice: String = chars[span.begin_char..span.end_char].iter().collect();
        println!("  [{:>5}, {:>5}) {}", span.begin_char, span.end_char, slice);
    }
    Ok(())
}
