//! Drive the mock recognizer over a synthetic corpus and compare the
//! four evaluation setups.
//!
//! ```bash
//! cargo run --example run_mock_inference
//! ```

use std::collections::BTreeMap;

use diaturn::codec::TargetMode;
use diaturn::harness::{EvalSetup, MockOracleConfig};
use diaturn::io::WordTranscripts;
use diaturn::metrics::{score_sessions, ScoreConfig};
use diaturn::pipeline::{build_corpus_dialogues, simulate_dialogues, BackendSpec, RunConfig};
use diaturn::synth::{jitter_segments_on_grid, synth_corpus, SynthConfig};

fn main() -> diaturn::Result<()> {
    let synth = synth_corpus(&SynthConfig {
        target_duration_s: 240.0,
        word_centis: 30,
        min_words_per_segment: 6,
        ..SynthConfig::default()
    });
    // An imperfect diarization front-end: boundaries shifted on-grid.
    let front_end = jitter_segments_on_grid(&synth.recording, 3, 11);

    let mut recordings = BTreeMap::new();
    recordings.insert(front_end.recording_id().to_string(), front_end);
    let words = WordTranscripts {
        by_speaker: synth.words,
        warnings: vec![],
    };
    let cfg = RunConfig {
        mode: TargetMode::WithTimestamps,
        perturb_p: 0.0,
        seed: 11,
        ..RunConfig::default()
    };
    let dialogues = build_corpus_dialogues(&recordings, &words, &cfg)?;

    let backend = BackendSpec::Mock(MockOracleConfig {
        word_sub_rate: 0.05,
        speaker_flip_rate: 0.05,
        time_jitter_sd: 0.15,
        seed: 11,
        ..MockOracleConfig::default()
    });
    println!(
        "{:<22} {:>8} {:>8} {:>8}",
        "setup", "DER%", "cpWER%", "tcpWER%"
    );
    for setup in EvalSetup::all() {
        let (hyp, _) = simulate_dialogues(&dialogues, &backend, setup, &cfg.codec(), 2)?;
        let report = score_sessions(&synth.reference, &hyp, &ScoreConfig::default())?;
        let s = &report.aggregate;
        println!(
            "{:<22} {:>8.2} {:>8.2} {:>8.2}",
            setup.to_string(),
            s.der.der * 100.0,
            s.cpwer.rate * 100.0,
            s.tcpwer.rate * 100.0
        );
    }
    Ok(())
}
