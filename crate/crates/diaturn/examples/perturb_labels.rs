//! Label perturbation: corrupt prompt-side cues while targets stay
//! clean, and check the empirical per-field rates.
//!
//! ```bash
//! cargo run --example perturb_labels
//! ```

use diaturn::codec::{CodecConfig, SegmentCondition};
use diaturn::perturb::{derive_rng_stream, perturb_condition, PerturbationConfig};

fn main() {
    let codec = CodecConfig::default();
    let cfg = PerturbationConfig {
        p: 0.1,
        time_jitter_max: 0.5,
        seed: 2024,
    };

    println!("a few perturbed conditions (p = {}):", cfg.p);
    for turn in 0..8u64 {
        let cond = SegmentCondition::new(0, 40, 120);
        let mut rng = derive_rng_stream(cfg.seed, "demo", 0, turn);
        let rec = perturb_condition(&cond, 3, &cfg, &codec, &mut rng);
        println!(
            "  turn {}: spk {} -> {}, start {} -> {}, end {} -> {} (flags {}{}{})",
            turn,
            rec.original.local_speaker,
            rec.perturbed.local_speaker,
            rec.original.start_idx,
            rec.perturbed.start_idx,
            rec.original.end_idx,
            rec.perturbed.end_idx,
            u8::from(rec.speaker_perturbed),
            u8::from(rec.start_perturbed),
            u8::from(rec.end_perturbed),
        );
    }

    const N: u32 = 20_000;
    let (mut spk, mut start, mut end) = (0u32, 0u32, 0u32);
    for i in 0..N {
        let cond = SegmentCondition::new(i % 3, 30 + (i % 150), 60 + (i % 180));
        let mut rng = derive_rng_stream(cfg.seed, "stats", 0, i as u64);
        let rec = perturb_condition(&cond, 3, &cfg, &codec, &mut rng);
        spk += u32::from(rec.speaker_perturbed);
        start += u32::from(rec.start_perturbed);
        end += u32::from(rec.end_perturbed);
    }
    println!("\nempirical rates over {} conditions:", N);
    println!("  speaker {:.4}", spk as f64 / N as f64);
    println!("  start   {:.4}", start as f64 / N as f64);
    println!("  end     {:.4}", end as f64 / N as f64);
}
