//! Parse an RTTM timeline and split it into 15-25 s chunks.
//!
//! ```bash
//! cargo run --example chunk_recording
//! ```

use std::io::Cursor;

use diaturn::io::read_rttm;
use diaturn::time::Time;
use diaturn::timeline::chunk_recording;

const RTTM: &str = "\
SPEAKER lecture 1 0.00 18.00 <NA> <NA> host <NA> <NA>
SPEAKER lecture 1 19.20 14.30 <NA> <NA> guest <NA> <NA>
SPEAKER lecture 1 34.00 6.00 <NA> <NA> host <NA> <NA>
SPEAKER lecture 1 41.50 11.00 <NA> <NA> guest <NA> <NA>
";

fn main() -> diaturn::Result<()> {
    let recordings = read_rttm(Cursor::new(RTTM))?;
    for rec in recordings.values() {
        println!(
            "recording {} ({} s, {} segments)",
            rec.recording_id(),
            rec.duration(),
            rec.segments().len()
        );
        let chunks = chunk_recording(rec, Time::from_seconds(15.0), Time::from_seconds(25.0))?;
        for chunk in &chunks {
            println!(
                "  {} window [{}, {}]",
                chunk.chunk_id(),
                chunk.window().start(),
                chunk.window().end()
            );
            for seg in chunk.segments() {
                println!(
                    "    {}: [{}, {}] (chunk-relative)",
                    seg.speaker(),
                    seg.start(),
                    seg.end()
                );
            }
        }
    }
    Ok(())
}
