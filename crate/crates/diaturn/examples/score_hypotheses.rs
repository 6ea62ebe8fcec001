//! Score a hypothesis against a reference with DER, cpWER and tcpWER.
//!
//! ```bash
//! cargo run --example score_hypotheses
//! ```

use diaturn::io::read_seglst;
use diaturn::metrics::{report_tsv, score_sessions, ScoreConfig};

const REFERENCE: &str = r#"[
  {"session_id":"demo","speaker":"alice","start_time":0.0,"end_time":2.0,"words":"hello world how are you"},
  {"session_id":"demo","speaker":"bob","start_time":2.5,"end_time":4.0,"words":"good morning everyone"},
  {"session_id":"demo","speaker":"alice","start_time":4.5,"end_time":6.0,"words":"let us begin"}
]"#;

const HYPOTHESIS: &str = r#"[
  {"session_id":"demo","speaker":"spk1","start_time":0.0,"end_time":2.1,"words":"hello word how are you"},
  {"session_id":"demo","speaker":"spk2","start_time":2.4,"end_time":4.0,"words":"good morning everyone"},
  {"session_id":"demo","speaker":"spk1","start_time":4.5,"end_time":6.0,"words":"let us begin now"}
]"#;

fn main() -> diaturn::Result<()> {
    let reference = read_seglst(REFERENCE)?;
    let hypothesis = read_seglst(HYPOTHESIS)?;

    let report = score_sessions(&reference, &hypothesis, &ScoreConfig::default())?;
    print!("{}", report_tsv(&report));

    let scores = &report.per_session["demo"];
    println!(
        "\ncpWER assignment (hypothesis speaker -> reference speaker): {:?}",
        scores.cpwer.assignment
    );
    println!(
        "DER breakdown: missed {:.2}s, false alarm {:.2}s, confusion {:.2}s over {:.2}s",
        scores.der.missed, scores.der.false_alarm, scores.der.confusion, scores.der.scored
    );
    Ok(())
}
