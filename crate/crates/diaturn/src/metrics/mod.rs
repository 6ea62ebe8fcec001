//! Evaluation suite: DER, cpWER/cpCER, tcpWER/tcpCER, and pooled
//! session reports.

mod assignment;
mod der;
mod tokenize;
mod wer;

/// JSON has no infinity; infinite rates serialize as `null` and read
/// back as infinity.
pub(crate) mod rate_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

pub use assignment::{optimal_assignment, Assignment, CostMatrix};
pub use der::{compute_der, DerBreakdown};
pub use tokenize::{tokenize, TokenUnit, TokenizationMode};
pub use wer::{compute_cpwer, compute_tcpwer, WerBreakdown};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::SegLstEntry;
use crate::timeline::DiarSegment;

/// All three metrics for one session (or pooled over sessions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionScores {
    pub der: DerBreakdown,
    pub cpwer: WerBreakdown,
    pub tcpwer: WerBreakdown,
}

/// Per-session scores plus a pooled aggregate (component sums, ratios
/// recomputed from the pooled components).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_session: BTreeMap<String, SessionScores>,
    pub aggregate: SessionScores,
}

/// Scoring knobs shared by the session scorers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub der_collar: f64,
    pub tcp_collar: f64,
    pub tokenization: TokenizationMode,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            der_collar: 0.0,
            tcp_collar: 5.0,
            tokenization: TokenizationMode::word(),
        }
    }
}

/// Segments for DER are the SegLST entries themselves.
pub fn entries_to_segments(entries: &[SegLstEntry]) -> Vec<DiarSegment> {
    entries
        .iter()
        .map(|e| DiarSegment::new(e.speaker.clone(), e.interval()).expect("validated entries"))
        .collect()
}

/// Scores one session cross the three metrics.
pub fn score_session(
    ref_entries: &[SegLstEntry],
    hyp_entries: &[SegLstEntry],
    cfg: &ScoreConfig,
) -> Result<SessionScores> {
    let der = compute_der(
        &entries_to_segments(ref_entries),
        &entries_to_segments(hyp_entries),
        cfg.der_collar,
    )?;
    let cpwer = compute_cpwer(ref_entries, hyp_entries, &cfg.tokenization)?;
    let tcpwer = compute_tcpwer(ref_entries, hyp_entries, cfg.tcp_collar, &cfg.tokenization)?;
    Ok(SessionScores { der, cpwer, tcpwer })
}

/// Groups entries by session id, preserving entry order within each.
pub fn group_by_session(entries: &[SegLstEntry]) -> BTreeMap<String, Vec<SegLstEntry>> {
    let mut map: BTreeMap<String, Vec<SegLstEntry>> = BTreeMap::new();
    for e in entries {
        map.entry(e.session_id.clone()).or_default().push(e.clone());
    }
    map
}

/// Scores every session and pools the aggregate. Both sides must cover
/// exactly the same session ids.
pub fn score_sessions(
    ref_entries: &[SegLstEntry],
    hyp_entries: &[SegLstEntry],
    cfg: &ScoreConfig,
) -> Result<ScoreReport> {
    let refs = group_by_session(ref_entries);
    let hyps = group_by_session(hyp_entries);
    let ref_only: Vec<&String> = refs.keys().filter(|k| !hyps.contains_key(*k)).collect();
    let hyp_only: Vec<&String> = hyps.keys().filter(|k| !refs.contains_key(*k)).collect();
    if !ref_only.is_empty() || !hyp_only.is_empty() {
        return Err(Error::Metrics(format!(
            "session sets differ: reference-only {:?}, hypothesis-only {:?}",
            ref_only, hyp_only
        )));
    }
    let mut per_session = BTreeMap::new();
    for (session, ref_list) in &refs {
        let scores = score_session(ref_list, &hyps[session], cfg)?;
        per_session.insert(session.clone(), scores);
    }
    aggregate(per_session)
}

/// Pools per-session reports into a [`ScoreReport`]. Rejects empty
/// input; session ids are unique by construction of the map.
pub fn aggregate(per_session: BTreeMap<String, SessionScores>) -> Result<ScoreReport> {
    if per_session.is_empty() {
        return Err(Error::Metrics("no sessions to aggregate".into()));
    }
    let aggregate = SessionScores {
        der: DerBreakdown::pooled(per_session.values().map(|s| &s.der)),
        cpwer: WerBreakdown::pooled(per_session.values().map(|s| &s.cpwer)),
        tcpwer: WerBreakdown::pooled(per_session.values().map(|s| &s.tcpwer)),
    };
    Ok(ScoreReport {
        per_session,
        aggregate,
    })
}

fn fmt_rate(rate: f64) -> String {
    if rate.is_infinite() {
        "inf".to_string()
    } else {
        format!("{:.6}", rate)
    }
}

/// Flat TSV rendering: `session <TAB> metric <TAB> value <TAB> components`.
pub fn report_tsv(report: &ScoreReport) -> String {
    let mut out = String::from("session\tmetric\tvalue\tcomponents\n");
    let mut push = |session: &str, scores: &SessionScores| {
        out.push_str(&format!(
            "{}\tder\t{}\tmissed={:.2},false_alarm={:.2},confusion={:.2},scored={:.2}\n",
            session,
            fmt_rate(scores.der.der),
            scores.der.missed,
            scores.der.false_alarm,
            scores.der.confusion,
            scores.der.scored
        ));
        for (name, wer) in [("cpwer", &scores.cpwer), ("tcpwer", &scores.tcpwer)] {
            out.push_str(&format!(
                "{}\t{}\t{}\tsub={},ins={},del={},ref_len={}\n",
                session,
                name,
                fmt_rate(wer.rate),
                wer.substitutions,
                wer.insertions,
                wer.deletions,
                wer.reference_length
            ));
        }
    };
    for (session, scores) in &report.per_session {
        push(session, scores);
    }
    push("ALL", &report.aggregate);
    out
}
