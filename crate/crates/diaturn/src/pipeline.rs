//! End-to-end pipeline commands behind the CLI: ingest, build,
//! simulate, compose, score, report.
//!
//! Everything is a plain file: a corpus directory holds normalized
//! `corpus.rttm`, `words.ctm` and a `manifest.json`; builds emit
//! dialogue JSONL; simulations emit a hypothesis SegLST plus a JSONL run
//! log from which any evaluation setup can be re-composed without
//! re-running the backend. All stages are deterministic under a fixed
//! seed and job count.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::{CodecConfig, TargetMode, TargetWords};
use crate::dialogue::{build_dialogue, read_dialogues, write_dialogues, Dialogue};
use crate::error::{Error, Result};
use crate::harness::{
    compose_hypothesis, run_dialogue, EvalSetup, ExternalBackend, ExternalBackendConfig,
    MockOracleBackend, MockOracleConfig,
};
use crate::io::{
    read_rttm, read_seglst, read_word_transcript, write_rttm, write_seglst, write_word_transcript,
    SegLstEntry, WordTranscripts,
};
use crate::metrics::{report_tsv, score_sessions, ScoreConfig, ScoreReport, TokenizationMode};
use crate::perturb::PerturbationConfig;
use crate::time::Time;
use crate::timeline::{chunk_recording, Chunk, Recording};

pub const CORPUS_RTTM: &str = "corpus.rttm";
pub const CORPUS_CTM: &str = "words.ctm";
pub const CORPUS_MANIFEST: &str = "manifest.json";

/// Resolved run configuration. Flags override the config file, which
/// overrides these defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub delta_t: f64,
    pub min_chunk: f64,
    pub max_chunk: f64,
    pub perturb_p: f64,
    pub time_jitter_max: f64,
    pub seed: u64,
    pub collar_der: f64,
    pub collar_tcp: f64,
    pub tokenize: TokenizationMode,
    pub mode: TargetMode,
    pub setup: EvalSetup,
    pub jobs: usize,
    pub backend: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            delta_t: 0.1,
            min_chunk: 15.0,
            max_chunk: 25.0,
            perturb_p: 0.1,
            time_jitter_max: 0.5,
            seed: 0,
            collar_der: 0.0,
            collar_tcp: 5.0,
            tokenize: TokenizationMode::word(),
            mode: TargetMode::Plain,
            setup: EvalSetup::all()[0],
            jobs: 1,
            backend: "mock".into(),
        }
    }
}

/// Partial configuration, as read from `--config` JSON or CLI flags.
/// Field names mirror [`RunConfig`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigOverrides {
    pub delta_t: Option<f64>,
    pub min_chunk: Option<f64>,
    pub max_chunk: Option<f64>,
    pub perturb_p: Option<f64>,
    pub time_jitter_max: Option<f64>,
    pub seed: Option<u64>,
    pub collar_der: Option<f64>,
    pub collar_tcp: Option<f64>,
    pub tokenize: Option<String>,
    pub mode: Option<String>,
    pub setup: Option<String>,
    pub jobs: Option<usize>,
    pub backend: Option<String>,
}

impl RunConfig {
    /// Applies precedence flag > config file > default.
    pub fn resolve(
        flags: &RunConfigOverrides,
        file: Option<&RunConfigOverrides>,
    ) -> Result<RunConfig> {
        let defaults = RunConfig::default();
        let pick =
            |flag: Option<f64>, file_v: Option<f64>, def: f64| flag.or(file_v).unwrap_or(def);
        let none = RunConfigOverrides::default();
        let file = file.unwrap_or(&none);
        let tokenize = match flags.tokenize.as_deref().or(file.tokenize.as_deref()) {
            None => defaults.tokenize,
            Some(s) => TokenizationMode::parse_unit(s)
                .ok_or_else(|| Error::Config(format!("unknown tokenize mode {:?}", s)))?,
        };
        let mode = match flags.mode.as_deref().or(file.mode.as_deref()) {
            None => defaults.mode,
            Some(s) => s.parse()?,
        };
        let setup = match flags.setup.as_deref().or(file.setup.as_deref()) {
            None => defaults.setup,
            Some(s) => s.parse()?,
        };
        let cfg = RunConfig {
            delta_t: pick(flags.delta_t, file.delta_t, defaults.delta_t),
            min_chunk: pick(flags.min_chunk, file.min_chunk, defaults.min_chunk),
            max_chunk: pick(flags.max_chunk, file.max_chunk, defaults.max_chunk),
            perturb_p: pick(flags.perturb_p, file.perturb_p, defaults.perturb_p),
            time_jitter_max: pick(
                flags.time_jitter_max,
                file.time_jitter_max,
                defaults.time_jitter_max,
            ),
            seed: flags.seed.or(file.seed).unwrap_or(defaults.seed),
            collar_der: pick(flags.collar_der, file.collar_der, defaults.collar_der),
            collar_tcp: pick(flags.collar_tcp, file.collar_tcp, defaults.collar_tcp),
            tokenize,
            mode,
            setup,
            jobs: flags.jobs.or(file.jobs).unwrap_or(defaults.jobs).max(1),
            backend: flags
                .backend
                .clone()
                .or_else(|| file.backend.clone())
                .unwrap_or(defaults.backend),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_chunk <= 0.0 || self.min_chunk.is_nan() || self.min_chunk > self.max_chunk {
            return Err(Error::Config(format!(
                "chunk bounds must satisfy 0 < min ({}) <= max ({})",
                self.min_chunk, self.max_chunk
            )));
        }
        self.codec().validate()?;
        self.perturbation().validate()?;
        if self.collar_der < 0.0 || self.collar_tcp < 0.0 {
            return Err(Error::Config("collars must be non-negative".into()));
        }
        Ok(())
    }

    /// Codec sized so the grid covers the longest chunk.
    pub fn codec(&self) -> CodecConfig {
        CodecConfig {
            delta_t: self.delta_t,
            max_time_index: (self.max_chunk / self.delta_t).ceil() as u32,
            ..CodecConfig::default()
        }
    }

    pub fn perturbation(&self) -> PerturbationConfig {
        PerturbationConfig {
            p: self.perturb_p,
            time_jitter_max: self.time_jitter_max,
            seed: self.seed,
        }
    }

    pub fn score_config(&self) -> ScoreConfig {
        ScoreConfig {
            der_collar: self.collar_der,
            tcp_collar: self.collar_tcp,
            tokenization: self.tokenize,
        }
    }
}

pub fn load_config_file(path: &Path) -> Result<RunConfigOverrides> {
    let text = fs::read_to_string(path).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRecording {
    recording_id: String,
    duration_s: f64,
    segments: usize,
    speakers: usize,
    words: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    recordings: Vec<ManifestRecording>,
    checksums: BTreeMap<String, String>,
}

fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })
}

fn with_path_context<T>(path: &Path, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        Error::ParseLine { line, msg } => {
            Error::Config(format!("{}:{}: {}", path.display(), line, msg))
        }
        other => other,
    })
}

/// Validates and normalizes raw inputs into a corpus directory.
pub fn cmd_ingest(
    rttm_paths: &[PathBuf],
    ctm_paths: &[PathBuf],
    out_dir: &Path,
) -> Result<Manifest> {
    let mut recordings: BTreeMap<String, Recording> = BTreeMap::new();
    for path in rttm_paths {
        let file = fs::File::open(path).map_err(|e| Error::File {
            path: path.display().to_string(),
            source: e,
        })?;
        let parsed = with_path_context(path, read_rttm(BufReader::new(file)))?;
        for (id, rec) in parsed {
            if recordings.insert(id.clone(), rec).is_some() {
                return Err(Error::Config(format!(
                    "recording {} appears in more than one RTTM input",
                    id
                )));
            }
        }
    }

    let mut words = WordTranscripts::default();
    for path in ctm_paths {
        let file = fs::File::open(path).map_err(|e| Error::File {
            path: path.display().to_string(),
            source: e,
        })?;
        let parsed = with_path_context(path, read_word_transcript(BufReader::new(file)))?;
        for (key, mut list) in parsed.by_speaker {
            let slot = words.by_speaker.entry(key).or_default();
            slot.append(&mut list);
            slot.sort_by(|a, b| {
                (a.start(), a.end(), a.word()).cmp(&(b.start(), b.end(), b.word()))
            });
        }
        words.warnings.extend(parsed.warnings);
    }

    fs::create_dir_all(out_dir)?;
    let rttm_text = write_rttm(&recordings);
    let ctm_text = write_word_transcript(&words);
    fs::write(out_dir.join(CORPUS_RTTM), &rttm_text)?;
    fs::write(out_dir.join(CORPUS_CTM), &ctm_text)?;

    let mut word_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for ((rec, _), list) in &words.by_speaker {
        *word_counts.entry(rec.as_str()).or_default() += list.len();
    }
    let manifest = Manifest {
        recordings: recordings
            .values()
            .map(|rec| ManifestRecording {
                recording_id: rec.recording_id().to_string(),
                duration_s: rec.duration().as_seconds(),
                segments: rec.segments().len(),
                speakers: rec.speech_per_speaker().len(),
                words: word_counts.get(rec.recording_id()).copied().unwrap_or(0),
            })
            .collect(),
        checksums: BTreeMap::from([
            (CORPUS_RTTM.to_string(), sha256_hex(&rttm_text)),
            (CORPUS_CTM.to_string(), sha256_hex(&ctm_text)),
        ]),
    };
    let mut manifest_text = serde_json::to_string_pretty(&manifest)?;
    manifest_text.push('\n');
    fs::write(out_dir.join(CORPUS_MANIFEST), manifest_text)?;
    Ok(manifest)
}

/// Per-segment target words for one chunk: each word of the segment's
/// speaker whose midpoint falls inside the segment, re-based to
/// chunk-relative time and clamped into the window.
fn chunk_transcripts(chunk: &Chunk, words: &WordTranscripts) -> BTreeMap<usize, TargetWords> {
    let window = chunk.window();
    let wdur = window.duration();
    let mut transcripts = BTreeMap::new();
    for (idx, seg) in chunk.segments().iter().enumerate() {
        let abs = seg.interval().shifted_forward_by(window.start());
        let mut selected = Vec::new();
        if let Some(speaker_words) = words.words(chunk.recording_id(), seg.speaker()) {
            for w in speaker_words {
                let mid = Time::midpoint(w.start(), w.end());
                if mid >= abs.start() && mid < abs.end() {
                    let rel = w.interval().shifted_back_by(window.start());
                    let start = rel.start().clamp(Time::ZERO, wdur);
                    let end = rel.end().clamp(start, wdur);
                    if let Ok(interval) = crate::time::TimeInterval::new(start, end) {
                        if let Ok(timing) = crate::timeline::WordTiming::new(w.word(), interval) {
                            selected.push(timing);
                        }
                    }
                }
            }
        }
        transcripts.insert(idx, TargetWords::Timed(selected));
    }
    transcripts
}

/// Builds all dialogues for a corpus, in (recording_id, chunk index)
/// order. Chunks without segments produce no dialogue.
pub fn build_corpus_dialogues(
    recordings: &BTreeMap<String, Recording>,
    words: &WordTranscripts,
    cfg: &RunConfig,
) -> Result<Vec<Dialogue>> {
    cfg.validate()?;
    let gaps: Vec<&str> = recordings
        .keys()
        .map(String::as_str)
        .filter(|rec| !words.by_speaker.keys().any(|(r, _)| r == rec))
        .collect();
    if !gaps.is_empty() {
        return Err(Error::Config(format!(
            "no word transcripts for recordings: {}",
            gaps.join(", ")
        )));
    }

    let codec = cfg.codec();
    let pert = cfg.perturbation();
    let min_dur = Time::from_seconds(cfg.min_chunk);
    let max_dur = Time::from_seconds(cfg.max_chunk);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {}", e)))?;
    let recs: Vec<&Recording> = recordings.values().collect();
    let per_recording: Vec<Result<Vec<Dialogue>>> = pool.install(|| {
        recs.par_iter()
            .map(|rec| {
                let chunks = chunk_recording(rec, min_dur, max_dur)?;
                let mut dialogues = Vec::new();
                for (chunk_index, chunk) in chunks.iter().enumerate() {
                    if chunk.segments().is_empty() {
                        continue;
                    }
                    let transcripts = chunk_transcripts(chunk, words);
                    dialogues.push(build_dialogue(
                        chunk,
                        chunk_index,
                        &transcripts,
                        cfg.mode,
                        &pert,
                        &codec,
                    )?);
                }
                Ok(dialogues)
            })
            .collect()
    });

    // Recordings iterate in BTreeMap order and chunks are emitted in
    // index order, so the flattened output is already totally ordered.
    let mut all = Vec::new();
    for result in per_recording {
        all.extend(result?);
    }
    Ok(all)
}

/// Builds dialogues from a corpus directory into a JSONL file.
pub fn cmd_build(corpus_dir: &Path, out_path: &Path, cfg: &RunConfig) -> Result<usize> {
    let rttm_path = corpus_dir.join(CORPUS_RTTM);
    let recordings = with_path_context(
        &rttm_path,
        read_rttm(BufReader::new(fs::File::open(&rttm_path).map_err(|e| {
            Error::File {
                path: rttm_path.display().to_string(),
                source: e,
            }
        })?)),
    )?;
    let ctm_path = corpus_dir.join(CORPUS_CTM);
    let words = with_path_context(
        &ctm_path,
        read_word_transcript(BufReader::new(fs::File::open(&ctm_path).map_err(|e| {
            Error::File {
                path: ctm_path.display().to_string(),
                source: e,
            }
        })?)),
    )?;
    let dialogues = build_corpus_dialogues(&recordings, &words, cfg)?;
    fs::write(out_path, write_dialogues(&dialogues)?)?;
    Ok(dialogues.len())
}

/// One line of the simulation run log: enough to re-compose any setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub chunk_id: String,
    pub turn_index: usize,
    pub failed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    pub response: String,
    pub speaker_fallback: bool,
    pub time_fallback: bool,
    pub dropped_tokens: u32,
}

/// How to reach the recognizer.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Mock(MockOracleConfig),
    External {
        endpoint: String,
        context_reuse: bool,
    },
}

impl BackendSpec {
    /// Parses `mock` or `external:<endpoint>`.
    pub fn parse(
        spec: &str,
        mock_cfg: MockOracleConfig,
        context_reuse: bool,
    ) -> Result<BackendSpec> {
        if spec == "mock" {
            Ok(BackendSpec::Mock(mock_cfg))
        } else if let Some(endpoint) = spec.strip_prefix("external:") {
            Ok(BackendSpec::External {
                endpoint: endpoint.to_string(),
                context_reuse,
            })
        } else {
            Err(Error::Config(format!(
                "unknown backend {:?} (expected mock or external:<endpoint>)",
                spec
            )))
        }
    }
}

/// Runs every dialogue and composes hypotheses for `setup`. Mock
/// backends run dialogues in parallel (`jobs`); an external backend is
/// a single sequential session stream.
pub fn simulate_dialogues(
    dialogues: &[Dialogue],
    spec: &BackendSpec,
    setup: EvalSetup,
    codec: &CodecConfig,
    jobs: usize,
) -> Result<(Vec<SegLstEntry>, Vec<RunLogEntry>)> {
    let outcomes_per_dialogue: Vec<Vec<crate::harness::TurnOutcome>> = match spec {
        BackendSpec::Mock(mock_cfg) => {
            let backend = MockOracleBackend::from_dialogues(dialogues, *mock_cfg, *codec)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {}", e)))?;
            pool.install(|| {
                dialogues
                    .par_iter()
                    .map(|d| {
                        let mut session = backend.clone();
                        run_dialogue(d, &mut session)
                    })
                    .collect()
            })
        }
        BackendSpec::External {
            endpoint,
            context_reuse,
        } => {
            let cfg = ExternalBackendConfig {
                caps: crate::harness::BackendCaps {
                    supports_context_reuse: *context_reuse,
                    supports_timestamps: true,
                },
                ..ExternalBackendConfig::default()
            };
            let mut backend = ExternalBackend::connect(endpoint, cfg)?;
            dialogues
                .iter()
                .map(|d| run_dialogue(d, &mut backend))
                .collect()
        }
    };

    let mut entries = Vec::new();
    let mut log = Vec::new();
    for (dialogue, outcomes) in dialogues.iter().zip(&outcomes_per_dialogue) {
        let composed = compose_hypothesis(dialogue, outcomes, setup, codec)?;
        for (outcome, turn) in outcomes.iter().zip(&composed) {
            log.push(RunLogEntry {
                chunk_id: dialogue.chunk_id.clone(),
                turn_index: outcome.turn_index,
                failed: outcome.failed,
                diagnostic: outcome.diagnostic.clone(),
                response: outcome.response.clone(),
                speaker_fallback: turn.speaker_fallback,
                time_fallback: turn.time_fallback,
                dropped_tokens: turn.dropped_tokens,
            });
        }
        entries.extend(composed.into_iter().map(|c| c.entry));
    }
    Ok((entries, log))
}

/// Re-composes hypotheses for a setup from a saved run log, without
/// touching any backend.
pub fn compose_from_log(
    dialogues: &[Dialogue],
    log: &[RunLogEntry],
    setup: EvalSetup,
    codec: &CodecConfig,
) -> Result<Vec<SegLstEntry>> {
    let mut by_chunk: BTreeMap<&str, Vec<&RunLogEntry>> = BTreeMap::new();
    for entry in log {
        by_chunk
            .entry(entry.chunk_id.as_str())
            .or_default()
            .push(entry);
    }
    let mut entries = Vec::new();
    for dialogue in dialogues {
        let turns = by_chunk.get(dialogue.chunk_id.as_str()).ok_or_else(|| {
            Error::Config(format!(
                "run log has no entries for chunk {}",
                dialogue.chunk_id
            ))
        })?;
        let mut outcomes: Vec<crate::harness::TurnOutcome> = turns
            .iter()
            .map(|e| crate::harness::TurnOutcome {
                turn_index: e.turn_index,
                response: e.response.clone(),
                failed: e.failed,
                diagnostic: e.diagnostic.clone(),
            })
            .collect();
        outcomes.sort_by_key(|o| o.turn_index);
        let composed = compose_hypothesis(dialogue, &outcomes, setup, codec)?;
        entries.extend(composed.into_iter().map(|c| c.entry));
    }
    Ok(entries)
}

pub fn read_dialogues_file(path: &Path) -> Result<Vec<Dialogue>> {
    with_path_context(path, read_dialogues(&read_file(path)?))
}

pub fn read_runlog_file(path: &Path) -> Result<Vec<RunLogEntry>> {
    let text = read_file(path)?;
    let mut log = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        log.push(
            serde_json::from_str(line)
                .map_err(|e| Error::at_line(idx + 1, e.to_string()))
                .map_err(|e| match e {
                    Error::ParseLine { line, msg } => {
                        Error::Config(format!("{}:{}: {}", path.display(), line, msg))
                    }
                    other => other,
                })?,
        );
    }
    Ok(log)
}

pub fn write_runlog(log: &[RunLogEntry]) -> Result<String> {
    let mut out = String::new();
    for entry in log {
        out.push_str(&serde_json::to_string(entry)?);
        out.push('\n');
    }
    Ok(out)
}

/// Simulate: run the backend over built dialogues, write the hypothesis
/// SegLST and the run log.
pub fn cmd_simulate(
    dialogues_path: &Path,
    spec: &BackendSpec,
    cfg: &RunConfig,
    out_hyp: &Path,
    out_log: &Path,
) -> Result<(usize, usize)> {
    let dialogues = read_dialogues_file(dialogues_path)?;
    let codec = cfg.codec();
    let (entries, log) = simulate_dialogues(&dialogues, spec, cfg.setup, &codec, cfg.jobs)?;
    fs::write(out_hyp, write_seglst(&entries)?)?;
    fs::write(out_log, write_runlog(&log)?)?;
    Ok((entries.len(), log.len()))
}

/// Compose: replay a run log under a different setup.
pub fn cmd_compose(
    dialogues_path: &Path,
    log_path: &Path,
    cfg: &RunConfig,
    out_hyp: &Path,
) -> Result<usize> {
    let dialogues = read_dialogues_file(dialogues_path)?;
    let log = read_runlog_file(log_path)?;
    let entries = compose_from_log(&dialogues, &log, cfg.setup, &cfg.codec())?;
    fs::write(out_hyp, write_seglst(&entries)?)?;
    Ok(entries.len())
}

/// Score: reference vs hypothesis SegLST across all three metrics.
pub fn cmd_score(
    ref_path: &Path,
    hyp_path: &Path,
    cfg: &RunConfig,
    out_json: Option<&Path>,
    out_tsv: Option<&Path>,
) -> Result<ScoreReport> {
    let ref_entries = with_path_context(ref_path, read_seglst(&read_file(ref_path)?))?;
    let hyp_entries = with_path_context(hyp_path, read_seglst(&read_file(hyp_path)?))?;
    let report = score_sessions(&ref_entries, &hyp_entries, &cfg.score_config())?;
    if let Some(path) = out_json {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        fs::write(path, text)?;
    }
    if let Some(path) = out_tsv {
        fs::write(path, report_tsv(&report))?;
    }
    Ok(report)
}

/// Report: render a stored score report.
pub fn cmd_report(report_path: &Path, format: &str) -> Result<String> {
    let report: ScoreReport = serde_json::from_str(&read_file(report_path)?)
        .map_err(|e| Error::Config(format!("{}: {}", report_path.display(), e)))?;
    match format {
        "tsv" => Ok(report_tsv(&report)),
        "table" => {
            let mut out = String::new();
            out.push_str(&format!(
                "{:<24} {:>10} {:>10} {:>10}\n",
                "session", "DER", "cpWER", "tcpWER"
            ));
            let fmt = |v: f64| {
                if v.is_infinite() {
                    "inf".to_string()
                } else {
                    format!("{:.2}%", v * 100.0)
                }
            };
            for (session, scores) in &report.per_session {
                out.push_str(&format!(
                    "{:<24} {:>10} {:>10} {:>10}\n",
                    session,
                    fmt(scores.der.der),
                    fmt(scores.cpwer.rate),
                    fmt(scores.tcpwer.rate)
                ));
            }
            out.push_str(&format!(
                "{:<24} {:>10} {:>10} {:>10}\n",
                "ALL",
                fmt(report.aggregate.der.der),
                fmt(report.aggregate.cpwer.rate),
                fmt(report.aggregate.tcpwer.rate)
            ));
            Ok(out)
        }
        other => Err(Error::Config(format!(
            "unknown report format {:?} (expected tsv or table)",
            other
        ))),
    }
}
