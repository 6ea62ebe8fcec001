//! Thin CLI over the pipeline commands.
//!
//! Exit codes: 0 success, 2 input/validation error, 3 backend/runtime
//! error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use diaturn::harness::MockOracleConfig;
use diaturn::pipeline::{self, BackendSpec, RunConfig, RunConfigOverrides};

#[derive(Parser)]
#[command(
    name = "diaturn",
    version,
    about = "Diarization-conditioned multi-turn transcription data plane"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalFlags {
    /// JSON config file mirroring the flag names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parallelism across recordings/sessions.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Timestamp grid in seconds.
    #[arg(long, global = true)]
    delta_t: Option<f64>,
    #[arg(long, global = true)]
    min_chunk: Option<f64>,
    #[arg(long, global = true)]
    max_chunk: Option<f64>,
    #[arg(long, global = true)]
    perturb_p: Option<f64>,
    /// Target mode: plain or with_timestamps.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Evaluation setup, e.g. dia-spk,llm-time.
    #[arg(long, global = true)]
    setup: Option<String>,
    #[arg(long, global = true)]
    collar_der: Option<f64>,
    #[arg(long, global = true)]
    collar_tcp: Option<f64>,
    /// Scoring tokens: word or char.
    #[arg(long, global = true)]
    tokenize: Option<String>,
    /// Backend: mock or external:<endpoint>.
    #[arg(long, global = true)]
    backend: Option<String>,
    #[arg(long, global = true)]
    time_jitter_max: Option<f64>,
}

impl GlobalFlags {
    fn overrides(&self) -> RunConfigOverrides {
        RunConfigOverrides {
            delta_t: self.delta_t,
            min_chunk: self.min_chunk,
            max_chunk: self.max_chunk,
            perturb_p: self.perturb_p,
            time_jitter_max: self.time_jitter_max,
            seed: self.seed,
            collar_der: self.collar_der,
            collar_tcp: self.collar_tcp,
            tokenize: self.tokenize.clone(),
            mode: self.mode.clone(),
            setup: self.setup.clone(),
            jobs: self.jobs,
            backend: self.backend.clone(),
        }
    }

    fn resolve(&self) -> diaturn::Result<RunConfig> {
        let file = match &self.config {
            Some(path) => Some(pipeline::load_config_file(path)?),
            None => None,
        };
        RunConfig::resolve(&self.overrides(), file.as_ref())
    }
}

#[derive(Args)]
struct NoiseFlags {
    /// Sets every mock corruption rate (and the jitter SD) at once.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    word_sub_rate: Option<f64>,
    #[arg(long)]
    word_del_rate: Option<f64>,
    #[arg(long)]
    word_ins_rate: Option<f64>,
    #[arg(long)]
    speaker_flip_rate: Option<f64>,
    #[arg(long)]
    time_jitter_sd: Option<f64>,
}

impl NoiseFlags {
    fn mock_config(&self, seed: u64) -> MockOracleConfig {
        let base = self.noise.unwrap_or(0.0);
        MockOracleConfig {
            word_sub_rate: self.word_sub_rate.unwrap_or(base),
            word_del_rate: self.word_del_rate.unwrap_or(base),
            word_ins_rate: self.word_ins_rate.unwrap_or(base),
            speaker_flip_rate: self.speaker_flip_rate.unwrap_or(base),
            time_jitter_sd: self.time_jitter_sd.unwrap_or(base),
            seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize RTTM + CTM inputs into a corpus directory.
    Ingest {
        #[arg(long, required = true, num_args = 1..)]
        rttm: Vec<PathBuf>,
        #[arg(long, num_args = 0..)]
        ctm: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build dialogue JSONL from an ingested corpus.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a backend over dialogues and compose hypotheses.
    Simulate {
        #[arg(long)]
        dialogues: PathBuf,
        #[arg(long)]
        out_hyp: PathBuf,
        #[arg(long)]
        out_log: PathBuf,
        /// Declare that an external backend cannot reuse turn context.
        #[arg(long)]
        no_context_reuse: bool,
        #[command(flatten)]
        noise: NoiseFlags,
    },
    /// Re-compose hypotheses for another setup from a saved run log.
    Compose {
        #[arg(long)]
        dialogues: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out_hyp: PathBuf,
    },
    /// Score hypothesis against reference SegLST.
    Score {
        #[arg(long = "ref")]
        ref_path: PathBuf,
        #[arg(long = "hyp")]
        hyp_path: PathBuf,
        #[arg(long)]
        out_json: Option<PathBuf>,
        #[arg(long)]
        out_tsv: Option<PathBuf>,
    },
    /// Render a stored score report.
    Report {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value = "tsv")]
        format: String,
    },
}

fn run(cli: Cli) -> diaturn::Result<()> {
    let cfg = cli.global.resolve()?;
    match cli.command {
        Command::Ingest { rttm, ctm, out_dir } => {
            let manifest = pipeline::cmd_ingest(&rttm, &ctm, &out_dir)?;
            let text = serde_json::to_string_pretty(&manifest)?;
            println!("{}", text);
        }
        Command::Build { corpus, out } => {
            let n = pipeline::cmd_build(&corpus, &out, &cfg)?;
            println!("wrote {} dialogues to {}", n, out.display());
        }
        Command::Simulate {
            dialogues,
            out_hyp,
            out_log,
            no_context_reuse,
            noise,
        } => {
            let spec =
                BackendSpec::parse(&cfg.backend, noise.mock_config(cfg.seed), !no_context_reuse)?;
            let (entries, turns) =
                pipeline::cmd_simulate(&dialogues, &spec, &cfg, &out_hyp, &out_log)?;
            println!(
                "composed {} hypothesis entries over {} turns (setup {})",
                entries, turns, cfg.setup
            );
        }
        Command::Compose {
            dialogues,
            log,
            out_hyp,
        } => {
            let n = pipeline::cmd_compose(&dialogues, &log, &cfg, &out_hyp)?;
            println!("composed {} hypothesis entries (setup {})", n, cfg.setup);
        }
        Command::Score {
            ref_path,
            hyp_path,
            out_json,
            out_tsv,
        } => {
            let report = pipeline::cmd_score(
                &ref_path,
                &hyp_path,
                &cfg,
                out_json.as_deref(),
                out_tsv.as_deref(),
            )?;
            print!("{}", diaturn::metrics::report_tsv(&report));
        }
        Command::Report { report, format } => {
            print!("{}", pipeline::cmd_report(&report, &format)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
