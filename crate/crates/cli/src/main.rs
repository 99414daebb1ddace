use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use egolead::pipeline::{self, RunConfig, Session, Validation};
use egolead::synth::{self, GroundTruth, ScoreInputs, SynthSpec};

/// Leadership analytics over multi-wearer egocentric session recordings.
#[derive(Parser)]
#[command(name = "egolead", version)]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SessionArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// JSON run configuration; absent keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    no_eye_contact: bool,
    #[arg(long)]
    no_conversation: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check every input named by a manifest without analysing it.
    Validate {
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Run the full pipeline and write the report and exports.
    Analyze {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long)]
        out: PathBuf,
        /// Record the run time and tool version in the report.
        #[arg(long)]
        emit_run_metadata: bool,
    },
    /// Generate a synthetic session with ground truth.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the spec.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write per-frame overlay annotations from a finished analysis.
    ExportOverlay {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long)]
        out: PathBuf,
        /// Analysis output directory; defaults to `--out`.
        #[arg(long)]
        analysis: Option<PathBuf>,
    },
    /// Score an analysis against synthetic ground truth.
    Score {
        #[arg(long)]
        truth: PathBuf,
        /// Analysis output directory.
        #[arg(long)]
        analysis: PathBuf,
        /// Where to write the scores JSON.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100.0)]
        tolerance_ms: f64,
    },
}

/// Exit code 1: inputs failed validation.
#[derive(Debug)]
struct ValidationFailed;

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("validation failed")
    }
}

impl std::error::Error for ValidationFailed {}

fn run_config(args: &SessionArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if args.no_eye_contact {
        cfg.eye_contact.enabled = false;
    }
    if args.no_conversation {
        cfg.conversation.enabled = false;
    }
    Ok(cfg)
}

fn print_validation(manifest: &Path, v: &Validation) {
    for w in &v.warnings {
        eprintln!("warning: {w}");
    }
    for e in &v.errors {
        eprintln!("error[{}]: {e}", e.name());
    }
    if v.is_ok() {
        println!("{}: ok ({} warnings)", manifest.display(), v.warnings.len());
    } else {
        println!("{}: {} violations", manifest.display(), v.errors.len());
    }
}

fn load(args: &SessionArgs, cfg: &RunConfig) -> Result<Session> {
    let (session, v) = pipeline::load_session(&args.manifest, cfg);
    print_validation(&args.manifest, &v);
    session.ok_or_else(|| ValidationFailed.into())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { session } => {
            let cfg = run_config(&session)?;
            load(&session, &cfg)?;
        }
        Command::Analyze { session: args, out, emit_run_metadata } => {
            let cfg = run_config(&args)?;
            let session = load(&args, &cfg)?;
            let meta = emit_run_metadata.then(|| {
                let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
                serde_json::json!({
                    "generated_at_unix_s": now,
                    "tool_version": env!("CARGO_PKG_VERSION"),
                    "manifest": args.manifest.display().to_string(),
                })
            });
            let analysis = pipeline::analyze_to_dir(&session, &cfg, &out, meta)?;
            for (section, reason) in &analysis.report.missing {
                log::warn!("{section} not computed: {reason}");
            }
            println!("report written to {}", out.join("report.json").display());
        }
        Command::Synth { spec, out, seed } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let mut spec = SynthSpec::from_json_str(&text)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let generated = synth::generate_session(&spec)?;
            generated.write_to(&out)?;
            println!(
                "wrote {} files to {} ({} planted mutual-gaze windows)",
                generated.files.len(),
                out.display(),
                generated.truth.mutual_windows.len()
            );
        }
        Command::ExportOverlay { session: args, out, analysis } => {
            let cfg = run_config(&args)?;
            let session = load(&args, &cfg)?;
            let analysis_dir = analysis.unwrap_or_else(|| out.clone());
            for p in pipeline::export_overlay(&session, &cfg, &analysis_dir, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Score { truth, analysis, out, tolerance_ms } => {
            let truth = GroundTruth::from_path(&truth)?;
            let inputs = ScoreInputs::from_dir(&analysis, &truth)?;
            let scores = synth::score_against_truth(&inputs, &truth, tolerance_ms)?;
            let text = serde_json::to_string_pretty(&scores)? + "\n";
            std::fs::write(&out, &text).with_context(|| format!("writing {}", out.display()))?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        (false, _) => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<ValidationFailed>() => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
